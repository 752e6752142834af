#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kasner/diagnostics.hpp"
#include "kasner/evolution.hpp"
#include "kasner/initial_data.hpp"

namespace kasner {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Run settings. Text form is flat `key = value` lines with dotted keys;
/// '#' starts a comment. Indices in keys are 1-based.
///
///   background.q = -1/3, 2/3, 2/3      (fractions allowed)
///   background.B = 0
///   background.dim = 11                (with background.search = true)
///   background.search = false          (vacuum exponent search, uses seed)
///   background.tol = 1e-12
///   grid.active_dims = 1, 2
///   grid.sizes = 32, 32
///   perturb.xi.<i>, perturb.g.<i>.<j>, perturb.k.<i>.<j>, perturb.psi,
///   perturb.phi, perturb.scalar1d.beta.<I>, perturb.scalar1d.kappa.<I>
///                                      (profiles "amp,cos|sin,m1[,m2[,m3]];...")
///   stability.q, stability.sigma, stability.mode = general | polarized
///   lapse.rel_tol, lapse.max_iter, lapse.restart
///   evolve.tau_step, evolve.t_final, evolve.cfl_safety, evolve.snapshot_every,
///   evolve.determinism
///   final.ratio = 0.1, final.count = 3
///   diag.N0, diag.N, diag.A
///   u1.enabled = false, u1.constraint_tol = 1e-8 (max initial residual)
///   output.dir = out
///   seed = 1
struct RunConfig {
  std::vector<double> q;
  double B = 0.0;
  int search_dim = 0;
  bool search = false;
  double background_tol = kExponentTolerance;
  std::vector<int> active_dims{1, 2};
  std::vector<int> sizes{16, 16};
  PerturbationSpec perturb;
  std::optional<double> stability_q;
  std::optional<double> stability_sigma;
  std::optional<StabilityMode> stability_mode;
  LapseSolveConfig lapse;
  EvolveConfig evolve;
  double final_ratio = 0.1;
  int final_count = 3;
  NormSettings diag;
  bool u1 = false;
  double u1_constraint_tol = 1e-8;
  std::string output_dir = "out";
  std::uint64_t seed = 1;

  bool operator==(const RunConfig&) const;
};

/// Parses and validates; throws ConfigError with the offending line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

/// Number with optional fraction syntax ("-1/3"). Throws ConfigError.
double parse_number(std::string_view text);

/// Comma-separated numbers. Throws ConfigError.
std::vector<double> parse_number_list(std::string_view text);

}  // namespace kasner
