#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kasner {

/// Generalized Kasner background: exponents q_I and scalar-field coefficient B.
/// The sign of B is fixed to B >= 0 (psi -> -psi symmetry).
struct KasnerData {
  int dim = 3;
  std::vector<double> exponents;
  double scalar_coeff = 0.0;

  static KasnerData flrw();  // (1/3,1/3,1/3), B = sqrt(2/3)
};

struct ConstraintReport {
  double sum_residual = 0.0;
  double sumsq_residual = 0.0;
  bool ok = false;
};

constexpr double kExponentTolerance = 1e-12;

/// |sum q - 1| and |sum q^2 - (1 - B^2)|.
/// Throws std::invalid_argument on dim/exponent-count mismatch or dim < 3.
ConstraintReport validate_constraints(const KasnerData& data,
                                      double tol = kExponentTolerance);

struct MarginReport {
  double margin = 0.0;
  bool subcritical = false;
  std::array<int, 3> witness{0, 0, 0};  // (I, J, B), 0-based, I < J
};

/// max over I<J and all B of q_I + q_J - q_B.
MarginReport subcriticality_margin(const KasnerData& data);

enum class StabilityMode { general, polarized_u1 };

struct StabilityParams {
  double q = 0.5;
  double sigma = 0.05;
  StabilityMode mode = StabilityMode::general;
};

/// Checks 2 sigma < 2 sigma + M < q < 1 - 2 sigma where M is the general
/// margin max(|q_B|, q_I + q_J - q_B), or max |q_I| in the polarized sector.
bool stability_params_admissible(const KasnerData& data, const StabilityParams& p);

/// Picks q, sigma in the middle of the admissible window, if there is one.
std::optional<StabilityParams> default_stability_params(const KasnerData& data,
                                                        StabilityMode mode);

enum class SearchStatus { found, infeasible, budget_exhausted };

struct SearchResult {
  SearchStatus status = SearchStatus::budget_exhausted;
  std::optional<KasnerData> data;
  double best_margin = 0.0;
  int restarts_used = 0;
};

struct SearchOptions {
  std::uint64_t seed = 1;
  int restarts = 200;
  int iterations = 4000;
};

/// Random restarts on {sum q = 1, sum q^2 = 1} followed by smoothed-max
/// descent on the margin. D <= 9 is reported infeasible without searching.
SearchResult search_subcritical_vacuum(int dim, double tol,
                                       const SearchOptions& opts = {});

/// Exact background fields at time t (spatially constant).
struct BackgroundFields {
  double t = 1.0;
  double n = 1.0;
  std::vector<double> e;      // e_I^i, index I*D + i
  std::vector<double> omega;  // omega_i^I, index i*D + I
  std::vector<double> k;      // k_IJ, index I*D + J
  double e0psi = 0.0;
  std::vector<double> epsi;   // e_I psi
};

/// Throws std::domain_error if t <= 0.
BackgroundFields background_fields(const KasnerData& data, double t);

}  // namespace kasner
