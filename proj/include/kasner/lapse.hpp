#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "kasner/state.hpp"

namespace kasner {

struct LapseSolveConfig {
  double rel_tol = 1e-10;
  int max_iter = 500;
  int restart = 40;

  bool operator==(const LapseSolveConfig&) const = default;
};

class LapseError : public std::runtime_error {
 public:
  enum class Kind { non_convergence, nonpositive };
  LapseError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// The lapse equation written for m = n - 1 as A m = f with
///   A m = e_C e_C m - gamma_CCD e_D m + (Q - 2 e_C gamma_DDC - t^-2) m,
///   f   = 2 e_C gamma_DDC - Q,
///   Q   = gamma_CDE gamma_EDC + gamma_CCD gamma_EED + (e_C psi)(e_C psi).
/// The principal part is expanded in coordinates as
///   G^{ab} d_a d_b m + b^a d_a m, G^{ab} = e_C^a e_C^b,
///   b^a = (e_C e_C^a) - gamma_CCD e_D^a.
class LapseOperator {
 public:
  explicit LapseOperator(const ReducedState& state);

  void apply(std::span<const double> m, std::span<double> out) const;
  void precondition(std::span<const double> r, std::span<double> z) const;

  const std::vector<double>& source() const { return source_; }
  const std::vector<double>& zeroth_order() const { return c_; }
  const Grid& grid() const { return *grid_; }

 private:
  std::shared_ptr<const Grid> grid_;
  std::vector<double> G_;   // [pair][p], upper triangle
  std::vector<double> b_;   // [axis][p]
  std::vector<double> c_;
  std::vector<double> source_;
  std::vector<double> Gbar_;  // num_active^2
  double cbar_ = -1.0;
};

struct LapseResult {
  Field n;
  int iterations = 0;
  double residual_norm = 0.0;
  double rhs_norm = 0.0;
};

/// Right-preconditioned restarted GMRES for A m = rhs; `m` holds the initial
/// guess on entry. Returns the iteration count. Throws LapseError if the
/// relative residual does not reach cfg.rel_tol within cfg.max_iter.
int solve_lapse_system(const LapseOperator& op, std::span<const double> rhs, std::span<double> m,
                       const LapseSolveConfig& cfg, double* residual_norm = nullptr);

/// Solves the elliptic lapse equation on the slice described by `state`
/// (state.n is ignored except as an optional warm start when
/// `warm_start` is set). Throws LapseError.
LapseResult solve_lapse(const ReducedState& state, const LapseSolveConfig& cfg,
                        bool warm_start = false);

/// Pointwise residual of the lapse equation for state.n.
std::vector<double> lapse_residual(const ReducedState& state);

}  // namespace kasner
