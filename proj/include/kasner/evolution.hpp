#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <utility>

#include "kasner/lapse.hpp"
#include "kasner/state.hpp"

namespace kasner {

struct EvolveConfig {
  double tau_step = 1e-2;     // upper bound on the log-time step
  double t_final = 1e-2;
  double cfl_safety = 0.5;
  bool determinism = false;
  int snapshot_every = 10;

  bool operator==(const EvolveConfig&) const = default;
};

/// Validates EvolveConfig; throws std::invalid_argument.
void validate(const EvolveConfig& cfg);

/// d/dt of every evolved field at fixed n (state.n is used as given).
struct StateRates {
  Field k, gamma, e, omega, e0psi, epsi;
};

StateRates compute_rates(const ReducedState& state);

/// n * (e_0 k_IJ), symmetrized in (I, J).
Field rhs_k(const ReducedState& state);
/// n * (e_0 gamma_IJB).
Field rhs_gamma(const ReducedState& state);
/// (d_t e_I^i, d_t w_i^I).
std::pair<Field, Field> rhs_frame(const ReducedState& state);
/// (d_t e_0 psi, d_t e_I psi).
std::pair<Field, Field> rhs_psi(const ReducedState& state);

class EvolutionError : public std::runtime_error {
 public:
  EvolutionError(const std::string& what, ReducedState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const ReducedState& last_good() const { return last_good_; }

 private:
  ReducedState last_good_;
};

struct StepInfo {
  double dtau = 0.0;
  int lapse_iterations = 0;
};

/// Log-time step bound: cfl_safety * h_min / (t * max n * max |e_I^i|),
/// capped at tau_step. In tau = -ln t the coordinate speeds are t n |e|.
double choose_tau_step(const ReducedState& state, const EvolveConfig& cfg);

/// One classical RK4 step in tau = -ln t of size dtau (t -> t e^{-dtau}).
/// The stepped variables are t k, gamma, e, omega, t e_0 psi and e_I psi.
/// The lapse in `state` must solve the lapse equation for its fields; the
/// lapse is re-solved at the three later stages and at the new time.
/// k and gamma are projected onto their index symmetries afterwards.
/// Throws EvolutionError (carrying `state`) on lapse failure or non-finite data.
ReducedState step(const ReducedState& state, double dtau, const LapseSolveConfig& lapse,
                  StepInfo* info = nullptr);

using StepObserver = std::function<void(const ReducedState&, long, const StepInfo&)>;

/// Evolves from state.t down to cfg.t_final. Steps are shortened to land
/// exactly on every time in `stop_times` (which must lie in (t_final, t)).
/// The observer sees every accepted state, including the initial one with
/// step index 0.
ReducedState evolve(ReducedState state, const EvolveConfig& cfg, const LapseSolveConfig& lapse,
                    std::span<const double> stop_times = {}, const StepObserver& observer = {});

/// Split of d_t S_IJB (S = gamma_IJB + gamma_JBI) into the diagonal part
/// -(q_I + q_J - q_B)/t S_IJB and the remainder. Entries with I < J form
/// the basis; all D^3 entries are filled.
struct StructureSplit {
  Field S;
  Field diagonal_coeff;  // -(q_I + q_J - q_B)/t, spatially constant
  Field diagonal_term;
  Field remainder;
};

StructureSplit structure_rhs_diagonal(const ReducedState& state, const KasnerData& background);

}  // namespace kasner
