#pragma once

#include <span>
#include <vector>

#include "kasner/state.hpp"

namespace kasner {

/// 2 e_C gamma_DDC - gamma_CDE gamma_EDC - gamma_CCD gamma_EED - k_CD k_CD + t^-2
///   - (e_0 psi)^2 - (e_C psi)(e_C psi)   (unscaled).
Field hamiltonian_residual(const ReducedState& state);

/// e_C k_CI - gamma_CCD k_ID - gamma_CID k_CD + (e_0 psi)(e_I psi)   (unscaled, D comps).
Field momentum_residual(const ReducedState& state);

/// Frame components of the spatial Ricci tensor (symmetrized), D^2 comps.
Field spatial_ricci(const ReducedState& state);

/// Frame components Riem(e_A, e_B, e_M, e_N) of the spatial Riemann tensor,
/// index ((A*D + B)*D + M)*D + N. Contracting A with M gives spatial_ricci.
Field spatial_riemann(const ReducedState& state);

/// Spacetime Kretschmann scalar assembled from the spatial (Gauss), electric
/// and Codazzi blocks.
Field kretschmann(const ReducedState& state);

/// 4 { sum_I (q_I^2 - q_I)^2 + sum_{I<J} q_I^2 q_J^2 }.
double kretschmann_coefficient(std::span<const double> q);

/// The coefficient above evaluated pointwise on a field of exponents (D comps).
std::vector<double> kretschmann_asymptotic(const Field& q_inf);

/// Derivative counts for the solution norms.
struct NormSettings {
  int N0 = 1;     // W^{N0,inf} low-order count
  int N = 3;      // homogeneous H^N count
  double A = 2.0; // extra t-weight of the high-order norms

  bool operator==(const NormSettings&) const = default;
};

struct SolutionNorms {
  double L_e_omega = 0.0;
  double L_n = 0.0;
  double L_gamma_k = 0.0;
  double L_psi = 0.0;
  double H_e_omega = 0.0;
  double H_n = 0.0;
  double H_gamma_k = 0.0;
  double H_psi = 0.0;
  bool bandwidth_warning = false;  // a derivative count exceeds what the grid resolves

  double total_dynamic() const {
    return L_e_omega + L_gamma_k + L_psi + H_e_omega + H_gamma_k + H_psi;
  }
};

/// sum_{|iota| <= order} sup |d^iota f| (spectral derivatives along active axes).
double w_inf_norm(const Grid& grid, std::span<const double> f, int order);

/// Weighted low- and high-order norms of the perturbation away from `background`.
SolutionNorms solution_norms(const ReducedState& state, const KasnerData& background,
                             const StabilityParams& params, const NormSettings& counts);

struct FinalState {
  Field kappa;  // D^2 comps, symmetric
  Field B;      // 1 comp
  Field q;      // D comps, descending per point
  double sum_residual = 0.0;    // max_x |sum q - 1|
  double sumsq_residual = 0.0;  // max_x |sum q^2 - (1 - B^2)|
  double rate = 0.0;            // Richardson rate p actually used
};

/// Extrapolates t k_IJ and t n e_0 psi to t = 0 with Richardson steps in
/// t^p using the (up to) three smallest-t snapshots, then diagonalizes
/// -kappa per point. p is sigma, raised to the rate observed across three
/// geometrically spaced snapshots when that is faster (capped at 8). Throws std::invalid_argument for fewer than two
/// snapshots and std::runtime_error if kappa is not symmetric to 1e-8.
FinalState final_kasner_data(std::span<const ReducedState> snapshots, double sigma);

/// ||g - delta||_{H^{N+1}} + ||k + diag(q)||_{H^N} + ||psi||_{H^{N+1}} + ||phi - B||_{H^N},
/// summed over components. g and k are coordinate components (index i*D + j).
double initial_data_norm(const Grid& grid, const Field& g, const Field& k,
                         std::span<const double> psi, std::span<const double> phi,
                         const KasnerData& background, int N);

/// ||f||_{H^order} = (sum_{m <= order} ||f||_{Hdot^m}^2)^{1/2}.
double sobolev_norm(const Grid& grid, std::span<const double> f, int order);

struct FieldStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

FieldStats field_stats(const Grid& grid, std::span<const double> f);

struct DiagnosticsRecord {
  double t = 1.0;
  double ham_sup = 0.0;  // t^2 * Hamiltonian residual
  double ham_l2 = 0.0;
  double mom_sup = 0.0;  // t * momentum residual
  double mom_l2 = 0.0;
  SolutionNorms norms;
  FieldStats kretschmann_t4;
  double structure_sup = 0.0;  // max_{I<J,B} sup t^q |S_IJB|
  double ricci_sup = 0.0;      // sup t^{2 - sigma} |Ric_IJ|
  double cmc_residual = 0.0;   // max |t k_CC + 1|
  double duality_residual = 0.0;
  double gamma_consistency = 0.0;  // max |gamma - koszul_gamma(frame)|
  double k_symmetry = 0.0;
  double gamma_antisymmetry = 0.0;
  double lapse_min = 1.0;
  double lapse_max = 1.0;
};

DiagnosticsRecord compute_diagnostics(const ReducedState& state, const KasnerData& background,
                                      const StabilityParams& params, const NormSettings& counts);

}  // namespace kasner
