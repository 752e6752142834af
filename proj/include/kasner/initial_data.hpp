#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kasner/lapse.hpp"
#include "kasner/state.hpp"

namespace kasner {

/// One Fourier term amp * cos(m . x) or amp * sin(m . x); `m` holds integer
/// wavenumbers along the active axes (missing entries are 0).
struct Mode {
  double amp = 0.0;
  bool sine = false;
  std::vector<int> m;
  bool operator==(const Mode&) const = default;
};

/// Truncated Fourier series. Text form: "amp,cos|sin,m1[,m2[,m3]]" terms
/// separated by ';', e.g. "1e-3,sin,1;5e-4,cos,0,2".
struct Profile {
  std::vector<Mode> modes;
  bool empty() const { return modes.empty(); }
  bool operator==(const Profile&) const = default;
};

/// Throws std::invalid_argument on malformed text.
Profile parse_profile(std::string_view text);
std::string format_profile(const Profile& profile);

/// Samples the profile on the grid. Throws std::invalid_argument if a term
/// uses more wavenumbers than there are active axes.
std::vector<double> sample_profile(const Grid& grid, const Profile& profile);

/// Perturbations of the Kasner data on Sigma_1 (coordinate components).
///  - xi: gauge displacement x -> x + xi(x); pulls back the Kasner data, so
///    the result satisfies the constraints and tr k = -1 exactly.
///  - g, k, psi, phi: additive profiles (keys (i, j) with i <= j), applied
///    after the gauge map; k is then shifted by a multiple of g so that
///    tr_g k = -1. These are not constraint-solved.
///  - beta, kappa: data depending on x^1 only, keyed by frame index I >= 1:
///    g = diag(1, e^{2 beta_I}), k_II = -q_I + kappa_I for I >= 1 with k_00
///    fixed by the trace, and the scalar field chosen pointwise so that both
///    constraints hold. Requires B > 0 and excludes the other perturbations.
struct PerturbationSpec {
  std::map<int, Profile> xi;
  std::map<std::pair<int, int>, Profile> g;
  std::map<std::pair<int, int>, Profile> k;
  Profile psi;
  Profile phi;
  std::map<int, Profile> beta;
  std::map<int, Profile> kappa;

  bool is_scalar1d() const { return !beta.empty() || !kappa.empty(); }
  bool empty() const {
    return xi.empty() && g.empty() && k.empty() && psi.empty() && phi.empty() && !is_scalar1d();
  }
  bool operator==(const PerturbationSpec&) const = default;
};

/// Coordinate initial data (g, k, psi, phi) on Sigma_1. `epsi`, when not
/// empty, holds frame derivatives of psi that override d psi (used when psi
/// has a non-periodic linear part and `psi` keeps only its periodic part).
struct CoordinateData {
  Field g;  // g_ij, index i*D + j
  Field k;  // k_ij
  std::vector<double> psi;
  std::vector<double> phi;  // e_0 psi on Sigma_1
  Field epsi;
};

class InitialDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds coordinate data from a spec. Throws InitialDataError.
CoordinateData build_coordinate_data(const std::shared_ptr<const Grid>& grid,
                                     const KasnerData& background, const PerturbationSpec& spec);

/// Reduces coordinate data to frame variables at t = 1 (Gram-Schmidt frame,
/// or the polarized variant if `u1_frame`), then solves for the lapse.
ReducedState reduce_initial_data(std::shared_ptr<const Grid> grid, const CoordinateData& data,
                                 const LapseSolveConfig& lapse, bool u1_frame = false);

}  // namespace kasner
