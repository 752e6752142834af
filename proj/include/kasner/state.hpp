#pragma once

#include <memory>

#include "kasner/frame_geometry.hpp"
#include "kasner/grid.hpp"
#include "kasner/kasner_core.hpp"

namespace kasner {

/// All dynamic fields on one CMC slice t = const. psi itself is not stored,
/// only e_0 psi and the frame derivatives e_I psi.
struct ReducedState {
  std::shared_ptr<const Grid> grid;
  double t = 1.0;
  Field n;       // 1 component
  Field k;       // k_IJ
  Field gamma;   // gamma_IJB
  Field e;       // e_I^i
  Field omega;   // w_i^I
  Field e0psi;   // 1 component
  Field epsi;    // e_I psi

  int dim() const { return grid->dim(); }
  std::size_t npts() const { return grid->num_points(); }
  FramePair frame() const { return {e, omega}; }
  bool all_finite() const;
};

/// Allocates zeroed fields of the right shapes.
ReducedState make_empty_state(std::shared_ptr<const Grid> grid, double t);

/// Exact generalized Kasner state at time t, constant on the grid.
ReducedState make_kasner_state(std::shared_ptr<const Grid> grid, const KasnerData& data,
                               double t);

/// k_IJ <- (k_IJ + k_JI)/2 and gamma_IJB <- (gamma_IJB - gamma_IBJ)/2.
void project_index_symmetries(ReducedState& s);

/// max |k_IJ - k_JI|.
double symmetry_residual_k(const ReducedState& s);

}  // namespace kasner
