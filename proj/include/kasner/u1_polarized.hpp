#pragma once

#include "kasner/initial_data.hpp"

namespace kasner {

/// Checks that a perturbation spec stays in the polarized U(1) class (D = 3):
/// gauge displacement only along x^1, x^2; g and k profiles only for the
/// 11, 12, 22, 33 components; nothing depends on x^3. Throws PolarizationError.
void check_polarized_spec(const Grid& grid, const PerturbationSpec& spec);

/// Builds polarized initial data: g_13 = g_23 = k_13 = k_23 = 0, no x^3
/// dependence, tr k = -1 (enforced by shifting k along g). Throws
/// PolarizationError for D != 3 or forbidden content, NonSpdMetricError for
/// an indefinite metric and InitialDataError if the trace cannot be imposed.
CoordinateData build_polarized_data(const std::shared_ptr<const Grid>& grid,
                                    const KasnerData& background, const PerturbationSpec& spec);

struct SymmetryReport {
  double x3_independence = 0.0;  // sup |d_3 f| over all evolved fields
  double polarization = 0.0;     // sup of |g_13|, |g_23|, |k_13|, |k_23|
  double gamma_distinct = 0.0;   // sup (|gamma_123| + |gamma_231| + |gamma_312|)
  double e3_tilt = 0.0;          // sup (|e_3^1| + |e_3^2|)
};

/// Symmetry monitors for a D = 3 state evolved from polarized data with the
/// polarized frame. Throws PolarizationError if D != 3.
SymmetryReport check_symmetry(const ReducedState& state);

}  // namespace kasner
