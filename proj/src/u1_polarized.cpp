#include "kasner/u1_polarized.hpp"

#include <algorithm>
#include <cmath>

namespace kasner {

namespace {

void require_x3_free(const Grid& grid, const Profile& p, const char* what) {
  const int axis3 = grid.axis_of(2);
  if (axis3 < 0) return;
  for (const Mode& m : p.modes)
    if (static_cast<int>(m.m.size()) > axis3 && m.m[axis3] != 0)
      throw PolarizationError(std::string(what) + " profile depends on x^3");
}

}  // namespace

void check_polarized_spec(const Grid& grid, const PerturbationSpec& spec) {
  if (grid.dim() != 3) throw PolarizationError("polarized U(1) data require D = 3");
  for (const auto& [a, prof] : spec.xi) {
    if (a == 2) throw PolarizationError("gauge displacement along x^3 breaks polarization");
    require_x3_free(grid, prof, "xi");
  }
  auto allowed = [](std::pair<int, int> ij) {
    return ij == std::pair{0, 0} || ij == std::pair{0, 1} || ij == std::pair{1, 1} ||
           ij == std::pair{2, 2};
  };
  for (const auto* m : {&spec.g, &spec.k})
    for (const auto& [ij, prof] : *m) {
      if (!allowed(ij)) throw PolarizationError("components 13 and 23 must vanish");
      require_x3_free(grid, prof, "metric or k");
    }
  require_x3_free(grid, spec.psi, "psi");
  require_x3_free(grid, spec.phi, "phi");
  for (const auto* m : {&spec.beta, &spec.kappa})
    for (const auto& [I, prof] : *m) require_x3_free(grid, prof, "scalar1d");
}

CoordinateData build_polarized_data(const std::shared_ptr<const Grid>& grid,
                                    const KasnerData& background,
                                    const PerturbationSpec& spec) {
  check_polarized_spec(*grid, spec);
  CoordinateData data = build_coordinate_data(grid, background, spec);
  const std::size_t np = grid->num_points();
  // Post-checks: forbidden components and the CMC trace.
  for (int c : {idx2(3, 0, 2), idx2(3, 1, 2), idx2(3, 2, 0), idx2(3, 2, 1)})
    for (std::size_t p = 0; p < np; ++p)
      if (std::abs(data.g(c, p)) > 1e-14 || std::abs(data.k(c, p)) > 1e-14)
        throw PolarizationError("forbidden metric or k component is nonzero");
  for (std::size_t p = 0; p < np; ++p) {
    const double g11 = data.g(0, p), g12 = data.g(1, p), g22 = data.g(4, p), g33 = data.g(8, p);
    const double det2 = g11 * g22 - g12 * g12;
    if (!(det2 > 0.0) || !(g11 > 0.0) || !(g33 > 0.0)) throw NonSpdMetricError(p, std::min(det2, g33));
    const double tr = (g22 * data.k(0, p) - 2.0 * g12 * data.k(1, p) + g11 * data.k(4, p)) / det2 +
                      data.k(8, p) / g33;
    if (!std::isfinite(tr) || std::abs(tr + 1.0) > 1e-12)
      throw InitialDataError("trace condition tr k = -1 could not be imposed");
  }
  return data;
}

SymmetryReport check_symmetry(const ReducedState& s) {
  if (s.dim() != 3) throw PolarizationError("symmetry monitors require D = 3");
  const Grid& grid = *s.grid;
  const std::size_t np = s.npts();
  SymmetryReport r;

  if (grid.axis_of(2) >= 0) {
    std::vector<double> d(np);
    for (const Field* f : {&s.n, &s.k, &s.gamma, &s.e, &s.omega, &s.e0psi, &s.epsi})
      for (int c = 0; c < f->ncomp(); ++c) {
        grid.partial(f->span(c), 2, d, false);
        for (double v : d) r.x3_independence = std::max(r.x3_independence, std::abs(v));
      }
  }

  const Field g = metric_from_coframe(grid, s.omega);
  for (std::size_t p = 0; p < np; ++p) {
    // k_i3 = w_i^I w_3^J k_IJ
    double k13 = 0.0, k23 = 0.0;
    for (int I = 0; I < 3; ++I)
      for (int J = 0; J < 3; ++J) {
        const double kij = s.k(idx2(3, I, J), p);
        k13 += s.omega(idx2(3, 0, I), p) * s.omega(idx2(3, 2, J), p) * kij;
        k23 += s.omega(idx2(3, 1, I), p) * s.omega(idx2(3, 2, J), p) * kij;
      }
    r.polarization = std::max({r.polarization, std::abs(g(idx2(3, 0, 2), p)),
                               std::abs(g(idx2(3, 1, 2), p)), std::abs(k13), std::abs(k23)});
    r.gamma_distinct =
        std::max(r.gamma_distinct, std::abs(s.gamma(idx3(3, 0, 1, 2), p)) +
                                       std::abs(s.gamma(idx3(3, 1, 2, 0), p)) +
                                       std::abs(s.gamma(idx3(3, 2, 0, 1), p)));
    r.e3_tilt = std::max(r.e3_tilt,
                         std::abs(s.e(idx2(3, 2, 0), p)) + std::abs(s.e(idx2(3, 2, 1), p)));
  }
  return r;
}

}  // namespace kasner
