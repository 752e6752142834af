#include "kasner/state.hpp"

#include <algorithm>
#include <cmath>

namespace kasner {

bool ReducedState::all_finite() const {
  return n.all_finite() && k.all_finite() && gamma.all_finite() && e.all_finite() &&
         omega.all_finite() && e0psi.all_finite() && epsi.all_finite();
}

ReducedState make_empty_state(std::shared_ptr<const Grid> grid, double t) {
  const int D = grid->dim();
  const std::size_t np = grid->num_points();
  ReducedState s;
  s.grid = std::move(grid);
  s.t = t;
  s.n = Field(1, np, 1.0);
  s.k = Field(D * D, np);
  s.gamma = Field(D * D * D, np);
  s.e = Field(D * D, np);
  s.omega = Field(D * D, np);
  s.e0psi = Field(1, np);
  s.epsi = Field(D, np);
  return s;
}

ReducedState make_kasner_state(std::shared_ptr<const Grid> grid, const KasnerData& data,
                               double t) {
  if (data.dim != grid->dim()) throw std::invalid_argument("Kasner dim differs from grid dim");
  const BackgroundFields bg = background_fields(data, t);
  ReducedState s = make_empty_state(std::move(grid), t);
  const int D = data.dim;
  for (int c = 0; c < D * D; ++c) {
    std::fill(s.e.span(c).begin(), s.e.span(c).end(), bg.e[c]);
    std::fill(s.omega.span(c).begin(), s.omega.span(c).end(), bg.omega[c]);
    std::fill(s.k.span(c).begin(), s.k.span(c).end(), bg.k[c]);
  }
  std::fill(s.e0psi.span(0).begin(), s.e0psi.span(0).end(), bg.e0psi);
  return s;
}

void project_index_symmetries(ReducedState& s) {
  const int D = s.dim();
  const std::size_t np = s.npts();
  for (int I = 0; I < D; ++I)
    for (int J = I + 1; J < D; ++J) {
      double* a = s.k.comp(idx2(D, I, J));
      double* b = s.k.comp(idx2(D, J, I));
      for (std::size_t p = 0; p < np; ++p) {
        const double m = 0.5 * (a[p] + b[p]);
        a[p] = m;
        b[p] = m;
      }
    }
  for (int I = 0; I < D; ++I)
    for (int J = 0; J < D; ++J) {
      double* diag = s.gamma.comp(idx3(D, I, J, J));
      std::fill(diag, diag + np, 0.0);
      for (int B = J + 1; B < D; ++B) {
        double* a = s.gamma.comp(idx3(D, I, J, B));
        double* b = s.gamma.comp(idx3(D, I, B, J));
        for (std::size_t p = 0; p < np; ++p) {
          const double m = 0.5 * (a[p] - b[p]);
          a[p] = m;
          b[p] = -m;
        }
      }
    }
}

double symmetry_residual_k(const ReducedState& s) {
  const int D = s.dim();
  double worst = 0.0;
  for (int I = 0; I < D; ++I)
    for (int J = I + 1; J < D; ++J)
      for (std::size_t p = 0; p < s.npts(); ++p)
        worst = std::max(worst, std::abs(s.k(idx2(D, I, J), p) - s.k(idx2(D, J, I), p)));
  return worst;
}

}  // namespace kasner
