#include "kasner/lapse.hpp"

#include <algorithm>
#include <cmath>

namespace kasner {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LapseOperator::LapseOperator(const ReducedState& state) : grid_(state.grid) {
  const Grid& grid = *grid_;
  const int D = grid.dim();
  const int na = grid.num_active();
  const std::size_t np = grid.num_points();
  const auto& act = grid.active_dims();
  const double t = state.t;

  // tr_D = gamma_CCD (= gamma_EED); also gamma_DDC with C renamed.
  Field tr(D, np);
  for (int Dd = 0; Dd < D; ++Dd) {
    double* out = tr.comp(Dd);
    for (int C = 0; C < D; ++C) {
      const double* g = state.gamma.comp(idx3(D, C, C, Dd));
      for (std::size_t p = 0; p < np; ++p) out[p] += g[p];
    }
  }

  std::vector<double> Q(np, 0.0);
  for (int C = 0; C < D; ++C)
    for (int Dd = 0; Dd < D; ++Dd)
      for (int E = 0; E < D; ++E) {
        const double* a = state.gamma.comp(idx3(D, C, Dd, E));
        const double* b = state.gamma.comp(idx3(D, E, Dd, C));
        for (std::size_t p = 0; p < np; ++p) Q[p] += a[p] * b[p];
      }
  for (int Dd = 0; Dd < D; ++Dd) {
    const double* a = tr.comp(Dd);
    const double* s = state.epsi.comp(Dd);
    for (std::size_t p = 0; p < np; ++p) Q[p] += a[p] * a[p] + s[p] * s[p];
  }

  // V = 2 e_C tr_C
  std::vector<double> V(np, 0.0);
  {
    std::vector<double> grad(static_cast<std::size_t>(D) * na * np);
    grid.gradient(tr.all(), D, grad);
    std::vector<double> tmp(np);
    for (int C = 0; C < D; ++C) {
      contract_frame(grid, state.e, grad.data() + static_cast<std::size_t>(C) * na * np, C, tmp);
      for (std::size_t p = 0; p < np; ++p) V[p] += 2.0 * tmp[p];
    }
  }

  // First-order coefficient b^a.
  b_.assign(static_cast<std::size_t>(na) * np, 0.0);
  {
    std::vector<double> grad(static_cast<std::size_t>(D) * D * na * np);
    grid.gradient(state.e.all(), D * D, grad);
    for (int a = 0; a < na; ++a) {
      double* ba = b_.data() + static_cast<std::size_t>(a) * np;
      for (int C = 0; C < D; ++C) {
        for (int bx = 0; bx < na; ++bx) {
          const double* eCb = state.e.comp(idx2(D, C, act[bx]));
          const double* d = grad.data() + (static_cast<std::size_t>(idx2(D, C, act[a])) * na + bx) * np;
          for (std::size_t p = 0; p < np; ++p) ba[p] += eCb[p] * d[p];
        }
        const double* trC = tr.comp(C);
        const double* eCa = state.e.comp(idx2(D, C, act[a]));
        for (std::size_t p = 0; p < np; ++p) ba[p] -= trC[p] * eCa[p];
      }
    }
  }

  const int npairs = na * (na + 1) / 2;
  G_.assign(static_cast<std::size_t>(npairs) * np, 0.0);
  Gbar_.assign(static_cast<std::size_t>(na) * na, 0.0);
  int pair = 0;
  for (int a = 0; a < na; ++a)
    for (int b = a; b < na; ++b, ++pair) {
      double* g = G_.data() + static_cast<std::size_t>(pair) * np;
      for (int C = 0; C < D; ++C) {
        const double* ea = state.e.comp(idx2(D, C, act[a]));
        const double* eb = state.e.comp(idx2(D, C, act[b]));
        for (std::size_t p = 0; p < np; ++p) g[p] += ea[p] * eb[p];
      }
      const double m = grid.mean({g, np});
      Gbar_[a * na + b] = m;
      Gbar_[b * na + a] = m;
    }

  c_.resize(np);
  source_.resize(np);
  const double inv_t2 = 1.0 / (t * t);
  for (std::size_t p = 0; p < np; ++p) {
    c_[p] = Q[p] - V[p] - inv_t2;
    source_[p] = V[p] - Q[p];
  }
  cbar_ = grid.mean(c_);
  if (!(cbar_ < -1e-3 * inv_t2)) cbar_ = -inv_t2;
}

void LapseOperator::apply(std::span<const double> m, std::span<double> out) const {
  const Grid& grid = *grid_;
  const int na = grid.num_active();
  const std::size_t np = grid.num_points();
  std::vector<double> grad(static_cast<std::size_t>(na) * np);
  std::vector<double> hess(static_cast<std::size_t>(na * (na + 1) / 2) * np);
  grid.gradient_and_hessian(m, grad, hess);
  for (std::size_t p = 0; p < np; ++p) out[p] = c_[p] * m[p];
  int pair = 0;
  for (int a = 0; a < na; ++a)
    for (int b = a; b < na; ++b, ++pair) {
      const double w = (a == b) ? 1.0 : 2.0;
      const double* g = G_.data() + static_cast<std::size_t>(pair) * np;
      const double* h = hess.data() + static_cast<std::size_t>(pair) * np;
      for (std::size_t p = 0; p < np; ++p) out[p] += w * g[p] * h[p];
    }
  for (int a = 0; a < na; ++a) {
    const double* ba = b_.data() + static_cast<std::size_t>(a) * np;
    const double* ga = grad.data() + static_cast<std::size_t>(a) * np;
    for (std::size_t p = 0; p < np; ++p) out[p] += ba[p] * ga[p];
  }
}

void LapseOperator::precondition(std::span<const double> r, std::span<double> z) const {
  grid_->solve_constant_helmholtz(Gbar_, cbar_, r, z);
}

int solve_lapse_system(const LapseOperator& op, std::span<const double> f, std::span<double> m,
                       const LapseSolveConfig& cfg, double* residual_norm) {
  if (!(cfg.rel_tol > 0.0)) throw std::invalid_argument("lapse.rel_tol must be positive");
  const std::size_t np = f.size();
  const double rhs_norm = norm2(f);
  if (rhs_norm == 0.0) {
    std::fill(m.begin(), m.end(), 0.0);
    if (residual_norm) *residual_norm = 0.0;
    return 0;
  }
  double res = 0.0;
  const double target = cfg.rel_tol * rhs_norm;
  const int restart = std::max(1, cfg.restart);
  std::vector<double> r(np), w(np);
  std::vector<std::vector<double>> V, Z;
  std::vector<double> H, cs, sn, g;
  int total = 0;
  bool converged = false;

  while (total < cfg.max_iter) {
    op.apply(m, w);
    for (std::size_t p = 0; p < np; ++p) r[p] = f[p] - w[p];
    const double beta = norm2(r);
    res = beta;
    if (beta <= target) {
      converged = true;
      break;
    }
    V.assign(1, std::vector<double>(np));
    for (std::size_t p = 0; p < np; ++p) V[0][p] = r[p] / beta;
    Z.clear();
    H.assign(static_cast<std::size_t>(restart + 1) * restart, 0.0);
    cs.assign(restart, 0.0);
    sn.assign(restart, 0.0);
    g.assign(restart + 1, 0.0);
    g[0] = beta;
    auto h = [&](int i, int j) -> double& { return H[static_cast<std::size_t>(i) * restart + j]; };

    int j = 0;
    for (; j < restart && total < cfg.max_iter; ++j, ++total) {
      Z.emplace_back(np);
      op.precondition(V[j], Z[j]);
      op.apply(Z[j], w);
      for (int i = 0; i <= j; ++i) {
        h(i, j) = dot(w, V[i]);
        for (std::size_t p = 0; p < np; ++p) w[p] -= h(i, j) * V[i][p];
      }
      h(j + 1, j) = norm2(w);
      for (int i = 0; i < j; ++i) {
        const double tmp = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = tmp;
      }
      const double denom = std::hypot(h(j, j), h(j + 1, j));
      cs[j] = h(j, j) / denom;
      sn[j] = h(j + 1, j) / denom;
      const double hj1 = h(j + 1, j);
      h(j, j) = cs[j] * h(j, j) + sn[j] * hj1;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      const double next_norm = norm2(w);
      if (std::abs(g[j + 1]) <= target || next_norm == 0.0) {
        ++j;
        ++total;
        break;
      }
      V.emplace_back(np);
      for (std::size_t p = 0; p < np; ++p) V[j + 1][p] = w[p] / next_norm;
    }
    // Back substitution for the Krylov coefficients.
    std::vector<double> y(j, 0.0);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int l = i + 1; l < j; ++l) s -= h(i, l) * y[l];
      y[i] = s / h(i, i);
    }
    for (int i = 0; i < j; ++i)
      for (std::size_t p = 0; p < np; ++p) m[p] += y[i] * Z[i][p];
  }
  if (!converged) {
    op.apply(m, w);
    for (std::size_t p = 0; p < np; ++p) r[p] = f[p] - w[p];
    res = norm2(r);
    if (res > target)
      throw LapseError(LapseError::Kind::non_convergence,
                       "lapse solve did not converge in " + std::to_string(cfg.max_iter) +
                           " iterations (relative residual " +
                           std::to_string(res / rhs_norm) + ")");
  }
  if (residual_norm) *residual_norm = res;
  return total;
}

LapseResult solve_lapse(const ReducedState& state, const LapseSolveConfig& cfg, bool warm_start) {
  if (!(cfg.rel_tol > 0.0)) throw std::invalid_argument("lapse.rel_tol must be positive");
  if (!(state.t > 0.0)) throw std::domain_error("lapse solve requires t > 0");
  const LapseOperator op(state);
  const std::size_t np = state.npts();
  const auto& f = op.source();

  LapseResult result;
  result.rhs_norm = norm2(f);
  std::vector<double> m(np, 0.0);
  if (warm_start)
    for (std::size_t p = 0; p < np; ++p) m[p] = state.n(0, p) - 1.0;
  result.iterations = solve_lapse_system(op, f, m, cfg, &result.residual_norm);

  result.n = Field(1, np);
  double nmin = 1.0;
  for (std::size_t p = 0; p < np; ++p) {
    result.n(0, p) = 1.0 + m[p];
    nmin = std::min(nmin, result.n(0, p));
  }
  if (!(nmin > 0.0))
    throw LapseError(LapseError::Kind::nonpositive,
                     "lapse became non-positive (min n = " + std::to_string(nmin) + ")");
  return result;
}

std::vector<double> lapse_residual(const ReducedState& state) {
  const LapseOperator op(state);
  const std::size_t np = state.npts();
  std::vector<double> m(np), out(np);
  for (std::size_t p = 0; p < np; ++p) m[p] = state.n(0, p) - 1.0;
  op.apply(m, out);
  for (std::size_t p = 0; p < np; ++p) out[p] -= op.source()[p];
  return out;
}

}  // namespace kasner
