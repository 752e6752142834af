#include "kasner/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kasner {

namespace {

// tr_C = gamma_DDC
Field gamma_trace(const ReducedState& s) {
  const int D = s.dim();
  const std::size_t np = s.npts();
  Field tr(D, np);
  for (int C = 0; C < D; ++C)
    for (int E = 0; E < D; ++E) {
      const double* g = s.gamma.comp(idx3(D, E, E, C));
      double* o = tr.comp(C);
      for (std::size_t p = 0; p < np; ++p) o[p] += g[p];
    }
  return tr;
}

double sup_abs(std::span<const double> f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

double l2_norm(const Grid& grid, std::span<const double> f) {
  double s = 0.0;
  for (double v : f) s += v * v;
  const double cell = std::pow(2.0 * std::numbers::pi, grid.dim()) / grid.num_points();
  return std::sqrt(s * cell);
}

// Enumerates multi-indices over `na` axes with |iota| == order.
template <class Fn>
void for_each_multi_index(int na, int order, Fn&& fn) {
  std::vector<int> iota(na, 0);
  auto rec = [&](auto&& self, int axis, int left) -> void {
    if (axis == na - 1) {
      iota[axis] = left;
      fn(std::span<const int>(iota));
      return;
    }
    for (int v = left; v >= 0; --v) {
      iota[axis] = v;
      self(self, axis + 1, left - v);
    }
  };
  rec(rec, 0, order);
}

// sum over components of the W^{order,inf} norm of (f_c - offset_c).
double w_inf_sum(const Grid& grid, const Field& f, int order, const std::vector<double>& offset) {
  std::vector<double> tmp(f.npts());
  double total = 0.0;
  for (int c = 0; c < f.ncomp(); ++c) {
    const double off = offset.empty() ? 0.0 : offset[c];
    for (std::size_t p = 0; p < f.npts(); ++p) tmp[p] = f(c, p) - off;
    total += w_inf_norm(grid, tmp, order);
  }
  return total;
}

double hdot_sum(const Grid& grid, const Field& f, int order) {
  double s = 0.0;
  for (int c = 0; c < f.ncomp(); ++c) s += grid.homogeneous_sobolev_sq(f.span(c), order);
  return std::sqrt(s);
}

}  // namespace

Field hamiltonian_residual(const ReducedState& s) {
  const Grid& grid = *s.grid;
  const int D = s.dim();
  const std::size_t np = s.npts();
  const Field tr = gamma_trace(s);
  const auto dtr = frame_gradient(grid, s.e, tr.all(), D);
  Field out(1, np);
  const double inv_t2 = 1.0 / (s.t * s.t);
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (std::size_t p = 0; p < np; ++p) {
    double v = inv_t2 - s.e0psi(0, p) * s.e0psi(0, p);
    for (int C = 0; C < D; ++C) {
      v += 2.0 * dtr[(static_cast<std::size_t>(C) * D + C) * np + p];
      v -= tr(C, p) * tr(C, p) + s.epsi(C, p) * s.epsi(C, p);
      for (int Dd = 0; Dd < D; ++Dd) {
        v -= s.k(idx2(D, C, Dd), p) * s.k(idx2(D, C, Dd), p);
        for (int E = 0; E < D; ++E)
          v -= s.gamma(idx3(D, C, Dd, E), p) * s.gamma(idx3(D, E, Dd, C), p);
      }
    }
    out(0, p) = v;
  }
  return out;
}

Field momentum_residual(const ReducedState& s) {
  const Grid& grid = *s.grid;
  const int D = s.dim();
  const std::size_t np = s.npts();
  const Field tr = gamma_trace(s);
  const auto dk = frame_gradient(grid, s.e, s.k.all(), D * D);
  Field out(D, np);
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (std::size_t p = 0; p < np; ++p) {
    for (int I = 0; I < D; ++I) {
      double v = s.e0psi(0, p) * s.epsi(I, p);
      for (int C = 0; C < D; ++C) {
        v += dk[(static_cast<std::size_t>(idx2(D, C, I)) * D + C) * np + p];
        v -= tr(C, p) * s.k(idx2(D, I, C), p);
        for (int Dd = 0; Dd < D; ++Dd)
          v -= s.gamma(idx3(D, C, I, Dd), p) * s.k(idx2(D, C, Dd), p);
      }
      out(I, p) = v;
    }
  }
  return out;
}

Field spatial_ricci(const ReducedState& s) {
  const Grid& grid = *s.grid;
  const int D = s.dim();
  const std::size_t np = s.npts();
  const Field tr = gamma_trace(s);
  const auto dg = frame_gradient(grid, s.e, s.gamma.all(), D * D * D);
  // u_J = gamma_CJC = -tr_J
  Field u(D, np);
  for (int J = 0; J < D; ++J)
    for (std::size_t p = 0; p < np; ++p) u(J, p) = -tr(J, p);
  const auto du = frame_gradient(grid, s.e, u.all(), D);
  Field out(D * D, np);
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (std::size_t p = 0; p < np; ++p) {
    for (int I = 0; I < D; ++I)
      for (int J = I; J < D; ++J) {
        double v[2] = {0.0, 0.0};
        for (int pass = 0; pass < 2; ++pass) {
          const int a = pass == 0 ? I : J, b = pass == 0 ? J : I;
          double acc = -du[(static_cast<std::size_t>(b) * D + a) * np + p];
          for (int C = 0; C < D; ++C) {
            acc += dg[(static_cast<std::size_t>(idx3(D, a, b, C)) * D + C) * np + p];
            acc -= tr(C, p) * s.gamma(idx3(D, a, b, C), p);
            for (int Dd = 0; Dd < D; ++Dd)
              acc -= s.gamma(idx3(D, C, a, Dd), p) * s.gamma(idx3(D, Dd, b, C), p);
          }
          v[pass] = acc;
        }
        const double sym = 0.5 * (v[0] + v[1]);
        out(idx2(D, I, J), p) = sym;
        out(idx2(D, J, I), p) = sym;
      }
  }
  return out;
}

Field spatial_riemann(const ReducedState& s) {
  const Grid& grid = *s.grid;
  const int D = s.dim();
  const std::size_t np = s.npts();
  const auto dg = frame_gradient(grid, s.e, s.gamma.all(), D * D * D);
  Field out(D * D * D * D, np);
  auto dG = [&](int A, int c, std::size_t p) {  // e_A gamma_c
    return dg[(static_cast<std::size_t>(c) * D + A) * np + p];
  };
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (std::size_t p = 0; p < np; ++p) {
    auto G = [&](int a, int b, int c) { return s.gamma(idx3(D, a, b, c), p); };
    for (int A = 0; A < D; ++A)
      for (int B = 0; B < D; ++B)
        for (int M = 0; M < D; ++M)
          for (int N = 0; N < D; ++N) {
            double v = dG(A, idx3(D, B, N, M), p) - dG(B, idx3(D, A, N, M), p);
            for (int C = 0; C < D; ++C)
              v += G(B, N, C) * G(A, C, M) - G(A, N, C) * G(B, C, M) -
                   (G(A, B, C) - G(B, A, C)) * G(C, N, M);
            out(((A * D + B) * D + M) * D + N, p) = v;
          }
  }
  return out;
}

Field kretschmann(const ReducedState& s) {
  const Grid& grid = *s.grid;
  const int D = s.dim();
  const std::size_t np = s.npts();
  const Field riem = spatial_riemann(s);
  const Field ric = spatial_ricci(s);
  const auto dk = frame_gradient(grid, s.e, s.k.all(), D * D);
  const double inv_t = 1.0 / s.t;
  Field out(1, np);
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (std::size_t p = 0; p < np; ++p) {
    auto K = [&](int a, int b) { return s.k(idx2(D, a, b), p); };
    auto G = [&](int a, int b, int c) { return s.gamma(idx3(D, a, b, c), p); };
    double spatial = 0.0, electric = 0.0, codazzi = 0.0;
    // Gauss: spacetime Riem(C,I,D,J) = Riem(C,I,D,J) + k_CD k_IJ - k_CJ k_ID
    for (int C = 0; C < D; ++C)
      for (int I = 0; I < D; ++I)
        for (int Dd = 0; Dd < D; ++Dd)
          for (int J = 0; J < D; ++J) {
            const double v = riem(((C * D + I) * D + Dd) * D + J, p) + K(C, Dd) * K(I, J) -
                             K(C, J) * K(I, Dd);
            spatial += v * v;
          }
    for (int I = 0; I < D; ++I)
      for (int J = 0; J < D; ++J) {
        double v = ric(idx2(D, I, J), p) - K(I, J) * inv_t - s.epsi(I, p) * s.epsi(J, p);
        for (int C = 0; C < D; ++C) v -= K(I, C) * K(C, J);
        electric += v * v;
      }
    for (int A = 0; A < D; ++A)
      for (int I = 0; I < D; ++I)
        for (int J = 0; J < D; ++J) {
          double v = dk[(static_cast<std::size_t>(idx2(D, I, J)) * D + A) * np + p] -
                     dk[(static_cast<std::size_t>(idx2(D, A, J)) * D + I) * np + p];
          for (int B = 0; B < D; ++B)
            v += -G(A, I, B) * K(B, J) - G(A, J, B) * K(I, B) + G(I, A, B) * K(B, J) +
                 G(I, J, B) * K(A, B);
          codazzi += v * v;
        }
    out(0, p) = spatial + 4.0 * electric - 4.0 * codazzi;
  }
  return out;
}

double kretschmann_coefficient(std::span<const double> q) {
  double a = 0.0, b = 0.0;
  for (std::size_t I = 0; I < q.size(); ++I) {
    const double v = q[I] * q[I] - q[I];
    a += v * v;
    for (std::size_t J = I + 1; J < q.size(); ++J) b += q[I] * q[I] * q[J] * q[J];
  }
  return 4.0 * (a + b);
}

std::vector<double> kretschmann_asymptotic(const Field& q_inf) {
  std::vector<double> out(q_inf.npts());
  std::vector<double> q(q_inf.ncomp());
  for (std::size_t p = 0; p < q_inf.npts(); ++p) {
    for (int I = 0; I < q_inf.ncomp(); ++I) q[I] = q_inf(I, p);
    out[p] = kretschmann_coefficient(q);
  }
  return out;
}

double w_inf_norm(const Grid& grid, std::span<const double> f, int order) {
  const int na = grid.num_active();
  std::vector<double> d(f.size());
  double total = 0.0;
  for (int m = 0; m <= order; ++m)
    for_each_multi_index(na, m, [&](std::span<const int> iota) {
      grid.multi_derivative(f, iota, d);
      total += sup_abs(d);
    });
  return total;
}

SolutionNorms solution_norms(const ReducedState& s, const KasnerData& bg,
                             const StabilityParams& params, const NormSettings& counts) {
  if (counts.N0 < 0 || counts.N < 0) throw std::invalid_argument("derivative counts must be >= 0");
  const Grid& grid = *s.grid;
  const std::size_t np = s.npts();
  const double t = s.t;
  const double q = params.q, sigma = params.sigma;
  const BackgroundFields b = background_fields(bg, t);

  SolutionNorms r;
  const int min_n = *std::min_element(grid.sizes().begin(), grid.sizes().end());
  r.bandwidth_warning = std::max(counts.N0 + 1, counts.N + 1) > min_n / 2;

  const std::vector<double> none;
  const double e_low = w_inf_sum(grid, s.e, counts.N0, b.e);
  const double w_low = w_inf_sum(grid, s.omega, counts.N0, b.omega);
  r.L_e_omega = std::pow(t, q) * std::max(e_low, w_low);

  const Field en = frame_derivative(grid, s.e, s.n.all());
  r.L_n = std::max(std::pow(t, -sigma) * w_inf_sum(grid, s.n, counts.N0 + 1, {1.0}),
                   std::pow(t, q - sigma) * w_inf_sum(grid, en, counts.N0, none));

  r.L_gamma_k = std::max(std::pow(t, q) * w_inf_sum(grid, s.gamma, counts.N0, none),
                         t * w_inf_sum(grid, s.k, counts.N0 + 1, b.k));

  r.L_psi = std::max(std::pow(t, q) * w_inf_sum(grid, s.epsi, counts.N0, none),
                     t * w_inf_sum(grid, s.e0psi, counts.N0 + 1, {bg.scalar_coeff / t}));

  const double tA = std::pow(t, counts.A);
  r.H_e_omega = tA * std::pow(t, q) *
                std::max(hdot_sum(grid, s.e, counts.N), hdot_sum(grid, s.omega, counts.N));
  // ||n||_{Hdot^N} with N = 0 would include the background value; use n - 1.
  Field nm1(1, np);
  for (std::size_t p = 0; p < np; ++p) nm1(0, p) = s.n(0, p) - 1.0;
  r.H_n = std::max(tA * hdot_sum(grid, counts.N == 0 ? nm1 : s.n, counts.N),
                   tA * t * hdot_sum(grid, en, counts.N));
  r.H_gamma_k = tA * t * std::max(hdot_sum(grid, s.gamma, counts.N), hdot_sum(grid, s.k, counts.N));
  r.H_psi = tA * t * std::max(hdot_sum(grid, s.epsi, counts.N), hdot_sum(grid, s.e0psi, counts.N));
  return r;
}

FinalState final_kasner_data(std::span<const ReducedState> snapshots, double sigma) {
  if (snapshots.size() < 2)
    throw std::invalid_argument("final Kasner data needs at least two snapshots");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  std::vector<const ReducedState*> order;
  for (const auto& s : snapshots) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const ReducedState* a, const ReducedState* b) { return a->t > b->t; });
  if (order.size() > 3) order.erase(order.begin(), order.end() - 3);
  const int D = order.front()->dim();
  const std::size_t np = order.front()->npts();
  for (const auto* s : order)
    if (s->dim() != D || s->npts() != np) throw std::invalid_argument("snapshot shape mismatch");

  // Observed rate from successive differences of (t k, t n e0psi). sigma is
  // only a lower bound; extrapolating with it when the data settle faster
  // amplifies the remaining error instead of removing it.
  const std::size_t m = order.size();
  double rate = sigma;
  if (m == 3) {
    auto diff = [&](const ReducedState& a, const ReducedState& b) {
      double d = 0.0;
      for (std::size_t i = 0; i < a.k.size(); ++i)
        d = std::max(d, std::abs(a.t * a.k.all()[i] - b.t * b.k.all()[i]));
      for (std::size_t p = 0; p < np; ++p)
        d = std::max(d, std::abs(a.t * a.n(0, p) * a.e0psi(0, p) - b.t * b.n(0, p) * b.e0psi(0, p)));
      return d;
    };
    const double d01 = diff(*order[0], *order[1]);
    const double d12 = diff(*order[1], *order[2]);
    const double logr = 0.5 * std::log(order[0]->t / order[2]->t);
    if (d12 > 0.0 && d01 > d12) rate = std::clamp(std::log(d01 / d12) / logr, sigma, 8.0);
  }

  // Lagrange extrapolation to s = 0 in s = t^rate (the polynomial form of
  // repeated Richardson steps with rates p, 2p).
  std::vector<double> sv(m), w(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) sv[i] = std::pow(order[i]->t, rate);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) {
        if (sv[j] == sv[i]) throw std::invalid_argument("snapshot times must be distinct");
        w[i] *= sv[j] / (sv[j] - sv[i]);
      }

  FinalState out;
  out.rate = rate;
  out.kappa = Field(D * D, np);
  out.B = Field(1, np);
  out.q = Field(D, np);
  for (std::size_t i = 0; i < m; ++i) {
    const ReducedState& s = *order[i];
    for (int c = 0; c < D * D; ++c)
      for (std::size_t p = 0; p < np; ++p) out.kappa(c, p) += w[i] * s.t * s.k(c, p);
    for (std::size_t p = 0; p < np; ++p) out.B(0, p) += w[i] * s.t * s.n(0, p) * s.e0psi(0, p);
  }

  double asym = 0.0;
  Eigen::MatrixXd M(D, D);
  for (std::size_t p = 0; p < np; ++p) {
    for (int I = 0; I < D; ++I)
      for (int J = 0; J < D; ++J) {
        asym = std::max(asym, std::abs(out.kappa(idx2(D, I, J), p) - out.kappa(idx2(D, J, I), p)));
        M(I, J) = -0.5 * (out.kappa(idx2(D, I, J), p) + out.kappa(idx2(D, J, I), p));
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalue solver failed");
    const Eigen::VectorXd ev = es.eigenvalues();  // ascending
    double sum = 0.0, sumsq = 0.0;
    for (int I = 0; I < D; ++I) {
      const double v = ev(D - 1 - I);
      out.q(I, p) = v;
      sum += v;
      sumsq += v * v;
    }
    const double B = out.B(0, p);
    out.sum_residual = std::max(out.sum_residual, std::abs(sum - 1.0));
    out.sumsq_residual = std::max(out.sumsq_residual, std::abs(sumsq - (1.0 - B * B)));
  }
  if (asym > 1e-8)
    throw std::runtime_error("extrapolated kappa is not symmetric (" + std::to_string(asym) + ")");
  return out;
}

double sobolev_norm(const Grid& grid, std::span<const double> f, int order) {
  double s = 0.0;
  for (int m = 0; m <= order; ++m) s += grid.homogeneous_sobolev_sq(f, m);
  return std::sqrt(s);
}

double initial_data_norm(const Grid& grid, const Field& g, const Field& k,
                         std::span<const double> psi, std::span<const double> phi,
                         const KasnerData& bg, int N) {
  const int D = grid.dim();
  const std::size_t np = grid.num_points();
  std::vector<double> tmp(np);
  double total = 0.0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      const double dg = i == j ? 1.0 : 0.0;
      const double dk = i == j ? -bg.exponents[i] : 0.0;
      for (std::size_t p = 0; p < np; ++p) tmp[p] = g(idx2(D, i, j), p) - dg;
      total += sobolev_norm(grid, tmp, N + 1);
      for (std::size_t p = 0; p < np; ++p) tmp[p] = k(idx2(D, i, j), p) - dk;
      total += sobolev_norm(grid, tmp, N);
    }
  total += sobolev_norm(grid, psi, N + 1);
  for (std::size_t p = 0; p < np; ++p) tmp[p] = phi[p] - bg.scalar_coeff;
  total += sobolev_norm(grid, tmp, N);
  return total;
}

FieldStats field_stats(const Grid& grid, std::span<const double> f) {
  FieldStats st;
  if (f.empty()) return st;
  st.min = *std::min_element(f.begin(), f.end());
  st.max = *std::max_element(f.begin(), f.end());
  st.mean = grid.mean(f);
  return st;
}

DiagnosticsRecord compute_diagnostics(const ReducedState& s, const KasnerData& bg,
                                      const StabilityParams& params, const NormSettings& counts) {
  const Grid& grid = *s.grid;
  const int D = s.dim();
  const std::size_t np = s.npts();
  const double t = s.t;
  DiagnosticsRecord r;
  r.t = t;

  Field ham = hamiltonian_residual(s);
  for (double& v : ham.raw()) v *= t * t;
  r.ham_sup = sup_abs(ham.all());
  r.ham_l2 = l2_norm(grid, ham.all());
  Field mom = momentum_residual(s);
  for (double& v : mom.raw()) v *= t;
  r.mom_sup = sup_abs(mom.all());
  r.mom_l2 = l2_norm(grid, mom.all());

  r.norms = solution_norms(s, bg, params, counts);

  Field K = kretschmann(s);
  const double t4 = t * t * t * t;
  for (double& v : K.raw()) v *= t4;
  r.kretschmann_t4 = field_stats(grid, K.all());

  const Field S = structure_coefficients(D, s.gamma);
  const double tq = std::pow(t, params.q);
  for (int I = 0; I < D; ++I)
    for (int J = I + 1; J < D; ++J)
      for (int B = 0; B < D; ++B)
        r.structure_sup = std::max(r.structure_sup, tq * sup_abs(S.span(idx3(D, I, J, B))));

  const Field ric = spatial_ricci(s);
  r.ricci_sup = std::pow(t, 2.0 - params.sigma) * sup_abs(ric.all());

  for (std::size_t p = 0; p < np; ++p) {
    double tr = 0.0;
    for (int C = 0; C < D; ++C) tr += s.k(idx2(D, C, C), p);
    r.cmc_residual = std::max(r.cmc_residual, std::abs(t * tr + 1.0));
  }
  r.duality_residual = duality_residual(D, s.frame());
  const Field kg = koszul_gamma(grid, s.frame());
  for (std::size_t i = 0; i < kg.size(); ++i)
    r.gamma_consistency = std::max(r.gamma_consistency, std::abs(kg.raw()[i] - s.gamma.raw()[i]));
  r.k_symmetry = symmetry_residual_k(s);
  r.gamma_antisymmetry = antisymmetry_residual(D, s.gamma);
  r.lapse_min = *std::min_element(s.n.raw().begin(), s.n.raw().end());
  r.lapse_max = *std::max_element(s.n.raw().begin(), s.n.raw().end());
  return r;
}

}  // namespace kasner
