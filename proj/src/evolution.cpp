#include "kasner/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <vector>

namespace kasner {

namespace {

void check_finite(const ReducedState& s, const ReducedState& last_good, const char* where) {
  if (!s.all_finite())
    throw EvolutionError(std::string("non-finite values in ") + where + " at t = " +
                             std::to_string(s.t),
                         last_good);
}

// Log-time derivatives of the stepped variables V = (t k, gamma, e, omega,
// t e_0 psi, e_I psi): dV/dtau = -t dV/dt. Scaling k and e_0 psi by t removes
// the stiff -k/t and -e_0 psi/t terms, so exact Kasner data have dV/dtau = 0.
StateRates tau_rates(const ReducedState& s) {
  StateRates r = compute_rates(s);
  const double t = s.t;
  auto scale = [t](Field& f) {
    for (double& v : f.raw()) v *= -t;
  };
  auto scale_kinetic = [t](Field& f, const Field& value) {
    auto& v = f.raw();
    const auto& x = value.raw();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -t * (x[i] + t * v[i]);
  };
  scale_kinetic(r.k, s.k);
  scale(r.gamma);
  scale(r.e);
  scale(r.omega);
  scale_kinetic(r.e0psi, s.e0psi);
  scale(r.epsi);
  return r;
}

// base (at base.t) advanced by sum_i w_i K_i in the stepped variables, landing at t_new.
ReducedState combine(const ReducedState& base, double t_new,
                     std::initializer_list<std::pair<double, const StateRates*>> terms) {
  ReducedState y = base;
  auto axpy = [](Field& f, double a, const Field& g) {
    auto& v = f.raw();
    const auto& w = g.raw();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += a * w[i];
  };
  for (double& v : y.k.raw()) v *= base.t;
  for (double& v : y.e0psi.raw()) v *= base.t;
  for (const auto& [a, r] : terms) {
    axpy(y.k, a, r->k);
    axpy(y.gamma, a, r->gamma);
    axpy(y.e, a, r->e);
    axpy(y.omega, a, r->omega);
    axpy(y.e0psi, a, r->e0psi);
    axpy(y.epsi, a, r->epsi);
  }
  for (double& v : y.k.raw()) v /= t_new;
  for (double& v : y.e0psi.raw()) v /= t_new;
  y.t = t_new;
  return y;
}

void resolve_lapse(ReducedState& s, const LapseSolveConfig& cfg, const ReducedState& last_good,
                   StepInfo* info) {
  try {
    LapseResult r = solve_lapse(s, cfg, true);
    s.n = std::move(r.n);
    if (info) info->lapse_iterations += r.iterations;
  } catch (const LapseError& err) {
    throw EvolutionError(std::string("lapse solve failed at t = ") + std::to_string(s.t) + ": " +
                             err.what(),
                         last_good);
  }
}

}  // namespace

void validate(const EvolveConfig& cfg) {
  if (!(cfg.tau_step > 0.0)) throw std::invalid_argument("evolve.tau_step must be positive");
  if (!(cfg.t_final > 0.0 && cfg.t_final < 1.0))
    throw std::invalid_argument("evolve.t_final must lie in (0, 1)");
  if (!(cfg.cfl_safety > 0.0)) throw std::invalid_argument("evolve.cfl_safety must be positive");
  if (cfg.snapshot_every < 1) throw std::invalid_argument("evolve.snapshot_every must be >= 1");
}

StateRates compute_rates(const ReducedState& s) {
  const Grid& grid = *s.grid;
  const int D = grid.dim();
  const std::size_t np = grid.num_points();
  const double t = s.t;
  const int D2 = D * D;
  const int D3 = D2 * D;

  const auto dn = frame_gradient(grid, s.e, s.n.all(), 1);
  const auto ddn = frame_gradient(grid, s.e, dn, D);  // [J][I]: e_I e_J n
  const auto dk = frame_gradient(grid, s.e, s.k.all(), D2);
  const auto d0psi = frame_gradient(grid, s.e, s.e0psi.all(), 1);
  const auto dpsi = frame_gradient(grid, s.e, s.epsi.all(), D);

  // u_J = gamma_CJC and its frame derivatives.
  Field u(D, np);
  for (int J = 0; J < D; ++J)
    for (int C = 0; C < D; ++C) {
      const double* g = s.gamma.comp(idx3(D, C, J, C));
      double* o = u.comp(J);
      for (std::size_t p = 0; p < np; ++p) o[p] += g[p];
    }
  const auto du = frame_gradient(grid, s.e, u.all(), D);

  // divg_IJ = e_C gamma_IJC
  Field divg(D2, np);
  {
    const auto dg = frame_gradient(grid, s.e, s.gamma.all(), D3);
    for (int I = 0; I < D; ++I)
      for (int J = 0; J < D; ++J)
        for (int C = 0; C < D; ++C) {
          const double* src = dg.data() + (static_cast<std::size_t>(idx3(D, I, J, C)) * D + C) * np;
          double* o = divg.comp(idx2(D, I, J));
          for (std::size_t p = 0; p < np; ++p) o[p] += src[p];
        }
  }

  StateRates r{Field(D2, np), Field(D3, np), Field(D2, np),
               Field(D2, np), Field(1, np),  Field(D, np)};

#pragma omp parallel num_threads(worker_threads())
  {
    std::vector<double> kk(D2), gg(D3), tr(D), en(D), ep(D), kr(D2);
#pragma omp for schedule(static)
    for (std::size_t p = 0; p < np; ++p) {
      const double n = s.n(0, p);
      const double e0p = s.e0psi(0, p);
      for (int a = 0; a < D2; ++a) kk[a] = s.k(a, p);
      for (int a = 0; a < D3; ++a) gg[a] = s.gamma(a, p);
      for (int C = 0; C < D; ++C) {
        en[C] = dn[static_cast<std::size_t>(C) * np + p];
        ep[C] = s.epsi(C, p);
        double acc = 0.0;
        for (int E = 0; E < D; ++E) acc += gg[idx3(D, E, E, C)];
        tr[C] = acc;
      }
      auto K = [&](int a, int b) { return kk[a * D + b]; };
      auto G = [&](int a, int b, int c) { return gg[(a * D + b) * D + c]; };

      for (int I = 0; I < D; ++I)
        for (int J = 0; J < D; ++J) {
          double quad = 0.0, lin = 0.0;
          for (int C = 0; C < D; ++C) {
            lin += G(I, J, C) * en[C];
            quad += tr[C] * G(I, J, C);
            for (int Dd = 0; Dd < D; ++Dd) quad += G(Dd, I, C) * G(C, J, Dd);
          }
          const double deriv = divg(idx2(D, I, J), p) -
                               du[(static_cast<std::size_t>(J) * D + I) * np + p];
          kr[idx2(D, I, J)] = -ddn[(static_cast<std::size_t>(J) * D + I) * np + p] +
                              n * deriv - (n / t) * K(I, J) + lin - n * quad -
                              n * ep[I] * ep[J];
        }
      for (int I = 0; I < D; ++I)
        for (int J = 0; J < D; ++J)
          r.k(idx2(D, I, J), p) = 0.5 * (kr[idx2(D, I, J)] + kr[idx2(D, J, I)]);

      for (int I = 0; I < D; ++I)
        for (int J = 0; J < D; ++J)
          for (int B = 0; B < D; ++B) {
            double alg = 0.0;
            for (int C = 0; C < D; ++C)
              alg += -K(I, C) * G(B, J, C) - K(C, J) * G(B, I, C) + K(I, C) * G(J, B, C) +
                     K(B, C) * G(J, I, C) + K(I, C) * G(C, J, B);
            const double ekIJ = dk[(static_cast<std::size_t>(idx2(D, I, J)) * D + B) * np + p];
            const double ekBI = dk[(static_cast<std::size_t>(idx2(D, B, I)) * D + J) * np + p];
            r.gamma(idx3(D, I, J, B), p) =
                n * (ekIJ - ekBI + alg) + en[B] * K(I, J) - en[J] * K(B, I);
          }

      for (int I = 0; I < D; ++I)
        for (int i = 0; i < D; ++i) {
          double fe = 0.0, fw = 0.0;
          for (int C = 0; C < D; ++C) {
            fe += K(I, C) * s.e(idx2(D, C, i), p);
            fw += K(I, C) * s.omega(idx2(D, i, C), p);
          }
          r.e(idx2(D, I, i), p) = n * fe;
          r.omega(idx2(D, i, I), p) = -n * fw;
        }

      double lap = 0.0, trp = 0.0, np_ = 0.0;
      for (int C = 0; C < D; ++C) {
        lap += dpsi[(static_cast<std::size_t>(C) * D + C) * np + p];
        trp += tr[C] * ep[C];
        np_ += en[C] * ep[C];
      }
      r.e0psi(0, p) = n * (lap - e0p / t - trp) + np_;
      for (int I = 0; I < D; ++I) {
        double kp = 0.0;
        for (int C = 0; C < D; ++C) kp += K(I, C) * ep[C];
        r.epsi(I, p) = n * d0psi[static_cast<std::size_t>(I) * np + p] + n * kp + en[I] * e0p;
      }
    }
  }
  return r;
}

Field rhs_k(const ReducedState& state) { return compute_rates(state).k; }
Field rhs_gamma(const ReducedState& state) { return compute_rates(state).gamma; }

std::pair<Field, Field> rhs_frame(const ReducedState& state) {
  StateRates r = compute_rates(state);
  return {std::move(r.e), std::move(r.omega)};
}

std::pair<Field, Field> rhs_psi(const ReducedState& state) {
  StateRates r = compute_rates(state);
  return {std::move(r.e0psi), std::move(r.epsi)};
}

double choose_tau_step(const ReducedState& state, const EvolveConfig& cfg) {
  const Grid& grid = *state.grid;
  const int D = grid.dim();
  double emax = 0.0;
  for (int I = 0; I < D; ++I)
    for (int a : grid.active_dims())
      for (double v : state.e.span(idx2(D, I, a))) emax = std::max(emax, std::abs(v));
  const double nmax = state.n.max_abs();
  const double speed = state.t * nmax * emax;
  double dtau = cfg.tau_step;
  if (speed > 0.0) dtau = std::min(dtau, cfg.cfl_safety * grid.min_spacing() / speed);
  return dtau;
}

ReducedState step(const ReducedState& state, double dtau, const LapseSolveConfig& lapse,
                  StepInfo* info) {
  if (!(dtau > 0.0)) throw std::invalid_argument("step size must be positive");
  if (info) *info = StepInfo{dtau, 0};
  const double t0 = state.t;
  const double th = t0 * std::exp(-0.5 * dtau);
  const double t1 = t0 * std::exp(-dtau);

  const StateRates k1 = tau_rates(state);

  ReducedState y = combine(state, th, {{0.5 * dtau, &k1}});
  check_finite(y, state, "RK stage 2");
  resolve_lapse(y, lapse, state, info);
  const StateRates k2 = tau_rates(y);

  y = combine(state, th, {{0.5 * dtau, &k2}});
  check_finite(y, state, "RK stage 3");
  resolve_lapse(y, lapse, state, info);
  const StateRates k3 = tau_rates(y);

  y = combine(state, t1, {{dtau, &k3}});
  check_finite(y, state, "RK stage 4");
  resolve_lapse(y, lapse, state, info);
  const StateRates k4 = tau_rates(y);

  ReducedState out = combine(
      state, t1, {{dtau / 6.0, &k1}, {dtau / 3.0, &k2}, {dtau / 3.0, &k3}, {dtau / 6.0, &k4}});
  project_index_symmetries(out);
  check_finite(out, state, "RK update");
  out.n = y.n;  // warm start
  resolve_lapse(out, lapse, state, info);
  return out;
}

ReducedState evolve(ReducedState state, const EvolveConfig& cfg, const LapseSolveConfig& lapse,
                    std::span<const double> stop_times, const StepObserver& observer) {
  validate(cfg);
  if (cfg.determinism) set_worker_threads(1);
  std::vector<double> stops;
  for (double s : stop_times)
    if (s > cfg.t_final && s < state.t) stops.push_back(s);
  std::sort(stops.begin(), stops.end(), std::greater<>());
  stops.push_back(cfg.t_final);

  long index = 0;
  if (observer) observer(state, index, StepInfo{});
  std::size_t next = 0;
  while (next < stops.size()) {
    const double target = stops[next];
    if (state.t <= target * (1.0 + 1e-13)) {
      ++next;
      continue;
    }
    const double remaining = std::log(state.t / target);
    double dtau = choose_tau_step(state, cfg);
    bool land = false;
    if (dtau >= remaining * (1.0 - 1e-12)) {
      dtau = remaining;
      land = true;
    } else if (remaining < 1.5 * dtau) {
      dtau = 0.5 * remaining;  // avoid a sliver step before the stop
    }
    StepInfo info;
    state = step(state, dtau, lapse, &info);
    if (land) state.t = target;
    ++index;
    if (observer) observer(state, index, info);
  }
  return state;
}

StructureSplit structure_rhs_diagonal(const ReducedState& state, const KasnerData& background) {
  const int D = state.dim();
  const std::size_t np = state.npts();
  if (background.dim != D) throw std::invalid_argument("background dimension mismatch");
  const StateRates r = compute_rates(state);
  StructureSplit out;
  out.S = structure_coefficients(D, state.gamma);
  const Field Sdot = structure_coefficients(D, r.gamma);
  out.diagonal_coeff = Field(D * D * D, np);
  out.diagonal_term = Field(D * D * D, np);
  out.remainder = Field(D * D * D, np);
  const auto& q = background.exponents;
  for (int I = 0; I < D; ++I)
    for (int J = 0; J < D; ++J)
      for (int B = 0; B < D; ++B) {
        const int c = idx3(D, I, J, B);
        const double coeff = -(q[I] + q[J] - q[B]) / state.t;
        for (std::size_t p = 0; p < np; ++p) {
          out.diagonal_coeff(c, p) = coeff;
          out.diagonal_term(c, p) = coeff * out.S(c, p);
          out.remainder(c, p) = Sdot(c, p) - out.diagonal_term(c, p);
        }
      }
  return out;
}

}  // namespace kasner
