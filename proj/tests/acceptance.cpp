// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "homogeneous_oracle.hpp"
#include "kasner/run.hpp"
#include "kasner/u1_polarized.hpp"
#include "oracle_metric.hpp"

using namespace kasner;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!ok) {
      pass = false;
      detail += " [x]";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double sup(std::span<const double> f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------- runs

constexpr double kGrowthFloor = 1e-10;  // residuals below this are roundoff

struct Sample {
  double t, ham, mom, structure, ricci, symmetry;
};

struct Trajectory {
  std::string name;
  KasnerData bg;
  StabilityParams params;
  std::vector<Sample> samples;
  std::vector<ReducedState> snaps;  // t = 1, 0.1, 0.01
};

Trajectory run_case(const std::string& name, const std::string& config_text) {
  const RunConfig cfg = parse_config(config_text);
  Trajectory tr;
  tr.name = name;
  tr.bg = resolve_background(cfg);
  bool fallback = false;
  tr.params = resolve_stability(cfg, tr.bg, fallback);
  const double stops[] = {0.1};
  evolve(build_initial_state(cfg, tr.bg), cfg.evolve, cfg.lapse, stops,
         [&](const ReducedState& s, long, const StepInfo&) {
           const DiagnosticsRecord r = compute_diagnostics(s, tr.bg, tr.params, cfg.diag);
           double sym = 0.0;
           if (cfg.u1) {
             const SymmetryReport rep = check_symmetry(s);
             sym = std::max({rep.x3_independence, rep.polarization, rep.gamma_distinct, rep.e3_tilt});
           }
           tr.samples.push_back({s.t, r.ham_sup, r.mom_sup, r.structure_sup, r.ricci_sup, sym});
           for (double t : {1.0, 0.1, cfg.evolve.t_final})
             if (std::abs(s.t - t) <= 1e-12 * t) tr.snaps.push_back(s);
         });
  return tr;
}

std::string grid_lines(int dims) {
  return dims == 1 ? "grid.active_dims = 1\ngrid.sizes = 32\n"
                   : "grid.active_dims = 1, 2\ngrid.sizes = 32, 32\n";
}

const std::string kRunTail = "evolve.t_final = 1e-2\nevolve.tau_step = 0.02\n";

// Sub-critical backgrounds with exactly constrained data of amplitude 1e-3.
std::vector<Trajectory>& general_runs() {
  static std::vector<Trajectory> runs = [] {
    std::vector<Trajectory> out;
    out.push_back(run_case("flrw/gauge",
                           "background.q = 1/3, 1/3, 1/3\nbackground.B = 0.81649658092772603\n" +
                               grid_lines(2) +
                               "perturb.xi.1 = 1e-3,sin,0,1\nperturb.xi.2 = 1e-3,cos,1,0\n"
                               "perturb.xi.3 = 1e-3,sin,1,1\n" + kRunTail));
    out.push_back(run_case("(.5,.3,.2)/gauge",
                           "background.q = 0.5, 0.3, 0.2\nbackground.B = 0.78740078740118113\n" +
                               grid_lines(2) +
                               "perturb.xi.1 = 1e-3,cos,1,1\nperturb.xi.2 = 1e-3,sin,0,1\n"
                               "perturb.xi.3 = 1e-3,cos,1,0\n" + kRunTail));
    out.push_back(run_case("(.4,.3,.3)/scalar1d",
                           "background.q = 0.4, 0.3, 0.3\nbackground.B = 0.81240384046359604\n" +
                               grid_lines(1) +
                               "perturb.scalar1d.beta.2 = 1e-3,sin,1\n"
                               "perturb.scalar1d.beta.3 = -5e-4,cos,1\n"
                               "perturb.scalar1d.kappa.2 = 1e-3,cos,1\n" + kRunTail));
    return out;
  }();
  return runs;
}

// Polarized U(1) runs, including the generically unstable vacuum exponents.
std::vector<Trajectory>& polarized_runs() {
  static std::vector<Trajectory> runs = [] {
    std::vector<Trajectory> out;
    out.push_back(run_case("u1 (-1/3,2/3,2/3)/gauge",
                           "background.q = -1/3, 2/3, 2/3\n" + grid_lines(2) +
                               "perturb.xi.1 = 1e-3,sin,0,1\nperturb.xi.2 = 1e-3,cos,1,0\n"
                               "u1.enabled = true\n" + kRunTail));
    out.push_back(run_case("u1 (1/2,1/2,0)/gauge",
                           "background.q = 1/2, 1/2, 0\nbackground.B = 0.70710678118654757\n" +
                               grid_lines(2) +
                               "perturb.xi.1 = 1e-3,cos,1,1\nperturb.xi.2 = 1e-3,sin,1,0\n"
                               "u1.enabled = true\n" + kRunTail));
    out.push_back(run_case("u1 (.4,.3,.3)/scalar1d",
                           "background.q = 0.4, 0.3, 0.3\nbackground.B = 0.81240384046359604\n" +
                               grid_lines(1) +
                               "perturb.scalar1d.beta.2 = 1e-3,sin,1\n"
                               "perturb.scalar1d.kappa.3 = 1e-3,cos,1\nu1.enabled = true\n" +
                               kRunTail));
    return out;
  }();
  return runs;
}

// Growth of a monitored quantity relative to its value at t = 1, with
// roundoff-level starting values replaced by the floor.
struct Growth {
  double start, worst, factor;
};

Growth growth(const Trajectory& tr, double Sample::*field) {
  Growth g{tr.samples.front().*field, 0.0, 0.0};
  for (const Sample& s : tr.samples) g.worst = std::max(g.worst, s.*field);
  g.factor = g.worst / std::max(g.start, kGrowthFloor);
  return g;
}

std::string describe(const char* what, const Growth& g) {
  return std::string(what) + " " + fmt(g.start) + "->max " + fmt(g.worst);
}

void check_constraints(Verdict& v, const Trajectory& tr) {
  const Growth h = growth(tr, &Sample::ham), m = growth(tr, &Sample::mom);
  v.require(h.factor <= 10.0 && m.factor <= 10.0 && tr.samples.back().t <= 1e-2 * (1 + 1e-12),
            tr.name + " " + describe("t2H", h) + ", " + describe("tM", m));
}

void check_monitors(Verdict& v, const Trajectory& tr) {
  const Growth s = growth(tr, &Sample::structure), r = growth(tr, &Sample::ricci);
  v.require(s.factor <= 10.0 && r.factor <= 10.0 && std::isfinite(r.worst),
            tr.name + " " + describe("tqS", s) + ", " + describe("Ric", r));
}

// Relative deviation of t^4 K from the asymptotic formula on q_inf.
double t4K_deviation(const ReducedState& s, const Field& q_inf) {
  const Field K = kretschmann(s);
  const std::vector<double> Kinf = kretschmann_asymptotic(q_inf);
  double dev = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < s.npts(); ++p) {
    dev = std::max(dev, std::abs(std::pow(s.t, 4) * K(0, p) - Kinf[p]));
    scale = std::max(scale, std::abs(Kinf[p]));
  }
  return scale > 1e-12 ? dev / scale : dev;
}

void check_final_data(Verdict& v, const Trajectory& tr) {
  if (tr.snaps.size() != 3) {
    v.require(false, tr.name + " missing snapshots");
    return;
  }
  const FinalState fs = final_kasner_data(tr.snaps, tr.params.sigma);
  const double d1 = t4K_deviation(tr.snaps[1], fs.q);
  const double d2 = t4K_deviation(tr.snaps[2], fs.q);
  // Decay from t = 0.1 to 0.01 at least like t^sigma (with 20% slack on the
  // exponent), unless both deviations are already at roundoff.
  const bool roundoff = std::max(d1, d2) <= 1e-10;
  const double observed = roundoff ? 0.0 : std::log10(d1 / d2);
  const bool rate_ok = roundoff || observed >= 0.8 * tr.params.sigma;
  v.require(fs.sum_residual <= 1e-3 && fs.sumsq_residual <= 1e-3 && d2 <= 0.05 && rate_ok,
            tr.name + " sum " + fmt(fs.sum_residual) + " sumsq " + fmt(fs.sumsq_residual) +
                " t4K " + fmt(d2) +
                (roundoff ? " (roundoff)" : " rate " + fmt(observed) + " vs sigma " +
                                                fmt(tr.params.sigma)));
}

// ----------------------------------------------------------- criteria

Verdict algebraic_layer() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const ConstraintReport flrw = validate_constraints(KasnerData::flrw());
  const MarginReport m = subcriticality_margin(KasnerData::flrw());
  v.require(flrw.ok && std::abs(m.margin - 1.0 / 3.0) <= 1e-14 && m.subcritical,
            "FLRW margin " + fmt(m.margin));

  // D = 3 vacuum circle. The flat points (permutations of (1,0,0)) sit at
  // margin exactly 1, every other point strictly above.
  double min_margin = 1e300, min_nonflat = 1e300;
  bool any_sub = false;
  const int samples = 3600;
  for (int i = 0; i < samples; ++i) {
    const double a = 2.0 * std::numbers::pi * i / samples;
    KasnerData d{3, {}, 0.0};
    for (int j = 0; j < 3; ++j)
      d.exponents.push_back(1.0 / 3.0 + 2.0 / 3.0 * std::cos(a + 2.0 * std::numbers::pi * j / 3.0));
    if (!validate_constraints(d, 1e-12).ok) any_sub = true;
    const MarginReport r = subcriticality_margin(d);
    any_sub = any_sub || r.subcritical;
    min_margin = std::min(min_margin, r.margin);
    if (i % (samples / 3) != 0) min_nonflat = std::min(min_nonflat, r.margin);
  }
  v.require(!any_sub && min_margin >= 1.0 - 1e-14 && min_nonflat > 1.0,
            "D=3 vacuum min margin " + fmt(min_margin) + " (non-flat " + fmt(min_nonflat) + ")");

  bool infeasible = true;
  for (int D = 3; D <= 9; ++D)
    infeasible = infeasible && search_subcritical_vacuum(D, 1e-12).status == SearchStatus::infeasible;
  v.require(infeasible, "D<=9 search infeasible");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.require(secs < 1.0, "runtime " + fmt(secs) + " s");
  return v;
}

Verdict kretschmann_coefficients() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  struct Case {
    const char* name;
    KasnerData bg;
    double expect;
  };
  const Case cases[] = {
      {"flat", {3, {1.0, 0.0, 0.0}, 0.0}, 0.0},
      {"(-1/3,2/3,2/3)", {3, {-1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0}, 0.0}, 64.0 / 27.0},
      {"FLRW", KasnerData::flrw(), 20.0 / 27.0},
  };
  auto grid = Grid::make(3, {0, 1}, {32, 32});
  for (const Case& c : cases) {
    // Independent evaluation of the closed form.
    double formula = 0.0;
    const auto& q = c.bg.exponents;
    for (int I = 0; I < 3; ++I) {
      formula += std::pow(q[I] * q[I] - q[I], 2);
      for (int J = I + 1; J < 3; ++J) formula += q[I] * q[I] * q[J] * q[J];
    }
    formula *= 4.0;
    double err = 0.0;
    for (double t : {1.0, 0.1, 1e-3}) {
      const Field K = kretschmann(make_kasner_state(grid, c.bg, t));
      for (double k : K.all()) err = std::max(err, std::abs(std::pow(t, 4) * k - c.expect));
    }
    v.require(err <= 1e-8 && std::abs(formula - c.expect) <= 1e-14,
              std::string(c.name) + " err " + fmt(err));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.require(secs < 10.0, "runtime " + fmt(secs) + " s");
  return v;
}

Verdict exact_kasner_preservation() {
  Verdict v;
  const KasnerData cases[] = {
      KasnerData::flrw(),
      {3, {0.5, 0.3, 0.2}, std::sqrt(0.62)},
      {3, {-1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0}, 0.0},
  };
  for (const KasnerData& bg : cases) {
    auto grid = Grid::make(3, {0, 1}, {16, 16});
    EvolveConfig cfg;
    cfg.tau_step = std::log(1e3) / 1000.0;  // 1000 steps down to t = 1e-3
    cfg.t_final = 1e-3;
    double dk = 0.0, dn = 0.0, cons = 0.0, gam = 0.0;
    const StabilityParams params{1.0, 0.05, StabilityMode::general};
    long steps = 0;
    evolve(make_kasner_state(grid, bg, 1.0), cfg, LapseSolveConfig{}, {},
           [&](const ReducedState& s, long i, const StepInfo&) {
             steps = i;
             for (int I = 0; I < 3; ++I)
               for (int J = 0; J < 3; ++J)
                 for (std::size_t p = 0; p < s.npts(); ++p)
                   dk = std::max(dk, std::abs(s.t * s.k(idx2(3, I, J), p) +
                                              (I == J ? bg.exponents[I] : 0.0)));
             for (double n : s.n.all()) dn = std::max(dn, std::abs(n - 1.0));
             gam = std::max(gam, s.gamma.max_abs());
             if (i % 50 == 0 || s.t <= 1e-3 * (1 + 1e-12)) {
               const DiagnosticsRecord r = compute_diagnostics(s, bg, params, NormSettings{});
               cons = std::max({cons, r.ham_sup, r.mom_sup, r.cmc_residual});
             }
           });
    std::ostringstream name;
    name << "(" << fmt(bg.exponents[0]) << "," << fmt(bg.exponents[1]) << ","
         << fmt(bg.exponents[2]) << ")";
    v.require(dk <= 1e-8 && dn <= 1e-10 && cons <= 1e-10 && gam <= 1e-10,
              name.str() + " tk " + fmt(dk) + " n " + fmt(dn) + " C " + fmt(cons) + " gamma " +
                  fmt(gam) + " in " + std::to_string(steps) + " steps");
  }
  return v;
}

// Uniform data near the stiff background: tilted frame, traceless k
// perturbation and a constant gradient of psi.
ReducedState homogeneous_state() {
  const KasnerData bg{3, {0.4, 0.3, 0.3}, std::sqrt(0.66)};
  auto grid = Grid::make(3, {0}, {8});
  ReducedState s = make_kasner_state(grid, bg, 1.0);
  const double dk[9] = {0.02, 0.01, -0.005, 0.01, -0.03, 0.004, -0.005, 0.004, 0.01};
  const double de[9] = {0.0, 0.05, 0.0, 0.0, 0.0, 0.03, 0.02, 0.0, 0.0};
  const double ep[3] = {0.01, -0.02, 0.015};
  for (std::size_t p = 0; p < s.npts(); ++p) {
    for (int c = 0; c < 9; ++c) {
      s.k(c, p) += dk[c];
      s.e(c, p) += de[c];
    }
    for (int I = 0; I < 3; ++I) s.epsi(I, p) = ep[I];
  }
  Eigen::Matrix3d E;
  for (int I = 0; I < 3; ++I)
    for (int i = 0; i < 3; ++i) E(I, i) = s.e(idx2(3, I, i), 0);
  const Eigen::Matrix3d W = E.inverse();
  for (std::size_t p = 0; p < s.npts(); ++p)
    for (int i = 0; i < 3; ++i)
      for (int I = 0; I < 3; ++I) s.omega(idx2(3, i, I), p) = W(i, I);
  s.n = solve_lapse(s, LapseSolveConfig{}).n;
  return s;
}

std::vector<double> pack(const ReducedState& s) {
  std::vector<double> y;
  for (int c = 0; c < 9; ++c) y.push_back(s.k(c, 0));
  for (int c = 0; c < 9; ++c) y.push_back(s.e(c, 0));
  y.push_back(s.e0psi(0, 0));
  for (int I = 0; I < 3; ++I) y.push_back(s.epsi(I, 0));
  return y;
}

// Max relative difference, with k and e0psi compared as t k and t e0psi.
double compare(const std::vector<double>& a, const std::vector<double>& b, double t) {
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = (i < 9 || i == 18) ? t : 1.0;
    err = std::max(err, w * std::abs(a[i] - b[i]));
    scale = std::max(scale, w * std::abs(b[i]));
  }
  return err / scale;
}

Verdict ode_oracle() {
  Verdict v;
  const ReducedState s0 = homogeneous_state();
  const auto ref = oracle::Homogeneous{3}.integrate(pack(s0), 1.0, 1e-2);
  EvolveConfig cfg;
  cfg.tau_step = 1e-2;
  cfg.t_final = 1e-2;
  const ReducedState s = evolve(s0, cfg, LapseSolveConfig{});
  const double err = compare(pack(s), ref, 1e-2);
  v.require(err <= 1e-8, "relative difference at t=1e-2 " + fmt(err));
  return v;
}

Verdict convergence() {
  Verdict v;
  const ReducedState s0 = homogeneous_state();
  const double tf = 0.1;
  const auto ref = oracle::Homogeneous{3}.integrate(pack(s0), 1.0, tf);
  std::vector<double> errs;
  for (double dtau : {0.4, 0.2, 0.1}) {
    EvolveConfig cfg;
    cfg.tau_step = dtau;
    cfg.t_final = tf;
    cfg.cfl_safety = 10.0;
    errs.push_back(compare(pack(evolve(s0, cfg, LapseSolveConfig{})), ref, tf));
  }
  for (int i = 0; i < 2; ++i) {
    const double r = errs[i] / errs[i + 1];
    v.require(std::abs(r - 16.0) <= 0.2 * 16.0, "RK4 ratio " + fmt(r));
  }

  // Constraint residuals of analytic data under grid refinement: the
  // successive reduction factors exceed 2^4 and keep increasing.
  const KasnerData bg{3, {0.4, 0.3, 0.3}, std::sqrt(0.66)};
  PerturbationSpec spec;
  spec.xi[0] = parse_profile("0.1,sin,0,1");
  spec.xi[1] = parse_profile("0.1,cos,1,0");
  spec.xi[2] = parse_profile("0.1,sin,1,1");
  std::vector<double> res;
  for (int n : {8, 16, 32}) {
    auto grid = Grid::make(3, {0, 1}, {n, n});
    const ReducedState s =
        reduce_initial_data(grid, build_coordinate_data(grid, bg, spec), LapseSolveConfig{});
    res.push_back(std::max(sup(hamiltonian_residual(s).all()), sup(momentum_residual(s).all())));
  }
  const double f1 = res[0] / res[1], f2 = res[1] / res[2];
  v.require(f1 > 16.0 && f2 > f1,
            "spectral n=8,16,32: " + fmt(res[0]) + ", " + fmt(res[1]) + ", " + fmt(res[2]));
  return v;
}

Verdict constraint_propagation() {
  Verdict v;
  for (const Trajectory& tr : general_runs()) check_constraints(v, tr);
  return v;
}

Verdict avtd_monitors() {
  Verdict v;
  for (const Trajectory& tr : general_runs()) check_monitors(v, tr);
  return v;
}

Verdict final_kasner() {
  Verdict v;
  for (const Trajectory& tr : general_runs()) check_final_data(v, tr);
  return v;
}

Verdict polarized_sector() {
  Verdict v;
  const KasnerData vac{3, {-1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0}, 0.0};
  v.require(!subcriticality_margin(vac).subcritical, "(-1/3,2/3,2/3) generically unstable");
  for (const Trajectory& tr : polarized_runs()) {
    double sym = 0.0;
    for (const Sample& s : tr.samples) sym = std::max(sym, s.symmetry);
    v.require(sym <= 1e-10, tr.name + " symmetry " + fmt(sym));
    check_constraints(v, tr);
    check_monitors(v, tr);
    check_final_data(v, tr);
  }
  return v;
}

Verdict elliptic_solver() {
  Verdict v;
  const KasnerData bg{3, {0.5, 0.3, 0.2}, std::sqrt(0.62)};
  auto grid = Grid::make(3, {0, 1}, {32, 32});
  double exact_err = 0.0;
  for (double t : {1.0, 0.1, 1e-3}) {
    const LapseResult r = solve_lapse(make_kasner_state(grid, bg, t), LapseSolveConfig{});
    for (double n : r.n.all()) exact_err = std::max(exact_err, std::abs(n - 1.0));
  }
  v.require(exact_err <= 1e-12, "exact Kasner |n-1| " + fmt(exact_err));

  PerturbationSpec spec;
  spec.xi[0] = parse_profile("0.05,sin,0,1");
  spec.xi[1] = parse_profile("0.04,cos,1,0;0.02,sin,1,1");
  spec.xi[2] = parse_profile("0.03,sin,1,0");
  ReducedState s = reduce_initial_data(grid, build_coordinate_data(grid, bg, spec), LapseSolveConfig{});
  double err = 0.0;
  for (double t : {1.0, 0.4}) {
    s.t = t;
    const LapseOperator op(s);
    const std::size_t np = s.npts();
    std::vector<double> exact(np), rhs(np), m(np, 0.0);
    for (std::size_t p = 0; p < np; ++p) {
      const double x = grid->coordinate(0, p), y = grid->coordinate(1, p);
      exact[p] = 0.1 * std::sin(x) * std::cos(2 * y) + 0.05 * std::cos(x + y) - 0.02;
    }
    op.apply(exact, rhs);
    LapseSolveConfig cfg;
    cfg.rel_tol = 1e-13;
    solve_lapse_system(op, rhs, m, cfg);
    for (std::size_t p = 0; p < np; ++p) err = std::max(err, std::abs(m[p] - exact[p]));
  }
  v.require(err <= 1e-8, "manufactured solution error " + fmt(err));
  return v;
}

Verdict geometry_oracles() {
  Verdict v;
  const oracle::Metric metric;
  auto grid = Grid::make(3, {0, 1}, {48, 48});
  Field g(9, grid->num_points());
  for (std::size_t p = 0; p < grid->num_points(); ++p) {
    const auto m = metric.g(grid->coordinate(0, p), grid->coordinate(1, p));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(idx2(3, i, j), p) = m(i, j);
  }
  ReducedState s = make_empty_state(grid, 1.0);
  const FramePair fr = gram_schmidt_frame(*grid, g);
  s.e = fr.e;
  s.omega = fr.omega;
  s.gamma = koszul_gamma(*grid, fr);
  const Field ric = spatial_ricci(s);
  double gerr = 0.0, rerr = 0.0;
  for (std::size_t p = 0; p < grid->num_points(); p += 3) {
    const double x = grid->coordinate(0, p), y = grid->coordinate(1, p);
    const auto ref = metric.gamma(x, y);
    for (int c = 0; c < 27; ++c) gerr = std::max(gerr, std::abs(s.gamma(c, p) - ref[c]));
    const auto e = metric.frame(x, y);
    const oracle::Mat3 R = e * metric.ricci(x, y) * e.transpose();
    for (int I = 0; I < 3; ++I)
      for (int J = 0; J < 3; ++J) rerr = std::max(rerr, std::abs(ric(idx2(3, I, J), p) - R(I, J)));
  }
  v.require(gerr <= 1e-8, "Koszul vs Christoffel " + fmt(gerr));
  v.require(rerr <= 1e-8, "Ricci vs finite differences " + fmt(rerr));
  return v;
}

// File contents, minus lines starting with `skip` (the output directory
// differs between the two runs).
std::string slurp(const std::filesystem::path& p, const std::string& skip = "\x01") {
  std::ifstream in(p, std::ios::binary);
  std::string out, line;
  while (std::getline(in, line))
    if (line.rfind(skip, 0) != 0) out += line + '\n';
  return out;
}

Verdict determinism() {
  Verdict v;
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("kasner_acceptance_" + std::to_string(::getpid()));
  RunConfig cfg = parse_config(
      "background.q = 0.5, 0.3, 0.2\nbackground.B = 0.78740078740118113\n"
      "grid.active_dims = 1, 2\ngrid.sizes = 16, 16\n"
      "perturb.xi.1 = 1e-3,sin,0,1\nperturb.g.1.2 = 1e-3,cos,1,0\nperturb.psi = 1e-3,sin,1,1\n"
      "evolve.t_final = 1e-2\nevolve.tau_step = 0.05\nevolve.determinism = true\nseed = 17\n");
  for (const char* sub : {"a", "b"}) {
    cfg.output_dir = (root / sub).string();
    run_simulation(cfg);
  }
  for (const char* file : {"diagnostics.csv", "snapshot_final.snap", "summary.txt"}) {
    const std::string skip = "config.output.dir";
    const std::string a = slurp(root / "a" / file, skip), b = slurp(root / "b" / file, skip);
    v.require(!a.empty() && a == b, std::string(file) + " identical (" + std::to_string(a.size()) + " B)");
  }
  fs::remove_all(root);
  return v;
}

}  // namespace

int main() {
  set_worker_threads(1);
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const Criterion criteria[] = {
      {1, "algebraic layer", algebraic_layer},
      {2, "Kretschmann coefficients", kretschmann_coefficients},
      {3, "exact Kasner preservation", exact_kasner_preservation},
      {4, "homogeneous ODE oracle", ode_oracle},
      {5, "convergence", convergence},
      {6, "constraint propagation", constraint_propagation},
      {7, "AVTD monitors", avtd_monitors},
      {8, "final Kasner data", final_kasner},
      {9, "polarized U(1) sector", polarized_sector},
      {10, "elliptic solver", elliptic_solver},
      {11, "geometry oracles", geometry_oracles},
      {12, "determinism", determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += v.pass ? 0 : 1;
    std::printf("%s criterion %2d %-28s %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name,
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed;
}
