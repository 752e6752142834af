#include "kasner/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "kasner/u1_polarized.hpp"

namespace kasner {

namespace {

std::string join_numbers(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

void add_config(Summary& sum, const RunConfig& cfg) {
  std::istringstream in(serialize_config(cfg));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    sum.add("config." + line.substr(0, eq), line.substr(eq + 3));
  }
}

// Up to final.count times t_final / ratio^j that do not exceed t = 1.
std::vector<double> final_times(const RunConfig& cfg) {
  std::vector<double> out;
  for (int j = 0; j < cfg.final_count; ++j) {
    const double t = cfg.evolve.t_final * std::pow(cfg.final_ratio, -j);
    if (t > 1.0 * (1.0 + 1e-12)) break;
    out.push_back(t);
  }
  return out;
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-10 * b; }

}  // namespace

KasnerData resolve_background(const RunConfig& cfg) {
  KasnerData bg;
  if (cfg.search) {
    SearchOptions opts;
    opts.seed = cfg.seed;
    const SearchResult res = search_subcritical_vacuum(cfg.search_dim, cfg.background_tol, opts);
    if (res.status != SearchStatus::found || !res.data)
      throw ConfigError("no sub-critical vacuum exponents found in D = " +
                        std::to_string(cfg.search_dim));
    bg = *res.data;
  } else {
    bg.dim = static_cast<int>(cfg.q.size());
    bg.exponents = cfg.q;
    bg.scalar_coeff = cfg.B;
  }
  const ConstraintReport rep = validate_constraints(bg, cfg.background_tol);
  if (!rep.ok)
    throw ConfigError("background violates the Kasner relations (sum residual " +
                      format_double(rep.sum_residual) + ", square-sum residual " +
                      format_double(rep.sumsq_residual) + ")");
  return bg;
}

StabilityParams resolve_stability(const RunConfig& cfg, const KasnerData& bg, bool& fallback) {
  const StabilityMode mode = cfg.stability_mode.value_or(
      cfg.u1 ? StabilityMode::polarized_u1 : StabilityMode::general);
  fallback = false;
  std::optional<StabilityParams> p = default_stability_params(bg, mode);
  if (cfg.stability_q || cfg.stability_sigma) {
    StabilityParams given = p.value_or(StabilityParams{1.0, 0.05, mode});
    given.mode = mode;
    if (cfg.stability_q) given.q = *cfg.stability_q;
    if (cfg.stability_sigma) given.sigma = *cfg.stability_sigma;
    p = given;
  }
  if (p && stability_params_admissible(bg, *p)) return *p;
  fallback = true;
  return StabilityParams{1.0, 0.05, mode};
}

ReducedState build_initial_state(const RunConfig& cfg, const KasnerData& bg) {
  std::vector<int> active;
  for (int a : cfg.active_dims) active.push_back(a - 1);
  std::shared_ptr<const Grid> grid;
  try {
    grid = Grid::make(bg.dim, active, cfg.sizes);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  CoordinateData data;
  try {
    data = cfg.u1 ? build_polarized_data(grid, bg, cfg.perturb)
                  : build_coordinate_data(grid, bg, cfg.perturb);
  } catch (const InitialDataError& ex) {
    throw ConfigError(std::string("initial data: ") + ex.what());
  } catch (const NonSpdMetricError& ex) {
    throw ConfigError(std::string("initial data: ") + ex.what());
  } catch (const PolarizationError& ex) {
    throw ConfigError(std::string("initial data: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("initial data: ") + ex.what());
  }
  ReducedState state;
  try {
    state = reduce_initial_data(grid, data, cfg.lapse, cfg.u1);
  } catch (const NonSpdMetricError& ex) {
    throw ConfigError(std::string("initial data: ") + ex.what());
  }
  // Polarized data must already satisfy the constraints.
  if (cfg.u1) {
    const double res = std::max(hamiltonian_residual(state).max_abs(),
                                momentum_residual(state).max_abs());
    if (res > cfg.u1_constraint_tol)
      throw ConfigError("polarized initial data violate the constraints (residual " +
                        format_double(res) + " > u1.constraint_tol " +
                        format_double(cfg.u1_constraint_tol) + ")");
  }
  return state;
}

RunOutcome run_simulation(const RunConfig& cfg, std::ostream* log) {
  if (cfg.evolve.determinism) set_worker_threads(1);
  const KasnerData bg = resolve_background(cfg);
  bool fallback = false;
  const StabilityParams params = resolve_stability(cfg, bg, fallback);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  RunOutcome out;
  Summary& sum = out.summary;
  sum.add("seed", std::to_string(cfg.seed));
  add_config(sum, cfg);
  sum.add("background.q", join_numbers(bg.exponents));
  sum.add("background.B", bg.scalar_coeff);
  const MarginReport margin = subcriticality_margin(bg);
  sum.add("background.margin", margin.margin);
  sum.add("background.subcritical", margin.subcritical ? "true" : "false");
  sum.add("stability.q", params.q);
  sum.add("stability.sigma", params.sigma);
  sum.add("stability.mode", params.mode == StabilityMode::general ? "general" : "polarized");
  sum.add("stability.fallback", fallback ? "true" : "false");

  std::ofstream csv(dir / "diagnostics.csv", std::ios::binary);
  if (!csv) throw FormatError("cannot write " + (dir / "diagnostics.csv").string());
  const auto cols = csv_columns(cfg.u1);
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
  csv << '\n';

  const std::vector<double> finals = final_times(cfg);
  std::vector<double> stops;
  for (double t : finals)
    if (t < 1.0 && !same_time(t, cfg.evolve.t_final)) stops.push_back(t);
  std::vector<ReducedState> snaps;

  long last_row = -1;
  long last_step = 0;
  long lapse_total = 0;
  StepInfo last_info;
  auto record = [&](const ReducedState& s, long idx, const StepInfo& info) {
    const DiagnosticsRecord rec = compute_diagnostics(s, bg, params, cfg.diag);
    std::optional<SymmetryReport> sym;
    if (cfg.u1) sym = check_symmetry(s);
    csv << csv_row(idx, info.dtau, info.lapse_iterations, rec, sym) << '\n';
    csv.flush();
    out.max_t4K = std::max(
        {out.max_t4K, std::abs(rec.kretschmann_t4.min), std::abs(rec.kretschmann_t4.max)});
    last_row = idx;
    if (log)
      *log << "step " << idx << "  t " << format_double(s.t) << "  ham " << rec.ham_sup
           << "  mom " << rec.mom_sup << "  t4K " << rec.kretschmann_t4.mean << '\n';
  };
  auto observer = [&](const ReducedState& s, long idx, const StepInfo& info) {
    last_step = idx;
    last_info = info;
    lapse_total += info.lapse_iterations;
    if (idx % cfg.evolve.snapshot_every == 0) record(s, idx, info);
    for (double t : finals)
      if (same_time(s.t, t)) snaps.push_back(s);
  };

  ReducedState final_state;
  try {
    ReducedState init = build_initial_state(cfg, bg);
    final_state = evolve(std::move(init), cfg.evolve, cfg.lapse, stops, observer);
  } catch (const EvolutionError& ex) {
    out.exit_code = 1;
    out.message = ex.what();
    const ReducedState& good = ex.last_good();
    write_snapshot((dir / "snapshot_last_good.snap").string(), good, bg);
    if (last_row != last_step) record(good, last_step, last_info);
    out.steps = last_step;
    out.t_reached = good.t;
  } catch (const LapseError& ex) {
    out.exit_code = 1;
    out.message = std::string("initial lapse solve failed: ") + ex.what();
  }

  if (out.exit_code == 0) {
    if (last_row != last_step) record(final_state, last_step, last_info);
    write_snapshot((dir / "snapshot_final.snap").string(), final_state, bg);
    out.steps = last_step;
    out.t_reached = final_state.t;
  }
  sum.add("status", out.exit_code == 0 ? "finished" : "aborted");
  if (!out.message.empty()) sum.add("message", out.message);
  sum.add("steps", out.steps);
  sum.add("t_reached", out.t_reached);
  sum.add("lapse_iterations_total", lapse_total);
  sum.add("max_t4K", out.max_t4K);

  if (out.exit_code == 0 && snaps.size() >= 2) {
    std::sort(snaps.begin(), snaps.end(),
              [](const ReducedState& a, const ReducedState& b) { return a.t > b.t; });
    const FinalState fs = final_kasner_data(snaps, params.sigma);
    const int D = bg.dim;
    const std::size_t np = final_state.npts();
    std::vector<double> qsorted = bg.exponents;
    std::sort(qsorted.begin(), qsorted.end(), std::greater<>());
    double qdev = 0.0;
    for (int I = 0; I < D; ++I) {
      const auto st = field_stats(*final_state.grid, fs.q.span(I));
      sum.add("final.q." + std::to_string(I + 1) + ".min", st.min);
      sum.add("final.q." + std::to_string(I + 1) + ".max", st.max);
      for (std::size_t p = 0; p < np; ++p)
        qdev = std::max(qdev, std::abs(fs.q(I, p) - qsorted[I]));
    }
    const auto bst = field_stats(*final_state.grid, fs.B.span(0));
    sum.add("final.B.min", bst.min);
    sum.add("final.B.max", bst.max);
    sum.add("final.q_background_deviation", qdev);
    sum.add("final.richardson_rate", fs.rate);
    sum.add("final.sum_residual", fs.sum_residual);
    sum.add("final.sumsq_residual", fs.sumsq_residual);

    const Field K = kretschmann(final_state);
    const std::vector<double> Kinf = kretschmann_asymptotic(fs.q);
    const double t4 = std::pow(final_state.t, 4);
    double dev = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      dev = std::max(dev, std::abs(t4 * K(0, p) - Kinf[p]));
      scale = std::max(scale, std::abs(Kinf[p]));
    }
    sum.add("final.t4K_asymptotic_max", scale);
    sum.add("final.t4K_abs_deviation", dev);
    sum.add("final.t4K_rel_deviation", scale > 1e-12 ? dev / scale : dev);
    out.final_state = fs;
  } else if (out.exit_code == 0) {
    sum.add("final.available", "false");
  }
  sum.write((dir / "summary.txt").string());
  return out;
}

}  // namespace kasner
