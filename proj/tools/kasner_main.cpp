// Command-line front end: exponent checks, evolution runs, snapshot
// diagnostics and plot-script emission.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "kasner/run.hpp"

using namespace kasner;

namespace {

constexpr int kUsage = 2;

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

int report_exponents(const KasnerData& bg, double tol) {
  const ConstraintReport rep = validate_constraints(bg, tol);
  const MarginReport m = subcriticality_margin(bg);
  std::cout << "q = " << join(bg.exponents) << '\n'
            << "B = " << format_double(bg.scalar_coeff) << '\n'
            << "sum_residual = " << format_double(rep.sum_residual) << '\n'
            << "sumsq_residual = " << format_double(rep.sumsq_residual) << '\n'
            << "relations = " << (rep.ok ? "satisfied" : "violated") << " (tol " << tol << ")\n"
            << "margin = " << format_double(m.margin) << "  (I,J,B) = (" << m.witness[0] + 1
            << ',' << m.witness[1] + 1 << ',' << m.witness[2] + 1 << ")\n"
            << "verdict = " << (m.subcritical ? "subcritical" : "not subcritical") << '\n';
  return rep.ok && m.subcritical ? 0 : 1;
}

int run_config(const std::string& path, const std::string& out_dir, bool deterministic, bool u1,
               bool quiet) {
  RunConfig cfg;
  try {
    cfg = load_config(path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (deterministic) cfg.evolve.determinism = true;
    if (u1) {
      cfg.u1 = true;
      cfg = parse_config(serialize_config(cfg));  // re-validate (D = 3)
    }
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return kUsage;
  }
  try {
    const RunOutcome out = run_simulation(cfg, quiet ? nullptr : &std::cerr);
    out.summary.write(std::cout);
    if (out.exit_code != 0) std::cerr << "run aborted: " << out.message << '\n';
    return out.exit_code;
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return kUsage;
  } catch (const FormatError& ex) {
    std::cerr << "output error: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kasner big-bang stability simulator"};
  app.require_subcommand(1);
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic,
               "single worker thread and fixed-order reductions");

  // exponents
  auto* ex = app.add_subcommand("exponents", "check or search Kasner exponents");
  std::string q_text;
  double B = 0.0;
  bool vacuum = false, search = false;
  int dim = 0;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  ex->add_option("--q", q_text, "comma-separated exponents (fractions allowed)");
  ex->add_option("--B", B, "scalar-field coefficient");
  ex->add_flag("--vacuum", vacuum, "B = 0");
  ex->add_option("--dim", dim, "spatial dimension for --search");
  ex->add_flag("--search", search, "search for sub-critical vacuum exponents");
  ex->add_option("--seed", seed, "search seed");
  ex->add_option("--tol", tol, "tolerance of the Kasner relations");

  // evolve / u1-evolve
  std::string config_path, out_dir;
  bool quiet = false;
  auto* ev = app.add_subcommand("evolve", "run an evolution from a config file");
  ev->add_option("config", config_path, "config file")->required();
  ev->add_option("--out", out_dir, "override output.dir");
  ev->add_flag("--quiet", quiet, "no progress output");
  auto* u1 = app.add_subcommand("u1-evolve", "run in the polarized U(1) class (D = 3)");
  u1->add_option("config", config_path, "config file")->required();
  u1->add_option("--out", out_dir, "override output.dir");
  u1->add_flag("--quiet", quiet, "no progress output");

  // diagnose
  auto* dg = app.add_subcommand("diagnose", "recompute diagnostics from a snapshot");
  std::string snap_path;
  NormSettings counts;
  std::optional<double> stab_q, stab_sigma;
  bool polarized = false;
  dg->add_option("snapshot", snap_path, "snapshot file")->required();
  dg->add_option("--N0", counts.N0, "low-order derivative count");
  dg->add_option("--N", counts.N, "high-order derivative count");
  dg->add_option("--A", counts.A, "high-order norm weight");
  dg->add_option("--stability-q", stab_q, "norm weight exponent q");
  dg->add_option("--sigma", stab_sigma, "norm weight exponent sigma");
  dg->add_flag("--polarized", polarized, "polarized stability window and symmetry monitors");

  // plot
  auto* pl = app.add_subcommand("plot", "emit gnuplot scripts from a diagnostics CSV");
  std::string csv_path;
  pl->add_option("csv", csv_path, "diagnostics.csv")->required();
  pl->add_option("--out", out_dir, "output directory (default: next to the CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (deterministic) set_worker_threads(1);

  if (*ex) {
    if (tol <= 0.0) {
      std::cerr << "--tol must be positive\n";
      return kUsage;
    }
    if (search) {
      if (!vacuum || dim < 3 || !q_text.empty()) {
        std::cerr << "--search needs --vacuum and --dim >= 3, and no --q\n";
        return kUsage;
      }
      SearchOptions opts;
      opts.seed = seed;
      const SearchResult res = search_subcritical_vacuum(dim, tol, opts);
      if (res.status == SearchStatus::infeasible) {
        std::cout << "not found (impossible for D≤9)\n";
        return 1;
      }
      if (res.status != SearchStatus::found) {
        std::cout << "not found (search budget exhausted; best margin "
                  << format_double(res.best_margin) << ")\n";
        return 1;
      }
      std::cout << "found after " << res.restarts_used << " restarts\n";
      return report_exponents(*res.data, tol);
    }
    if (q_text.empty()) {
      std::cerr << "give --q or --search\n";
      return kUsage;
    }
    KasnerData bg;
    try {
      bg.exponents = parse_number_list(q_text);
    } catch (const ConfigError& e) {
      std::cerr << "malformed exponent list: " << e.what() << '\n';
      return kUsage;
    }
    if (vacuum && B != 0.0) {
      std::cerr << "--vacuum and --B are exclusive\n";
      return kUsage;
    }
    bg.dim = static_cast<int>(bg.exponents.size());
    bg.scalar_coeff = B;
    if (bg.dim < 3 || B < 0.0) {
      std::cerr << "need at least 3 exponents and B >= 0\n";
      return kUsage;
    }
    return report_exponents(bg, tol);
  }

  if (*ev) return run_config(config_path, out_dir, deterministic, false, quiet);
  if (*u1) return run_config(config_path, out_dir, deterministic, true, quiet);

  if (*dg) {
    Snapshot snap;
    try {
      snap = read_snapshot(snap_path);
    } catch (const FormatError& e) {
      std::cerr << "snapshot error: " << e.what() << '\n';
      return kUsage;
    }
    const StabilityMode mode = polarized ? StabilityMode::polarized_u1 : StabilityMode::general;
    StabilityParams params =
        default_stability_params(snap.background, mode).value_or(StabilityParams{1.0, 0.05, mode});
    if (stab_q) params.q = *stab_q;
    if (stab_sigma) params.sigma = *stab_sigma;
    const DiagnosticsRecord r = compute_diagnostics(snap.state, snap.background, params, counts);
    std::optional<SymmetryReport> sym;
    if (polarized && snap.state.dim() == 3) sym = check_symmetry(snap.state);
    const auto cols = csv_columns(sym.has_value());
    const std::string row = csv_row(0, 0.0, 0, r, sym);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto next = row.find(',', pos);
      if (i > 0) std::cout << cols[i] << " = " << row.substr(pos, next - pos) << '\n';
      pos = next + 1;
    }
    return 0;
  }

  if (*pl) {
    try {
      const CsvTable table = read_csv(csv_path);
      const std::string dir =
          out_dir.empty() ? std::filesystem::path(csv_path).parent_path().string() : out_dir;
      for (const auto& s : write_plots(table, dir.empty() ? "." : dir)) std::cout << s << '\n';
    } catch (const FormatError& e) {
      std::cerr << "plot error: " << e.what() << '\n';
      return kUsage;
    }
    return 0;
  }
  return kUsage;
}
