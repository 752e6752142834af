#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "kasner/run.hpp"

using namespace kasner;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kasner_tests_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KASNER_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture_cli(const std::string& args) {
  const std::string cmd = std::string(KASNER_CLI) + " " + args + " 2>/dev/null";
  std::string out;
  if (FILE* f = ::popen(cmd.c_str(), "r")) {
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    ::pclose(f);
  }
  return out;
}

const char* kBackgroundConfig = R"(
background.q = 1/3, 1/3, 1/3
background.B = 0.81649658092772603
grid.active_dims = 1, 2
grid.sizes = 8, 8
evolve.t_final = 1e-2
evolve.tau_step = 0.05
evolve.snapshot_every = 5
)";

}  // namespace

TEST_CASE("numbers accept fractions") {
  CHECK(parse_number("-1/3") == -1.0 / 3.0);
  CHECK(parse_number(" 2.5e-1 ") == 0.25);
  CHECK(parse_number_list("1/3, 2/3,0") == std::vector<double>{1.0 / 3.0, 2.0 / 3.0, 0.0});
  CHECK_THROWS_AS(parse_number("1/0"), ConfigError);
  CHECK_THROWS_AS(parse_number("x"), ConfigError);
  CHECK_THROWS_AS(parse_number_list("1,,2"), ConfigError);
}

TEST_CASE("config parse, serialize, parse is the identity") {
  const RunConfig a = parse_config(std::string(kBackgroundConfig) + R"(
perturb.xi.1 = 1e-3,sin,0,1
perturb.g.1.2 = 2e-3,cos,1,0;1e-4,sin,2,2
perturb.k.3.3 = 1e-3,cos,1,1
perturb.psi = 1e-3,sin,1,0
stability.mode = general
stability.sigma = 0.07
lapse.rel_tol = 1e-11
evolve.determinism = true
diag.N = 2
output.dir = somewhere/else
seed = 42
)");
  const RunConfig b = parse_config(serialize_config(a));
  CHECK(a == b);
  CHECK(serialize_config(a) == serialize_config(b));
  CHECK(b.perturb.g.count({0, 1}) == 1);
  CHECK(b.perturb.xi.count(0) == 1);
  CHECK(b.seed == 42);

  // Randomized settings.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    RunConfig c = parse_config(kBackgroundConfig);
    c.evolve.tau_step = u(rng) * 0.1 + 1e-3;
    c.evolve.t_final = u(rng) * 0.5 + 1e-4;
    c.evolve.cfl_safety = u(rng) + 0.1;
    c.final_ratio = u(rng) * 0.8 + 0.1;
    c.diag.A = u(rng) * 3;
    c.lapse.rel_tol = std::pow(10.0, -6 - 6 * u(rng));
    c.stability_q = u(rng);
    c.perturb.phi.modes.push_back(Mode{u(rng) * 1e-3, u(rng) > 0.5, {1, 2}});
    c.seed = rng();
    CHECK(parse_config(serialize_config(c)) == c);
  }
}

TEST_CASE("config errors name the line") {
  CHECK_THROWS_AS(parse_config("background.q = 1,0,0\nevolve.t_final = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("background.q = 1,0,0\nnonsense = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("background.q = 1,0,0\njust text\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("background.q = 1,0,0\nperturb.g.2.1 = 1,cos,1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("background.q = 1,0,0\ngrid.sizes = 8\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("background.q = 1,0,0,0\nu1.enabled = true\n"), ConfigError);
  try {
    parse_config("background.q = 1,0,0\n\nevolve.tau_step = abc\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("snapshot round trip is bitwise") {
  const fs::path dir = scratch("snap");
  auto grid = Grid::make(4, {0, 2}, {8, 10});
  const KasnerData bg{4, {0.5, 0.5, 0.25, -0.25}, std::sqrt(1 - 0.625)};
  ReducedState s = make_kasner_state(grid, bg, 0.123456789);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Field* f : {&s.n, &s.k, &s.gamma, &s.e, &s.omega, &s.e0psi, &s.epsi})
    for (double& v : f->all()) v += u(rng) * 1e-3;
  s.k(0, 0) = -0.0;
  s.gamma(1, 2) = 5e-324;
  const std::string path = (dir / "a.snap").string();
  write_snapshot(path, s, bg);
  const Snapshot back = read_snapshot(path);
  CHECK(back.state.t == s.t);
  CHECK(back.background.exponents == bg.exponents);
  CHECK(back.background.scalar_coeff == bg.scalar_coeff);
  CHECK(back.state.grid->active_dims() == grid->active_dims());
  CHECK(back.state.grid->sizes() == grid->sizes());
  const Field* a[] = {&s.n, &s.k, &s.gamma, &s.e, &s.omega, &s.e0psi, &s.epsi};
  const Field* b[] = {&back.state.n, &back.state.k, &back.state.gamma, &back.state.e,
                      &back.state.omega, &back.state.e0psi, &back.state.epsi};
  for (int i = 0; i < 7; ++i) {
    REQUIRE(a[i]->size() == b[i]->size());
    CHECK(std::memcmp(a[i]->all().data(), b[i]->all().data(), a[i]->size() * sizeof(double)) == 0);
  }
  // Truncated file.
  const std::string bytes = slurp(path);
  std::ofstream(dir / "cut.snap", std::ios::binary) << bytes.substr(0, bytes.size() - 8);
  CHECK_THROWS_AS(read_snapshot((dir / "cut.snap").string()), FormatError);
  std::ofstream(dir / "junk.snap") << "hello\n";
  CHECK_THROWS_AS(read_snapshot((dir / "junk.snap").string()), FormatError);
}

TEST_CASE("CSV rows use 17 significant digits") {
  DiagnosticsRecord r;
  r.t = 0.1;
  r.ham_sup = 1.0 / 3.0;
  const std::string row = csv_row(7, 0.02, 3, r, std::nullopt);
  CHECK(row.rfind("7,0.10000000000000001,0.02,3,0.33333333333333331,", 0) == 0);
  std::size_t cells = 1 + std::count(row.begin(), row.end(), ',');
  CHECK(cells == csv_columns(false).size());
  const std::string u1row = csv_row(0, 0.0, 0, r, SymmetryReport{});
  CHECK(1 + std::count(u1row.begin(), u1row.end(), ',') == static_cast<long>(csv_columns(true).size()));
}

TEST_CASE("background run reproduces the exponents and writes all outputs") {
  RunConfig cfg = parse_config(kBackgroundConfig);
  cfg.output_dir = scratch("bg").string();
  const RunOutcome out = run_simulation(cfg);
  CHECK(out.exit_code == 0);
  REQUIRE(out.final_state.has_value());
  const auto summary = read_summary(cfg.output_dir + "/summary.txt");
  CHECK(summary.at("status") == "finished");
  CHECK(summary.at("seed") == "1");
  CHECK(summary.at("config.background.q") == serialize_config(cfg).substr(15, summary.at("config.background.q").size()));
  CHECK(std::stod(summary.at("final.q_background_deviation")) <= 1e-8);
  CHECK(fs::exists(cfg.output_dir + "/snapshot_final.snap"));

  const CsvTable table = read_csv(cfg.output_dir + "/diagnostics.csv");
  CHECK(table.header == csv_columns(false));
  CHECK(table.rows.size() >= 3);
  CHECK(table.rows.back()[table.column("t")] == doctest::Approx(1e-2).epsilon(1e-14));

  const fs::path plots = fs::path(cfg.output_dir) / "plots";
  const auto scripts = write_plots(table, plots.string());
  CHECK(scripts.size() == 4);
  for (const auto& s : scripts) {
    const std::string text = slurp(s);
    // Every referenced data file exists in the same directory.
    std::size_t pos = 0;
    while ((pos = text.find(".dat'", pos)) != std::string::npos) {
      const std::size_t start = text.rfind('\'', pos) + 1;
      CHECK(fs::exists(plots / text.substr(start, pos + 4 - start)));
      ++pos;
    }
  }
  // The t^4 K series of the background run is flat.
  std::ifstream dat(plots / "kretschmann.dat");
  std::string line;
  std::getline(dat, line);
  double lo = 1e300, hi = -1e300;
  while (std::getline(dat, line)) {
    std::istringstream ls(line);
    double t, a, m, b;
    ls >> t >> a >> m >> b;
    lo = std::min({lo, a, b});
    hi = std::max({hi, a, b});
  }
  CHECK(hi - lo <= 1e-8);
  // Plot output is deterministic.
  const std::string first = slurp(plots / "norms.gp") + slurp(plots / "norms.dat");
  write_plots(table, plots.string());
  CHECK(first == slurp(plots / "norms.gp") + slurp(plots / "norms.dat"));
}

TEST_CASE("plot rejects empty or incomplete tables") {
  const fs::path dir = scratch("plot");
  std::ofstream(dir / "empty.csv") << "";
  CHECK_THROWS_AS(read_csv((dir / "empty.csv").string()), FormatError);
  std::ofstream(dir / "header.csv") << "t,ham_sup\n";
  CHECK_THROWS_AS(write_plots(read_csv((dir / "header.csv").string()), dir.string()), FormatError);
  std::ofstream(dir / "partial.csv") << "t,ham_sup\n1,0\n";
  CHECK_THROWS_AS(write_plots(read_csv((dir / "partial.csv").string()), dir.string()), FormatError);
}

TEST_CASE("stability parameters fall back when no window exists") {
  RunConfig cfg = parse_config("background.q = -1/3, 2/3, 2/3\n");
  bool fallback = false;
  const StabilityParams p = resolve_stability(cfg, resolve_background(cfg), fallback);
  CHECK(fallback);
  CHECK(p.q == 1.0);
  CHECK(p.sigma == 0.05);
  cfg.stability_mode = StabilityMode::polarized_u1;
  resolve_stability(cfg, resolve_background(cfg), fallback);
  CHECK_FALSE(fallback);
  CHECK_THROWS_AS(resolve_background(parse_config("background.q = 0.5, 0.5, 0.5\n")), ConfigError);
}

TEST_CASE("command line exit codes") {
  CHECK(run_cli("exponents --q 0.333333,0.333333,0.333334 --B 0.8164966") == 0);
  CHECK(capture_cli("exponents --q 0.333333,0.333333,0.333334 --B 0.8164966").find("verdict = subcritical") !=
        std::string::npos);
  CHECK(run_cli("exponents --q -1/3,2/3,2/3") == 1);
  CHECK(run_cli("exponents --q 1,zz,0") == 2);
  CHECK(run_cli("exponents --bogus") == 2);
  CHECK(run_cli("") == 2);
  CHECK(capture_cli("exponents --vacuum --dim 3 --search") == "not found (impossible for D≤9)\n");
  const std::string a = capture_cli("exponents --vacuum --dim 11 --search --seed 7");
  CHECK(a.find("verdict = subcritical") != std::string::npos);
  CHECK(a == capture_cli("exponents --vacuum --dim 11 --search --seed 7"));

  const fs::path dir = scratch("cli");
  std::ofstream(dir / "bad.cfg") << "background.q = 1/3,1/3,1/3\nbackground.B = 0.81649658092772603\nevolve.t_final = 1\n";
  CHECK(run_cli("evolve " + (dir / "bad.cfg").string()) == 2);
  CHECK(run_cli("evolve " + (dir / "missing.cfg").string()) == 2);
  std::ofstream(dir / "empty.csv") << "";
  CHECK(run_cli("plot " + (dir / "empty.csv").string()) == 2);
  std::ofstream(dir / "vac4.cfg") << "background.q = 0.5,0.5,0.5,-0.5\n";
  CHECK(run_cli("u1-evolve " + (dir / "vac4.cfg").string()) == 2);
  // Additive perturbation large enough to make the metric indefinite.
  std::ofstream(dir / "indef.cfg") << "background.q = 1/3,1/3,1/3\nbackground.B = 0.81649658092772603\n"
                                      "grid.sizes = 8, 8\nperturb.g.1.2 = 0.8,cos,1,0\nperturb.g.1.1 = -0.8,cos,1,0\n";
  CHECK(run_cli("evolve " + (dir / "indef.cfg").string() + " --out " + (dir / "indef").string()) == 2);
}

TEST_CASE("deterministic runs are bitwise reproducible") {
  const fs::path dir = scratch("det");
  std::ofstream(dir / "run.cfg") << kBackgroundConfig << "perturb.xi.1 = 1e-3,sin,0,1\nperturb.g.3.3 = 1e-3,cos,1,0\n";
  for (const char* sub : {"a", "b"})
    REQUIRE(run_cli("--deterministic evolve --quiet " + (dir / "run.cfg").string() + " --out " + (dir / sub).string()) == 0);
  CHECK(slurp(dir / "a/diagnostics.csv") == slurp(dir / "b/diagnostics.csv"));
  CHECK(slurp(dir / "a/snapshot_final.snap") == slurp(dir / "b/snapshot_final.snap"));
  CHECK(run_cli("diagnose " + (dir / "a/snapshot_final.snap").string()) == 0);
  CHECK(capture_cli("diagnose " + (dir / "a/snapshot_final.snap").string()).find("ham_sup = ") != std::string::npos);
  CHECK(run_cli("plot " + (dir / "a/diagnostics.csv").string()) == 0);
  CHECK(fs::exists(dir / "a/kretschmann.gp"));
}

TEST_CASE("polarized data are accepted only below the constraint threshold") {
  const std::string base =
      "background.q = -1/3, 2/3, 2/3\ngrid.sizes = 8, 8\nu1.enabled = true\n"
      "perturb.xi.1 = 1e-3,sin,0,1\n";
  RunConfig exact = parse_config(base);
  CHECK_NOTHROW(build_initial_state(exact, resolve_background(exact)));
  RunConfig raw = parse_config(base + "perturb.g.3.3 = 1e-3,cos,1,0\n");
  CHECK_THROWS_AS(build_initial_state(raw, resolve_background(raw)), ConfigError);
  raw.u1_constraint_tol = 1e-2;
  CHECK_NOTHROW(build_initial_state(raw, resolve_background(raw)));
}
