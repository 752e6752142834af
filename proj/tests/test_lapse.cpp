#include <doctest.h>

#include <cmath>

#include "kasner/initial_data.hpp"
#include "kasner/lapse.hpp"

using namespace kasner;

namespace {

const KasnerData kBg{3, {0.5, 0.3, 0.2}, std::sqrt(1.0 - 0.25 - 0.09 - 0.04)};

// Kasner pulled back by a non-trivial diffeomorphism: non-constant frame
// and connection, but the exact lapse is still n = 1.
ReducedState gauge_state(const std::shared_ptr<const Grid>& grid) {
  PerturbationSpec spec;
  spec.xi[0] = parse_profile("0.05,sin,0,1");
  spec.xi[1] = parse_profile("0.04,cos,1,0;0.02,sin,1,1");
  spec.xi[2] = parse_profile("0.03,sin,1,0");
  return reduce_initial_data(grid, build_coordinate_data(grid, kBg, spec), LapseSolveConfig{});
}

}  // namespace

TEST_CASE("exact Kasner source gives n = 1") {
  for (double t : {1.0, 0.3, 1e-2}) {
    auto grid = Grid::make(3, {0, 1}, {16, 16});
    const ReducedState s = make_kasner_state(grid, kBg, t);
    const LapseResult r = solve_lapse(s, LapseSolveConfig{});
    double err = 0.0;
    for (double v : r.n.all()) err = std::max(err, std::abs(v - 1.0));
    CHECK(err <= 1e-12);
  }
}

TEST_CASE("gauge-transformed Kasner data still have unit lapse") {
  auto grid = Grid::make(3, {0, 1}, {32, 32});
  ReducedState s = gauge_state(grid);
  double err = 0.0;
  for (double v : s.n.all()) err = std::max(err, std::abs(v - 1.0));
  CHECK(err < 1e-10);
  double res = 0.0;
  for (double v : lapse_residual(s)) res = std::max(res, std::abs(v));
  CHECK(res < 1e-9);
}

TEST_CASE("manufactured solution is recovered") {
  auto grid = Grid::make(3, {0, 1}, {32, 32});
  ReducedState s = gauge_state(grid);
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
    const int iters = solve_lapse_system(op, rhs, m, cfg);
    CHECK(iters > 0);
    double err = 0.0;
    for (std::size_t p = 0; p < np; ++p) err = std::max(err, std::abs(m[p] - exact[p]));
    CHECK(err <= 1e-8);
  }
}

TEST_CASE("solver reports non-convergence") {
  auto grid = Grid::make(3, {0, 1}, {16, 16});
  const ReducedState s = gauge_state(grid);
  const LapseOperator op(s);
  std::vector<double> rhs(s.npts()), m(s.npts(), 0.0);
  for (std::size_t p = 0; p < rhs.size(); ++p) rhs[p] = std::sin(grid->coordinate(0, p));
  LapseSolveConfig cfg;
  cfg.rel_tol = 1e-14;
  cfg.max_iter = 1;
  try {
    solve_lapse_system(op, rhs, m, cfg);
    FAIL("expected LapseError");
  } catch (const LapseError& e) {
    CHECK(e.kind() == LapseError::Kind::non_convergence);
  }
}
