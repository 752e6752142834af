#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kasner/kasner_core.hpp"

using namespace kasner;

TEST_CASE("FLRW satisfies both relations and has margin 1/3") {
  const KasnerData f = KasnerData::flrw();
  const ConstraintReport rep = validate_constraints(f);
  CHECK(rep.ok);
  CHECK(rep.sum_residual < 1e-15);
  CHECK(rep.sumsq_residual < 1e-15);
  const MarginReport m = subcriticality_margin(f);
  CHECK(m.margin == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(m.subcritical);
}

TEST_CASE("every three-dimensional vacuum Kasner solution is supercritical") {
  // The vacuum set in D = 3 is a circle: q = 1/3 + (2/3)(cos a, cos(a + 2pi/3), cos(a - 2pi/3)).
  for (int i = 0; i < 720; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 720.0;
    KasnerData d{3, {}, 0.0};
    for (int j = 0; j < 3; ++j)
      d.exponents.push_back(1.0 / 3.0 + 2.0 / 3.0 * std::cos(a + 2.0 * std::numbers::pi * j / 3.0));
    REQUIRE(validate_constraints(d, 1e-12).ok);
    const MarginReport m = subcriticality_margin(d);
    // Flat Kasner (a permutation of (1, 0, 0)) sits exactly at margin 1.
    if (i % 240 == 0)
      CHECK(m.margin == doctest::Approx(1.0).epsilon(1e-14));
    else
      CHECK(m.margin > 1.0);
    CHECK_FALSE(m.subcritical);
  }
}

TEST_CASE("margin matches a brute-force maximum") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int D = 3 + trial % 5;
    KasnerData d{D, {}, 0.0};
    for (int i = 0; i < D; ++i) d.exponents.push_back(u(rng));
    double best = -1e300;
    for (int I = 0; I < D; ++I)
      for (int J = I + 1; J < D; ++J)
        for (int B = 0; B < D; ++B)
          best = std::max(best, d.exponents[I] + d.exponents[J] - d.exponents[B]);
    CHECK(subcriticality_margin(d).margin == doctest::Approx(best).epsilon(1e-15));
  }
}

TEST_CASE("relations are rejected with the offending residual") {
  const KasnerData bad{3, {0.5, 0.5, 0.1}, 0.0};
  const ConstraintReport rep = validate_constraints(bad);
  CHECK_FALSE(rep.ok);
  CHECK(rep.sum_residual == doctest::Approx(0.1));
  CHECK_THROWS_AS(validate_constraints(KasnerData{3, {1.0, 0.0}, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_constraints(KasnerData{2, {1.0, 0.0}, 0.0}), std::invalid_argument);
}

TEST_CASE("vacuum search is infeasible for D <= 9") {
  for (int D = 3; D <= 9; ++D) {
    const SearchResult r = search_subcritical_vacuum(D, 1e-12);
    CHECK(r.status == SearchStatus::infeasible);
    CHECK_FALSE(r.data.has_value());
  }
}

TEST_CASE("vacuum search finds valid exponents for D = 10, 11 and is reproducible") {
  for (int D : {10, 11}) {
    SearchOptions opts;
    opts.seed = 7;
    const SearchResult a = search_subcritical_vacuum(D, 1e-12, opts);
    REQUIRE(a.status == SearchStatus::found);
    REQUIRE(a.data.has_value());
    CHECK(validate_constraints(*a.data, 1e-12).ok);
    CHECK(subcriticality_margin(*a.data).margin < 1.0);
    const SearchResult b = search_subcritical_vacuum(D, 1e-12, opts);
    REQUIRE(b.data.has_value());
    CHECK(a.data->exponents == b.data->exponents);
  }
}

TEST_CASE("default stability parameters are admissible") {
  const auto p = default_stability_params(KasnerData::flrw(), StabilityMode::general);
  REQUIRE(p.has_value());
  CHECK(stability_params_admissible(KasnerData::flrw(), *p));
  CHECK(p->sigma > 0.0);

  const KasnerData vac{3, {-1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0}, 0.0};
  CHECK_FALSE(default_stability_params(vac, StabilityMode::general).has_value());
  const auto pol = default_stability_params(vac, StabilityMode::polarized_u1);
  REQUIRE(pol.has_value());
  CHECK(stability_params_admissible(vac, *pol));
  CHECK(pol->q == doctest::Approx(5.0 / 6.0));
  CHECK(pol->sigma == doctest::Approx(1.0 / 24.0));
  CHECK_FALSE(stability_params_admissible(vac, StabilityParams{0.5, 0.4, StabilityMode::polarized_u1}));
}

TEST_CASE("background fields are the exact power laws") {
  const KasnerData d{3, {0.5, 0.3, 0.2}, std::sqrt(1.0 - 0.25 - 0.09 - 0.04)};
  REQUIRE(validate_constraints(d).ok);
  const double t = 0.37;
  const BackgroundFields b = background_fields(d, t);
  CHECK(b.n == 1.0);
  for (int I = 0; I < 3; ++I) {
    CHECK(b.e[I * 3 + I] == doctest::Approx(std::pow(t, -d.exponents[I])));
    CHECK(b.omega[I * 3 + I] * b.e[I * 3 + I] == doctest::Approx(1.0));
    CHECK(b.k[I * 3 + I] * t == doctest::Approx(-d.exponents[I]));
  }
  CHECK(b.e0psi * t == doctest::Approx(d.scalar_coeff));
  CHECK_THROWS_AS(background_fields(d, 0.0), std::domain_error);
}
