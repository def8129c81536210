#include "hmggc/errors.hpp"
#include "hmggc/levy.hpp"
#include "hmggc/mixtures.hpp"
#include "hmggc/quadrature.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace hmggc;

TEST_SUITE("levy-apps") {

TEST_CASE("psi") {
  KreinAtoms K{{{1.0, 1.0}}, 1.0};
  CHECK(psi(K) == doctest::Approx(0.5).epsilon(1e-15));
  KreinAtoms two{{{1.0, 2.0}, {3.0, 0.5}}, 1.5};
  double a = psi(KreinAtoms{{{1.0, 2.0}}, 1.5}), b = psi(KreinAtoms{{{3.0, 0.5}}, 1.5});
  CHECK(psi(two) == doctest::Approx(a + b).epsilon(1e-15));
  // p -> 0: psi ~ p sum kappa / z^2
  KreinAtoms small{{{2.0, 1.0}}, 1e-9};
  CHECK(psi(small) / 1e-9 == doctest::Approx(0.25).epsilon(1e-8));
  CHECK_THROWS_AS((KreinAtoms{{{-1.0, 1.0}}, 1.0}.validate()), DomainError);
}

TEST_CASE("single atom gives an indicator on [1/(z+p), 1/z)") {
  KreinAtoms K{{{1.0, 1.0}}, 1.0};
  auto m = excursion_mixing_density(K, true);
  CHECK(m.fX.support().lo == doctest::Approx(0.5));
  CHECK(m.fX.support().hi == doctest::Approx(1.0));
  CHECK(m.fX.mass() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(m.fX.pdf(0.75) == doctest::Approx(2.0).epsilon(1e-14));
  REQUIRE(m.hm2);
  CHECK(m.hm2->verdict == Verdict::fail);
}

TEST_CASE("f_X is normalized for several atoms") {
  KreinAtoms K{{{0.5, 1.0}, {1.0, 2.0}, {3.0, 0.5}}, 1.5};
  auto m = excursion_mixing_density(K, false);
  CHECK(!m.hm2);
  CHECK(m.fX.mass() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("discretized flat Krein density misses HM1 by O(1/n)") {
  // Atoms make f_X a step function, whose log jumps; the HM1 margin shrinks
  // like 1/n under refinement but never reaches zero.
  double prev = 0;
  for (int n : {2, 20, 200}) {
    auto m = excursion_mixing_density(smooth_krein(1, 2, n), false);
    auto r = hm_test(m.fX, 1);
    CHECK(r.verdict == Verdict::fail);
    double worst = 0;
    for (const auto& w : r.witnesses) worst = std::min(worst, w.margin);
    CHECK(worst < 0);
    if (prev < 0) {
      double ratio = worst / prev;
      CHECK(ratio > 0.05);
      CHECK(ratio < 0.2);
    }
    prev = worst;
  }
}

TEST_CASE("y3 density") {
  KreinAtoms K{{{0.5, 1.0}, {1.0, 2.0}, {3.0, 0.5}}, 1.5};
  double mass = quad::integrate<double>([&](double u) { return excursion_y3_density(K, u); }, 0.0,
                                        std::numeric_limits<double>::infinity())
                    .value;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
  // Y3 = Gamma(2) * X with X ~ f_X
  auto fX = excursion_mixing_density(K, false).fX;
  auto g2 = Density::gamma(2, 1);
  for (double u : {0.1, 1.0, 4.0}) {
    CHECK(excursion_y3_density(K, u) == doctest::Approx(product_density(g2, fX, u)).epsilon(1e-7));
  }
}

TEST_CASE("pure drift integrates to 1/|drift|") {
  LevySpec s;
  s.sigma2 = 0;
  s.drift = -1;
  auto b = simulate_exp_functional(s, 50, 3);
  for (double x : b.samples) CHECK(x == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("drift minus subordinator stays below the drift-only value") {
  LevySpec s;
  s.kind = LevySpec::Kind::drift_minus_subordinator;
  s.drift = -1;
  s.jump = Density::gamma(1, 1);
  SimOptions o;
  auto b = simulate_exp_functional(s, 5000, 4, o);
  for (double x : b.samples) CHECK(x <= 1 + 10 * o.dt);
}

TEST_CASE("simulation is deterministic across thread counts") {
  LevySpec s;
  s.kind = LevySpec::Kind::compound_poisson;
  s.drift = -0.5;
  s.rate = 1;
  s.jump = Density::uniform(0, 1);
  SimOptions one, four;
  four.threads = 4;
  auto a = simulate_exp_functional(s, 2000, 9, one);
  auto b = simulate_exp_functional(s, 2000, 9, four);
  CHECK(a.samples == b.samples);
  CHECK(simulate_exp_functional(s, 2000, 10, one).samples != a.samples);
}

TEST_CASE("short horizon raises HorizonError with a suggestion") {
  LevySpec s;
  SimOptions o;
  o.horizon = 0.5;
  try {
    simulate_exp_functional(s, 200, 1, o);
    FAIL("expected HorizonError");
  } catch (const HorizonError& e) {
    CHECK(e.suggested_horizon > 0.5);
  }
}

TEST_CASE("brownian case matches the Dufresne law") {
  LevySpec s;
  s.sigma2 = 2;
  s.drift = -1;
  auto b = simulate_exp_functional(s, 20000, 21);
  // KS critical value at level 1e-3 is about 1.95 / sqrt(n); dt bias adds a little.
  CHECK(ks_distance(b, dufresne_law(2, -1)) < 0.02);
  CHECK(dufresne_law(2, -1).pdf(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("ks_distance examples") {
  SimBatch b;
  b.samples = {0.5};
  CHECK(ks_distance(b, Density::uniform(0, 1)) == doctest::Approx(0.5));
  b.samples = {0.25, 0.75};
  CHECK(ks_distance(b, Density::uniform(0, 1)) == doctest::Approx(0.25));
}

TEST_CASE("ladder factor") {
  auto beta = ladder_factor({1, 2, 1});
  CHECK(beta.branch == "beta");
  REQUIRE(beta.hm_order);
  CHECK(*beta.hm_order == 2);
  CHECK(beta.density.support().hi == doctest::Approx(1.0));
  auto half = ladder_factor({1, 2, 2});
  CHECK(half.density.support().hi == doctest::Approx(0.5));
  CHECK(*half.hm_order == 1);
  auto g = ladder_factor({1.5, 2, 0});
  CHECK(g.branch == "gamma");
  CHECK(!g.hm_order);
  CHECK(g.density.pdf(1.0) == doctest::Approx(Density::gamma(2.5, 2).pdf(1.0)).epsilon(1e-14));
  CHECK(hm_test(beta.density, *beta.hm_order).verdict == Verdict::pass);
  CHECK_THROWS_AS(ladder_factor({1, 2, -1}), DomainError);
}

TEST_CASE("GGC screen on a compound Poisson functional") {
  LevySpec s;
  s.kind = LevySpec::Kind::compound_poisson;
  s.drift = 0;
  s.rate = 1;
  s.jump = Density::gamma(1, 2);  // E log V = -0.577 - log 2 < 0
  auto b = simulate_exp_functional(s, 4000, 17);
  auto r = ggc_screen(b);
  CHECK(r.samples == 4000);
  CHECK(r.tolerance > 0);
  CHECK(r.to_json().contains("hcm"));
}

}  // TEST_SUITE
