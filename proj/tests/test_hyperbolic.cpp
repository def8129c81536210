#include "hmggc/density.hpp"
#include "hmggc/errors.hpp"
#include "hmggc/hyperbolic.hpp"

#include <doctest.h>

#include <cmath>

using namespace hmggc;

TEST_SUITE("hyperbolic") {

TEST_CASE("v_of_w") {
  CHECK(v_of_w(2.0) == 1.0);
  CHECK(v_of_w(2.5) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(v_of_w(10.0 / 3) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(v_of_w(1.9), DomainError);
  for (double w : {2.0, 2.0001, 3.0, 50.0, 1e6}) {
    double v = v_of_w(w);
    CHECK(v >= 1.0);
    CHECK(v + 1 / v == doctest::Approx(w).epsilon(1e-14));
  }
  PrecisionGuard g(256);
  Real w = Real(2) + Real(1) / Real(1000000);
  Real v = v_of_w(w);
  CHECK(to_double(abs(v + 1 / v - w)) < 1e-70);
}

TEST_CASE("h_slice examples") {
  auto u = Density::uniform(0, 1);
  CHECK(h_slice(u, 0.5, 2.0) == 1.0);
  for (double w : {2.0, 2.5, 10.0}) CHECK(h_slice(u, 2.0, w) == 0.0);
  CHECK(h_slice(Density::uniform_product(2), std::exp(-1.0), 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  // (log u)^2 - (log v)^2 for the order-2 uniform product
  double uu = 0.2, w = 2.5, v = 2.0;
  CHECK(h_slice(Density::uniform_product(2), uu, w) ==
        doctest::Approx(std::pow(std::log(uu), 2) - std::pow(std::log(v), 2)).epsilon(1e-13));
}

TEST_CASE("h_slice is symmetric in v and 1/v") {
  for (const auto& f : {Density::gamma(2.5, 1), Density::triangular_down(), Density::beta(2, 3)}) {
    for (double u : {0.1, 0.4, 0.9}) {
      for (double v : {1.0, 1.3, 2.0}) {
        double w = v + 1 / v;
        double direct = f.pdf(u * v) * f.pdf(u / v);
        double swapped = f.pdf(u / v) * f.pdf(u * v);
        CHECK(h_slice(f, u, w) == doctest::Approx(direct).epsilon(1e-12));
        CHECK(direct == swapped);
      }
    }
  }
}

TEST_CASE("hm_test examples") {
  CHECK(hm_test(Density::uniform(0, 1), 1).verdict == Verdict::pass);
  CHECK(hm_test(Density::triangular_down(), 2).verdict == Verdict::pass);
  auto sg = hm_test(Density::shifted_gamma(0.5, 1, 1), 1);
  CHECK(sg.verdict == Verdict::fail);
  REQUIRE(!sg.witnesses.empty());
  double tol = sg.cfg.tol_abs;
  for (const auto& w : sg.witnesses) CHECK(w.margin < -tol);
  auto r = hm_test(Density::ratio(Density::triangular_down(), Density::uniform(0, 1)), 2);
  CHECK(r.verdict == Verdict::fail);
  CHECK(r.violations > 0);
}

TEST_CASE("uniform(a,b) is HM1 but not HM2") {
  CHECK(hm_test(Density::uniform(1, 2), 1).verdict == Verdict::pass);
  CHECK(hm_test(Density::uniform(1, 2), 2).verdict == Verdict::fail);
}

TEST_CASE("gamma densities pass every tested order") {
  for (int k : {1, 2, 3}) CHECK(hm_test(Density::gamma(2, 1), k).verdict == Verdict::pass);
}

TEST_CASE("nesting: order k implies every lower order") {
  for (const auto& [f, k] : std::vector<std::pair<Density, int>>{{Density::triangular_down(), 2},
                                                                  {Density::uniform_product(3), 3},
                                                                  {Density::beta(3, 4), 3}}) {
    REQUIRE(hm_test(f, k).verdict == Verdict::pass);
    for (int j = 1; j < k; ++j) CHECK(hm_test(f, j).verdict == Verdict::pass);
  }
}

TEST_CASE("power closure") {
  for (double q : {-1.0, 2.0}) {
    CAPTURE(q);
    CHECK(hm_test(Density::power_of(Density::triangular_down(), q), 2).verdict == Verdict::pass);
    CHECK(hm_test(Density::power_of(Density::uniform(1, 2), q), 1).verdict == Verdict::pass);
  }
}

TEST_CASE("product closure") {
  auto u = Density::uniform(0, 1), tri = Density::triangular_down();
  CHECK(hm_test(Density::product(u, Density::uniform(1, 2)), 1).verdict == Verdict::pass);
  CHECK(hm_test(Density::ratio(Density::uniform(1, 2), u), 1).verdict == Verdict::pass);
  CHECK(hm_test(Density::product(tri, tri), 2).verdict == Verdict::pass);
  CHECK(hm_test(Density::ratio(tri, Density::beta(2, 2)), 2).verdict == Verdict::pass);
}

TEST_CASE("vacuous runs are flagged") {
  HMConfig cfg;
  cfg.u_range = std::make_pair(5.0, 10.0);
  auto r = hm_test(Density::uniform(0, 1), 1, cfg);
  CHECK(r.vacuous);
}

TEST_CASE("log-concavity examples") {
  auto g2 = logconcavity_test(Density::gamma(2, 1));
  CHECK(g2.verdict == Verdict::pass);
  CHECK(g2.psi_nondecreasing);
  auto g1 = logconcavity_test(Density::gamma(1, 1));
  CHECK(g1.verdict == Verdict::pass);
  auto gh = logconcavity_test(Density::gamma(0.5, 1));
  CHECK(gh.verdict == Verdict::fail);
  CHECK(gh.psi_nondecreasing);
  CHECK(hm_test(Density::gamma(0.5, 1), 1).verdict == Verdict::pass);
}

TEST_CASE("HM1 agrees with the psi certificate") {
  for (const auto& f : {Density::gamma(0.5, 1), Density::gamma(3, 2), Density::beta(2, 5),
                        Density::shifted_gamma(0.5, 1, 1), Density::shifted_gamma(2, 1, 0.5),
                        Density::power_of(Density::gamma(2, 1), -1)}) {
    CAPTURE(f.to_json().dump());
    bool hm1 = hm_test(f, 1).verdict == Verdict::pass;
    CHECK(hm1 == logconcavity_test(f).psi_nondecreasing);
  }
}

TEST_CASE("interior zeros are rejected") {
  auto gap = Density::mixture({{0.5, Density::uniform(0.1, 0.2)}, {0.5, Density::uniform(0.5, 0.6)}});
  CHECK_THROWS_AS(logconcavity_test(gap), SplitSupportError);
}

TEST_CASE("report json") {
  auto r = hm_test(Density::shifted_gamma(0.5, 1, 1), 1);
  auto j = r.to_json();
  CHECK(j.at("verdict") == "fail");
  CHECK(j.at("order") == 1);
  CHECK(j.at("witnesses").is_array());
  CHECK(j.contains("grid"));
}

}  // TEST_SUITE
