#include "hmggc/density.hpp"
#include "hmggc/errors.hpp"
#include "hmggc/mixtures.hpp"
#include "hmggc/transforms.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace hmggc;

TEST_SUITE("mixtures") {

TEST_CASE("product and ratio densities at z = 1") {
  auto g1 = Density::gamma(1, 1), g2 = Density::gamma(2, 1);
  auto u = Density::uniform(0, 1), tri = Density::triangular_down();
  CHECK(product_density(g1, u, 1.0) == doctest::Approx(0.21938393439552027).epsilon(1e-12));
  CHECK(product_density(g2, tri, 1.0) == doctest::Approx(0.29699101355184410).epsilon(1e-12));
  CHECK(ratio_density(g1, u, 1.0) == doctest::Approx(1 - 2 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(ratio_density(g2, tri, 1.0) == doctest::Approx(22 * std::exp(-1.0) - 8).epsilon(1e-11));
  CHECK(expint_e1(1.0) == doctest::Approx(0.21938393439552027).epsilon(1e-15));
}

TEST_CASE("ratio density near zero tends to one half") {
  CHECK(ratio_density(Density::gamma(1, 1), Density::uniform(0, 1), 1e-4) ==
        doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("mixtures are normalized") {
  auto u = Density::uniform(0, 1);
  for (const auto& f : {Density::product(Density::gamma(1, 1), u), Density::ratio(Density::gamma(2, 1), u),
                        Density::product(Density::triangular_down(), Density::uniform(1, 2)),
                        Density::ratio(Density::beta(2, 2), Density::gamma(3, 1))}) {
    CAPTURE(f.to_json().dump());
    CHECK(std::abs(f.mass() - 1) < 1e-8);
  }
}

TEST_CASE("catalog") {
  CHECK(catalog("YU").lt(1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(catalog("Y/X2").pdf(1.0) == doctest::Approx(22 * std::exp(-1.0) - 8).epsilon(1e-13));
  for (const auto& name : catalog_names()) {
    auto e = catalog(name);
    CAPTURE(name);
    CHECK(e.lt(1e-9) == doctest::Approx(1.0).epsilon(1e-7));
    for (double x : {1e-3, 0.1, 1.0, 10.0, 50.0}) CHECK(e.pdf(x) >= 0);
    for (double s : {0.1, 1.0, 10.0}) {
      CHECK(std::abs(laplace(e.construction, s) - e.lt(s)) < 1e-6 * e.lt(s));
      CHECK(e.construction.pdf(s) == doctest::Approx(e.pdf(s)).epsilon(1e-9));
    }
    PrecisionGuard g(128);
    CHECK(to_double(e.lt_real(Real(2))) == doctest::Approx(e.lt(2.0)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(catalog("XY"), ParseError);
}

TEST_CASE("numeric mixture density matches the closed form across scales") {
  for (const auto& name : catalog_names()) {
    auto e = catalog(name);
    for (int p = -300; p <= 300; p += 15) {
      double z = std::pow(10.0, p);
      CAPTURE(name);
      CAPTURE(z);
      double closed = e.pdf(z);
      REQUIRE(std::isfinite(closed));
      CHECK(std::abs(e.construction.pdf(z) - closed) <= 1e-6 * closed);
    }
  }
}

TEST_CASE("triangular-down equals the law of U1 sqrt(U2)") {
  auto u = Density::uniform(0, 1);
  auto alt = Density::product(u, Density::power_of(u, 0.5));
  auto tri = Density::triangular_down();
  for (double x : {0.05, 0.3, 0.5, 0.9, 0.99}) CHECK(alt.pdf(x) == doctest::Approx(tri.pdf(x)).epsilon(1e-10));
}

TEST_CASE("Mellin consistency") {
  for (int k : {1, 2, 3}) {
    for (const auto& f : {Density::uniform(0, 1), Density::triangular_down()}) {
      auto z = Density::ratio(Density::gamma(k, 1), f);
      for (double s : {0.3, 3.0}) CHECK(std::abs(laplace(z, s) - stieltjes_k(f, k, s)) < 1e-7);
    }
  }
}

TEST_CASE("tilt") {
  auto u = Density::uniform(0, 1);
  auto same = tilt(u, 0, 0);
  for (double x : {0.1, 0.5}) CHECK(same.pdf(x) == doctest::Approx(1.0));
  auto t = tilt(u, 1, 0.1);
  CHECK(std::abs(t.mass() - 1) < 1e-10);
  auto g = tilt(Density::gamma(2, 1), 1, 0);
  for (double x : {0.2, 1.0, 4.0}) CHECK(g.pdf(x) == doctest::Approx(std::exp(-x)).epsilon(1e-10));
  CHECK_THROWS_AS(tilt(u, 1, 0), IntegrabilityError);
}

TEST_CASE("real order below k keeps the Stieltjes transform HCM") {
  HCMConfig cfg;
  cfg.n_max = 6;
  CHECK(hcm_test(stieltjes_fn(Density::triangular_down(), 1.5), cfg).verdict == Verdict::pass);
}

TEST_CASE("product of two GGC laws has an HCM transform") {
  // E exp(-s Y X) with Y ~ Gamma(2) is E (1 + s X)^-2, a one-dimensional integral.
  auto x = Density::gamma(0.5, 1);
  auto z = Density::product(Density::gamma(2, 1), x);
  for (double s : {0.3, 3.0}) CHECK(product_lt(x, 2, s) == doctest::Approx(laplace(z, s)).epsilon(1e-8));
  HCMConfig cfg;
  cfg.n_max = 6;
  CHECK(hcm_test(product_lt_fn(x, 2), cfg).verdict == Verdict::pass);
}

TEST_CASE("tabulate and csv") {
  auto f = Density::product(Density::gamma(1, 1), Density::uniform(0, 1));
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(0.01 * std::pow(2000.0, i / 400.0));
  auto t = tabulate(f, grid);
  for (double x : {0.05, 0.7, 3.0}) CHECK(t.pdf(x) == doctest::Approx(f.pdf(x)).epsilon(1e-4));
  std::ostringstream os;
  write_csv(os, f, {0.5, 1.0});
  CHECK(os.str().find("1,") != std::string::npos);
}

}  // TEST_SUITE
