#include "hmggc/density.hpp"
#include "hmggc/errors.hpp"
#include "hmggc/mixtures.hpp"
#include "hmggc/transforms.hpp"

#include <doctest.h>

#include <cmath>

using namespace hmggc;

namespace {

ScalarFn plain(const std::string& label, std::function<double(double)> f,
               std::function<Real(const Real&)> p) {
  ScalarFn fn;
  fn.label = label;
  fn.fast = std::move(f);
  fn.precise = std::move(p);
  fn.precise_cheap = true;
  fn.fast_rel_error = 1e-15;
  return fn;
}

}  // namespace

TEST_SUITE("transforms") {

TEST_CASE("laplace examples") {
  CHECK(laplace(Density::gamma(1, 1), 1.0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(laplace(Density::product(Density::gamma(1, 1), Density::uniform(0, 1)), 1.0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-10));
  for (const auto& f : {Density::beta(2, 3), Density::uniform_product(2), Density::gamma(0.3, 2)}) {
    CHECK(laplace(f, 0.0) == 1.0);
    CHECK(laplace(f, 1e-12) == doctest::Approx(1.0).epsilon(1e-10));
  }
  auto raw = Density::table({1, 2, 3}, {1, 2, 1}, false);
  CHECK_THROWS_AS(laplace(raw, 1.0), NormalizationError);
  CHECK_THROWS_AS(laplace(Density::gamma(1, 1), -1.0), DomainError);
}

TEST_CASE("laplace in extended precision") {
  PrecisionGuard g(200);
  Real v = laplace_real(Density::gamma(2, 1), Real(1));
  CHECK(to_double(abs(v - Real(0.25))) < 1e-50);
  Real u = laplace_real(Density::uniform(0, 1), Real(2));
  Real exact = (1 - exp(Real(-2))) / 2;
  CHECK(to_double(abs(u - exact)) < 1e-50);
}

TEST_CASE("stieltjes examples") {
  CHECK(stieltjes_k(Density::uniform(0, 1), 1, 1.0) == doctest::Approx(1 + std::log(0.5)).epsilon(1e-13));
  CHECK(stieltjes_k(Density::triangular_down(), 2, 1.0) ==
        doctest::Approx(7 + 10 * std::log(0.5)).epsilon(1e-12));
  for (double k : {1.0, 2.0, 2.5}) {
    CHECK(stieltjes_k(Density::beta(2, 3), k, 1e-10) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("product_lt examples") {
  CHECK(product_lt(Density::uniform(0, 1), 1, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-13));
  CHECK(product_lt(Density::triangular_down(), 2, 1.0) ==
        doctest::Approx(2 * (1 - std::log(2.0))).epsilon(1e-13));
  // s = 0 gives the mass
  auto g2 = Density::gamma(2, 1);
  CHECK(product_lt(g2, 3, 0.0) == g2.mass());
  CHECK(product_lt(g2, 3, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("stieltjes is the Laplace transform of gamma(k)/X") {
  for (const auto& [f, k] : std::vector<std::pair<Density, int>>{{Density::uniform(0, 1), 1},
                                                                 {Density::triangular_down(), 2},
                                                                 {Density::uniform(1, 2), 2}}) {
    auto z = Density::ratio(Density::gamma(k, 1), f);
    for (double s : {0.1, 1.0, 7.0}) {
      CHECK(std::abs(stieltjes_k(f, k, s) - laplace(z, s)) < 1e-7);
    }
  }
}

TEST_CASE("scale equivariance of stieltjes") {
  auto f = Density::beta(2, 3);
  for (double c : {0.5, 3.0}) {
    auto g = Density::scaled(f, c);
    for (double s : {0.2, 1.0, 5.0}) {
      CHECK(stieltjes_k(g, 2, s) == doctest::Approx(stieltjes_k(f, 2, s / c)).epsilon(1e-11));
    }
  }
}

TEST_CASE("finite differences") {
  auto sq = plain("s^2", [](double s) { return s * s; }, [](const Real& s) { return Real(s * s); });
  CHECK(to_double(finite_diff(sq, 1.0, 2, 0.5).value) == doctest::Approx(0.5).epsilon(1e-30));
  auto ex = plain("exp", [](double s) { return std::exp(-s); }, [](const Real& s) { return Real(exp(-s)); });
  CHECK(to_double(finite_diff(ex, 0.0, 1, 1.0).value) == doctest::Approx(std::exp(-1.0) - 1).epsilon(1e-15));
  auto c = plain("c", [](double) { return 3.0; }, [](const Real&) { return Real(3); });
  for (int n = 1; n <= 6; ++n) CHECK(to_double(finite_diff(c, 2.0, n, 0.1).value) == 0.0);
  // Order 40 at a tiny step needs far more than 53 bits.
  auto d = finite_diff_adaptive(ex, 1.0, 40, 1e-3);
  CHECK(d.bits > 53);
  double expect = std::exp(-1.0) * std::pow(std::expm1(-1e-3), 40);
  CHECK(to_double(d.value) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("cm_test examples") {
  auto ex = plain("exp", [](double s) { return std::exp(-s); }, [](const Real& s) { return Real(exp(-s)); });
  CHECK(cm_test(ex, {1e-3, 1e3}, 8).verdict == Verdict::pass);
  auto inv = plain("1/(1+s)", [](double s) { return 1 / (1 + s); }, [](const Real& s) { return Real(1 / (1 + s)); });
  CHECK(cm_test(inv, {1e-3, 1e3}, 8).verdict == Verdict::pass);
  auto wig = plain("wiggle", [](double s) { return std::exp(-s) * (1 + 0.5 * std::sin(4 * s)); },
                   [](const Real& s) { return Real(exp(-s) * (1 + sin(4 * s) / 2)); });
  auto r = cm_test(wig, {1e-3, 1e3}, 4);
  CHECK(r.verdict == Verdict::fail);
  REQUIRE(!r.witnesses.empty());
  for (const auto& w : r.witnesses) CHECK(w.value < 0);
}

TEST_CASE("every Laplace transform is CM") {
  for (const auto& f : {Density::gamma(0.5, 1), Density::uniform(1, 2), Density::triangular_down(),
                        Density::beta(2, 5)}) {
    CAPTURE(f.to_json().dump());
    CHECK(cm_test(laplace_fn(f), {1e-2, 1e2}, 6).verdict == Verdict::pass);
  }
}

// Closed forms: the HCM grid on a numeric transform costs minutes.
ScalarFn gamma_lt(double k) {
  return plain("gamma lt", [k](double s) { return std::pow(1 + s, -k); },
               [k](const Real& s) { return Real(pow(1 + s, Real(-k))); });
}

// 0.5 delta_1 + 0.5 delta_5: not GGC.
ScalarFn two_point_lt() {
  return plain("two-point", [](double s) { return 0.5 * (std::exp(-s) + std::exp(-5 * s)); },
               [](const Real& s) { return Real((exp(-s) + exp(-5 * s)) / 2); });
}

TEST_CASE("hcm_test examples") {
  HCMConfig cfg;
  cfg.n_max = 6;
  CHECK(hcm_test(gamma_lt(1), cfg).verdict == Verdict::pass);
  CHECK(hcm_test(stieltjes_fn(Density::uniform(0, 1), 1), cfg).verdict == Verdict::pass);
  auto r = hcm_test(two_point_lt(), cfg);
  CHECK(r.verdict == Verdict::fail);
  CHECK(!r.witnesses.empty());
}

TEST_CASE("GGC transforms with atom-only Thorin measures are HCM") {
  HCMConfig cfg;
  cfg.n_max = 6;
  std::vector<std::vector<std::pair<double, double>>> cases{
      {{1.0, 0.5}}, {{0.2, 1.0}, {3.0, 2.0}}, {{0.5, 0.3}, {1.5, 1.0}, {10.0, 4.0}}};
  for (const auto& atoms : cases) {
    ThorinSpec spec;
    spec.atoms = atoms;
    CHECK(hcm_test(ggc_fn(spec), cfg).verdict == Verdict::pass);
  }
}

TEST_CASE("HCM verdict is the conjunction of the per-u CM verdicts") {
  HCMConfig cfg;
  cfg.n_max = 4;
  cfg.u_points = 9;
  for (const auto& phi : {gamma_lt(2), two_point_lt()}) {
    auto r = hcm_test(phi, cfg);
    bool all = true;
    for (const auto& c : r.per_u) all = all && c.verdict == Verdict::pass;
    CHECK((r.verdict == Verdict::pass) == all);
  }
}

TEST_CASE("catalog closed forms are CM and HCM") {
  HCMConfig cfg;
  cfg.n_max = 6;
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    CHECK(hcm_test(catalog_lt_fn(name), cfg).verdict == Verdict::pass);
  }
}

}  // TEST_SUITE
