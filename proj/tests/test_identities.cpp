#include "hmggc/errors.hpp"
#include "hmggc/identities.hpp"
#include "hmggc/verify.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace hmggc;

TEST_SUITE("identity-verifier") {

TEST_CASE("ProofPoint derived symbols") {
  ProofPoint p{2, 2, 1, 1};
  CHECK(p.T() == 2.0);
  CHECK(p.A() == 4.25);
  CHECK(p.B() == 2.0);
  CHECK(p.alpha() == 2.5);
  CHECK(p.Delta(0) == doctest::Approx(2.25).epsilon(1e-15));
  for (double t : {0.3, 1.0, 4.0}) CHECK(ProofPoint{3, 2, t, 1}.T() >= 2.0);
  CHECK(ProofPoint{3, 2, 1, 1}.A() > ProofPoint{3, 2, 1, 1}.B());
  CHECK(ProofPoint{1, 2, 1, 1}.A() == ProofPoint{1, 2, 1, 1}.B());
  CHECK_THROWS_AS((ProofPoint{-1, 2, 1, 1}.validate()), DomainError);
}

TEST_CASE("jk_quadrature examples") {
  CHECK(jk_quadrature({1, 2, 1, 1}) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(jk_quadrature({3, 1, 0.5, 2}) == 0.0);
  // (1/1.5) log(6.25/4)
  CHECK(jk_quadrature({2, 2, 1, 1}) == doctest::Approx(0.29752473508561299).epsilon(1e-13));
}

TEST_CASE("closed form agrees with quadrature") {
  for (int k = 1; k <= 5; ++k) {
    ExactPoint e{Rational(3), Rational(2), Rational(1), k};
    double exact = to_double(jk_closed_exact(e).value);
    CHECK(std::abs(exact - jk_quadrature(e.approx())) < 1e-13 * (1 + exact));
    auto c = jk_closed(e.approx());
    CHECK(to_double(c.value) == doctest::Approx(exact).epsilon(1e-12));
  }
  // a = 1: a single pole, no log term.
  auto one = jk_closed_exact(ExactPoint{Rational(1), Rational(2), Rational(1), 1});
  CHECK(one.single_pole);
  CHECK(one.Q == 0);
  CHECK(one.P == Rational(1, 3));
}

TEST_CASE("log argument is (T+A)/(T+B)") {
  ExactPoint e{Rational(7, 3), Rational(5, 2), Rational(3, 4), 2};
  auto j = jk_closed_exact(e);
  CHECK(j.log_arg == (e.T() + e.A()) / (e.T() + e.B()));
}

TEST_CASE("I_k partial fractions reproduce the rational function") {
  ExactPoint e{Rational(5, 2), Rational(3), Rational(2, 3), 3};
  auto ik = ik_rational(e);
  Rational p = e.t / e.a, q = e.a * e.t;
  auto pf = ik.partial_fractions({{-p, 3}, {-q, 3}});
  CHECK(reassemble_numerator(pf, ik.den) == ik.num);
  for (const auto& term : pf.terms) CHECK(term.order >= 1);
}

TEST_CASE("P/Q table and degree bounds") {
  Rational a(3), b(2);
  Rational s = a - 1 / a;
  auto p1 = pq_pair(a, b, 1);
  REQUIRE(p1);
  CHECK(p1->P.is_zero());
  CHECK(p1->Q == Poly<Rational>::constant(1 / s));
  auto p2 = pq_pair(a, b, 2);
  REQUIRE(p2);
  CHECK(p2->P == Poly<Rational>::constant(-2 * (b - 1 / b) / (s * s)));
  for (int k = 1; k <= 3; ++k) {
    auto pq = pq_pair(a, b, k);
    auto tab = pq_table(a, b, k);
    CHECK(pq->P == tab.P);
    CHECK(pq->Q == tab.Q);
  }
  for (int k = 1; k <= 6; ++k) {
    auto pq = pq_pair(Rational(7, 4), Rational(9, 5), k);
    CHECK(pq->P.degree() <= k - 2);
    CHECK(pq->Q.degree() == k - 1);
  }
  CHECK(!pq_pair(Rational(1), Rational(2), 2));
}

TEST_CASE("derivative formula") {
  CHECK(jk_derivative_rhs({2, 2, 1, 1}) == doctest::Approx(-0.06).epsilon(1e-14));
  for (int k = 1; k <= 5; ++k) {
    double v = jk_derivative_rhs({3, 2, 0.7, double(k)});
    CHECK((k % 2 ? v < 0 : v > 0));
  }
  CHECK(jk_derivative_rhs({3, 1, 0.7, 2}) == 0.0);
  PrecisionGuard g(256);
  for (int k = 1; k <= 4; ++k) {
    ProofPoint p{2.5, 1.75, 0.6, double(k)};
    Real num = jk_closed_derivative_numeric(p, Real(1e-10));
    Real rhs = jk_derivative_rhs_real(p);
    CHECK(to_double(abs(num - rhs) / abs(rhs)) < 1e-6);
  }
}

TEST_CASE("exact reduction to a constant") {
  for (int k = 1; k <= 5; ++k) {
    auto r = eq4_reduce(Rational(5, 2), Rational(7, 3), k);
    CHECK(r.p_annihilated);
    CHECK(r.q_degree_ok);
    CHECK(r.constant);
    CHECK(r.reduced.degree() == 0);
    CHECK(r.reduced.coeff(0) == r.expected);
  }
}

TEST_CASE("generating function") {
  ProofPoint p{2, 2, 1, 1};
  CHECK(gf_eval(0.0, p) == doctest::Approx(jk_quadrature(p)).epsilon(1e-13));
  PrecisionGuard g(256);
  CHECK(to_double(dlogR_closed(Real(0), p)) == doctest::Approx(2.0).epsilon(1e-15));
  Real num = dlogR_numeric(Real(0), p, Real(1e-30));
  CHECK(to_double(abs(num - 2)) < 1e-20);
  ProofPoint q{3, 2.5, 0.8, 3};
  auto js = series_check(q, 3);
  for (int k = 1; k <= 3; ++k) {
    ProofPoint qk = q;
    qk.k = k;
    double quad = jk_quadrature(qk);
    CHECK(std::abs(to_double(js[k - 1]) - quad) < 1e-8 * quad);
  }
  CHECK(gf_radius(q) > 0);
  ProofPoint near_one{1.01, 1.5, 1, 1};
  CHECK_THROWS_AS(gf_eval(-10.0, near_one), BranchError);
}

TEST_CASE("invariances") {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 10; ++i) {
    double a = to_double(to_real(random_rational(gen, Rational(11, 10), Rational(8))));
    double b = to_double(to_real(random_rational(gen, Rational(11, 10), Rational(8))));
    double t = to_double(to_real(random_rational(gen, Rational(1, 5), Rational(5))));
    for (double k : {1.0, 2.0, 2.5}) {
      double j = jk_quadrature({a, b, t, k});
      CHECK(jk_quadrature({a, b, 1 / t, k}) == doctest::Approx(j).epsilon(1e-12));
      CHECK(jk_quadrature({1 / a, b, t, k}) == doctest::Approx(j).epsilon(1e-12));
    }
  }
}

TEST_CASE("asymptotics") {
  auto r1 = asymptotic_check(2, 2, 1);
  CHECK(r1.limit == doctest::Approx(1.5).epsilon(1e-15));
  auto r2 = asymptotic_check(2, 2, 2);
  CHECK(r2.limit == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(r2.rel_error.back() < r2.rel_error.front());
  CHECK(r2.rel_error.back() < 0.01);
  CHECK(asymptotic_check(2, 1, 2).limit == 0.0);
}

TEST_CASE("lower-order terms vanish at infinity") {
  // Sign propagation needs k >= 2. J_1 decays only like 1/T, so at T = 1e6
  // it sits at about 5e-6 J_1(2).
  for (int k = 2; k <= 5; ++k) {
    double j2 = jk_quadrature({2, 2, 1, double(k)});
    double far = jk_quadrature({2, 2, 1e6, double(k)});
    CHECK(far < 1e-6 * j2);
  }
  double j1 = jk_quadrature({2, 2, 1e6, 1});
  CHECK(j1 * (1e6 + 1e-6) == doctest::Approx(1.5).epsilon(1e-5));
}

TEST_CASE("J_k is CM in T") {
  CHECK(cm_sweep({2}, {2}, 1, 8).verdict == Verdict::pass);
  CHECK(cm_sweep({2}, {2}, 0.5, 6).verdict == Verdict::pass);
  CHECK(cm_sweep({3}, {1.5}, 2.5, 6).verdict == Verdict::pass);
}

TEST_CASE("suites are reproducible and reject bad k") {
  SuiteOptions o;
  o.identity = "eq2eq3";
  o.k = 2;
  o.trials = 10;
  auto a = run_identity_suite(o).to_json();
  auto b = run_identity_suite(o).to_json();
  CHECK(a == b);
  CHECK(a.at("verdict") == "pass");
  o.k = 1.5;
  CHECK_THROWS_AS(run_identity_suite(o), DomainError);
  o.identity = "nonsense";
  CHECK_THROWS_AS(run_identity_suite(o), ParseError);
}

}  // TEST_SUITE
