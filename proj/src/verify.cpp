#include "hmggc/verify.hpp"

#include "hmggc/errors.hpp"
#include "hmggc/identities.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hmggc {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxWitnesses = 64;

int require_int_k(double k, int lo, int hi) {
  if (k != std::floor(k) || k < lo || k > hi) {
    throw DomainError("this identity needs an integer k in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  return static_cast<int>(k);
}

struct Draw {
  Rational a, b, t;
};

Draw draw_point(std::mt19937_64& gen, bool avoid_t_one) {
  Draw d;
  d.a = random_rational(gen, Rational(101, 100), Rational(10));
  d.b = random_rational(gen, Rational(101, 100), Rational(10));
  do {
    d.t = random_rational(gen, Rational(1, 10), Rational(10));
  } while (avoid_t_one && d.t == 1);
  return d;
}

json point_json(const Draw& d, double k) {
  return {{"a", to_string(d.a)}, {"b", to_string(d.b)}, {"t", to_string(d.t)}, {"k", k}};
}

class Tally {
 public:
  Tally(SuiteReport& r, double tol) : r_(r) { r_.tolerance = tol; }
  // err is compared against the suite tolerance.
  void check(double err, const json& where) {
    ++r_.checks;
    double ratio = std::isfinite(err) ? err / r_.tolerance : INFINITY;
    r_.worst = std::max(r_.worst, ratio);
    if (!(ratio <= 1)) fail(where);
  }
  void fail(json where) {
    ++r_.failures;
    r_.verdict = Verdict::fail;
    if (r_.witnesses.size() < kMaxWitnesses) r_.witnesses.push_back(std::move(where));
  }
  void pass_flag() { ++r_.checks; }

 private:
  SuiteReport& r_;
};

void suite_eq2eq3(SuiteReport& r, std::mt19937_64& gen) {
  int k = require_int_k(r.options.k, 1, 32);
  Tally tally(r, 1e-10);
  for (int i = 0; i < r.options.trials; ++i) {
    Draw d = draw_point(gen, false);
    ExactPoint e{d.a, d.b, d.t, k};
    double exact = to_double(jk_closed_exact(e).value);
    double q = jk_quadrature(e.approx());
    json w = point_json(d, k);
    w["closed"] = exact;
    w["quadrature"] = q;
    tally.check(std::abs(q - exact) / (1 + std::abs(exact)), w);
  }
}

void suite_eq4(SuiteReport& r, std::mt19937_64& gen) {
  int k = require_int_k(r.options.k, 1, 12);
  Tally tally(r, 1e-6);
  long reductions = 0;
  for (int i = 0; i < r.options.trials; ++i) {
    Draw d = draw_point(gen, true);
    ExactPoint e{d.a, d.b, d.t, k};
    ProofPoint p = e.approx();
    {
      PrecisionGuard guard(256);
      Real num = jk_closed_derivative_numeric(p, Real(1e-10));
      Real rhs = jk_derivative_rhs_real(p);
      json w = point_json(d, k);
      w["check"] = "numeric";
      w["difference"] = to_double(num);
      w["closed_derivative"] = to_double(rhs);
      tally.check(to_double(abs(num - rhs) / abs(rhs)), w);
    }
    Eq4Reduction red = eq4_reduce(d.a, d.b, k);
    if (red.constant && red.p_annihilated) {
      ++reductions;
      tally.pass_flag();
    } else {
      json w = point_json(d, k);
      w["check"] = "exact-reduction";
      w["p_annihilated"] = red.p_annihilated;
      w["q_degree_ok"] = red.q_degree_ok;
      w["reduced_degree"] = red.reduced.degree();
      tally.fail(w);
    }
  }
  r.metrics["exact_reductions"] = reductions;
}

void suite_pq_table(SuiteReport& r, std::mt19937_64& gen) {
  int k = require_int_k(r.options.k, 1, 3);
  Tally tally(r, 0.5);  // exact comparison: error is 0 or 1
  for (int i = 0; i < r.options.trials; ++i) {
    Draw d = draw_point(gen, false);
    auto pq = pq_pair(d.a, d.b, k);
    PQPair table = pq_table(d.a, d.b, k);
    bool ok = pq && pq->P == table.P && pq->Q == table.Q;
    json w = point_json(d, k);
    w["P_degree"] = pq ? pq->P.degree() : -2;
    w["Q_degree"] = pq ? pq->Q.degree() : -2;
    tally.check(ok ? 0.0 : 1.0, w);
  }
}

void suite_gf(SuiteReport& r, std::mt19937_64& gen) {
  int K = require_int_k(r.options.k, 1, 8);
  Tally tally(r, 1.0);  // errors below are pre-divided by their own tolerance
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int series_points = std::min(r.options.trials, 10);
  long redraws = 0;
  for (int i = 0; i < r.options.trials; ++i) {
    Draw d = draw_point(gen, false);
    ProofPoint p = ExactPoint{d.a, d.b, d.t, K}.approx();
    // The identity is stated where Delta(z) > 0; redraw z outside that set.
    double z = 0.5 * gf_radius(p) * unit(gen);
    while (!(p.Delta(z) > 0)) {
      ++redraws;
      z = 0.5 * gf_radius(p) * unit(gen);
    }
    {
      PrecisionGuard guard(256);
      Real num = dlogR_numeric(Real(z), p, Real(1e-30));
      Real closed = dlogR_closed(Real(z), p);
      json w = point_json(d, K);
      w["check"] = "dlogR";
      w["z"] = z;
      w["numeric"] = to_double(num);
      w["closed"] = to_double(closed);
      tally.check(to_double(abs(num - closed) / abs(closed)) / 1e-10, w);
    }
    if (i >= series_points) continue;
    auto js = series_check(p, K);
    for (int k = 1; k <= K; ++k) {
      ProofPoint pk = p;
      pk.k = k;
      double q = jk_quadrature(pk);
      double s = to_double(js[k - 1]);
      json w = point_json(d, k);
      w["check"] = "series";
      w["series"] = s;
      w["quadrature"] = q;
      tally.check(std::abs(s - q) / std::abs(q) / 1e-8, w);
    }
  }
  r.metrics["z_redraws"] = redraws;
}

void suite_asymptotic(SuiteReport& r) {
  int k = require_int_k(r.options.k, 1, 12);
  Tally tally(r, 0.01);
  json rows = json::array();
  for (double a : {2.0, 3.0}) {
    for (double b : {1.5, 2.0, 4.0}) {
      auto rep = asymptotic_check(a, b, k);
      rows.push_back(rep.to_json());
      tally.check(rep.rel_error.back(), rep.to_json());
    }
  }
  r.metrics["rows"] = rows;
}

void suite_cm_real_k(SuiteReport& r) {
  if (!(r.options.k > 0)) throw DomainError("k must be positive");
  auto sweep = cm_sweep({1.5, 2, 3, 5, 10}, {1.25, 1.5, 2, 3, 5}, r.options.k, r.options.n_max);
  Tally tally(r, 0.5);
  long inconclusive = 0, checks = 0;
  for (const auto& e : sweep.entries) {
    inconclusive += e.report.inconclusive;
    checks += e.report.checks;
    json w{{"a", e.a}, {"b", e.b}, {"k", r.options.k}, {"violations", e.report.violations}};
    if (!e.report.witnesses.empty()) {
      const auto& x = e.report.witnesses.front();
      w["first"] = {{"x", x.s}, {"h", x.h}, {"n", x.n}, {"value", x.value_text}};
    }
    tally.check(e.report.verdict == Verdict::fail ? 1.0 : 0.0, w);
  }
  r.metrics["difference_checks"] = checks;
  r.metrics["inconclusive"] = inconclusive;
}

}  // namespace

json SuiteReport::to_json() const {
  return {{"identity", options.identity},
          {"k", options.k},
          {"trials", options.trials},
          {"seed", options.seed},
          {"verdict", to_string(verdict)},
          {"checks", checks},
          {"failures", failures},
          {"tolerance", tolerance},
          {"worst_error_over_tolerance", worst},
          {"metrics", metrics}};
}

std::vector<std::string> identity_names() {
  return {"eq2eq3", "eq4", "pq-table", "gf", "asymptotic", "cm-real-k"};
}

SuiteReport run_identity_suite(const SuiteOptions& opt) {
  if (opt.trials < 1) throw DomainError("trials must be >= 1");
  SuiteReport r;
  r.options = opt;
  std::mt19937_64 gen(opt.seed);
  const std::string& id = opt.identity;
  if (id == "eq2eq3") {
    suite_eq2eq3(r, gen);
  } else if (id == "eq4") {
    suite_eq4(r, gen);
  } else if (id == "pq-table") {
    suite_pq_table(r, gen);
  } else if (id == "gf") {
    suite_gf(r, gen);
  } else if (id == "asymptotic") {
    suite_asymptotic(r);
  } else if (id == "cm-real-k") {
    suite_cm_real_k(r);
  } else {
    throw ParseError("unknown identity '" + id + "'");
  }
  return r;
}

}  // namespace hmggc
