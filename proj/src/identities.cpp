#include "hmggc/identities.hpp"

#include "hmggc/quadrature.hpp"

#include <boost/math/special_functions/binomial.hpp>

#include <cmath>
#include <limits>

namespace hmggc {
namespace {

void require_proof_inputs(double a, double b, double t, double k) {
  if (!(a > 0) || !std::isfinite(a)) throw DomainError("a must be positive");
  if (!(b >= 1) || !std::isfinite(b)) throw DomainError("b must be >= 1");
  if (!(t > 0) || !std::isfinite(t)) throw DomainError("t must be positive");
  if (!(k > 0) || !std::isfinite(k)) throw DomainError("k must be positive");
}

int integer_k(double k) {
  if (k < 1 || k != std::floor(k) || k > 64) throw DomainError("closed form needs an integer k in [1, 64]");
  return static_cast<int>(k);
}

template <class F>
F ipow(const F& x, int e) {
  F r = 1;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

template <class F>
F factorial_v(int n) {
  F r = 1;
  for (int i = 2; i <= n; ++i) r *= F(i);
  return r;
}

template <class F>
F abs_f(const F& x) {
  return x < 0 ? F(-x) : x;
}

template <class F>
RationalExpr<F> ik_expr(const F& a, const F& b, const F& t, int k) {
  F ib = F(1) / b;
  F p = t / a, q = a * t;
  // (b - v)(v - 1/b) = -v^2 + (b + 1/b) v - 1
  Poly<F> quad(std::vector<F>{F(-1), F(b + ib), F(-1)});
  Poly<F> num = ipow(t, k) * quad.pow(k - 1);
  Poly<F> den = Poly<F>::linear_root(F(-p)).pow(k) * Poly<F>::linear_root(F(-q)).pow(k);
  return RationalExpr<F>(num, den);
}

// Integral over (1/b, b) of the partial fractions of I_k, split into the
// rational part and the 1/(v + c) residues.
template <class F>
struct Closed {
  F P = 0;
  F Q = 0;
  F ratio = 1;        // (b + p)(1/b + q) / ((1/b + p)(b + q))
  F residue_sum = 0;  // alpha_1 + beta_1, must vanish
  F target = 1;       // (T + A)/(T + B)
  F magnitude = 0;    // sum of |pieces|, for error estimates
  bool single_pole = false;
};

template <class F>
Closed<F> closed_core(const F& a, const F& b, const F& t, int k) {
  Closed<F> out;
  F ib = F(1) / b;
  F p = t / a, q = a * t;
  out.single_pole = (a == 1);
  auto expr = ik_expr(a, b, t, k);
  std::vector<std::pair<F, int>> poles;
  if (out.single_pole) {
    poles.push_back({F(-p), 2 * k});
  } else {
    poles.push_back({F(-p), k});
    poles.push_back({F(-q), k});
  }
  auto pf = expr.partial_fractions(poles);
  if (!pf.poly_part.is_zero()) throw DegenerateError("I_k has a polynomial part");
  std::vector<F> residues;
  for (const auto& term : pf.terms) {
    F hi = b - term.location, lo = ib - term.location;
    if (term.order == 1) {
      residues.push_back(term.coeff);
      continue;
    }
    int e = term.order - 1;
    F piece = term.coeff / F(-e) * (F(1) / ipow(hi, e) - F(1) / ipow(lo, e));
    out.P += piece;
    out.magnitude += abs_f(piece);
  }
  F T = t + F(1) / t;
  F A = a * b + F(1) / (a * b), B = a / b + b / a;
  out.target = (T + A) / (T + B);
  if (out.single_pole) {
    out.residue_sum = residues.empty() ? F(0) : residues.front();
    return out;
  }
  out.residue_sum = residues.at(0) + residues.at(1);
  out.Q = residues.at(0);
  out.ratio = ((b + p) * (ib + q)) / ((ib + p) * (b + q));
  return out;
}

Real real_of(double x) { return Real(x); }

Real closed_value_real(const Real& a, const Real& b, const Real& t, int k, Real* error) {
  using std::abs;
  using std::log;
  if (b == 1) {
    if (error) *error = 0;
    return Real(0);
  }
  auto c = closed_core(a, b, t, k);
  Real lg = c.single_pole ? Real(0) : Real(c.Q * log(c.target));
  Real value = c.P + lg;
  if (error) {
    Real mag = c.magnitude + abs(lg) + abs(value);
    *error = mag * epsilon_v<Real>() * Real(64 * k) + abs(c.residue_sum) * abs(log(c.target));
  }
  return value;
}

// t >= 1 with t + 1/t = T.
Real t_of_T(const Real& T) {
  using std::sqrt;
  Real x = T - 2;
  if (x < 0) throw DomainError("T must be >= 2");
  return 1 + x / 2 + sqrt(x * (x + 4)) / 2;
}

template <class T>
T gf_impl(const T& z, const T& a, const T& b, const T& t) {
  using std::log;
  using std::sqrt;
  T al = a + T(1) / a, be = b + T(1) / b, d = b - T(1) / b, TT = t + T(1) / t;
  T lin = al + be * z;
  T delta = lin * lin - 4 - 4 * z * z + 4 * z * TT;
  if (!(delta > 0)) throw BranchError("Delta(z) <= 0: no real branch of sqrt(Delta)");
  T sq = sqrt(delta);
  T base = TT - 2 * z + be * lin / 2;
  T num = base + d * sq / 2, den = base - d * sq / 2;
  if (!(num > 0) || !(den > 0)) throw BranchError("R(z) leaves the positive branch of log");
  return log(num / den) / sq;
}

}  // namespace

double ProofPoint::Delta(double z) const {
  double lin = alpha() + beta() * z;
  return lin * lin - 4 - 4 * z * z + 4 * z * T();
}

void ProofPoint::validate() const { require_proof_inputs(a, b, t, k); }

ProofPoint ExactPoint::approx() const {
  return ProofPoint{a.convert_to<double>(), b.convert_to<double>(), t.convert_to<double>(),
                    static_cast<double>(k)};
}

RationalExpr<Rational> ik_rational(const ExactPoint& p) {
  if (p.a <= 0 || p.b < 1 || p.t <= 0 || p.k < 1) throw DomainError("bad exact proof point");
  return ik_expr(p.a, p.b, p.t, p.k);
}

double jk_quadrature(const ProofPoint& p) {
  p.validate();
  if (p.b == 1) return 0.0;
  const double a = p.a, b = p.b, t = p.t, k = p.k;
  const double ib = 1 / b, d = b - ib;
  const double pp = t / a, qq = a * t;
  // v = 1/b + d y; the halves y < 1/2 and y > 1/2 are folded onto (0, 1/2]
  // so both endpoint factors are computed without cancellation.
  auto g = [&](double v) { return std::pow(t / ((v + pp) * (v + qq)), k); };
  auto f = [&](double y) {
    double w = std::pow(y * (1 - y), k - 1);
    return w * (g(ib + d * y) + g(b - d * y));
  };
  quad::Options o;
  o.rel_tol = 1e-14;
  o.max_levels = 12;
  auto r = quad::integrate<double>(f, 0.0, 0.5, {}, 1.0, o);
  return std::pow(d, 2 * k - 1) * r.value;
}

JkExact jk_closed_exact(const ExactPoint& p) {
  using std::log;
  ik_rational(p);  // validates
  JkExact out;
  auto c = closed_core(p.a, p.b, p.t, p.k);
  if (c.residue_sum != 0) throw DegenerateError("log residues do not cancel");
  out.single_pole = c.single_pole;
  out.P = c.P;
  if (!c.single_pole) {
    if (c.ratio != c.target) throw DegenerateError("log argument is not (T+A)/(T+B)");
    out.Q = c.Q;
    out.log_arg = c.ratio;
  } else {
    out.log_arg = 1;
  }
  out.value = to_real(out.P);
  if (!out.single_pole) out.value += to_real(out.Q) * log(to_real(out.log_arg));
  return out;
}

JkClosed jk_closed(const ProofPoint& p) {
  p.validate();
  int k = integer_k(p.k);
  JkClosed out;
  if (p.b == 1) {
    out.value = out.P = out.Q = out.error = 0;
    out.single_pole = p.a == 1;
    return out;
  }
  Real a = real_of(p.a), b = real_of(p.b), t = real_of(p.t);
  auto c = closed_core(a, b, t, k);
  out.single_pole = c.single_pole;
  out.P = c.P;
  out.Q = c.single_pole ? Real(0) : c.Q;
  out.value = closed_value_real(a, b, t, k, &out.error);
  return out;
}

std::optional<PQPair> pq_pair(const Rational& a, const Rational& b, int k) {
  if (k < 1) throw DomainError("k must be >= 1");
  if (a <= 0 || b < 1) throw DomainError("need a > 0, b >= 1");
  if (a == 1) return std::nullopt;
  auto at = [&](const Rational& t) {
    auto c = closed_core(a, b, t, k);
    if (c.residue_sum != 0) throw DegenerateError("log residues do not cancel");
    if (c.ratio != c.target) throw DegenerateError("log argument is not (T+A)/(T+B)");
    return std::pair<Rational, Rational>{c.P, c.Q};
  };
  std::vector<Rational> Ts, Ps, Qs;
  for (int i = 1; i <= k + 1; ++i) {
    Rational t(i);
    auto [P, Q] = at(t);
    Ts.push_back(t + 1 / t);
    Ps.push_back(P);
    Qs.push_back(Q);
  }
  PQPair out{interpolate(Ts, Ps), interpolate(Ts, Qs)};
  for (Rational t : {Rational(k + 2), Rational(7, 3)}) {
    auto [P, Q] = at(t);
    Rational T = t + 1 / t;
    if (out.P(T) != P || out.Q(T) != Q) throw DegenerateError("P_k, Q_k are not polynomials in T");
  }
  if (out.P.degree() > k - 2) throw DegenerateError("deg P_k exceeds k - 2");
  if (out.Q.degree() != k - 1) throw DegenerateError("deg Q_k differs from k - 1");
  return out;
}

PQPair pq_table(const Rational& a, const Rational& b, int k) {
  Rational c = a - 1 / a, d = b - 1 / b;
  Rational A = a * b + 1 / (a * b), B = a / b + b / a;
  using P = Poly<Rational>;
  switch (k) {
    case 1:
      return {P(), P::constant(1 / c)};
    case 2:
      return {P::constant(-2 * d / (c * c)),
              (1 / ipow(c, 3)) * P(std::vector<Rational>{A + B, Rational(2)})};
    case 3:
      return {(-3 * d / ipow(c, 4)) * P(std::vector<Rational>{A + B, Rational(2)}),
              (1 / ipow(c, 5)) *
                  P(std::vector<Rational>{(A + B) * (A + B) + 2 * A * B, 6 * (A + B), Rational(6)})};
    default:
      throw DomainError("the table covers k = 1, 2, 3");
  }
}

double jk_derivative_rhs(const ProofPoint& p) {
  p.validate();
  int k = integer_k(p.k);
  double d = p.b - 1 / p.b;
  double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * std::tgamma(k) * std::pow(d, 2 * k - 1) /
         (std::pow(p.T() + p.A(), k) * std::pow(p.T() + p.B(), k));
}

Real jk_derivative_rhs_real(const ProofPoint& p) {
  p.validate();
  int k = integer_k(p.k);
  Real a = real_of(p.a), b = real_of(p.b), t = real_of(p.t);
  Real d = b - 1 / b, T = t + 1 / t, A = a * b + 1 / (a * b), B = a / b + b / a;
  Real v = factorial_v<Real>(k - 1) * ipow(d, 2 * k - 1) / (ipow(Real(T + A), k) * ipow(Real(T + B), k));
  return (k % 2 == 0) ? v : Real(-v);
}

Real jk_closed_derivative_numeric(const ProofPoint& p, const Real& delta) {
  p.validate();
  int k = integer_k(p.k);
  Real a = real_of(p.a), b = real_of(p.b), t = real_of(p.t);
  Real T0 = t + 1 / t;
  if (T0 - delta * k / 2 < 2) throw DomainError("difference stencil crosses T = 2");
  Real acc = 0;
  for (int j = 0; j <= k; ++j) {
    Real Tj = T0 + (Real(k) / 2 - j) * delta;
    Real c = boost::math::binomial_coefficient<double>(k, j);
    Real v = closed_value_real(a, b, t_of_T(Tj), k, nullptr);
    acc += (j % 2 == 0 ? c : Real(-c)) * v;
  }
  return acc / ipow(delta, k);
}

Eq4Reduction eq4_reduce(const Rational& a, const Rational& b, int k) {
  auto pq = pq_pair(a, b, k);
  if (!pq) throw DomainError("a = 1 has no log term to differentiate");
  using P = Poly<Rational>;
  Rational A = a * b + 1 / (a * b), B = a / b + b / a, d = b - 1 / b;
  P TA(std::vector<Rational>{A, Rational(1)}), TB(std::vector<Rational>{B, Rational(1)});
  Eq4Reduction out;
  P dP = pq->P;
  for (int i = 0; i < k; ++i) dP = dP.derivative();
  out.p_annihilated = dP.is_zero();
  std::vector<P> dQ{pq->Q};
  for (int i = 1; i <= k; ++i) dQ.push_back(dQ.back().derivative());
  out.q_degree_ok = dQ[k].is_zero();
  P acc = dP * (TA * TB).pow(k);
  for (int i = 0; i < k; ++i) {
    int m = k - i;
    Rational coef = Rational(static_cast<long>(boost::math::binomial_coefficient<double>(k, i))) *
                    factorial_v<Rational>(m - 1) * (m % 2 == 1 ? 1 : -1);
    acc = acc + coef * (dQ[i] * (TA.pow(i) * TB.pow(k) - TA.pow(k) * TB.pow(i)));
  }
  out.reduced = acc;
  out.expected = factorial_v<Rational>(k - 1) * ipow(d, 2 * k - 1) * (k % 2 == 0 ? 1 : -1);
  out.constant = out.q_degree_ok && acc == P::constant(out.expected);
  return out;
}

double gf_eval(double z, const ProofPoint& p) {
  p.validate();
  return gf_impl<double>(z, p.a, p.b, p.t);
}

Real gf_eval_real(const Real& z, const ProofPoint& p) {
  p.validate();
  return gf_impl<Real>(z, real_of(p.a), real_of(p.b), real_of(p.t));
}

Real dlogR_numeric(const Real& z, const ProofPoint& p, const Real& delta) {
  // log R = sqrt(Delta) GF
  using std::sqrt;
  Real al = real_of(p.a) + 1 / real_of(p.a), be = real_of(p.b) + 1 / real_of(p.b);
  Real T = real_of(p.t) + 1 / real_of(p.t);
  auto logR = [&](const Real& zz) {
    Real lin = al + be * zz;
    Real delta_z = lin * lin - 4 - 4 * zz * zz + 4 * zz * T;
    if (!(delta_z > 0)) throw BranchError("Delta(z) <= 0");
    return Real(sqrt(delta_z) * gf_eval_real(zz, p));
  };
  return (logR(z + delta) - logR(z - delta)) / (2 * delta);
}

Real dlogR_closed(const Real& z, const ProofPoint& p) {
  using std::sqrt;
  p.validate();
  Real b = real_of(p.b);
  Real al = real_of(p.a) + 1 / real_of(p.a), be = b + 1 / b;
  Real T = real_of(p.t) + 1 / real_of(p.t);
  Real lin = al + be * z;
  Real delta = lin * lin - 4 - 4 * z * z + 4 * z * T;
  if (!(delta > 0)) throw BranchError("Delta(z) <= 0");
  return 2 * (b - 1 / b) / sqrt(delta);
}

std::vector<Real> series_check(const ProofPoint& p, int K) {
  p.validate();
  if (K < 1) throw DomainError("K must be >= 1");
  PrecisionGuard guard(512);
  Real delta = Real(1) / Real("1e20");
  std::vector<Real> out;
  for (int j = 0; j < K; ++j) {
    Real acc = 0;
    for (int i = 0; i <= j; ++i) {
      Real z = (Real(j) / 2 - i) * delta;
      Real c = boost::math::binomial_coefficient<double>(j, i);
      Real v = gf_eval_real(z, p);
      acc += (i % 2 == 0 ? c : Real(-c)) * v;
    }
    Real deriv = acc / ipow(delta, j);
    Real jk = deriv / factorial_v<Real>(j);
    out.push_back(j % 2 == 0 ? jk : Real(-jk));
  }
  return out;
}

double gf_radius(const ProofPoint& p) {
  return (p.a / ((1 + p.a) * (1 + p.a))) * ((p.b - 1) * (p.b - 1) / p.b);
}

nlohmann::json AsymptoticReport::to_json() const {
  return {{"a", a}, {"b", b}, {"k", k}, {"limit", limit}, {"t", t}, {"scaled", scaled},
          {"rel_error", rel_error}};
}

AsymptoticReport asymptotic_check(double a, double b, int k, const std::vector<double>& ts) {
  require_proof_inputs(a, b, 1.0, k);
  AsymptoticReport r{a, b, k, 0.0, {}, {}, {}};
  double d = b - 1 / b;
  r.limit = std::exp(2 * std::lgamma(k) - std::lgamma(2 * k)) * std::pow(d, 2 * k - 1);
  for (double t : ts) {
    ProofPoint p{a, b, t, static_cast<double>(k)};
    double s = std::pow(p.T(), k) * jk_quadrature(p);
    r.t.push_back(t);
    r.scaled.push_back(s);
    r.rel_error.push_back(r.limit > 0 ? std::abs(s / r.limit - 1) : std::abs(s));
  }
  return r;
}

ScalarFn jk_of_T_fn(double a, double b, double k) {
  require_proof_inputs(a, b, 1.0, k);
  ScalarFn fn;
  fn.label = "J_k(T = 2 + x), a=" + std::to_string(a) + " b=" + std::to_string(b) +
             " k=" + std::to_string(k);
  fn.fast = [a, b, k](double x) {
    double t = 1 + x / 2 + std::sqrt(x * (4 + x)) / 2;
    return jk_quadrature(ProofPoint{a, b, t, k});
  };
  fn.fast_rel_error = 1e-12;
  fn.log_slope = k;
  return fn;
}

nlohmann::json CMSweepReport::to_json() const {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& e : entries) {
    cells.push_back({{"a", e.a}, {"b", e.b}, {"report", e.report.to_json()}});
  }
  return {{"k", k}, {"n_max", n_max}, {"verdict", to_string(verdict)}, {"cells", cells}};
}

CMSweepReport cm_sweep(const std::vector<double>& as, const std::vector<double>& bs, double k,
                       int n_max, std::pair<double, double> x_range, const CMConfig& cfg) {
  CMSweepReport out;
  out.k = k;
  out.n_max = n_max;
  for (double a : as) {
    for (double b : bs) {
      CMSweepEntry e{a, b, cm_test(jk_of_T_fn(a, b, k), x_range, n_max, cfg)};
      if (e.report.verdict == Verdict::fail) out.verdict = Verdict::fail;
      out.entries.push_back(std::move(e));
    }
  }
  return out;
}

Rational random_rational(std::mt19937_64& gen, const Rational& lo, const Rational& hi,
                         long den) {
  if (den < 1 || hi < lo) throw DomainError("bad random_rational range");
  Rational l = lo * den, h = hi * den;
  Integer nlo = numerator(l) / denominator(l);
  if (Rational(nlo) < l) nlo += 1;
  Integer nhi = numerator(h) / denominator(h);
  if (Rational(nhi) > h) nhi -= 1;
  std::uniform_int_distribution<long> dist(nlo.convert_to<long>(), nhi.convert_to<long>());
  return Rational(dist(gen), den);
}

}  // namespace hmggc
