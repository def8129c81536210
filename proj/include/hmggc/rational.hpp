#pragma once

// Univariate polynomials and rational functions over an ordered field F
// (exact rationals or Real), with partial fractions at known poles.

#include "hmggc/errors.hpp"
#include "hmggc/real.hpp"

#include <boost/multiprecision/gmp.hpp>

#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace hmggc {

using Rational = boost::multiprecision::mpq_rational;
using Integer = boost::multiprecision::mpz_int;

Real to_real(const Rational& q);
// Accepts "p/q", integers and plain decimals ("1.25", "-0.3").
Rational rational_from_string(const std::string& text);
std::string to_string(const Rational& q);

template <class F>
inline constexpr bool is_exact_v = std::is_same_v<F, Rational>;

template <class F>
struct Poly {
  std::vector<F> c;  // ascending powers

  Poly() = default;
  explicit Poly(std::vector<F> coeffs) : c(std::move(coeffs)) { trim(); }
  static Poly constant(const F& a) { return Poly(std::vector<F>{a}); }
  // x - r
  static Poly linear_root(const F& r) { return Poly(std::vector<F>{F(-r), F(1)}); }

  void trim() {
    while (!c.empty() && c.back() == 0) c.pop_back();
  }
  bool is_zero() const { return c.empty(); }
  // -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c.size()) - 1; }
  F lead() const { return c.empty() ? F(0) : c.back(); }
  F coeff(int i) const { return (i >= 0 && i < static_cast<int>(c.size())) ? c[i] : F(0); }

  F operator()(const F& x) const {
    F acc = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    std::vector<F> r(std::max(a.c.size(), b.c.size()), F(0));
    for (std::size_t i = 0; i < a.c.size(); ++i) r[i] += a.c[i];
    for (std::size_t i = 0; i < b.c.size(); ++i) r[i] += b.c[i];
    return Poly(std::move(r));
  }
  friend Poly operator-(const Poly& a, const Poly& b) {
    std::vector<F> r(std::max(a.c.size(), b.c.size()), F(0));
    for (std::size_t i = 0; i < a.c.size(); ++i) r[i] += a.c[i];
    for (std::size_t i = 0; i < b.c.size(); ++i) r[i] -= b.c[i];
    return Poly(std::move(r));
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return Poly();
    std::vector<F> r(a.c.size() + b.c.size() - 1, F(0));
    for (std::size_t i = 0; i < a.c.size(); ++i) {
      for (std::size_t j = 0; j < b.c.size(); ++j) r[i + j] += a.c[i] * b.c[j];
    }
    return Poly(std::move(r));
  }
  friend Poly operator*(const F& s, const Poly& a) {
    std::vector<F> r = a.c;
    for (auto& x : r) x *= s;
    return Poly(std::move(r));
  }
  friend bool operator==(const Poly& a, const Poly& b) { return a.c == b.c; }

  Poly pow(int e) const {
    Poly r = constant(F(1));
    for (int i = 0; i < e; ++i) r = r * *this;
    return r;
  }

  Poly derivative() const {
    if (c.size() <= 1) return Poly();
    std::vector<F> r(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i) r[i - 1] = c[i] * F(static_cast<long>(i));
    return Poly(std::move(r));
  }

  // Coefficients of p(x0 + e) in powers of e.
  Poly shifted(const F& x0) const {
    // Horner in the shifted basis.
    Poly r;
    Poly lin(std::vector<F>{x0, F(1)});
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * lin + constant(*it);
    return r;
  }

  // Quotient and remainder.
  std::pair<Poly, Poly> divmod(const Poly& d) const {
    if (d.is_zero()) throw DomainError("polynomial division by zero");
    std::vector<F> rem = c;
    int dd = d.degree();
    int n = degree();
    if (n < dd) return {Poly(), *this};
    std::vector<F> q(n - dd + 1, F(0));
    for (int i = n; i >= dd; --i) {
      F f = rem[i] / d.c[dd];
      q[i - dd] = f;
      if (f == 0) continue;
      for (int j = 0; j <= dd; ++j) rem[i - dd + j] -= f * d.c[j];
      rem[i] = 0;
    }
    rem.resize(dd);
    return {Poly(std::move(q)), Poly(std::move(rem))};
  }
};

// Monic gcd (exact fields only).
template <class F>
Poly<F> gcd(Poly<F> a, Poly<F> b) {
  static_assert(is_exact_v<F>, "gcd needs an exact field");
  while (!b.is_zero()) {
    auto r = a.divmod(b).second;
    a = std::move(b);
    b = std::move(r);
  }
  if (a.is_zero()) return a;
  return (F(1) / a.lead()) * a;
}

template <class F>
struct PoleTerm {
  F location;  // the pole r; the term is coeff / (x - r)^order
  int order;
  F coeff;
};

template <class F>
struct PartialFractions {
  Poly<F> poly_part;
  std::vector<PoleTerm<F>> terms;  // grouped by pole, orders ascending
};

template <class F>
struct RationalExpr {
  Poly<F> num, den;

  RationalExpr() = default;
  RationalExpr(Poly<F> n, Poly<F> d) : num(std::move(n)), den(std::move(d)) {
    if (den.is_zero()) throw DomainError("rational function with zero denominator");
    if constexpr (is_exact_v<F>) reduce();
  }

  // Cancels the gcd and makes the denominator monic.
  void reduce() {
    auto g = gcd(num, den);
    if (g.degree() > 0) {
      num = num.divmod(g).first;
      den = den.divmod(g).first;
    }
    F l = den.lead();
    num = (F(1) / l) * num;
    den = (F(1) / l) * den;
  }

  F operator()(const F& x) const { return num(x) / den(x); }

  // Partial fractions given den = lead * prod (x - r)^m over `poles`.
  // Throws DomainError when the poles do not reproduce the denominator
  // (exact fields only; Real inputs are trusted).
  PartialFractions<F> partial_fractions(const std::vector<std::pair<F, int>>& poles) const {
    Poly<F> prod = Poly<F>::constant(den.lead());
    for (const auto& [r, m] : poles) prod = prod * Poly<F>::linear_root(r).pow(m);
    if constexpr (is_exact_v<F>) {
      if (!(prod == den)) throw DomainError("partial fractions: poles do not factor the denominator");
    }
    PartialFractions<F> out;
    auto qr = num.divmod(prod);
    out.poly_part = qr.first;
    const Poly<F>& rem = qr.second;
    for (std::size_t i = 0; i < poles.size(); ++i) {
      const auto& [r, m] = poles[i];
      Poly<F> other = Poly<F>::constant(den.lead());
      for (std::size_t j = 0; j < poles.size(); ++j) {
        if (j != i) other = other * Poly<F>::linear_root(poles[j].first).pow(poles[j].second);
      }
      // Taylor coefficients of rem / other at r, up to order m - 1.
      Poly<F> ns = rem.shifted(r), os = other.shifted(r);
      std::vector<F> e(m, F(0));
      for (int n = 0; n < m; ++n) {
        F acc = ns.coeff(n);
        for (int l = 1; l <= n; ++l) acc -= os.coeff(l) * e[n - l];
        e[n] = acc / os.coeff(0);
      }
      // e_n multiplies (x - r)^(n - m)
      for (int order = 1; order <= m; ++order) {
        out.terms.push_back(PoleTerm<F>{r, order, e[m - order]});
      }
    }
    return out;
  }
};

// Sum of the partial fractions as a single rational function over den.
template <class F>
Poly<F> reassemble_numerator(const PartialFractions<F>& pf, const Poly<F>& den) {
  Poly<F> acc = pf.poly_part * den;
  for (const auto& t : pf.terms) {
    Poly<F> q = den.divmod(Poly<F>::linear_root(t.location).pow(t.order)).first;
    acc = acc + t.coeff * q;
  }
  return acc;
}

// Exact interpolation: coefficients (ascending) of the polynomial of degree
// < n through (x_i, y_i).
template <class F>
Poly<F> interpolate(const std::vector<F>& x, const std::vector<F>& y) {
  const std::size_t n = x.size();
  if (y.size() != n || n == 0) throw DomainError("interpolate: size mismatch");
  std::vector<F> dd = y;
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = n - 1; i >= j; --i) {
      dd[i] = (dd[i] - dd[i - 1]) / (x[i] - x[i - j]);
      if (i == j) break;
    }
  }
  Poly<F> p = Poly<F>::constant(dd[n - 1]);
  for (std::size_t i = n - 1; i-- > 0;) p = p * Poly<F>::linear_root(x[i]) + Poly<F>::constant(dd[i]);
  return p;
}

}  // namespace hmggc
