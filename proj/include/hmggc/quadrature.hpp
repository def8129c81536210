#pragma once

// Double-exponential quadrature templated on the scalar type (double or Real).
// tanh-sinh on finite pieces, exp-sinh on the tail; pieces that fail to
// converge are bisected.

#include "hmggc/errors.hpp"
#include "hmggc/real.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

namespace hmggc::quad {

struct Options {
  double rel_tol = 1e-13;
  double abs_tol = 0.0;
  // When > 0, overrides rel_tol with 2^-tol_bits (for Real runs).
  unsigned tol_bits = 0;
  int max_levels = 9;
  int max_depth = 10;
};

template <class T>
struct Result {
  T value{};
  T error{};
  long evaluations = 0;
};

namespace detail {

inline double ldexp(double x, int e) { return std::ldexp(x, e); }
inline double to_dbl(double x) { return x; }
inline double to_dbl(const Real& x) { return to_double(x); }

template <class T>
T rel_tol(const Options& o) {
  if (o.tol_bits > 0) {
    T t = 1;
    return ldexp(t, -static_cast<int>(o.tol_bits));
  }
  return T(o.rel_tol);
}

template <class T>
bool finite_v(const T& x) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  return isfinite(x);
}

template <class T>
T abs_v(const T& x) {
  using std::abs;
  return abs(x);
}

template <class T>
T machine_eps() {
  if constexpr (std::is_same_v<T, double>) {
    return std::numeric_limits<double>::epsilon();
  } else {
    return ldexp(T(1), 1 - static_cast<int>(working_bits()));
  }
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline double step_toward(double x, double y) { return std::nextafter(x, y); }
inline Real step_toward(const Real& x, const Real& y) {
  Real r = x;
  mpfr_nexttoward(r.backend().data(), y.backend().data());
  return r;
}

// One tanh-sinh pass at step h over t = offset + j*step, summing both
// sides. Returns the raw (unscaled) sum.
template <class T, class F>
T ts_sweep(const F& f, const T& a, const T& b, const T& half, const T& h, bool odd_only,
           const T& tiny_rel, const T& running, long& evals) {
  using std::cosh;
  using std::exp;
  using std::sinh;
  const T pi2 = pi_v<T>() / 2;
  T sum = 0;
  const T tmax = 10;
  int quiet = 0;
  for (long j = 1;; j += odd_only ? 2 : 1) {
    T t = h * T(j);
    if (t > tmax) break;
    T u = pi2 * sinh(t);
    T e2u = exp(2 * u);
    if (!finite_v(e2u)) break;
    T delta = T(2) / (T(1) + e2u);
    T w = pi2 * cosh(t) * delta * (T(2) - delta);
    T off = half * delta;
    T xl = a + off;
    T xr = b - off;
    if (!(off > 0)) break;
    // On a narrow piece the offset drops below the spacing of floats near the
    // endpoint long before the weights are negligible: use the nearest
    // interior point instead.
    if (!(xl > a)) xl = step_toward(a, b);
    if (!(xr < b)) xr = step_toward(b, a);
    bool okl = xl > a && xl < b, okr = xr < b && xr > a;
    if (!okl && !okr) break;
    T fl = 0, fr = 0;
    if (okl) {
      fl = f(xl);
      ++evals;
      if (!finite_v(fl)) fl = 0, okl = false;
    }
    if (okr) {
      fr = f(xr);
      ++evals;
      if (!finite_v(fr)) fr = 0, okr = false;
    }
    if (!okl && !okr) break;
    T term = w * (fl + fr);
    sum += term;
    T mag = abs_v(w) * (abs_v(fl) + abs_v(fr));
    if (t > 2 && mag <= tiny_rel * (abs_v(running) + abs_v(sum))) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
  }
  return sum;
}

inline constexpr int kEndpointDepth = 24;

template <class T, class F>
bool tanh_sinh_piece(const F& f, const T& a, const T& b, const Options& o, Result<T>& out) {
  const T half = (b - a) / 2;
  // Nodes cannot sit closer to an endpoint than its float spacing, which caps
  // the attainable accuracy on narrow pieces.
  const T width_floor = T(8) * machine_eps<T>() * std::max(abs_v(a), abs_v(b)) / (b - a);
  const T tol = std::max(rel_tol<T>(o), width_floor);
  const T tiny = tol * T(1e-3);
  const T pi2 = pi_v<T>() / 2;
  T h = 1;
  T sum = pi2 * f(a + half);
  long evals = 1;
  sum += ts_sweep(f, a, b, half, h, false, tiny, sum, evals);
  T prev = half * h * sum;
  for (int level = 1; level <= o.max_levels; ++level) {
    h /= 2;
    sum += ts_sweep(f, a, b, half, h, true, tiny, sum, evals);
    T cur = half * h * sum;
    T diff = abs_v(cur - prev);
    if (!finite_v(cur)) break;
    if (level >= 3 && (diff <= tol * abs_v(cur) || diff <= T(o.abs_tol))) {
      out.value += cur;
      out.error += diff;
      out.evaluations += evals;
      return true;
    }
    prev = cur;
  }
  out.evaluations += evals;
  return false;
}

// at_lo / at_hi: the piece shares that endpoint with the whole interval.
template <class T, class F>
void tanh_sinh_adaptive(const F& f, const T& a, const T& b, const Options& o, int depth,
                        Result<T>& out, bool at_lo = true, bool at_hi = true) {
  Result<T> local;
  if (tanh_sinh_piece(f, a, b, o, local)) {
    out.value += local.value;
    out.error += local.error;
    out.evaluations += local.evaluations;
    return;
  }
  out.evaluations += local.evaluations;
  if constexpr (std::is_same_v<T, double>) {
    if (b - a <= 1e-12 * std::max(std::abs(a), std::abs(b))) {
      double v = (b - a) * f((a + b) / 2);
      out.value += v;
      out.error += std::abs(v);
      out.evaluations += 1;
      return;
    }
  }
  using std::sqrt;
  T m = (a > 0 && b / a > 16) ? T(sqrt(a) * sqrt(b)) : T((a + b) / 2);
  if (depth >= o.max_depth) {
    // An endpoint singularity only ever fails in the piece next to it, so
    // that chain may go deeper, shrinking geometrically toward the endpoint.
    if (at_lo == at_hi || depth >= o.max_depth + kEndpointDepth) {
      throw QuadratureError("quadrature did not converge on [" + fmt(to_dbl(a)) + ", " + fmt(to_dbl(b)) + "]");
    }
    m = at_lo ? T(a + (b - a) / 16) : T(b - (b - a) / 16);
  }
  tanh_sinh_adaptive(f, a, m, o, depth + 1, out, at_lo, false);
  tanh_sinh_adaptive(f, m, b, o, depth + 1, out, false, at_hi);
}

// exp-sinh on [a, inf): x = a + L exp(pi/2 sinh t).
template <class T, class F>
T es_sweep(const F& f, const T& a, const T& L, const T& h, bool odd_only, int dir,
           const T& tiny_rel, const T& running, long& evals) {
  using std::cosh;
  using std::exp;
  using std::sinh;
  const T pi2 = pi_v<T>() / 2;
  T sum = 0;
  int quiet = 0;
  for (long j = 1;; j += odd_only ? 2 : 1) {
    T t = h * T(j) * T(dir);
    if (abs_v(t) > 10) break;
    T g = exp(pi2 * sinh(t));
    T off = L * g;
    T x = a + off;
    if (!finite_v(x) || !(x > a)) break;
    T w = L * pi2 * cosh(t) * g;
    if (!finite_v(w)) break;
    T fx = f(x);
    ++evals;
    if (!finite_v(fx)) break;
    T term = w * fx;
    sum += term;
    if (abs_v(t) > T(2.5) && abs_v(term) <= tiny_rel * (abs_v(running) + abs_v(sum))) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
  }
  return sum;
}

template <class T, class F>
Result<T> exp_sinh(const F& f, const T& a, const T& L, const Options& o) {
  const T tol = rel_tol<T>(o);
  const T tiny = tol * T(1e-3);
  const T pi2 = pi_v<T>() / 2;
  Result<T> out;
  T h = 1;
  long evals = 1;
  T sum = L * pi2 * f(a + L);
  sum += es_sweep(f, a, L, h, false, 1, tiny, sum, evals);
  sum += es_sweep(f, a, L, h, false, -1, tiny, sum, evals);
  T prev = h * sum;
  for (int level = 1; level <= o.max_levels + 1; ++level) {
    h /= 2;
    sum += es_sweep(f, a, L, h, true, 1, tiny, sum, evals);
    sum += es_sweep(f, a, L, h, true, -1, tiny, sum, evals);
    T cur = h * sum;
    T diff = abs_v(cur - prev);
    if (level >= 3 && (diff <= tol * abs_v(cur) || diff <= T(o.abs_tol))) {
      out.value = cur;
      out.error = diff;
      out.evaluations = evals;
      return out;
    }
    prev = cur;
  }
  throw QuadratureError("tail quadrature did not converge from " + fmt(to_dbl(a)));
}

}  // namespace detail

// Integral over a finite interval.
template <class T, class F>
Result<T> tanh_sinh(const F& f, const T& a, const T& b, const Options& o = {}) {
  Result<T> out;
  if (!(b > a)) return out;
  // Mass at the left end of a piece spanning many decades lies beyond the
  // point where the node sweep goes quiet, so such pieces are cut first.
  const T span = T(1e8);
  T lo = a;
  while (lo > 0 && b / lo > span) {
    detail::tanh_sinh_adaptive(f, lo, T(lo * span), o, 0, out);
    lo *= span;
  }
  detail::tanh_sinh_adaptive(f, lo, b, o, 0, out);
  return out;
}

// Integral over [a, b] with b possibly +inf. Pieces are split at the given
// breakpoints; `scale` sets where the semi-infinite tail begins when no
// breakpoint does.
template <class T, class F>
Result<T> integrate(const F& f, double a, double b, std::vector<double> breaks = {},
                    double scale = 1.0, const Options& o = {}) {
  Result<T> out;
  if (!(b > a)) return out;
  std::vector<double> cuts{a};
  std::sort(breaks.begin(), breaks.end());
  // Nearly coincident cuts leave slivers only a few floats wide, where the
  // nodes cannot be placed.
  auto apart = [](double x, double y) {
    return y - x > 1e-9 * std::max(std::abs(x), std::abs(y));
  };
  for (double x : breaks) {
    if (std::isfinite(x) && apart(cuts.back(), x) && (std::isinf(b) || apart(x, b))) cuts.push_back(x);
  }
  if (std::isinf(b)) {
    if (!(scale > 0) || !std::isfinite(scale)) scale = 1.0;
    // Make sure the last finite cut sits at the bulk so the tail map is well scaled.
    if (cuts.back() < scale) cuts.push_back(std::max(scale, a + scale));
  } else {
    cuts.push_back(b);
  }
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto r = tanh_sinh<T>(f, T(cuts[i]), T(cuts[i + 1]), o);
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
  }
  if (std::isinf(b)) {
    double last = cuts.back();
    double L = std::max(scale, 1e-3 * std::abs(last));
    if (!(L > 0)) L = 1.0;
    auto r = detail::exp_sinh<T>(f, T(last), T(L), o);
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
  }
  return out;
}

}  // namespace hmggc::quad
