#include "hmggc/transforms.hpp"

#include "hmggc/errors.hpp"
#include "hmggc/mixtures.hpp"
#include "hmggc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace hmggc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bits used when a cheap precise evaluator doubles as the fast one.
constexpr unsigned kFastBits = 128;

Real pow2(int e) { return ldexp(Real(1), e); }

std::vector<double> binomial_row(int n) {
  std::vector<double> c(n + 1, 1.0);
  for (int j = 1; j <= n; ++j) c[j] = c[j - 1] * (n - j + 1) / j;
  return c;
}

std::vector<Real> binomial_row_real(int n) {
  std::vector<Real> c(n + 1, Real(1));
  for (int j = 1; j <= n; ++j) c[j] = c[j - 1] * Real(n - j + 1) / Real(j);
  return c;
}

// Runs f at working precision + guard bits and rounds back.
template <class F>
Real with_guard(unsigned guard, F f) {
  unsigned bits = working_bits();
  Real out;
  {
    PrecisionGuard g(bits + guard);
    out = f();
  }
  Real r(out);
  r.precision(Real::default_precision());
  return r;
}

double positive_log2(double x) { return x > 1 ? std::log2(x) : 0.0; }

std::function<double(double)> fast_from_precise(std::function<Real(const Real&)> p) {
  return [p = std::move(p)](double s) {
    PrecisionGuard g(kFastBits);
    return to_double(p(Real(s)));
  };
}

double integrate_with(const Density& f, const std::function<double(double)>& g,
                      std::vector<double> extra, double scale) {
  Support sup = f.support();
  std::vector<double> br = f.breakpoints();
  br.insert(br.end(), extra.begin(), extra.end());
  auto h = [&](double x) {
    double v = f.pdf(x);
    return v == 0 ? 0.0 : v * g(x);
  };
  quad::Options o;
  o.rel_tol = 1e-13;
  o.abs_tol = 1e-300;
  return quad::integrate<double>(h, sup.lo, sup.hi, br, scale, o).value;
}

void check_normalized(const Density& f, const char* what) {
  double m = f.mass();
  if (!(std::abs(m - 1) <= 1e-6)) {
    throw NormalizationError(std::string(what) + ": density integrates to " + std::to_string(m) +
                             ", not 1");
  }
}

// ---------------------------------------------------------------- exact polynomial paths

// Integral of y^p over [y0, y1], p real (log when p = -1).
Real power_integral(const Real& y0, const Real& y1, const Real& p) {
  if (p == -1) return log(y1 / y0);
  Real q = p + 1;
  return (pow(y1, q) - pow(y0, q)) / q;
}

bool is_integer(double k) { return std::isfinite(k) && k == std::floor(k); }

// Sum over pieces of integral of x^(m+k) (x+s)^-k, integer k.
Real stieltjes_poly(const std::vector<PolyPiece>& pieces, int k, const Real& s) {
  int max_m = 0;
  double hi_min = kInf;
  for (const auto& p : pieces) {
    max_m = std::max<int>(max_m, static_cast<int>(p.coeffs.size()) - 1);
    hi_min = std::min(hi_min, to_double(p.hi));
  }
  double ratio = to_double(s) / hi_min;
  unsigned guard = 64 + static_cast<unsigned>((max_m + k + 2) * (positive_log2(ratio) + 1));
  return with_guard(guard, [&] {
    Real sx(s);
    sx.precision(Real::default_precision());
    Real total = 0;
    for (const auto& p : pieces) {
      Real y0 = Real(p.lo) + sx, y1 = Real(p.hi) + sx;
      for (std::size_t m = 0; m < p.coeffs.size(); ++m) {
        Real c(p.coeffs[m]);
        if (c == 0) continue;
        int N = static_cast<int>(m) + k;
        auto C = binomial_row_real(N);
        Real acc = 0;
        for (int i = 0; i <= N; ++i) {
          Real coef = C[i] * pow(-sx, N - i);
          acc += coef * power_integral(y0, y1, Real(i - k));
        }
        total += c * acc;
      }
    }
    return total;
  });
}

// Sum over pieces of integral of x^m (1 + s x)^-k, real k.
Real product_lt_poly(const std::vector<PolyPiece>& pieces, double k, const Real& s) {
  int max_m = 0;
  double hi_max = 0;
  for (const auto& p : pieces) {
    max_m = std::max<int>(max_m, static_cast<int>(p.coeffs.size()) - 1);
    hi_max = std::max(hi_max, to_double(p.hi));
  }
  double small = 1.0 / (to_double(s) * hi_max);
  unsigned guard = 64 + static_cast<unsigned>((max_m + 2) * (positive_log2(small) + 1));
  return with_guard(guard, [&] {
    Real sx(s);
    sx.precision(Real::default_precision());
    Real kk(k);
    Real total = 0;
    for (const auto& p : pieces) {
      Real y0 = 1 + sx * Real(p.lo), y1 = 1 + sx * Real(p.hi);
      for (std::size_t m = 0; m < p.coeffs.size(); ++m) {
        Real c(p.coeffs[m]);
        if (c == 0) continue;
        int mm = static_cast<int>(m);
        auto C = binomial_row_real(mm);
        Real acc = 0;
        for (int i = 0; i <= mm; ++i) {
          Real term = C[i] * power_integral(y0, y1, Real(i) - kk);
          acc += ((mm - i) % 2) ? Real(-term) : term;
        }
        total += c * acc / pow(sx, mm + 1);
      }
    }
    return total;
  });
}

}  // namespace

// ---------------------------------------------------------------- ScalarFn

double ScalarFn::operator()(double s) const {
  if (fast) return fast(s);
  if (precise) return to_double(precise(Real(s)));
  throw DomainError("ScalarFn '" + label + "' has no evaluator");
}

Real ScalarFn::eval(const Real& s) const {
  if (precise) return precise(s);
  if (fast) return Real(fast(to_double(s)));
  throw DomainError("ScalarFn '" + label + "' has no evaluator");
}

// ---------------------------------------------------------------- transforms

double laplace(const Density& f, double s) {
  if (!(s >= 0)) throw DomainError("laplace: s must be >= 0");
  check_normalized(f, "laplace");
  if (s == 0) return 1.0;
  double sc = std::min(f.scale(), 1.0 / s);
  return integrate_with(f, [s](double x) { return std::exp(-s * x); }, {}, sc);
}

Real laplace_real(const Density& f, const Real& s) {
  if (!(s >= 0)) throw DomainError("laplace: s must be >= 0");
  check_normalized(f, "laplace");
  if (s == 0) return Real(1);
  return integrate_against_real(f, [&s](const Real& x) { return Real(exp(-s * x)); });
}

double stieltjes_k(const Density& f, double k, double s) {
  if (!(k > 0)) throw DomainError("stieltjes_k: k must be > 0");
  if (!(s >= 0)) throw DomainError("stieltjes_k: s must be > 0");
  if (s == 0) return f.mass();
  if (is_integer(k)) {
    if (auto pp = f.poly_pieces()) {
      PrecisionGuard g(kFastBits);
      return to_double(stieltjes_poly(*pp, static_cast<int>(k), Real(s)));
    }
  }
  return integrate_with(f, [k, s](double x) { return std::pow(x / (x + s), k); }, {s}, f.scale());
}

Real stieltjes_k_real(const Density& f, double k, const Real& s) {
  if (!(k > 0)) throw DomainError("stieltjes_k: k must be > 0");
  if (!(s > 0)) throw DomainError("stieltjes_k: s must be > 0");
  if (is_integer(k)) {
    if (auto pp = f.poly_pieces()) return stieltjes_poly(*pp, static_cast<int>(k), s);
  }
  Real kk(k);
  return integrate_against_real(f, [&](const Real& x) { return Real(pow(x / (x + s), kk)); });
}

double product_lt(const Density& f, double k, double s) {
  if (!(k > 0)) throw DomainError("product_lt: k must be > 0");
  if (!(s >= 0)) throw DomainError("product_lt: s must be >= 0");
  if (s == 0) return f.mass();
  if (auto pp = f.poly_pieces()) {
    PrecisionGuard g(kFastBits);
    return to_double(product_lt_poly(*pp, k, Real(s)));
  }
  return integrate_with(f, [k, s](double x) { return std::pow(1 + s * x, -k); }, {1 / s},
                        f.scale());
}

Real product_lt_real(const Density& f, double k, const Real& s) {
  if (!(k > 0)) throw DomainError("product_lt: k must be > 0");
  if (!(s > 0)) throw DomainError("product_lt: s must be > 0");
  if (auto pp = f.poly_pieces()) return product_lt_poly(*pp, k, s);
  Real kk(k);
  return integrate_against_real(f, [&](const Real& x) { return Real(pow(1 + s * x, -kk)); });
}

namespace {

std::pair<double, double> support_hint(const Density& f) {
  Support s = f.support();
  double hi = std::isfinite(s.hi) ? s.hi : f.quantile(1 - 1e-6);
  double lo = s.lo > 0 ? s.lo : std::max(f.quantile(1e-6), 1e-3 * hi);
  return {lo, hi};
}

}  // namespace

ScalarFn laplace_fn(const Density& f) {
  check_normalized(f, "laplace");
  ScalarFn fn;
  fn.label = "laplace[" + f.to_json().dump() + "]";
  fn.fast = [f](double s) { return laplace(f, s); };
  fn.fast_rel_error = 1e-12;
  fn.precise = [f](const Real& s) { return laplace_real(f, s); };
  fn.precise_loss_bits = 24;
  fn.scale_hint = support_hint(f);
  return fn;
}

ScalarFn stieltjes_fn(const Density& f, double k) {
  if (!(k > 0)) throw DomainError("stieltjes_k: k must be > 0");
  ScalarFn fn;
  fn.label = "stieltjes[k=" + std::to_string(k) + "," + f.to_json().dump() + "]";
  bool exact = is_integer(k) && f.poly_pieces().has_value();
  fn.precise = [f, k](const Real& s) { return stieltjes_k_real(f, k, s); };
  if (exact) {
    fn.fast = fast_from_precise(fn.precise);
    fn.fast_rel_error = 1e-15;
    fn.precise_loss_bits = 8;
    fn.precise_cheap = true;
  } else {
    fn.fast = [f, k](double s) { return stieltjes_k(f, k, s); };
    fn.fast_rel_error = 1e-12;
    fn.precise_loss_bits = 24;
  }
  fn.log_slope = k;
  fn.scale_hint = support_hint(f);
  return fn;
}

ScalarFn product_lt_fn(const Density& f, double k) {
  if (!(k > 0)) throw DomainError("product_lt: k must be > 0");
  ScalarFn fn;
  fn.label = "product_lt[k=" + std::to_string(k) + "," + f.to_json().dump() + "]";
  bool exact = f.poly_pieces().has_value();
  fn.precise = [f, k](const Real& s) { return product_lt_real(f, k, s); };
  if (exact) {
    fn.fast = fast_from_precise(fn.precise);
    fn.fast_rel_error = 1e-15;
    fn.precise_loss_bits = 8;
    fn.precise_cheap = true;
  } else {
    fn.fast = [f, k](double s) { return product_lt(f, k, s); };
    fn.fast_rel_error = 1e-12;
    fn.precise_loss_bits = 24;
  }
  fn.log_slope = k;
  auto [lo, hi] = support_hint(f);
  fn.scale_hint = std::make_pair(1 / hi, 1 / lo);
  return fn;
}

ScalarFn ggc_fn(const ThorinSpec& spec) {
  spec.validate();
  ScalarFn fn;
  fn.label = "ggc[" + spec.to_json().dump() + "]";
  fn.fast = [spec](double s) { return ggc_laplace(spec, s); };
  fn.fast_rel_error = spec.u_density ? 1e-12 : 1e-14;
  if (!spec.u_density) {
    double total = 0;
    for (const auto& [t, u] : spec.atoms) total += u;
    // s phi'/phi = -a s - sum u_i s / (t_i + s)
    if (spec.a == 0) fn.log_slope = total;
  }
  if (!spec.u_density) {
    fn.precise = [spec](const Real& s) { return ggc_laplace(spec, s); };
    fn.precise_cheap = true;
  }
  if (!spec.atoms.empty()) {
    double lo = kInf, hi = 0;
    for (const auto& [t, u] : spec.atoms) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    fn.scale_hint = std::make_pair(lo, hi);
  }
  return fn;
}

ScalarFn catalog_lt_fn(const std::string& name) {
  CatalogEntry e = catalog(name);
  ScalarFn fn;
  fn.label = "catalog[" + name + "]";
  fn.precise = e.lt_real;
  fn.fast = fast_from_precise(e.lt_real);
  fn.fast_rel_error = 1e-15;
  fn.precise_loss_bits = 8;
  fn.precise_cheap = true;
  fn.log_slope = (name == "YX2" || name == "Y/X2") ? 2.0 : 1.0;
  fn.scale_hint = std::make_pair(1e-2, 1e2);
  return fn;
}

// ---------------------------------------------------------------- differences

DiffResult finite_diff(const ScalarFn& phi, double s, int n, double h, unsigned bits) {
  if (n < 1) throw DomainError("finite_diff: order must be >= 1");
  if (!(h > 0)) throw DomainError("finite_diff: step must be > 0");
  if (phi.precise) {
    PrecisionGuard g(bits);
    auto C = binomial_row_real(n);
    Real rs(s), rh(h);
    Real value = 0, mag = 0;
    for (int j = 0; j <= n; ++j) {
      Real v = phi.precise(Real(rs + Real(j) * rh));
      Real t = C[j] * v;
      value += ((n - j) % 2) ? Real(-t) : t;
      mag += abs(t);
    }
    double loss = phi.precise_loss_bits + std::log2(n + 1.0) + 2;
    Real noise = mag * pow2(-static_cast<int>(bits) + static_cast<int>(std::ceil(loss)));
    if (value != 0 && abs(value) <= noise) {
      throw PrecisionError("finite_diff: cancellation exceeds " + std::to_string(bits) +
                           " bits at s=" + std::to_string(s) + ", n=" + std::to_string(n));
    }
    return {value, noise, bits};
  }
  auto C = binomial_row(n);
  double value = 0, mag = 0, csum = 0;
  for (int j = 0; j <= n; ++j) {
    double t = C[j] * phi(s + j * h);
    value += ((n - j) % 2) ? -t : t;
    mag += std::abs(t);
    csum += C[j];
  }
  double noise = mag * (phi.fast_rel_error + (n + 2) * 0x1p-52) + csum * phi.fast_abs_error;
  if (value != 0 && std::abs(value) <= noise) {
    throw PrecisionError("finite_diff: cancellation exceeds double precision at s=" +
                         std::to_string(s) + ", n=" + std::to_string(n));
  }
  return {Real(value), Real(noise), 53};
}

DiffResult finite_diff_adaptive(const ScalarFn& phi, double s, int n, double h, unsigned max_bits) {
  unsigned bits = kDefaultBits;
  for (;;) {
    try {
      return finite_diff(phi, s, n, h, bits);
    } catch (const PrecisionError&) {
      if (!phi.precise || bits * 2 > max_bits) throw;
      bits *= 2;
    }
  }
}

// ---------------------------------------------------------------- CM

namespace {

enum class Cls { ok, bad, unsure };

Cls classify(const Real& value, const Real& noise, const Real& tau) {
  if (value - noise >= -tau) return Cls::ok;
  if (value + noise < -tau) return Cls::bad;
  return Cls::unsure;
}

template <class E>
bool rethrow_as(const std::exception& e, const std::string& where) {
  if (dynamic_cast<const E*>(&e)) throw E(std::string(e.what()) + where);
  return false;
}

// Rethrows the active exception with a location suffix, keeping its type.
[[noreturn]] void rethrow_at(const std::string& where) {
  try {
    throw;
  } catch (const HorizonError&) {
    throw;
  } catch (const Error& e) {
    rethrow_as<QuadratureError>(e, where) || rethrow_as<PrecisionError>(e, where) ||
        rethrow_as<DomainError>(e, where) || rethrow_as<IntegrabilityError>(e, where) ||
        rethrow_as<NormalizationError>(e, where) || rethrow_as<ExtrapolationError>(e, where) ||
        rethrow_as<BranchError>(e, where);
    throw Error(std::string(e.what()) + where);
  }
}

// s and h on a common binary quantum so every node s + j h is exact in double.
void snap(double& s, double& h) {
  int e = std::ilogb(h) - 24;
  double q = std::ldexp(1.0, e);
  h = std::round(h / q) * q;
  s = std::round(s / q) * q;
}

}  // namespace

CMReport cm_test(const ScalarFn& phi, std::pair<double, double> interval, int n_max,
                 const CMConfig& cfg) {
  if (n_max < 1) throw DomainError("cm_test: n_max must be >= 1");
  auto [s_lo, s_hi] = interval;
  if (!(s_lo > 0) || !(s_hi > s_lo) || cfg.points < 1) throw DomainError("cm_test: bad interval");
  if (!phi.fast && !phi.precise) throw DomainError("cm_test: function has no evaluator");
  CMReport rep;
  rep.n_max = n_max;
  rep.s_lo = s_lo;
  rep.s_hi = s_hi;
  rep.cfg = cfg;
  const bool use_fast = phi.fast && !cfg.force_precise;
  const int N = n_max + 1;
  std::vector<std::vector<double>> Crow(n_max + 1);
  for (int n = 1; n <= n_max; ++n) Crow[n] = binomial_row(n);

  for (int i = 0; i < cfg.points; ++i) {
    double t = cfg.points == 1 ? 0.0 : static_cast<double>(i) / (cfg.points - 1);
    double s0 = s_lo * std::pow(s_hi / s_lo, t);
    for (double fac : cfg.step_factors) {
      double s = s0, h = fac * s0;
      snap(s, h);
      std::vector<int> pending;
      std::vector<Real> final_value(n_max + 1);
      std::vector<Cls> state(n_max + 1, Cls::unsure);
      unsigned used_bits = 53;
      try {
        if (use_fast) {
          std::vector<double> v(N);
          for (int j = 0; j < N; ++j) v[j] = phi.fast(s + j * h);
          rep.evaluations += N;
          double scale = 0;
          for (double x : v) scale = std::max(scale, std::abs(x));
          for (int n = 1; n <= n_max; ++n) {
            double val = 0, mag = 0, csum = 0;
            for (int j = 0; j <= n; ++j) {
              double tj = Crow[n][j] * v[j];
              val += (j % 2) ? -tj : tj;
              mag += std::abs(tj);
              csum += Crow[n][j];
            }
            double noise = cfg.noise_factor * (mag * (phi.fast_rel_error + (n + 2) * 0x1p-52) +
                                               csum * phi.fast_abs_error);
            double tau = cfg.tol_abs + cfg.tol_rel * scale;
            state[n] = classify(Real(val), Real(noise), Real(tau));
            final_value[n] = Real(val);
            if (state[n] == Cls::unsure) pending.push_back(n);
          }
        } else {
          for (int n = 1; n <= n_max; ++n) pending.push_back(n);
        }
        if (!pending.empty() && phi.precise) {
          for (unsigned bits = cfg.start_bits; bits <= cfg.max_bits && !pending.empty(); bits *= 2) {
            PrecisionGuard g(bits);
            used_bits = bits;
            std::vector<Real> v(N);
            Real rs(s), rh(h);
            for (int j = 0; j < N; ++j) v[j] = phi.precise(Real(rs + Real(j) * rh));
            rep.evaluations += N;
            Real scale = 0;
            for (const auto& x : v) scale = std::max(scale, Real(abs(x)));
            Real tau = Real(cfg.tol_abs) + Real(cfg.tol_rel) * scale;
            std::vector<int> still;
            for (int n : pending) {
              Real val = 0, mag = 0;
              for (int j = 0; j <= n; ++j) {
                Real tj = Real(Crow[n][j]) * v[j];
                val += (j % 2) ? Real(-tj) : tj;
                mag += abs(tj);
              }
              double loss = phi.precise_loss_bits + std::log2(n + 1.0) + 2;
              Real noise = Real(cfg.noise_factor) * mag *
                           pow2(-static_cast<int>(bits) + static_cast<int>(std::ceil(loss)));
              state[n] = classify(val, noise, tau);
              final_value[n] = val;
              if (state[n] == Cls::unsure) still.push_back(n);
            }
            pending = std::move(still);
          }
        }
      } catch (...) {
        rethrow_at(" (cm_test at s=" + std::to_string(s) + ", h=" + std::to_string(h) + ")");
      }
      rep.precision_bits = std::max(rep.precision_bits, used_bits);
      for (int n = 1; n <= n_max; ++n) {
        ++rep.checks;
        if (state[n] == Cls::unsure) ++rep.inconclusive;
        if (state[n] == Cls::bad) {
          ++rep.violations;
          rep.witnesses.push_back(
              CMWitness{s, h, n, to_double(final_value[n]), to_string(final_value[n], 8)});
        }
      }
    }
  }
  rep.verdict = rep.violations > 0 ? Verdict::fail : Verdict::pass;
  std::sort(rep.witnesses.begin(), rep.witnesses.end(), [](const CMWitness& a, const CMWitness& b) {
    return std::tie(a.s, a.h, a.n) < std::tie(b.s, b.h, b.n);
  });
  if (rep.witnesses.size() > cfg.max_witnesses) rep.witnesses.resize(cfg.max_witnesses);
  return rep;
}

nlohmann::json CMReport::to_json() const {
  nlohmann::json ws = nlohmann::json::array();
  for (const auto& w : witnesses) {
    ws.push_back({{"s", w.s}, {"h", w.h}, {"n", w.n}, {"value", w.value}, {"value_text", w.value_text}});
  }
  return {{"verdict", to_string(verdict)},
          {"n_max", n_max},
          {"witnesses", ws},
          {"violations", violations},
          {"checks", checks},
          {"inconclusive", inconclusive},
          {"evaluations", evaluations},
          {"precision_bits", precision_bits},
          {"grid",
           {{"s_lo", s_lo}, {"s_hi", s_hi}, {"points", cfg.points}, {"step_factors", cfg.step_factors}}},
          {"tolerance",
           {{"tol_abs", cfg.tol_abs},
            {"tol_rel", cfg.tol_rel},
            {"noise_factor", cfg.noise_factor},
            {"start_bits", cfg.start_bits},
            {"max_bits", cfg.max_bits}}}};
}

// ---------------------------------------------------------------- HCM

ScalarFn hyperbolic_slice_fn(const ScalarFn& phi, double u) {
  if (!(u > 0)) throw DomainError("hyperbolic slice: u must be > 0");
  ScalarFn g;
  g.label = "slice[u=" + std::to_string(u) + "," + phi.label + "]";
  if (phi.fast) {
    auto f = phi.fast;
    g.fast = [f, u](double x) {
      // v = v_of_w(2 + x) without forming 2 + x
      double v = 1 + 0.5 * x + 0.5 * std::sqrt(x * (4 + x));
      return f(u * v) * f(u / v);
    };
    // Both arguments carry a few ulps of rounding; that moves phi by
    // |s phi'(s)| times as much.
    if (phi.log_slope) {
      g.fast_rel_error = 2 * phi.fast_rel_error + 2 * (*phi.log_slope + 1) * 6e-16;
      g.fast_abs_error = 2 * phi.fast_abs_error;
    } else {
      g.fast_rel_error = 2 * phi.fast_rel_error + 4e-16;
      g.fast_abs_error = 2 * phi.fast_abs_error + 1e-15;
    }
  }
  if (phi.precise) {
    auto p = phi.precise;
    g.precise = [p, u](const Real& x) {
      Real v = 1 + x / 2 + sqrt(x * (4 + x)) / 2;
      Real ru(u);
      return Real(p(Real(ru * v)) * p(Real(ru / v)));
    };
    g.precise_loss_bits = phi.precise_loss_bits + 2;
    g.precise_cheap = phi.precise_cheap;
  }
  g.scale_hint = phi.scale_hint;
  return g;
}

namespace {

void run_refine(const ScalarFn& phi, const HCMConfig& cfg, HCMReport& rep) {
  const HcmRefine& rf = cfg.refine;
  std::pair<double, double> ur;
  if (rf.u_range) {
    ur = *rf.u_range;
  } else if (phi.scale_hint) {
    ur = *phi.scale_hint;
  } else {
    throw DomainError("hcm refinement: no u range and no scale hint");
  }
  if (!phi.precise) throw DomainError("hcm refinement needs a precise evaluator");
  if (!(ur.first > 0) || !(ur.second >= ur.first)) throw DomainError("hcm refinement: bad u range");
  if (rf.orders.empty() || rf.steps.empty() || rf.u_points < 1) return;
  rep.refine.ran = true;
  rep.refine.u_lo = ur.first;
  rep.refine.u_hi = ur.second;
  const int nmax = *std::max_element(rf.orders.begin(), rf.orders.end());
  const double noise_factor = cfg.cm.noise_factor;
  for (int iu = 0; iu < rf.u_points; ++iu) {
    double t = rf.u_points == 1 ? 0.0 : static_cast<double>(iu) / (rf.u_points - 1);
    double u = ur.first * std::pow(ur.second / ur.first, t);
    ScalarFn G = hyperbolic_slice_fn(phi, u);
    for (double h : rf.steps) {
      std::vector<int> pending = rf.orders;
      std::vector<Real> last(nmax + 1);
      for (unsigned bits = rf.start_bits; bits <= rf.max_bits && !pending.empty(); bits *= 2) {
        PrecisionGuard g(bits);
        rep.refine.precision_bits = std::max(rep.refine.precision_bits, bits);
        Real rx(rf.x0), rh(h);
        std::vector<Real> v(nmax + 1);
        for (int j = 0; j <= nmax; ++j) v[j] = G.precise(Real(rx + Real(j) * rh));
        std::vector<int> still;
        for (int n : pending) {
          auto C = binomial_row_real(n);
          Real val = 0, mag = 0;
          for (int j = 0; j <= n; ++j) {
            Real tj = C[j] * v[j];
            val += (j % 2) ? Real(-tj) : tj;
            mag += abs(tj);
          }
          double loss = G.precise_loss_bits + std::log2(n + 1.0) + 10;
          Real noise = Real(noise_factor) * mag *
                       pow2(-static_cast<int>(bits) + static_cast<int>(std::ceil(loss)));
          Cls c = classify(val, noise, Real(0));
          if (c == Cls::unsure) {
            still.push_back(n);
            continue;
          }
          ++rep.refine.checks;
          if (c == Cls::bad) {
            ++rep.refine.violations;
            rep.witnesses.push_back(
                HCMWitness{u, 2 + rf.x0, n, h, to_double(val), to_string(val, 8), true});
          }
        }
        pending = std::move(still);
      }
      rep.refine.checks += static_cast<long>(pending.size());
      rep.refine.inconclusive += static_cast<long>(pending.size());
    }
  }
}

}  // namespace

HCMReport hcm_test(const ScalarFn& phi, const HCMConfig& cfg) {
  if (cfg.u_points < 1) throw DomainError("hcm_test: need at least one u point");
  if (!(cfg.w_max > 2 + cfg.x_lo)) throw DomainError("hcm_test: w_max too small");
  HCMReport rep;
  rep.cfg = cfg;
  auto [u_lo, u_hi] = cfg.u_range;
  if (!(u_lo > 0) || !(u_hi >= u_lo)) throw DomainError("hcm_test: bad u range");
  for (int i = 0; i < cfg.u_points; ++i) {
    double t = cfg.u_points == 1 ? 0.0 : static_cast<double>(i) / (cfg.u_points - 1);
    double u = u_lo * std::pow(u_hi / u_lo, t);
    rep.u_grid.push_back(u);
    ScalarFn G = hyperbolic_slice_fn(phi, u);
    CMReport r = cm_test(G, {cfg.x_lo, cfg.w_max - 2}, cfg.n_max, cfg.cm);
    rep.violations += r.violations;
    rep.inconclusive += r.inconclusive;
    for (const auto& w : r.witnesses) {
      rep.witnesses.push_back(HCMWitness{u, 2 + w.s, w.n, w.h, w.value, w.value_text, false});
    }
    rep.per_u.push_back(std::move(r));
  }
  if (cfg.refine.enabled && !(cfg.refine.only_if_coarse_passes && rep.violations > 0)) {
    run_refine(phi, cfg, rep);
  }
  long total = rep.violations + rep.refine.violations;
  rep.verdict = total > 0 ? Verdict::fail : Verdict::pass;
  std::sort(rep.witnesses.begin(), rep.witnesses.end(), [](const HCMWitness& a, const HCMWitness& b) {
    return std::tie(a.u, a.w, a.n, a.h) < std::tie(b.u, b.w, b.n, b.h);
  });
  if (rep.witnesses.size() > cfg.cm.max_witnesses) rep.witnesses.resize(cfg.cm.max_witnesses);
  return rep;
}

nlohmann::json HCMReport::to_json() const {
  nlohmann::json ws = nlohmann::json::array();
  for (const auto& w : witnesses) {
    ws.push_back({{"u", w.u},
                  {"w", w.w},
                  {"n", w.n},
                  {"h", w.h},
                  {"value", w.value},
                  {"value_text", w.value_text},
                  {"refined", w.refined}});
  }
  nlohmann::json pu = nlohmann::json::array();
  for (std::size_t i = 0; i < per_u.size(); ++i) {
    const auto& r = per_u[i];
    pu.push_back({{"u", u_grid[i]},
                  {"verdict", to_string(r.verdict)},
                  {"checks", r.checks},
                  {"violations", r.violations},
                  {"inconclusive", r.inconclusive},
                  {"precision_bits", r.precision_bits}});
  }
  nlohmann::json j{{"verdict", to_string(verdict)},
                   {"witnesses", ws},
                   {"violations", violations + refine.violations},
                   {"inconclusive", inconclusive + refine.inconclusive},
                   {"per_u", pu},
                   {"grid",
                    {{"u_lo", cfg.u_range.first},
                     {"u_hi", cfg.u_range.second},
                     {"u_points", cfg.u_points},
                     {"w_max", cfg.w_max},
                     {"x_lo", cfg.x_lo},
                     {"n_max", cfg.n_max},
                     {"s_points", cfg.cm.points},
                     {"step_factors", cfg.cm.step_factors}}},
                   {"tolerance",
                    {{"tol_abs", cfg.cm.tol_abs},
                     {"tol_rel", cfg.cm.tol_rel},
                     {"noise_factor", cfg.cm.noise_factor},
                     {"start_bits", cfg.cm.start_bits},
                     {"max_bits", cfg.cm.max_bits}}}};
  if (refine.ran) {
    j["refine"] = {{"u_lo", refine.u_lo},
                   {"u_hi", refine.u_hi},
                   {"u_points", cfg.refine.u_points},
                   {"x0", cfg.refine.x0},
                   {"steps", cfg.refine.steps},
                   {"orders", cfg.refine.orders},
                   {"checks", refine.checks},
                   {"violations", refine.violations},
                   {"inconclusive", refine.inconclusive},
                   {"precision_bits", refine.precision_bits}};
  }
  return j;
}

}  // namespace hmggc
