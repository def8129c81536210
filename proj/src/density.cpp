#include "hmggc/density.hpp"

#include "hmggc/errors.hpp"
#include "hmggc/mixtures.hpp"
#include "hmggc/quadrature.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>

namespace hmggc {

using nlohmann::json;
namespace bm = boost::math;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

double uniform01(std::mt19937_64& gen) {
  // (0, 1): 53-bit mantissa, zero rejected.
  for (;;) {
    double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

Real binom_real(unsigned n, unsigned k) {
  Real r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * Real(n - k + i) / Real(i);
  return r;
}

// Coefficients of p(x - shift) given the coefficients of p in ascending order.
std::vector<Real> shift_poly(const std::vector<Real>& c, const Real& shift) {
  std::vector<Real> out(c.size(), Real(0));
  for (size_t j = 0; j < c.size(); ++j) {
    // c_j (x - shift)^j
    Real sp = 1;
    for (size_t i = 0; i <= j; ++i) {
      // term x^{j-i} (-shift)^i C(j,i)
      out[j - i] += c[j] * binom_real(static_cast<unsigned>(j), static_cast<unsigned>(i)) * sp;
      sp *= -shift;
    }
  }
  return out;
}

// ---------------------------------------------------------------- gamma
class GammaImpl : public detail::DensityImpl {
 public:
  GammaImpl(double k, double rate, double shift = 0.0)
      : k_(k), rate_(rate), shift_(shift), lgk_(std::lgamma(k)) {
    require(k > 0 && std::isfinite(k), "gamma: shape must be > 0");
    require(rate > 0 && std::isfinite(rate), "gamma: rate must be > 0");
    require(shift >= 0 && std::isfinite(shift), "gamma: shift must be >= 0");
  }
  std::string family() const override { return shift_ > 0 ? "shifted-gamma" : "gamma"; }
  Support support() const override { return {shift_, kInf}; }
  double pdf(double x) const override {
    double y = x - shift_;
    if (!(y > 0)) return 0.0;
    return std::exp(k_ * std::log(rate_) + (k_ - 1) * std::log(y) - rate_ * y - lgk_);
  }
  Real pdf_real(const Real& x) const override {
    Real y = x - Real(shift_);
    if (!(y > 0)) return Real(0);
    Real k(k_), r(rate_);
    return exp(k * log(r) + (k - 1) * log(y) - r * y - boost::multiprecision::lgamma(k));
  }
  std::optional<double> cdf_closed(double x) const override {
    double y = x - shift_;
    if (!(y > 0)) return 0.0;
    return bm::gamma_p(k_, rate_ * y);
  }
  std::vector<double> breakpoints() const override {
    if (shift_ > 0) return {shift_};
    return {};
  }
  double scale() const override { return shift_ + std::max(k_, 1.0) / rate_; }
  json params() const override {
    json p{{"shape", k_}, {"rate", rate_}};
    if (shift_ > 0) p["shift"] = shift_;
    return p;
  }
  bool has_sampler() const override { return true; }
  double draw(std::mt19937_64& gen) const override {
    std::gamma_distribution<double> g(k_, 1.0 / rate_);
    for (;;) {
      double v = g(gen);
      if (v > 0) return shift_ + v;
    }
  }
  double k() const { return k_; }

 private:
  double k_, rate_, shift_, lgk_;
};

// ---------------------------------------------------------------- uniform
class UniformImpl : public detail::DensityImpl {
 public:
  UniformImpl(double a, double b, bool indicator) : a_(a), b_(b), indicator_(indicator) {
    require(std::isfinite(a) && std::isfinite(b), "uniform: endpoints must be finite");
    require(a >= 0 && a < b, "uniform: need 0 <= a < b");
  }
  std::string family() const override { return indicator_ ? "indicator-interval" : "uniform"; }
  Support support() const override { return {a_, b_}; }
  double pdf(double x) const override { return (x > a_ && x < b_) ? 1.0 / (b_ - a_) : 0.0; }
  Real pdf_real(const Real& x) const override {
    return (x > Real(a_) && x < Real(b_)) ? Real(1) / (Real(b_) - Real(a_)) : Real(0);
  }
  std::optional<double> cdf_closed(double x) const override {
    if (x <= a_) return 0.0;
    if (x >= b_) return 1.0;
    return (x - a_) / (b_ - a_);
  }
  std::vector<double> breakpoints() const override { return {a_, b_}; }
  double scale() const override { return b_; }
  json params() const override {
    if (indicator_) return {{"l", a_}, {"r", b_}};
    return {{"a", a_}, {"b", b_}};
  }
  bool has_sampler() const override { return true; }
  double draw(std::mt19937_64& gen) const override {
    for (;;) {
      double v = a_ + (b_ - a_) * uniform01(gen);
      if (v > a_ && v < b_ && v > 0) return v;
    }
  }
  std::optional<std::vector<PolyPiece>> poly_pieces() const override {
    PolyPiece p{Real(a_), Real(b_), {Real(1) / (Real(b_) - Real(a_))}};
    return std::vector<PolyPiece>{p};
  }

 private:
  double a_, b_;
  bool indicator_;
};

// ---------------------------------------------------------------- beta
class BetaImpl : public detail::DensityImpl {
 public:
  BetaImpl(double al, double be) : al_(al), be_(be) {
    require(al > 0 && be > 0 && std::isfinite(al) && std::isfinite(be),
            "beta: parameters must be > 0");
    lbeta_ = std::lgamma(al) + std::lgamma(be) - std::lgamma(al + be);
  }
  std::string family() const override { return "beta"; }
  Support support() const override { return {0.0, 1.0}; }
  double pdf(double x) const override {
    if (!(x > 0 && x < 1)) return 0.0;
    return std::exp((al_ - 1) * std::log(x) + (be_ - 1) * std::log1p(-x) - lbeta_);
  }
  Real pdf_real(const Real& x) const override {
    if (!(x > 0 && x < 1)) return Real(0);
    Real a(al_), b(be_);
    using boost::multiprecision::lgamma;
    Real lb = lgamma(a) + lgamma(b) - lgamma(a + b);
    return exp((a - 1) * log(x) + (b - 1) * log1p(-x) - lb);
  }
  std::optional<double> cdf_closed(double x) const override {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    return bm::ibeta(al_, be_, x);
  }
  std::vector<double> breakpoints() const override { return {0.0, 1.0}; }
  double scale() const override { return 1.0; }
  json params() const override { return {{"alpha", al_}, {"beta", be_}}; }
  bool has_sampler() const override { return true; }
  double draw(std::mt19937_64& gen) const override {
    std::gamma_distribution<double> ga(al_, 1.0), gb(be_, 1.0);
    for (;;) {
      double x = ga(gen), y = gb(gen);
      double v = x / (x + y);
      if (v > 0 && v < 1) return v;
    }
  }
  std::optional<std::vector<PolyPiece>> poly_pieces() const override {
    if (al_ != std::floor(al_) || be_ != std::floor(be_) || al_ > 40 || be_ > 40) return std::nullopt;
    unsigned m = static_cast<unsigned>(al_) - 1, n = static_cast<unsigned>(be_) - 1;
    // x^m (1-x)^n / B(al, be); 1/B = (m+n+1)! / (m! n!)
    Real invb = 1;
    for (unsigned i = 1; i <= m + n + 1; ++i) invb *= Real(i);
    for (unsigned i = 1; i <= m; ++i) invb /= Real(i);
    for (unsigned i = 1; i <= n; ++i) invb /= Real(i);
    std::vector<Real> c(m + n + 1, Real(0));
    for (unsigned i = 0; i <= n; ++i) {
      Real term = binom_real(n, i) * invb;
      if (i % 2) term = -term;
      c[m + i] += term;
    }
    return std::vector<PolyPiece>{PolyPiece{Real(0), Real(1), c}};
  }

 private:
  double al_, be_, lbeta_;
};

// ---------------------------------------------------------------- triangular-down
class TriangularImpl : public detail::DensityImpl {
 public:
  std::string family() const override { return "triangular-down"; }
  Support support() const override { return {0.0, 1.0}; }
  double pdf(double x) const override { return (x > 0 && x < 1) ? 2.0 * (1.0 - x) : 0.0; }
  Real pdf_real(const Real& x) const override {
    return (x > 0 && x < 1) ? Real(2) * (Real(1) - x) : Real(0);
  }
  std::optional<double> cdf_closed(double x) const override {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    return x * (2.0 - x);
  }
  std::vector<double> breakpoints() const override { return {0.0, 1.0}; }
  double scale() const override { return 1.0; }
  json params() const override { return json::object(); }
  bool has_sampler() const override { return true; }
  double draw(std::mt19937_64& gen) const override {
    return std::min(uniform01(gen), uniform01(gen));
  }
  std::optional<std::vector<PolyPiece>> poly_pieces() const override {
    return std::vector<PolyPiece>{PolyPiece{Real(0), Real(1), {Real(2), Real(-2)}}};
  }
};

// ---------------------------------------------------------------- uniform-product
class UniformProductImpl : public detail::DensityImpl {
 public:
  explicit UniformProductImpl(int k) : k_(k) {
    require(k >= 1, "uniform-product: count must be >= 1");
    lfact_ = std::lgamma(static_cast<double>(k));
  }
  std::string family() const override { return "uniform-product"; }
  Support support() const override { return {0.0, 1.0}; }
  double pdf(double x) const override {
    if (!(x > 0 && x < 1)) return 0.0;
    if (k_ == 1) return 1.0;
    return std::exp((k_ - 1) * std::log(-std::log(x)) - lfact_);
  }
  Real pdf_real(const Real& x) const override {
    if (!(x > 0 && x < 1)) return Real(0);
    Real l = -log(x);
    Real r = 1;
    for (int i = 1; i < k_; ++i) r = r * l / Real(i);
    return r;
  }
  std::optional<double> cdf_closed(double x) const override {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    return bm::gamma_q(static_cast<double>(k_), -std::log(x));
  }
  std::vector<double> breakpoints() const override { return {0.0, 1.0}; }
  double scale() const override { return std::ldexp(1.0, -k_); }
  json params() const override { return {{"k", k_}}; }
  bool has_sampler() const override { return true; }
  double draw(std::mt19937_64& gen) const override {
    double v = 1.0;
    for (int i = 0; i < k_; ++i) v *= uniform01(gen);
    return v;
  }
  std::optional<std::vector<PolyPiece>> poly_pieces() const override {
    if (k_ == 1) return std::vector<PolyPiece>{PolyPiece{Real(0), Real(1), {Real(1)}}};
    return std::nullopt;
  }

 private:
  int k_;
  double lfact_;
};

// ---------------------------------------------------------------- power-of
class PowerImpl : public detail::DensityImpl {
 public:
  PowerImpl(Density base, double q) : base_(std::move(base)), q_(q) {
    require(q != 0 && std::isfinite(q), "power-of: exponent must be nonzero and finite");
  }
  std::string family() const override { return "power-of"; }
  double img(double x) const {
    if (x == 0) return q_ > 0 ? 0.0 : kInf;
    if (std::isinf(x)) return q_ > 0 ? kInf : 0.0;
    return std::pow(x, q_);
  }
  Support support() const override {
    Support s = base_.support();
    double a = img(s.lo), b = img(s.hi);
    return {std::min(a, b), std::max(a, b)};
  }
  double pdf(double x) const override {
    double y = std::pow(x, 1.0 / q_);
    if (!(y > 0) || !std::isfinite(y)) return 0.0;
    double fb = base_.pdf(y);
    if (fb == 0) return 0.0;
    return fb * std::abs(1.0 / q_) * y / x;
  }
  Real pdf_real(const Real& x) const override {
    Real iq = Real(1) / Real(q_);
    Real y = pow(x, iq);
    Real fb = base_.pdf(y);
    if (fb == 0) return Real(0);
    return fb * abs(iq) * y / x;
  }
  double real_rel_error() const override { return base_.real_rel_error(); }
  std::optional<double> cdf_closed(double x) const override {
    double y = std::pow(x, 1.0 / q_);
    if (!base_.impl().cdf_closed(1.0).has_value()) return std::nullopt;
    double F = base_.cdf(y);
    return q_ > 0 ? F : 1.0 - F;
  }
  std::vector<double> breakpoints() const override {
    std::vector<double> out;
    for (double b : base_.breakpoints()) {
      double v = img(b);
      if (std::isfinite(v) && v > 0) out.push_back(v);
    }
    return out;
  }
  double scale() const override { return img(base_.scale()); }
  json params() const override { return {{"base", base_.to_json()}, {"q", q_}}; }
  bool has_sampler() const override { return true; }
  double draw(std::mt19937_64& gen) const override {
    for (;;) {
      double v = std::pow(base_.draw(gen), q_);
      if (v > 0 && std::isfinite(v)) return v;
    }
  }

 private:
  Density base_;
  double q_;
};

// ---------------------------------------------------------------- scaled
class ScaledImpl : public detail::DensityImpl {
 public:
  ScaledImpl(Density base, double c) : base_(std::move(base)), c_(c) {
    require(c > 0 && std::isfinite(c), "scaled: factor must be > 0");
  }
  std::string family() const override { return "scaled"; }
  Support support() const override {
    Support s = base_.support();
    return {s.lo * c_, s.hi * c_};
  }
  double pdf(double x) const override { return base_.pdf(x / c_) / c_; }
  Real pdf_real(const Real& x) const override { return base_.pdf(Real(x / Real(c_))) / Real(c_); }
  double real_rel_error() const override { return base_.real_rel_error(); }
  std::optional<double> cdf_closed(double x) const override {
    auto r = base_.impl().cdf_closed(x / c_);
    return r;
  }
  std::vector<double> breakpoints() const override {
    std::vector<double> out;
    for (double b : base_.breakpoints()) out.push_back(b * c_);
    return out;
  }
  double scale() const override { return base_.scale() * c_; }
  json params() const override { return {{"base", base_.to_json()}, {"c", c_}}; }
  bool has_sampler() const override { return true; }
  double draw(std::mt19937_64& gen) const override { return c_ * base_.draw(gen); }
  std::optional<std::vector<PolyPiece>> poly_pieces() const override {
    auto bp = base_.poly_pieces();
    if (!bp) return std::nullopt;
    Real c(c_);
    std::vector<PolyPiece> out;
    for (const auto& p : *bp) {
      PolyPiece q{p.lo * c, p.hi * c, {}};
      Real cp = c;  // c^{m+1}
      for (const auto& a : p.coeffs) {
        q.coeffs.push_back(a / cp);
        cp *= c;
      }
      out.push_back(std::move(q));
    }
    return out;
  }

 private:
  Density base_;
  double c_;
};

// ---------------------------------------------------------------- tilted
class TiltedImpl : public detail::DensityImpl {
 public:
  TiltedImpl(Density base, double alpha, double delta)
      : base_(std::move(base)), alpha_(alpha), delta_(delta) {
    require(alpha >= 0 && std::isfinite(alpha), "tilt: alpha must be >= 0");
    require(delta >= 0 && std::isfinite(delta), "tilt: delta must be >= 0");
    Support s = base_.support();
    if (delta_ == 0 && alpha_ > 0 && s.lo == 0) {
      double g = base_.exponent_at_zero();
      if (!(g - alpha_ > -1 + 1e-9)) {
        std::ostringstream os;
        os << "tilt: x^-" << alpha_ << " f(x) is not integrable at 0 (f ~ x^" << g << ")";
        throw IntegrabilityError(os.str());
      }
    }
    z_ = 1.0;
    double z = integrate_against(base_, [&](double x) { return weight(x); });
    if (!(z > 0) || !std::isfinite(z)) throw IntegrabilityError("tilt: normalizing constant is not finite");
    z_ = z;
    lz_ = std::log(z);
  }
  double weight(double x) const {
    double w = 1.0;
    if (alpha_ > 0) w *= std::pow(x, -alpha_);
    if (delta_ > 0) w *= std::exp(-delta_ / x);
    return w;
  }
  std::string family() const override { return "tilted"; }
  Support support() const override { return base_.support(); }
  double pdf(double x) const override {
    double fb = base_.pdf(x);
    if (fb == 0) return 0.0;
    return fb * weight(x) / z_;
  }
  Real pdf_real(const Real& x) const override {
    Real fb = base_.pdf(x);
    if (fb == 0) return Real(0);
    Real w = 1;
    if (alpha_ > 0) w *= pow(x, -Real(alpha_));
    if (delta_ > 0) w *= exp(-Real(delta_) / x);
    return fb * w / Real(z_);
  }
  double real_rel_error() const override { return base_.real_rel_error(); }
  std::vector<double> breakpoints() const override { return base_.breakpoints(); }
  double scale() const override { return base_.scale(); }
  json params() const override {
    return {{"base", base_.to_json()}, {"alpha", alpha_}, {"delta", delta_}};
  }

 private:
  Density base_;
  double alpha_, delta_, z_ = 1.0, lz_ = 0.0;
};

// ---------------------------------------------------------------- table
class TableImpl : public detail::DensityImpl {
 public:
  TableImpl(std::vector<double> x, std::vector<double> y, bool normalize, std::optional<Support> sup)
      : x_(std::move(x)), y_(std::move(y)), normalize_(normalize) {
    require(x_.size() >= 2 && x_.size() == y_.size(), "table: need >= 2 points and equal lengths");
    for (size_t i = 0; i < x_.size(); ++i) {
      require(std::isfinite(x_[i]) && std::isfinite(y_[i]), "table: non-finite entry");
      require(y_[i] >= 0, "table: negative density value");
      if (i > 0) require(x_[i] > x_[i - 1], "table: x must be strictly increasing");
    }
    require(x_[0] >= 0, "table: grid must lie in [0, inf)");
    sup_ = sup.value_or(Support{x_.front(), x_.back()});
    require(sup_.lo <= x_.front() && sup_.hi >= x_.back(), "table: support must contain the grid");
    slopes();
    double m = raw_mass();
    require(m > 0, "table: zero mass");
    if (normalize_) {
      for (double& v : y_) v /= m;
      for (double& v : d_) v /= m;
      mass_ = 1.0;
    } else {
      mass_ = m;
    }
  }
  std::string family() const override { return "table"; }
  Support support() const override { return sup_; }
  size_t locate(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    size_t i = static_cast<size_t>(it - x_.begin());
    if (i == 0) return 0;
    return std::min(i - 1, x_.size() - 2);
  }
  void check(double x) const {
    if (x < x_.front() || x > x_.back()) {
      std::ostringstream os;
      os << "table: query x=" << x << " outside grid [" << x_.front() << ", " << x_.back() << "]";
      throw ExtrapolationError(os.str());
    }
  }
  double pdf(double x) const override {
    if (!(x > sup_.lo && x < sup_.hi)) return 0.0;
    check(x);
    size_t i = locate(x);
    double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
    double t2 = t * t, t3 = t2 * t;
    double v = (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] +
               (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * d_[i + 1];
    return std::max(v, 0.0);
  }
  Real pdf_real(const Real& x) const override {
    if (!(x > Real(sup_.lo) && x < Real(sup_.hi))) return Real(0);
    check(to_double(x));
    size_t i = locate(to_double(x));
    Real h = Real(x_[i + 1]) - Real(x_[i]);
    Real t = (x - Real(x_[i])) / h;
    Real t2 = t * t, t3 = t2 * t;
    Real v = (2 * t3 - 3 * t2 + 1) * Real(y_[i]) + (t3 - 2 * t2 + t) * h * Real(d_[i]) +
             (-2 * t3 + 3 * t2) * Real(y_[i + 1]) + (t3 - t2) * h * Real(d_[i + 1]);
    return v > 0 ? v : Real(0);
  }
  std::optional<double> cdf_closed(double x) const override {
    if (x <= x_.front()) return 0.0;
    double acc = 0;
    for (size_t i = 0; i + 1 < x_.size(); ++i) {
      double h = x_[i + 1] - x_[i];
      if (x >= x_[i + 1]) {
        acc += h * (y_[i] + y_[i + 1]) / 2 + h * h * (d_[i] - d_[i + 1]) / 12;
      } else {
        double t = (x - x_[i]) / h;
        double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
        acc += h * ((t4 / 2 - t3 + t) * y_[i] + (t4 / 4 - 2 * t3 / 3 + t2 / 2) * h * d_[i] +
                    (-t4 / 2 + t3) * y_[i + 1] + (t4 / 4 - t3 / 3) * h * d_[i + 1]);
        break;
      }
    }
    return acc / mass_;
  }
  std::vector<double> breakpoints() const override { return x_; }
  double scale() const override { return 0.5 * (x_.front() + x_.back()); }
  json params() const override {
    json p{{"x", x_}, {"y", y_}, {"normalize", false}};
    if (sup_.lo != x_.front() || sup_.hi != x_.back()) {
      p["support"] = {sup_.lo, std::isinf(sup_.hi) ? json("inf") : json(sup_.hi)};
    }
    return p;
  }
  bool normalized() const { return std::abs(mass_ - 1.0) < 1e-8; }
  std::optional<std::vector<PolyPiece>> poly_pieces() const override {
    std::vector<PolyPiece> out;
    for (size_t i = 0; i + 1 < x_.size(); ++i) {
      Real h = Real(x_[i + 1]) - Real(x_[i]);
      Real del = (Real(y_[i + 1]) - Real(y_[i])) / h;
      Real c2 = (3 * del - 2 * Real(d_[i]) - Real(d_[i + 1])) / h;
      Real c3 = (Real(d_[i]) + Real(d_[i + 1]) - 2 * del) / (h * h);
      std::vector<Real> local{Real(y_[i]), Real(d_[i]), c2, c3};
      out.push_back(PolyPiece{Real(x_[i]), Real(x_[i + 1]), shift_poly(local, Real(x_[i]))});
    }
    return out;
  }

 private:
  void slopes() {
    size_t n = x_.size();
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), del(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      del[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      d_[0] = d_[1] = del[0];
      return;
    }
    for (size_t i = 1; i + 1 < n; ++i) {
      if (del[i - 1] * del[i] <= 0) {
        d_[i] = 0;
      } else {
        double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
      }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (d * d0 <= 0) return 0.0;
      if (d0 * d1 <= 0 && std::abs(d) > std::abs(3 * d0)) return 3 * d0;
      return d;
    };
    d_[0] = end_slope(h[0], h[1], del[0], del[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  }
  double raw_mass() const {
    double acc = 0;
    for (size_t i = 0; i + 1 < x_.size(); ++i) {
      double h = x_[i + 1] - x_[i];
      acc += h * (y_[i] + y_[i + 1]) / 2 + h * h * (d_[i] - d_[i + 1]) / 12;
    }
    return acc;
  }

  std::vector<double> x_, y_, d_;
  bool normalize_;
  Support sup_;
  double mass_ = 1.0;
};

// ---------------------------------------------------------------- mixture
class MixtureImpl : public detail::DensityImpl {
 public:
  explicit MixtureImpl(std::vector<std::pair<double, Density>> comps) : comps_(std::move(comps)) {
    require(!comps_.empty(), "mixture: no components");
    double tot = 0;
    for (const auto& c : comps_) {
      require(c.first >= 0 && std::isfinite(c.first), "mixture: weights must be >= 0");
      tot += c.first;
    }
    require(tot > 0, "mixture: zero total weight");
    for (auto& c : comps_) c.first /= tot;
  }
  std::string family() const override { return "mixture"; }
  Support support() const override {
    Support s{kInf, 0.0};
    for (const auto& c : comps_) {
      if (c.first == 0) continue;
      Support t = c.second.support();
      s.lo = std::min(s.lo, t.lo);
      s.hi = std::max(s.hi, t.hi);
    }
    return s;
  }
  double pdf(double x) const override {
    double acc = 0;
    for (const auto& c : comps_) {
      if (c.first > 0) acc += c.first * c.second.pdf(x);
    }
    return acc;
  }
  Real pdf_real(const Real& x) const override {
    Real acc = 0;
    for (const auto& c : comps_) {
      if (c.first > 0) acc += Real(c.first) * c.second.pdf(x);
    }
    return acc;
  }
  double real_rel_error() const override {
    double e = 0;
    for (const auto& c : comps_) e = std::max(e, c.second.real_rel_error());
    return e;
  }
  std::optional<double> cdf_closed(double x) const override {
    double acc = 0;
    for (const auto& c : comps_) {
      if (c.first == 0) continue;
      auto v = c.second.impl().cdf_closed(x);
      if (!v) return std::nullopt;
      acc += c.first * *v;
    }
    return acc;
  }
  std::vector<double> breakpoints() const override {
    std::vector<double> out;
    for (const auto& c : comps_) {
      auto b = c.second.breakpoints();
      out.insert(out.end(), b.begin(), b.end());
      Support s = c.second.support();
      out.push_back(s.lo);
      if (std::isfinite(s.hi)) out.push_back(s.hi);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  double scale() const override {
    double s = 0;
    for (const auto& c : comps_) s += c.first * c.second.scale();
    return s;
  }
  json params() const override {
    json arr = json::array();
    for (const auto& c : comps_) arr.push_back({{"weight", c.first}, {"density", c.second.to_json()}});
    return {{"components", arr}};
  }
  bool has_sampler() const override { return true; }
  double draw(std::mt19937_64& gen) const override {
    double u = uniform01(gen), acc = 0;
    for (const auto& c : comps_) {
      acc += c.first;
      if (u <= acc && c.first > 0) return c.second.draw(gen);
    }
    for (auto it = comps_.rbegin(); it != comps_.rend(); ++it) {
      if (it->first > 0) return it->second.draw(gen);
    }
    return comps_.back().second.draw(gen);
  }
  std::optional<std::vector<PolyPiece>> poly_pieces() const override {
    std::vector<PolyPiece> out;
    for (const auto& c : comps_) {
      if (c.first == 0) continue;
      auto p = c.second.poly_pieces();
      if (!p) return std::nullopt;
      for (auto q : *p) {
        for (auto& a : q.coeffs) a *= Real(c.first);
        out.push_back(std::move(q));
      }
    }
    return out;
  }

 private:
  std::vector<std::pair<double, Density>> comps_;
};

// ---------------------------------------------------------------- product / ratio
class ProductRatioImpl : public detail::DensityImpl {
 public:
  ProductRatioImpl(Density y, Density x, bool ratio) : y_(std::move(y)), x_(std::move(x)), ratio_(ratio) {}
  std::string family() const override { return ratio_ ? "ratio" : "product"; }
  Support support() const override {
    Support a = y_.support(), b = x_.support();
    if (!ratio_) return {a.lo * b.lo, a.hi * b.hi};
    double lo = std::isinf(b.hi) ? 0.0 : a.lo / b.hi;
    double hi = (b.lo == 0 || std::isinf(a.hi)) ? kInf : a.hi / b.lo;
    return {lo, hi};
  }
  // Integration range in x for a given z.
  std::pair<double, double> range(double z) const {
    Support a = y_.support(), b = x_.support();
    double lo = b.lo, hi = b.hi;
    if (!ratio_) {
      // z/x in (a.lo, a.hi)  <=>  x in (z/a.hi, z/a.lo)
      if (std::isfinite(a.hi)) lo = std::max(lo, z / a.hi);
      if (a.lo > 0) hi = std::min(hi, z / a.lo);
    } else {
      // z x in (a.lo, a.hi)  <=>  x in (a.lo/z, a.hi/z)
      lo = std::max(lo, a.lo / z);
      if (std::isfinite(a.hi)) hi = std::min(hi, a.hi / z);
    }
    return {lo, hi};
  }
  std::vector<double> inner_breaks(double z) const {
    std::vector<double> out = x_.breakpoints();
    out.push_back(x_.scale());
    std::vector<double> yb = y_.breakpoints();
    Support a = y_.support();
    yb.push_back(a.lo);
    if (std::isfinite(a.hi)) yb.push_back(a.hi);
    // Where the bulk of y lands, so a far-out z still resolves it.
    for (double m : {1.0, 10.0, 100.0}) yb.push_back(m * y_.scale());
    for (double b : yb) {
      if (!(b > 0) || !std::isfinite(b)) continue;
      out.push_back(ratio_ ? b / z : z / b);
    }
    return out;
  }
  double pdf(double z) const override {
    auto [lo, hi] = range(z);
    if (!(hi > lo)) return 0.0;
    // The product kernel f_Y(z/x) f_X(x) / x overflows for tiny z; written as
    // arg f_Y(arg) f_X(x) / z it stays finite, with the 1/z applied at the end.
    auto g = [&](double x) {
      double fx = x_.pdf(x);
      if (fx == 0) return 0.0;
      double arg = ratio_ ? z * x : z / x;
      if (!(arg > 0) || !std::isfinite(arg)) return 0.0;
      return ratio_ ? x * y_.pdf(arg) * fx : arg * y_.pdf(arg) * fx;
    };
    double sc = x_.scale();
    quad::Options o;
    o.rel_tol = 1e-13;
    auto r = quad::integrate<double>(g, lo, hi, inner_breaks(z), sc, o);
    return std::max(ratio_ ? r.value : r.value / z, 0.0);
  }
  double real_rel_error() const override { return 1e-12; }
  std::optional<double> cdf_closed(double z) const override {
    if (!y_.impl().cdf_closed(1.0)) return std::nullopt;
    Support b = x_.support();
    auto g = [&](double x) {
      double fx = x_.pdf(x);
      if (fx == 0) return 0.0;
      double arg = ratio_ ? z * x : z / x;
      if (!(arg > 0)) return 0.0;
      if (!std::isfinite(arg)) return fx;
      return y_.cdf(arg) * fx;
    };
    auto r = quad::integrate<double>(g, b.lo, b.hi, inner_breaks(z), x_.scale());
    return std::clamp(r.value, 0.0, 1.0);
  }
  std::vector<double> breakpoints() const override {
    std::vector<double> yb = y_.breakpoints(), xb = x_.breakpoints();
    Support a = y_.support(), b = x_.support();
    yb.push_back(a.lo);
    yb.push_back(a.hi);
    xb.push_back(b.lo);
    xb.push_back(b.hi);
    std::vector<double> out;
    for (double u : yb) {
      for (double v : xb) {
        if (!(u > 0) || !(v > 0) || !std::isfinite(u) || !std::isfinite(v)) continue;
        out.push_back(ratio_ ? u / v : u * v);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  double scale() const override { return ratio_ ? y_.scale() / x_.scale() : y_.scale() * x_.scale(); }
  json params() const override { return {{"left", y_.to_json()}, {"right", x_.to_json()}}; }
  bool has_sampler() const override { return true; }
  double draw(std::mt19937_64& gen) const override {
    for (;;) {
      double a = y_.draw(gen), b = x_.draw(gen);
      double v = ratio_ ? a / b : a * b;
      if (v > 0 && std::isfinite(v)) return v;
    }
  }
  const Density& left() const { return y_; }
  const Density& right() const { return x_; }

 private:
  Density y_, x_;
  bool ratio_;
};

double num(const json& p, const char* key) {
  if (!p.contains(key)) throw ParseError(std::string("missing parameter '") + key + "'");
  const json& v = p.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s == "inf" || s == "Infinity") return kInf;
  }
  throw ParseError(std::string("parameter '") + key + "' must be a number");
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t pos = 0;
      double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw ParseError("bad number '" + tok + "'");
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw ParseError("bad number '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- DensityImpl defaults
namespace detail {
Real DensityImpl::pdf_real(const Real& x) const { return Real(pdf(to_double(x))); }
std::optional<double> DensityImpl::cdf_closed(double) const { return std::nullopt; }
std::vector<double> DensityImpl::breakpoints() const { return {}; }
double DensityImpl::scale() const {
  Support s = support();
  if (std::isfinite(s.hi)) return 0.5 * (s.lo + s.hi);
  return std::max(1.0, 2 * s.lo);
}
double DensityImpl::draw(std::mt19937_64&) const {
  throw UnsupportedSampler("no direct sampler for family " + family());
}
}  // namespace detail

bool Support::bounded() const { return std::isfinite(hi); }

Density::Density(std::shared_ptr<const detail::DensityImpl> impl)
    : impl_(std::move(impl)), mass_cache_(std::make_shared<double>(std::nan(""))) {}

Density Density::gamma(double shape, double rate) {
  return Density(std::make_shared<GammaImpl>(shape, rate));
}
Density Density::uniform(double a, double b) {
  return Density(std::make_shared<UniformImpl>(a, b, false));
}
Density Density::beta(double alpha, double beta) {
  return Density(std::make_shared<BetaImpl>(alpha, beta));
}
Density Density::triangular_down() { return Density(std::make_shared<TriangularImpl>()); }
Density Density::uniform_product(int k) { return Density(std::make_shared<UniformProductImpl>(k)); }
Density Density::shifted_gamma(double shape, double rate, double shift) {
  require(shift > 0, "shifted-gamma: shift must be > 0");
  return Density(std::make_shared<GammaImpl>(shape, rate, shift));
}
Density Density::power_of(const Density& base, double q) {
  return Density(std::make_shared<PowerImpl>(base, q));
}
Density Density::scaled(const Density& base, double c) {
  return Density(std::make_shared<ScaledImpl>(base, c));
}
Density Density::tilted(const Density& base, double alpha, double delta) {
  return Density(std::make_shared<TiltedImpl>(base, alpha, delta));
}
Density Density::indicator(double l, double r) {
  return Density(std::make_shared<UniformImpl>(l, r, true));
}
Density Density::table(std::vector<double> x, std::vector<double> y, bool normalize,
                       std::optional<Support> support) {
  return Density(std::make_shared<TableImpl>(std::move(x), std::move(y), normalize, support));
}
Density Density::mixture(std::vector<std::pair<double, Density>> components) {
  return Density(std::make_shared<MixtureImpl>(std::move(components)));
}
Density Density::product(const Density& y, const Density& x) {
  return Density(std::make_shared<ProductRatioImpl>(y, x, false));
}
Density Density::ratio(const Density& y, const Density& x) {
  return Density(std::make_shared<ProductRatioImpl>(y, x, true));
}

double Density::pdf(double x) const {
  if (!(x > 0) || std::isnan(x)) {
    std::ostringstream os;
    os << "density evaluated at x=" << x << " (need x > 0)";
    throw DomainError(os.str());
  }
  return impl_->pdf(x);
}

Real Density::pdf(const Real& x) const {
  if (!(x > 0)) throw DomainError("density evaluated at x <= 0");
  return impl_->pdf_real(x);
}

double Density::cdf(double x) const {
  Support s = support();
  if (x <= s.lo) return 0.0;
  if (x >= s.hi) return 1.0;
  if (auto c = impl_->cdf_closed(x)) return *c;
  return cdf_by_quadrature(*this, x);
}

double Density::quantile(double p) const {
  if (!(p > 0 && p < 1)) throw DomainError("quantile: p must lie in (0, 1)");
  Support s = support();
  double lo = s.lo, hi = s.hi;
  if (std::isinf(hi)) {
    hi = std::max(scale(), s.lo + 1.0);
    while (cdf(hi) < p) {
      lo = hi;
      hi *= 2;
      if (hi > 1e300) throw DomainError("quantile: bracket failed");
    }
  }
  if (lo == 0) {
    double x = std::min(hi, scale());
    bool halved = false;
    while (x > 1e-300 && cdf(x) >= p) x *= 0.5, halved = true;
    if (x <= 1e-300) return x;
    lo = x;
    if (halved) hi = std::min(hi, 2 * x);
  }
  for (int it = 0; it < 400; ++it) {
    double mid = (lo > 0 && hi / lo > 4) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * std::abs(hi)) break;
  }
  return 0.5 * (lo + hi);
}

Support Density::support() const { return impl_->support(); }

std::vector<double> Density::breakpoints() const {
  std::vector<double> b = impl_->breakpoints();
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

double Density::scale() const { return impl_->scale(); }
std::string Density::family() const { return impl_->family(); }
double Density::real_rel_error() const { return impl_->real_rel_error(); }

json Density::to_json() const { return {{"family", family()}, {"params", impl_->params()}}; }

double Density::mass() const {
  if (std::isnan(*mass_cache_)) {
    *mass_cache_ = integrate_against(*this, [](double) { return 1.0; });
  }
  return *mass_cache_;
}

bool Density::has_sampler() const {
  if (auto t = dynamic_cast<const TableImpl*>(impl_.get())) return t->normalized();
  return true;
}

double Density::draw(std::mt19937_64& gen) const {
  if (auto t = dynamic_cast<const TableImpl*>(impl_.get())) {
    if (!t->normalized()) throw UnsupportedSampler("table density is not normalized; it has no CDF to invert");
  }
  if (impl_->has_sampler()) return impl_->draw(gen);
  return quantile(uniform01(gen));
}

std::optional<std::vector<PolyPiece>> Density::poly_pieces() const { return impl_->poly_pieces(); }

double Density::exponent_at_zero() const {
  Support s = support();
  if (s.lo > 0) return kInf;
  if (auto g = dynamic_cast<const GammaImpl*>(impl_.get())) return g->k() - 1;
  double sc = scale();
  double x1 = 1e-9 * sc, x2 = 1e-7 * sc;
  double f1 = pdf(x1), f2 = pdf(x2);
  if (f1 == 0 && f2 == 0) return kInf;
  if (f1 == 0 || f2 == 0) return kInf;
  return std::log(f1 / f2) / std::log(x1 / x2);
}

double integrate_against(const Density& f, const std::function<double(double)>& g, double rel_tol) {
  Support s = f.support();
  quad::Options o;
  o.rel_tol = rel_tol;
  auto h = [&](double x) {
    double v = f.pdf(x);
    return v == 0 ? 0.0 : v * g(x);
  };
  return quad::integrate<double>(h, s.lo, s.hi, f.breakpoints(), f.scale(), o).value;
}

Real integrate_against_real(const Density& f, const std::function<Real(const Real&)>& g) {
  Support s = f.support();
  quad::Options o;
  o.tol_bits = working_bits() > 24 ? working_bits() - 16 : 8;
  o.max_levels = 14;
  auto h = [&](const Real& x) {
    Real v = f.pdf(x);
    return v == 0 ? Real(0) : Real(v * g(x));
  };
  return quad::integrate<Real>(h, s.lo, s.hi, f.breakpoints(), f.scale(), o).value;
}

double cdf_by_quadrature(const Density& f, double x) {
  Support s = f.support();
  if (x <= s.lo) return 0.0;
  if (x >= s.hi) return 1.0;
  std::vector<double> b;
  for (double v : f.breakpoints()) {
    if (v < x) b.push_back(v);
  }
  quad::Options o;
  o.rel_tol = 1e-12;
  auto h = [&](double t) { return f.pdf(t); };
  double lower = quad::integrate<double>(h, s.lo, x, b, f.scale(), o).value;
  return std::clamp(lower / f.mass(), 0.0, 1.0);
}

// ---------------------------------------------------------------- JSON
Density Density::from_json(const json& j) {
  if (j.is_string()) return parse(j.get<std::string>());
  if (!j.is_object() || !j.contains("family")) throw ParseError("density JSON needs a 'family' field");
  std::string fam = j.at("family").get<std::string>();
  json p = j.value("params", json::object());
  if (!p.is_object()) throw ParseError("'params' must be an object");
  if (fam == "gamma") return gamma(num(p, "shape"), p.contains("rate") ? num(p, "rate") : 1.0);
  if (fam == "uniform") return uniform(num(p, "a"), num(p, "b"));
  if (fam == "beta") return beta(num(p, "alpha"), num(p, "beta"));
  if (fam == "triangular-down") return triangular_down();
  if (fam == "uniform-product") {
    double k = num(p, "k");
    if (k != std::floor(k)) throw DomainError("uniform-product: k must be an integer");
    return uniform_product(static_cast<int>(k));
  }
  if (fam == "shifted-gamma") return shifted_gamma(num(p, "shape"), num(p, "rate"), num(p, "shift"));
  if (fam == "power-of") return power_of(from_json(p.at("base")), num(p, "q"));
  if (fam == "scaled") return scaled(from_json(p.at("base")), num(p, "c"));
  if (fam == "tilted") {
    return tilted(from_json(p.at("base")), p.contains("alpha") ? num(p, "alpha") : 0.0,
                  p.contains("delta") ? num(p, "delta") : 0.0);
  }
  if (fam == "indicator-interval") return indicator(num(p, "l"), num(p, "r"));
  if (fam == "table") {
    auto x = p.at("x").get<std::vector<double>>();
    auto y = p.at("y").get<std::vector<double>>();
    std::optional<Support> sup;
    if (p.contains("support")) {
      const json& s = p.at("support");
      if (!s.is_array() || s.size() != 2) throw ParseError("table support must be [lo, hi]");
      auto val = [](const json& v) {
        if (v.is_string()) return kInf;
        return v.get<double>();
      };
      sup = Support{val(s[0]), val(s[1])};
    }
    return table(std::move(x), std::move(y), p.value("normalize", false), sup);
  }
  if (fam == "mixture") {
    std::vector<std::pair<double, Density>> comps;
    for (const auto& c : p.at("components")) comps.emplace_back(num(c, "weight"), from_json(c.at("density")));
    return mixture(std::move(comps));
  }
  if (fam == "product") return product(from_json(p.at("left")), from_json(p.at("right")));
  if (fam == "ratio") return ratio(from_json(p.at("left")), from_json(p.at("right")));
  if (fam == "catalog") return catalog(p.at("name").get<std::string>()).construction;
  throw ParseError("unknown density family '" + fam + "'");
}

Density Density::parse(std::string_view text) {
  std::string s(text);
  auto first = s.find_first_not_of(" \t\n");
  if (first == std::string::npos) throw ParseError("empty density argument");
  if (s[first] == '{') {
    json j;
    try {
      j = json::parse(s);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed density JSON: ") + e.what());
    }
    try {
      return from_json(j);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad density JSON: ") + e.what());
    }
  }
  if (is_catalog_name(s)) return catalog(s).construction;
  std::string fam = s, args;
  if (auto c = s.find(':'); c != std::string::npos) {
    fam = s.substr(0, c);
    args = s.substr(c + 1);
  }
  std::vector<double> a = args.empty() ? std::vector<double>{} : split_numbers(args);
  auto need = [&](size_t n) {
    if (a.size() != n) throw ParseError("shorthand '" + fam + "' expects " + std::to_string(n) + " numbers");
  };
  if (fam == "gamma") {
    if (a.size() == 1) a.push_back(1.0);
    need(2);
    return gamma(a[0], a[1]);
  }
  if (fam == "uniform") {
    if (a.empty()) a = {0.0, 1.0};
    need(2);
    return uniform(a[0], a[1]);
  }
  if (fam == "beta") {
    need(2);
    return beta(a[0], a[1]);
  }
  if (fam == "triangular-down" || fam == "triangular") {
    need(0);
    return triangular_down();
  }
  if (fam == "uniform-product") {
    need(1);
    if (a[0] != std::floor(a[0])) throw DomainError("uniform-product: k must be an integer");
    return uniform_product(static_cast<int>(a[0]));
  }
  if (fam == "shifted-gamma") {
    need(3);
    return shifted_gamma(a[0], a[1], a[2]);
  }
  if (fam == "indicator-interval" || fam == "indicator") {
    need(2);
    return indicator(a[0], a[1]);
  }
  throw ParseError("cannot parse density '" + s + "'");
}

}  // namespace hmggc
