#pragma once

#include "hmggc/real.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hmggc {

// Open support interval (lo, hi); hi may be +inf.
struct Support {
  double lo = 0.0;
  double hi = 0.0;
  bool bounded() const;
};

// Polynomial density piece c_0 + c_1 x + ... on (lo, hi), weights folded in.
struct PolyPiece {
  Real lo, hi;
  std::vector<Real> coeffs;
};

class Density;

namespace detail {

class DensityImpl {
 public:
  virtual ~DensityImpl() = default;
  virtual std::string family() const = 0;
  virtual Support support() const = 0;
  virtual double pdf(double x) const = 0;
  virtual Real pdf_real(const Real& x) const;
  // Relative error of pdf_real, beyond a constant factor, when it is not
  // evaluated to working precision. 0 means working precision.
  virtual double real_rel_error() const { return 0.0; }
  virtual std::optional<double> cdf_closed(double x) const;
  virtual std::vector<double> breakpoints() const;
  virtual double scale() const;
  virtual nlohmann::json params() const = 0;
  virtual bool has_sampler() const { return false; }
  virtual double draw(std::mt19937_64& gen) const;
  virtual std::optional<std::vector<PolyPiece>> poly_pieces() const { return std::nullopt; }
};

}  // namespace detail

class Density {
 public:
  static Density gamma(double shape, double rate);
  static Density uniform(double a, double b);
  static Density beta(double alpha, double beta);
  static Density triangular_down();
  static Density uniform_product(int k);
  static Density shifted_gamma(double shape, double rate, double shift);
  static Density power_of(const Density& base, double q);
  static Density scaled(const Density& base, double c);
  static Density tilted(const Density& base, double alpha, double delta);
  static Density indicator(double l, double r);
  // Monotone cubic (Fritsch-Carlson) through (x, y). Zero outside
  // (support_lo, support_hi); inside the support but outside the grid a query
  // is an extrapolation error. Defaults make the support the grid range.
  static Density table(std::vector<double> x, std::vector<double> y, bool normalize = false,
                       std::optional<Support> support = std::nullopt);
  static Density mixture(std::vector<std::pair<double, Density>> components);
  // Law of Y*X and of Y/X for independent Y ~ y, X ~ x.
  static Density product(const Density& y, const Density& x);
  static Density ratio(const Density& y, const Density& x);

  static Density from_json(const nlohmann::json& j);
  // JSON text, "family:p1,p2,..." shorthand, or a catalog name.
  static Density parse(std::string_view text);

  double pdf(double x) const;
  Real pdf(const Real& x) const;
  double cdf(double x) const;
  double quantile(double p) const;
  Support support() const;
  std::vector<double> breakpoints() const;
  double scale() const;
  std::string family() const;
  nlohmann::json to_json() const;
  double real_rel_error() const;
  double mass() const;
  bool has_sampler() const;
  double draw(std::mt19937_64& gen) const;
  std::optional<std::vector<PolyPiece>> poly_pieces() const;
  // Local power-law exponent g in f(x) ~ x^g as x -> 0+ (estimated when not
  // known in closed form).
  double exponent_at_zero() const;

  const detail::DensityImpl& impl() const { return *impl_; }
  explicit Density(std::shared_ptr<const detail::DensityImpl> impl);

 private:
  std::shared_ptr<const detail::DensityImpl> impl_;
  mutable std::shared_ptr<double> mass_cache_;
};

// Integral of g(x) * f(x) over the support of f, split at its breakpoints.
double integrate_against(const Density& f, const std::function<double(double)>& g,
                         double rel_tol = 1e-13);
Real integrate_against_real(const Density& f, const std::function<Real(const Real&)>& g);

// Integral of f over (lo, x] by quadrature.
double cdf_by_quadrature(const Density& f, double x);

}  // namespace hmggc
