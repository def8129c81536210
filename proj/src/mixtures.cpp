#include "hmggc/mixtures.hpp"

#include "hmggc/errors.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <mpfr.h>

#include <cmath>
#include <iomanip>

namespace hmggc {

Density MixtureSpec::density() const {
  return op == MixOp::product ? Density::product(left, right) : Density::ratio(left, right);
}

double product_density(const Density& fY, const Density& fX, double z) {
  if (!(z > 0)) throw DomainError("product_density: z must be > 0");
  return Density::product(fY, fX).pdf(z);
}

double ratio_density(const Density& fY, const Density& fX, double z) {
  if (!(z > 0)) throw DomainError("ratio_density: z must be > 0");
  return Density::ratio(fY, fX).pdf(z);
}

double expint_e1(double x) {
  if (!(x > 0)) throw DomainError("E1: x must be > 0");
  return boost::math::expint(1, x);
}

namespace {

// Closed forms are evaluated with guard bits; several of them cancel.
template <class F>
Real guarded(const Real& s, F f) {
  unsigned bits = working_bits();
  Real out;
  {
    PrecisionGuard g(bits + 96);
    Real sx(s);
    sx.precision(Real::default_precision());
    out = f(sx);
  }
  Real r(out);
  r.precision(Real::default_precision());
  return r;
}

double lt_yu(double s) {
  if (s == 0) return 1.0;
  return std::log1p(s) / s;
}
double lt_yu_over(double s) {
  if (s == 0) return 1.0;
  return 1.0 + s * std::log(s / (1.0 + s));
}
double lt_yx2(double s) {
  if (s == 0) return 1.0;
  if (s < 0.1) {
    double acc = 0, p = 1;
    for (int n = 1; n < 40; ++n) {
      acc += ((n % 2) ? 1.0 : -1.0) * p / (n + 1);
      p *= s;
    }
    return 2 * acc;
  }
  return (2 / s) * (1 - std::log1p(s) / s);
}
double lt_y_over_x2(double s) {
  if (s == 0) return 1.0;
  if (s > 50) {
    // 1 + 6s - (6s^2 + 4s) log1p(1/s), expanded in 1/s
    double r = 1 / s, acc = 0;
    // log1p(r) = sum (-1)^{n+1} r^n / n
    // (6s^2+4s) log1p(r) = 6 sum (-1)^{n+1} r^{n-2}/n + 4 sum (-1)^{n+1} r^{n-1}/n
    for (int n = 3; n < 60; ++n) {
      double sgn = (n % 2) ? 1.0 : -1.0;
      acc += sgn * (6.0 / n) * std::pow(r, n - 2);
    }
    for (int n = 2; n < 60; ++n) {
      double sgn = (n % 2) ? 1.0 : -1.0;
      acc += sgn * (4.0 / n) * std::pow(r, n - 1);
    }
    // n=1,2 of the 6-series and n=1 of the 4-series: 6s - 3 + 4 = 6s + 1
    return -acc;
  }
  return 1 + 6 * s + (6 * s * s + 4 * s) * std::log(s / (1 + s));
}

double pdf_yu(double x) { return expint_e1(x); }
double pdf_yu_over(double x) {
  if (x < 0.5) {
    double acc = 0, fact = 2, p = 1;
    for (int n = 2; n < 30; ++n) {
      if (n > 2) fact *= n;
      acc += ((n % 2) ? -1.0 : 1.0) * (n - 1) / fact * p;
      p *= x;
    }
    return acc;
  }
  return (1 - (1 + x) * std::exp(-x)) / (x * x);
}
double pdf_yx2(double x) { return 2 * std::exp(-x) - 2 * x * expint_e1(x); }
double pdf_y_over_x2(double x) {
  if (x < 1.0) {
    // sum over n >= 3 of c_n x^{n-3}, c_n the coefficient of x^n in (2x^2+8x+12) e^{-x}
    double acc = 0, p = 1;
    double f_n = 6, f_n1 = 2, f_n2 = 1;  // n!, (n-1)!, (n-2)! at n = 3
    for (int n = 3; n < 40; ++n) {
      if (n > 3) {
        f_n2 = f_n1;
        f_n1 = f_n;
        f_n *= n;
      }
      double s = (n % 2) ? -1.0 : 1.0;
      double c = 12 * s / f_n - 8 * s / f_n1 + 2 * s / f_n2;
      acc += c * p;
      p *= x;
    }
    return acc;
  }
  double e = x < 800 ? (2 * x * x + 8 * x + 12) * std::exp(-x) : 0.0;
  return (4 - 12 / x + e / x) / (x * x);
}

}  // namespace

bool is_catalog_name(const std::string& name) {
  return name == "YU" || name == "Y/U" || name == "YX2" || name == "Y/X2";
}

std::vector<std::string> catalog_names() { return {"YU", "Y/U", "YX2", "Y/X2"}; }

CatalogEntry catalog(const std::string& name) {
  Density g1 = Density::gamma(1, 1), g2 = Density::gamma(2, 1);
  Density u = Density::uniform(0, 1), tri = Density::triangular_down();
  std::function<double(double)> lt, pdf;
  std::function<Real(const Real&)> lt_real;
  MixOp op;
  bool second = false;
  if (name == "YU") {
    lt = lt_yu;
    lt_real = [](const Real& s) {
      if (s == 0) return Real(1);
      return guarded(s, [](const Real& x) { return Real(log1p(x) / x); });
    };
    pdf = pdf_yu;
    op = MixOp::product;
  } else if (name == "Y/U") {
    lt = lt_yu_over;
    lt_real = [](const Real& s) {
      if (s == 0) return Real(1);
      return guarded(s, [](const Real& x) { return Real(1 + x * log(x / (1 + x))); });
    };
    pdf = pdf_yu_over;
    op = MixOp::ratio;
  } else if (name == "YX2") {
    lt = lt_yx2;
    lt_real = [](const Real& s) {
      if (s == 0) return Real(1);
      return guarded(s, [](const Real& x) { return Real((2 / x) * (1 - log1p(x) / x)); });
    };
    pdf = pdf_yx2;
    op = MixOp::product;
    second = true;
  } else if (name == "Y/X2") {
    lt = lt_y_over_x2;
    lt_real = [](const Real& s) {
      if (s == 0) return Real(1);
      return guarded(s, [](const Real& x) {
        return Real(1 + 6 * x + (6 * x * x + 4 * x) * log(x / (1 + x)));
      });
    };
    pdf = pdf_y_over_x2;
    op = MixOp::ratio;
    second = true;
  } else {
    throw ParseError("unknown catalog entry '" + name + "' (expected YU, Y/U, YX2 or Y/X2)");
  }
  MixtureSpec spec = second ? MixtureSpec{g2, tri, op} : MixtureSpec{g1, u, op};
  return CatalogEntry{name, lt, lt_real, pdf, spec, spec.density()};
}

Density tilt(const Density& f, double alpha, double delta) {
  if (alpha == 0 && delta == 0) return f;
  return Density::tilted(f, alpha, delta);
}

Density tabulate(const Density& f, const std::vector<double>& grid) {
  std::vector<double> y;
  y.reserve(grid.size());
  for (double x : grid) y.push_back(x > 0 ? f.pdf(x) : 0.0);
  return Density::table(grid, y, false);
}

void write_csv(std::ostream& os, const Density& f, const std::vector<double>& grid) {
  os << "x,f\n";
  os << std::setprecision(17);
  for (double x : grid) os << x << ',' << f.pdf(x) << '\n';
}

}  // namespace hmggc
