#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <string>

namespace hmggc {

using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

constexpr unsigned kDefaultBits = 256;

// Working precision of newly created Real values. The underlying default is
// process-global, so Real computations must stay on one thread.
class PrecisionGuard {
 public:
  explicit PrecisionGuard(unsigned bits);
  ~PrecisionGuard();
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  unsigned saved_digits_;
  unsigned saved_bits_;
};

unsigned working_bits();

// 2^-bits as a double, saturating at the smallest normal.
double ulp_bits(unsigned bits);

inline double to_double(const Real& x) { return x.convert_to<double>(); }

template <class T>
T pi_v();

template <>
inline double pi_v<double>() { return 3.141592653589793238462643383279502884; }

template <>
Real pi_v<Real>();

template <class T>
T epsilon_v();

template <>
inline double epsilon_v<double>() { return 2.220446049250313e-16; }

template <>
Real epsilon_v<Real>();

std::string to_string(const Real& x, int digits = 25);

}  // namespace hmggc
