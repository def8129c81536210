#include "hmggc/real.hpp"

#include <mpfr.h>

#include <cmath>
#include <sstream>

namespace hmggc {
namespace {
unsigned g_bits = kDefaultBits;

unsigned bits_to_digits10(unsigned bits) {
  return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1;
}

struct DefaultInit {
  DefaultInit() { Real::default_precision(bits_to_digits10(kDefaultBits)); }
} g_init;
}  // namespace

PrecisionGuard::PrecisionGuard(unsigned bits)
    : saved_digits_(Real::default_precision()), saved_bits_(g_bits) {
  g_bits = bits;
  Real::default_precision(bits_to_digits10(bits));
}

PrecisionGuard::~PrecisionGuard() {
  Real::default_precision(saved_digits_);
  g_bits = saved_bits_;
}

unsigned working_bits() { return g_bits; }

double ulp_bits(unsigned bits) {
  if (bits >= 1020) return 2.2250738585072014e-308;
  return std::ldexp(1.0, -static_cast<int>(bits));
}

template <>
Real pi_v<Real>() {
  Real r;
  mpfr_const_pi(r.backend().data(), MPFR_RNDN);
  return r;
}

template <>
Real epsilon_v<Real>() {
  Real r = 1;
  mpfr_mul_2si(r.backend().data(), r.backend().data(), -static_cast<long>(g_bits), MPFR_RNDN);
  return r;
}

std::string to_string(const Real& x, int digits) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

}  // namespace hmggc
