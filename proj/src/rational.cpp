#include "hmggc/rational.hpp"

#include <mpfr.h>

#include <cctype>

namespace hmggc {

Real to_real(const Rational& q) {
  Real r;
  mpfr_set_q(r.backend().data(), q.backend().data(), MPFR_RNDN);
  return r;
}

Rational rational_from_string(const std::string& text) {
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  }
  if (s.empty()) throw ParseError("empty rational");
  try {
    auto slash = s.find('/');
    if (slash != std::string::npos) {
      Integer num(s.substr(0, slash)), den(s.substr(slash + 1));
      if (den == 0) throw ParseError("zero denominator in '" + text + "'");
      return Rational(num, den);
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(Integer(s));
    std::string whole = s.substr(0, dot), frac = s.substr(dot + 1);
    bool neg = !whole.empty() && whole[0] == '-';
    if (neg || (!whole.empty() && whole[0] == '+')) whole.erase(0, 1);
    if (whole.empty()) whole = "0";
    if (frac.empty()) frac = "0";
    for (char ch : whole + frac) {
      if (!std::isdigit(static_cast<unsigned char>(ch))) throw ParseError("bad rational '" + text + "'");
    }
    Integer den = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(frac.size()));
    Rational q(Integer(whole + frac), den);
    return neg ? Rational(-q) : q;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("bad rational '" + text + "'");
  }
}

std::string to_string(const Rational& q) { return q.str(); }

}  // namespace hmggc
