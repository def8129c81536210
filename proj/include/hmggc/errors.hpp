#pragma once

#include <stdexcept>
#include <string>

namespace hmggc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error { using Error::Error; };
class ExtrapolationError : public Error { using Error::Error; };
class IntegrabilityError : public Error { using Error::Error; };
class NormalizationError : public Error { using Error::Error; };
class UnsupportedSampler : public Error { using Error::Error; };
class QuadratureError : public Error { using Error::Error; };
class PrecisionError : public Error { using Error::Error; };
class BranchError : public Error { using Error::Error; };
class SplitSupportError : public Error { using Error::Error; };
class DegenerateError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };

// Carries the suggested horizon so callers can retry.
class HorizonError : public Error {
 public:
  HorizonError(const std::string& what, double suggested)
      : Error(what), suggested_horizon(suggested) {}
  double suggested_horizon;
};

}  // namespace hmggc
