#pragma once

#include "hmggc/real.hpp"

#include <json.hpp>

#include <functional>
#include <utility>
#include <vector>

namespace hmggc {

// Generalized gamma convolution: left extremity a and Thorin measure U given
// as atoms (t_i, u_i) plus an optional density u(t).
struct ThorinSpec {
  double a = 0.0;
  std::vector<std::pair<double, double>> atoms;
  std::function<double(double)> u_density;

  // Throws DomainError on bad atoms, IntegrabilityError when the density
  // part has divergent log-moments at 0 or first inverse moment at infinity.
  void validate() const;
  nlohmann::json to_json() const;
  static ThorinSpec from_json(const nlohmann::json& j);
};

double ggc_laplace(const ThorinSpec& spec, double s);
// Atom part at working precision; a density part is evaluated in double.
Real ggc_laplace(const ThorinSpec& spec, const Real& s);

}  // namespace hmggc
