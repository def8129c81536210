#include "hmggc/thorin.hpp"

#include "hmggc/errors.hpp"
#include "hmggc/quadrature.hpp"

#include <cmath>
#include <limits>

namespace hmggc {

namespace {

double density_part(const ThorinSpec& spec, double s) {
  if (!spec.u_density || s == 0) return 0.0;
  auto g = [&](double t) {
    double u = spec.u_density(t);
    if (u == 0) return 0.0;
    if (u < 0 || !std::isfinite(u)) throw DomainError("Thorin density must be finite and >= 0");
    return -std::log1p(s / t) * u;
  };
  try {
    auto r = quad::integrate<double>(g, 0.0, std::numeric_limits<double>::infinity(), {1.0}, 1.0);
    if (!std::isfinite(r.value)) throw IntegrabilityError("Thorin density part diverges");
    return r.value;
  } catch (const QuadratureError& e) {
    throw IntegrabilityError(std::string("Thorin density part diverges: ") + e.what());
  }
}

}  // namespace

void ThorinSpec::validate() const {
  if (!(a >= 0) || !std::isfinite(a)) throw DomainError("Thorin: left extremity must be >= 0");
  for (const auto& [t, u] : atoms) {
    if (!(t > 0) || !std::isfinite(t)) throw DomainError("Thorin: atom location must be > 0");
    if (!(u > 0) || !std::isfinite(u)) throw DomainError("Thorin: atom mass must be > 0");
  }
  if (!u_density) return;
  const double inf = std::numeric_limits<double>::infinity();
  auto near0 = [&](double t) { return -std::log(t) * u_density(t); };
  auto tail = [&](double t) { return u_density(t) / t; };
  try {
    double i0 = quad::integrate<double>(near0, 0.0, 1.0).value;
    double i1 = quad::integrate<double>(tail, 1.0, inf, {}, 1.0).value;
    if (!std::isfinite(i0) || !std::isfinite(i1) || i0 > 1e12 || i1 > 1e12) {
      throw IntegrabilityError("Thorin density: log-moment at 0 or 1/t moment at infinity diverges");
    }
  } catch (const QuadratureError& e) {
    throw IntegrabilityError(std::string("Thorin density: integrability check failed: ") + e.what());
  }
}

nlohmann::json ThorinSpec::to_json() const {
  nlohmann::json at = nlohmann::json::array();
  for (const auto& [t, u] : atoms) at.push_back({t, u});
  nlohmann::json j{{"a", a}, {"atoms", at}};
  if (u_density) j["u_density"] = "<function>";
  return j;
}

ThorinSpec ThorinSpec::from_json(const nlohmann::json& j) {
  ThorinSpec s;
  try {
    s.a = j.value("a", 0.0);
    if (j.contains("atoms")) {
      for (const auto& p : j.at("atoms")) {
        if (!p.is_array() || p.size() != 2) throw ParseError("Thorin atoms must be [t, u] pairs");
        s.atoms.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad Thorin JSON: ") + e.what());
  }
  s.validate();
  return s;
}

double ggc_laplace(const ThorinSpec& spec, double s) {
  if (!(s >= 0)) throw DomainError("ggc_laplace: s must be >= 0");
  for (const auto& [t, u] : spec.atoms) {
    if (!(t > 0) || !(u > 0)) throw DomainError("Thorin: atoms need t > 0 and u > 0");
  }
  if (s == 0) return 1.0;
  double e = -spec.a * s;
  for (const auto& [t, u] : spec.atoms) e -= u * std::log1p(s / t);
  e += density_part(spec, s);
  return std::exp(e);
}

Real ggc_laplace(const ThorinSpec& spec, const Real& s) {
  if (!(s >= 0)) throw DomainError("ggc_laplace: s must be >= 0");
  if (s == 0) return Real(1);
  Real e = -Real(spec.a) * s;
  for (const auto& [t, u] : spec.atoms) e -= Real(u) * log1p(s / Real(t));
  if (spec.u_density) e += Real(density_part(spec, to_double(s)));
  return exp(e);
}

}  // namespace hmggc
