#pragma once

#include "hmggc/density.hpp"
#include "hmggc/real.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hmggc {

enum class Verdict { pass, fail };
std::string to_string(Verdict v);

// Root v >= 1 of v + 1/v = w.
double v_of_w(double w);
Real v_of_w(const Real& w);

// h(w) = f(u v) f(u / v).
double h_slice(const Density& f, double u, double w);
Real h_slice(const Density& f, const Real& u, const Real& w);

struct HMWitness {
  double u;
  double w;
  int j;          // difference order
  double margin;  // (-1)^j times the normalized j-th divided difference
};

struct HMConfig {
  int u_points = 33;
  int w_points = 65;
  double tol_abs = 1e-10;
  double tol_rel = 1e-6;
  unsigned precision_bits = 256;
  // Effective support for unbounded ends: these quantiles.
  double tail_quantile = 1e-6;
  // Explicit u range overrides the support-derived one.
  std::optional<std::pair<double, double>> u_range;
  // w - 2 runs geometrically over [w_rel_lo, w_rel_hi] times the span
  // reachable inside the effective support at each u.
  double w_rel_lo = 1e-4;
  double w_rel_hi = 2.0;
  double noise_factor = 4.0;
  std::size_t max_witnesses = 64;
};

struct HMReport {
  int order = 1;
  Verdict verdict = Verdict::pass;
  std::vector<HMWitness> witnesses;  // sorted by (u, w, j), capped
  long violations = 0;
  long checks = 0;
  long inconclusive = 0;
  bool vacuous = false;
  double u_lo = 0, u_hi = 0;
  HMConfig cfg;
  nlohmann::json to_json() const;
};

HMReport hm_test(const Density& f, int k, const HMConfig& cfg = {});

struct LogConcavityConfig {
  int points = 129;
  double tail_quantile = 1e-6;
  double tol_abs = 1e-10;
  double tol_rel = 1e-6;
  unsigned precision_bits = 256;
};

struct LogConcavityReport {
  // Concavity of x -> log f(x).
  Verdict verdict = Verdict::pass;
  // Concavity of y -> log(f(e^y) e^y), i.e. of the density of log X.
  bool log_scale_concave = true;
  // psi(x) = -x (log f)'(x) nondecreasing: the HM_1 certificate.
  bool psi_nondecreasing = true;
  std::vector<std::pair<double, double>> psi;  // (x, psi(x)) at midpoints
  std::vector<std::pair<double, double>> concavity_witnesses;  // (x, second difference)
  std::vector<std::pair<double, double>> psi_witnesses;        // (x, decrease)
  nlohmann::json to_json() const;
};

LogConcavityReport logconcavity_test(const Density& f, const LogConcavityConfig& cfg = {});

// Effective support [lo, hi] with unbounded or zero ends replaced by quantiles.
std::pair<double, double> effective_support(const Density& f, double tail_quantile);

}  // namespace hmggc
