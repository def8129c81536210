#pragma once

#include "hmggc/hyperbolic.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace hmggc {

// Randomized checks of the J_k identities at rational points
// a, b in [1.01, 10], t in [0.1, 10] (denominator 100).
//   eq2eq3      quadrature vs exact partial fractions, |diff| <= 1e-10 (1 + |J|)
//   eq4         k-th central difference of the closed form vs the closed
//               derivative (rel 1e-6), plus the exact reduction to a constant
//   pq-table    interpolated P_k, Q_k vs the printed table (k <= 3), exact
//   gf          d/dz log R (rel 1e-10) at random z, and J_1..J_k from GF
//               derivatives vs quadrature (rel 1e-8)
//   asymptotic  T^k J_k at t = 1e4 within 1% of B(k,k) (b - 1/b)^(2k-1),
//               b in {1.5, 2, 4}
//   cm-real-k   cm_sweep over a in {1.5, 2, 3, 5, 10}, b in {1.25, 1.5, 2, 3, 5}
struct SuiteOptions {
  std::string identity = "eq2eq3";
  double k = 1;
  int trials = 100;
  std::uint64_t seed = 1;
  int n_max = 6;  // cm-real-k only
};

struct SuiteReport {
  SuiteOptions options;
  Verdict verdict = Verdict::pass;
  long checks = 0;
  long failures = 0;
  double tolerance = 0;
  double worst = 0;  // largest error / tolerance over all checks
  nlohmann::json witnesses = nlohmann::json::array();
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json to_json() const;
};

std::vector<std::string> identity_names();
SuiteReport run_identity_suite(const SuiteOptions& opt);

}  // namespace hmggc
