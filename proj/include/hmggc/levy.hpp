#pragma once

#include "hmggc/density.hpp"
#include "hmggc/hyperbolic.hpp"
#include "hmggc/sampling.hpp"
#include "hmggc/transforms.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hmggc {

// ---------------------------------------------------------------- excursions

// Atomic Krein measure K = sum kappa_i delta_{z_i}, exponential clock rate p.
struct KreinAtoms {
  std::vector<std::pair<double, double>> atoms;  // (z_i, kappa_i)
  double p = 1.0;

  void validate() const;
  static KreinAtoms from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// sum kappa_i p / (z_i (z_i + p))
double psi(const KreinAtoms& K);

struct ExcursionMixing {
  Density fX;
  double psi = 0;
  std::optional<HMReport> hm2;  // hm_test(fX, 2), when requested
};

// f_X(x) = (1/psi) sum { kappa_i : 1/(z_i + p) < x <= 1/z_i }, as a mixture
// of indicator intervals.
ExcursionMixing excursion_mixing_density(const KreinAtoms& K, bool run_hm2 = true);

// (1/psi) sum kappa_i (exp(-u z_i) - exp(-u (z_i + p)))
double excursion_y3_density(const KreinAtoms& K, double u);

// n equal atoms at the midpoints of a uniform partition of [lo, hi],
// total mass `mass`: a discretized flat Krein density.
KreinAtoms smooth_krein(double lo, double hi, int n, double p = 1.0, double mass = 1.0);

// ---------------------------------------------------------------- Levy

struct LevySpec {
  enum class Kind { brownian, compound_poisson, drift_minus_subordinator };
  Kind kind = Kind::brownian;
  // brownian: xi_t = drift t + sqrt(sigma2) B_t (sigma2 = 0 allowed: pure drift)
  double sigma2 = 2.0;
  double drift = -1.0;
  // compound_poisson: xi_t = drift t + sum_{i <= N_t} log V_i, V_i ~ jump
  // drift_minus_subordinator: xi_t = drift t - sum_{i <= N_t} S_i, S_i ~ jump
  double rate = 1.0;
  std::optional<Density> jump;

  void validate() const;
  // E[xi_1] (negative for every valid spec).
  double mean_drift() const;
  static LevySpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

std::string to_string(LevySpec::Kind k);

struct SimOptions {
  double horizon = 0;  // 0: 60 / |mean_drift|
  double dt = 1e-3;    // Euler step for the brownian kind
  double tail_rel = 1e-6;
  // Share of paths allowed to end at the horizon with an unmet tail criterion.
  double max_unfinished = 1e-3;
  unsigned threads = 1;
};

// Samples of I = integral over (0, inf) of exp(xi_t) dt. Paths stop once the
// estimated remainder exp(xi_t) / |E xi_1| drops below tail_rel times the
// accumulated value. Throws HorizonError when too many paths reach the
// horizon first.
SimBatch simulate_exp_functional(const LevySpec& spec, std::size_t n, std::uint64_t seed,
                                 const SimOptions& opt = {});

// Law of I for the brownian kind: (2 / sigma2) / Gamma(2 |drift| / sigma2, 1).
Density dufresne_law(double sigma2, double drift);

// sup |F_n - F| over the sample points.
double ks_distance(const SimBatch& batch, const Density& ref);

// ---------------------------------------------------------------- ladder

struct LadderBetaSpec {
  double b = 1, c = 2, aH = 1;
  void validate() const;
};

struct LadderFactor {
  Density density;
  std::string branch;  // "beta" or "gamma"
  // min(floor(b + 1), floor(c / a_H)) on the beta branch; nullopt on the
  // gamma branch, where every order holds.
  std::optional<int> hm_order;
};

// a_H > 0: (1 / a_H) Beta(b + 1, c / a_H); a_H = 0: Gamma(b + 1, rate c).
LadderFactor ladder_factor(const LadderBetaSpec& spec);

// ---------------------------------------------------------------- GGC screen

struct GgcScreenReport {
  std::size_t samples = 0;
  double tolerance = 0;
  HCMReport hcm;
  nlohmann::json to_json() const;
};

// Empirical Laplace transform of the batch, fed to hcm_test at low order
// with a sampling-error tolerance. A smoke test only.
GgcScreenReport ggc_screen(const SimBatch& batch, int n_max = 3, int u_points = 9);

}  // namespace hmggc
