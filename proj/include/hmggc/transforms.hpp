#pragma once

#include "hmggc/density.hpp"
#include "hmggc/hyperbolic.hpp"
#include "hmggc/real.hpp"
#include "hmggc/thorin.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hmggc {

// A scalar function of s > 0 with a double evaluator and, optionally, an
// evaluator at the current working precision.
struct ScalarFn {
  std::string label;
  std::function<double(double)> fast;
  // Error model for `fast`: |err| <= fast_rel_error |phi| + fast_abs_error.
  double fast_rel_error = 1e-13;
  double fast_abs_error = 0.0;
  // Bound on |s phi'(s) / phi(s)|, used to price argument rounding.
  std::optional<double> log_slope;
  std::function<Real(const Real&)> precise;
  // `precise` is accurate to about working_bits() - precise_loss_bits bits.
  double precise_loss_bits = 8;
  // Cheap enough for thousands of evaluations at several thousand bits.
  bool precise_cheap = false;
  // Where the structure of phi lives (e.g. the support of a mixing law).
  std::optional<std::pair<double, double>> scale_hint;

  double operator()(double s) const;
  Real eval(const Real& s) const;
};

// ---------------------------------------------------------------- transforms

// Integral of exp(-s x) f(x). Throws NormalizationError if f is not a pdf.
double laplace(const Density& f, double s);
Real laplace_real(const Density& f, const Real& s);

// Integral of (x / (x + s))^k f(x); k > 0 may be fractional.
double stieltjes_k(const Density& f, double k, double s);
Real stieltjes_k_real(const Density& f, double k, const Real& s);

// Integral of (1 + s x)^-k f(x).
double product_lt(const Density& f, double k, double s);
Real product_lt_real(const Density& f, double k, const Real& s);

ScalarFn laplace_fn(const Density& f);
ScalarFn stieltjes_fn(const Density& f, double k);
ScalarFn product_lt_fn(const Density& f, double k);
ScalarFn ggc_fn(const ThorinSpec& spec);
ScalarFn catalog_lt_fn(const std::string& name);

// ---------------------------------------------------------------- differences

struct DiffResult {
  Real value;      // forward difference sum_j (-1)^(n-j) C(n,j) phi(s + j h)
  Real noise;      // bound on the rounding error of value
  unsigned bits;   // working precision used (53 for the double path)
};

// Throws PrecisionError when the cancellation exceeds the available bits.
DiffResult finite_diff(const ScalarFn& phi, double s, int n, double h, unsigned bits = kDefaultBits);
// Retries with doubled precision up to max_bits.
DiffResult finite_diff_adaptive(const ScalarFn& phi, double s, int n, double h,
                                unsigned max_bits = 8192);

// ---------------------------------------------------------------- CM

struct CMWitness {
  double s;
  double h;
  int n;
  double value;            // (-1)^n Delta_h^n phi(s)
  std::string value_text;  // same, in decimal; survives underflow
};

struct CMConfig {
  int points = 41;
  std::vector<double> step_factors{0.125, 0.5, 2.0};
  double tol_abs = 0.0;
  double tol_rel = 1e-9;
  double noise_factor = 4.0;
  unsigned start_bits = 256;
  unsigned max_bits = 1024;
  std::size_t max_witnesses = 64;
  // Never use the double evaluator (for functions whose fast path is unreliable).
  bool force_precise = false;
};

struct CMReport {
  Verdict verdict = Verdict::pass;
  int n_max = 8;
  std::vector<CMWitness> witnesses;  // sorted by (s, h, n), capped
  long violations = 0;
  long checks = 0;
  long inconclusive = 0;
  long evaluations = 0;
  unsigned precision_bits = 53;  // highest precision used
  double s_lo = 0, s_hi = 0;
  CMConfig cfg;
  nlohmann::json to_json() const;
};

CMReport cm_test(const ScalarFn& phi, std::pair<double, double> interval = {1e-3, 1e3},
                 int n_max = 8, const CMConfig& cfg = {});

// ---------------------------------------------------------------- HCM

struct HCMWitness {
  double u;
  double w;
  int n;
  double h;
  double value;
  std::string value_text;
  bool refined = false;
};

// High-order differences at a fixed base point near w = 2, for violations
// that only show up at orders far beyond the coarse sweep.
struct HcmRefine {
  bool enabled = false;
  // Skip the refinement when the coarse sweep already found a violation.
  bool only_if_coarse_passes = false;
  // Defaults to the function's scale_hint.
  std::optional<std::pair<double, double>> u_range;
  int u_points = 33;
  double x0 = 1e-4;  // base point w - 2
  std::vector<double> steps{1e-3, 2e-3};
  std::vector<int> orders{128, 256, 384, 512};
  unsigned start_bits = 1024;
  unsigned max_bits = 8192;
};

struct HCMConfig {
  int u_points = 25;
  std::pair<double, double> u_range{1e-3, 1e3};
  double w_max = 50.0;
  double x_lo = 1e-3;  // smallest w - 2 on the base grid
  int n_max = 8;
  CMConfig cm;
  HcmRefine refine;
};

struct HCMRefineStats {
  bool ran = false;
  long checks = 0;
  long violations = 0;
  long inconclusive = 0;
  unsigned precision_bits = 0;
  double u_lo = 0, u_hi = 0;
};

struct HCMReport {
  Verdict verdict = Verdict::pass;
  std::vector<double> u_grid;
  std::vector<CMReport> per_u;
  std::vector<HCMWitness> witnesses;  // sorted by (u, w, n, h), capped
  long violations = 0;
  long inconclusive = 0;
  HCMRefineStats refine;
  HCMConfig cfg;
  nlohmann::json to_json() const;
};

// G_u(x) = phi(u v) phi(u / v) with v = v_of_w(2 + x).
ScalarFn hyperbolic_slice_fn(const ScalarFn& phi, double u);

HCMReport hcm_test(const ScalarFn& phi, const HCMConfig& cfg = {});

}  // namespace hmggc
