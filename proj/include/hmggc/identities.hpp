#pragma once

#include "hmggc/rational.hpp"
#include "hmggc/real.hpp"
#include "hmggc/transforms.hpp"

#include <json.hpp>

#include <random>
#include <optional>
#include <vector>

namespace hmggc {

// J_k = integral over (1/b, b) of I_k(v), with
// I_k = t^k ((b - v)(v - 1/b))^(k-1) / ((v + t/a)^k (v + a t)^k).
struct ProofPoint {
  double a = 2, b = 2, t = 1, k = 1;
  double T() const { return t + 1 / t; }
  double A() const { return a * b + 1 / (a * b); }
  double B() const { return a / b + b / a; }
  double alpha() const { return a + 1 / a; }
  double beta() const { return b + 1 / b; }
  // (alpha + beta z)^2 - 4 - 4 z^2 + 4 z T
  double Delta(double z) const;
  void validate() const;
};

struct ExactPoint {
  Rational a{2}, b{2}, t{1};
  int k = 1;
  Rational T() const { return t + 1 / t; }
  Rational A() const { return a * b + 1 / (a * b); }
  Rational B() const { return a / b + b / a; }
  ProofPoint approx() const;
};

// I_k as an exact rational function of v.
RationalExpr<Rational> ik_rational(const ExactPoint& p);

double jk_quadrature(const ProofPoint& p);

// P and Q as polynomials in T (ascending coefficients).
struct PQPair {
  Poly<Rational> P, Q;
};

struct JkExact {
  Rational P;  // rational part at this t
  Rational Q;  // coefficient of the log
  Rational log_arg;           // (T + A)/(T + B), confirmed against the pole data
  bool single_pole = false;   // a = 1: one pole of order 2k, no log
  Real value;                 // P + Q log(log_arg) at working precision
};

// Exact partial-fraction integration. b = 1 gives zero.
JkExact jk_closed_exact(const ExactPoint& p);

struct JkClosed {
  Real value;
  Real P, Q;
  Real error;  // size of the cancellation residue, as an error estimate
  bool single_pole = false;
};

// Same algebra over Real, for irrational inputs; k must be an integer.
JkClosed jk_closed(const ProofPoint& p);

// P_k(T), Q_k(T) by exact interpolation in T at fixed (a, b); nullopt when
// a = 1 (no log term). Throws DegenerateError if the interpolants fail the
// extra-point check.
std::optional<PQPair> pq_pair(const Rational& a, const Rational& b, int k);

// The printed table for k = 1, 2, 3 as polynomials in T.
PQPair pq_table(const Rational& a, const Rational& b, int k);

// (-1)^k (k-1)! (b - 1/b)^(2k-1) / ((T + A)^k (T + B)^k)
double jk_derivative_rhs(const ProofPoint& p);
Real jk_derivative_rhs_real(const ProofPoint& p);

// k-th derivative of the closed form in T by a central difference of step
// delta, at the current working precision.
Real jk_closed_derivative_numeric(const ProofPoint& p, const Real& delta);

// ((T+A)(T+B))^k d^k/dT^k (P + Q log((T+A)/(T+B))) as an exact polynomial in T.
struct Eq4Reduction {
  Poly<Rational> reduced;
  Rational expected;  // (-1)^k (k-1)! (b - 1/b)^(2k-1)
  bool p_annihilated = false;  // d^k P == 0
  bool q_degree_ok = false;    // Q^(k) == 0
  bool constant = false;       // reduced == expected exactly
};
Eq4Reduction eq4_reduce(const Rational& a, const Rational& b, int k);

// GF(z) = log(R) / sqrt(Delta).
double gf_eval(double z, const ProofPoint& p);
Real gf_eval_real(const Real& z, const ProofPoint& p);
// d/dz log R by a central difference, and the closed form 2(b - 1/b)/sqrt(Delta).
Real dlogR_numeric(const Real& z, const ProofPoint& p, const Real& delta);
Real dlogR_closed(const Real& z, const ProofPoint& p);

// J_1..J_K from derivatives of GF at 0 (central differences at working precision).
std::vector<Real> series_check(const ProofPoint& p, int K);
// Radius within which the series is known to converge absolutely.
double gf_radius(const ProofPoint& p);

struct AsymptoticReport {
  double a, b;
  int k;
  double limit;                  // B(k,k) (b - 1/b)^(2k-1)
  std::vector<double> t;         // evaluation points
  std::vector<double> scaled;    // T^k J_k
  std::vector<double> rel_error;
  nlohmann::json to_json() const;
};
AsymptoticReport asymptotic_check(double a, double b, int k,
                                  const std::vector<double>& ts = {1e2, 1e3, 1e4});

// T -> J_k(T) on the t >= 1 branch, as a function of x = T - 2.
ScalarFn jk_of_T_fn(double a, double b, double k);

struct CMSweepEntry {
  double a, b;
  CMReport report;
};
struct CMSweepReport {
  double k;
  int n_max;
  Verdict verdict = Verdict::pass;
  std::vector<CMSweepEntry> entries;
  nlohmann::json to_json() const;
};
CMSweepReport cm_sweep(const std::vector<double>& as, const std::vector<double>& bs, double k,
                       int n_max, std::pair<double, double> x_range = {1e-3, 1e3},
                       const CMConfig& cfg = {});

// Random rational in [lo, hi] with the given denominator.
Rational random_rational(std::mt19937_64& gen, const Rational& lo, const Rational& hi,
                         long den = 100);

}  // namespace hmggc
