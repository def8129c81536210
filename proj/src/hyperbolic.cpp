#include "hmggc/hyperbolic.hpp"

#include "hmggc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace hmggc {

std::string to_string(Verdict v) { return v == Verdict::pass ? "pass" : "fail"; }

double v_of_w(double w) {
  if (!(w >= 2)) throw DomainError("v_of_w: need w >= 2");
  return 0.5 * (w + std::sqrt((w - 2) * (w + 2)));
}

Real v_of_w(const Real& w) {
  if (!(w >= 2)) throw DomainError("v_of_w: need w >= 2");
  return (w + sqrt((w - 2) * (w + 2))) / 2;
}

double h_slice(const Density& f, double u, double w) {
  if (!(u > 0)) throw DomainError("h_slice: need u > 0");
  double v = v_of_w(w);
  return f.pdf(u * v) * f.pdf(u / v);
}

Real h_slice(const Density& f, const Real& u, const Real& w) {
  if (!(u > 0)) throw DomainError("h_slice: need u > 0");
  Real v = v_of_w(w);
  Real a = f.pdf(Real(u * v));
  if (a == 0) return a;
  return a * f.pdf(Real(u / v));
}

std::pair<double, double> effective_support(const Density& f, double q) {
  Support s = f.support();
  double lo = s.lo > 0 ? s.lo : f.quantile(q);
  double hi = std::isfinite(s.hi) ? s.hi : f.quantile(1 - q);
  return {lo, hi};
}

namespace {

struct Row {
  std::vector<double> w;
  std::vector<Real> h;
};

// Weights c_l with d_j[i] = sum_l c_l h_{i+l}.
std::vector<Real> dd_weights(const std::vector<Real>& w, std::size_t i, int j) {
  std::vector<Real> c(j + 1);
  for (int l = 0; l <= j; ++l) {
    Real den = 1;
    for (int m = 0; m <= j; ++m) {
      if (m != l) den *= (w[i + l] - w[i + m]);
    }
    c[l] = Real(1) / den;
  }
  return c;
}

Real factorial_over_power(int j) {
  // j! / j^j
  Real r = 1;
  for (int i = 1; i <= j; ++i) r = r * Real(i) / Real(j);
  return r;
}

}  // namespace

HMReport hm_test(const Density& f, int k, const HMConfig& cfg) {
  if (k < 1) throw DomainError("hm_test: order must be >= 1");
  if (cfg.u_points < 1 || cfg.w_points < k + 2) throw DomainError("hm_test: grid too small for order");
  HMReport rep;
  rep.order = k;
  rep.cfg = cfg;
  double elo, ehi;
  std::tie(elo, ehi) = effective_support(f, cfg.tail_quantile);
  double ulo = elo, uhi = ehi;
  if (cfg.u_range) std::tie(ulo, uhi) = *cfg.u_range;
  rep.u_lo = ulo;
  rep.u_hi = uhi;

  bool any_nonzero = false;
  unsigned bits = cfg.precision_bits;
  for (int iu = 0; iu < cfg.u_points; ++iu) {
    double u = ulo * std::pow(uhi / ulo, (iu + 0.5) / cfg.u_points);
    double vmax = std::min(ehi / u, u / elo);
    if (!(vmax > 1)) continue;
    double span = vmax + 1 / vmax - 2;
    if (!(span > 1e-14)) continue;

    PrecisionGuard guard(bits);
    const int N = cfg.w_points;
    std::vector<double> wd(N);
    std::vector<Real> w(N), h(N);
    for (int i = 0; i < N; ++i) {
      double t = N == 1 ? 0 : static_cast<double>(i) / (N - 1);
      wd[i] = 2 + span * cfg.w_rel_lo * std::pow(cfg.w_rel_hi / cfg.w_rel_lo, t);
      w[i] = Real(wd[i]);
      h[i] = h_slice(f, Real(u), w[i]);
      if (h[i] != 0) any_nonzero = true;
    }
    double eps_h = std::max(std::ldexp(1.0, -static_cast<int>(bits) + 16), 2.5 * f.real_rel_error());
    // divided differences, order by order
    std::vector<Real> d = h;
    for (int j = 1; j <= k; ++j) {
      std::vector<Real> nd(N - j);
      for (int i = 0; i + j < N; ++i) nd[i] = (d[i + 1] - d[i]) / (w[i + j] - w[i]);
      d = std::move(nd);
      Real norm = factorial_over_power(j);
      for (int i = 0; i + j < N; ++i) {
        Real sp = w[i + j] - w[i];
        Real spj = pow(sp, j);
        Real margin = ((j % 2) ? -d[i] : d[i]) * spj * norm;
        Real scale = 0;
        for (int l = 0; l <= j; ++l) scale = std::max(scale, Real(abs(h[i + l])));
        if (scale == 0) continue;
        ++rep.checks;
        auto c = dd_weights(w, i, j);
        Real noise = 0;
        for (int l = 0; l <= j; ++l) noise += abs(c[l] * h[i + l]);
        noise *= spj * norm * Real(eps_h) * Real(cfg.noise_factor);
        Real tau = Real(cfg.tol_abs) + Real(cfg.tol_rel) * scale;
        if (margin - noise >= -tau) continue;
        if (margin + noise < -tau) {
          ++rep.violations;
          rep.witnesses.push_back(HMWitness{u, wd[i], j, to_double(margin)});
        } else {
          ++rep.inconclusive;
        }
      }
    }
  }
  rep.vacuous = !any_nonzero;
  rep.verdict = rep.violations > 0 ? Verdict::fail : Verdict::pass;
  std::sort(rep.witnesses.begin(), rep.witnesses.end(), [](const HMWitness& a, const HMWitness& b) {
    return std::tie(a.u, a.w, a.j) < std::tie(b.u, b.w, b.j);
  });
  if (rep.witnesses.size() > cfg.max_witnesses) rep.witnesses.resize(cfg.max_witnesses);
  return rep;
}

nlohmann::json HMReport::to_json() const {
  nlohmann::json ws = nlohmann::json::array();
  for (const auto& w : witnesses) ws.push_back({{"u", w.u}, {"w", w.w}, {"j", w.j}, {"margin", w.margin}});
  return {{"verdict", to_string(verdict)},
          {"order", order},
          {"witnesses", ws},
          {"violations", violations},
          {"checks", checks},
          {"inconclusive", inconclusive},
          {"vacuous", vacuous},
          {"grid",
           {{"u_lo", u_lo},
            {"u_hi", u_hi},
            {"u_points", cfg.u_points},
            {"w_points", cfg.w_points},
            {"w_rel_lo", cfg.w_rel_lo},
            {"w_rel_hi", cfg.w_rel_hi}}},
          {"tolerance",
           {{"tol_abs", cfg.tol_abs},
            {"tol_rel", cfg.tol_rel},
            {"precision_bits", cfg.precision_bits},
            {"noise_factor", cfg.noise_factor}}}};
}

LogConcavityReport logconcavity_test(const Density& f, const LogConcavityConfig& cfg) {
  if (cfg.points < 5) throw DomainError("logconcavity_test: need at least 5 points");
  auto [lo, hi] = effective_support(f, cfg.tail_quantile);
  PrecisionGuard guard(cfg.precision_bits);
  const int N = cfg.points;
  std::vector<Real> x(N), L(N);
  std::vector<bool> pos(N);
  for (int i = 0; i < N; ++i) {
    double xd = lo * std::pow(hi / lo, (i + 0.5) / N);
    x[i] = Real(xd);
    Real v = f.pdf(x[i]);
    pos[i] = v > 0;
    if (pos[i]) L[i] = log(v);
  }
  int first = -1, last = -1;
  for (int i = 0; i < N; ++i) {
    if (pos[i]) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) throw SplitSupportError("logconcavity_test: density vanishes on the whole grid");
  for (int i = first; i <= last; ++i) {
    if (!pos[i]) throw SplitSupportError("logconcavity_test: density has an interior zero near x=" +
                                         std::to_string(to_double(x[i])));
  }
  LogConcavityReport rep;
  double eps = std::ldexp(1.0, -static_cast<int>(cfg.precision_bits) + 16) + 4 * f.real_rel_error();
  for (int i = first; i + 2 <= last; ++i) {
    // second divided difference of log f in x, normalized by span^2 / 2
    Real d1 = (L[i + 1] - L[i]) / (x[i + 1] - x[i]);
    Real d2 = (L[i + 2] - L[i + 1]) / (x[i + 2] - x[i + 1]);
    Real dd = (d2 - d1) / (x[i + 2] - x[i]);
    Real sp = x[i + 2] - x[i];
    Real m = dd * sp * sp / 2;
    Real scale = std::max({Real(1), Real(abs(L[i])), Real(abs(L[i + 1])), Real(abs(L[i + 2]))});
    Real tau = Real(cfg.tol_abs) + Real(cfg.tol_rel) * scale + Real(8 * eps) * scale;
    if (m > tau) {
      rep.verdict = Verdict::fail;
      rep.concavity_witnesses.emplace_back(to_double(x[i + 1]), to_double(m));
    }
    // log scale: y = log x is uniform here, g(y) = L + y
    Real g0 = L[i] + log(x[i]), g1 = L[i + 1] + log(x[i + 1]), g2 = L[i + 2] + log(x[i + 2]);
    Real sd = g2 - 2 * g1 + g0;
    Real gscale = std::max({Real(1), Real(abs(g0)), Real(abs(g1)), Real(abs(g2))});
    if (sd > Real(cfg.tol_abs) + Real(cfg.tol_rel) * gscale + Real(8 * eps) * gscale) {
      rep.log_scale_concave = false;
    }
  }
  std::vector<Real> psi;
  std::vector<Real> xm;
  for (int i = first; i + 1 <= last; ++i) {
    Real mid = sqrt(x[i] * x[i + 1]);
    Real p = -mid * (L[i + 1] - L[i]) / (x[i + 1] - x[i]);
    psi.push_back(p);
    xm.push_back(mid);
    rep.psi.emplace_back(to_double(mid), to_double(p));
  }
  for (std::size_t i = 0; i + 1 < psi.size(); ++i) {
    Real drop = psi[i] - psi[i + 1];
    Real scale = std::max({Real(1), Real(abs(psi[i])), Real(abs(psi[i + 1]))});
    if (drop > Real(cfg.tol_abs) + Real(cfg.tol_rel) * scale + Real(8 * eps) * scale) {
      rep.psi_nondecreasing = false;
      rep.psi_witnesses.emplace_back(to_double(xm[i + 1]), to_double(drop));
    }
  }
  return rep;
}

nlohmann::json LogConcavityReport::to_json() const {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& [x, m] : concavity_witnesses) w.push_back({{"x", x}, {"second_difference", m}});
  nlohmann::json pw = nlohmann::json::array();
  for (const auto& [x, d] : psi_witnesses) pw.push_back({{"x", x}, {"decrease", d}});
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& [x, p] : psi) ps.push_back({x, p});
  return {{"verdict", to_string(verdict)},
          {"log_scale_concave", log_scale_concave},
          {"psi_nondecreasing", psi_nondecreasing},
          {"witnesses", w},
          {"psi_witnesses", pw},
          {"psi", ps}};
}

}  // namespace hmggc
