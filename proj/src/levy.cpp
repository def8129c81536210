#include "hmggc/levy.hpp"

#include "hmggc/errors.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

namespace hmggc {

using nlohmann::json;

// ---------------------------------------------------------------- excursions

void KreinAtoms::validate() const {
  if (atoms.empty()) throw DomainError("Krein measure needs at least one atom");
  if (!(p > 0) || !std::isfinite(p)) throw DomainError("clock rate p must be positive");
  for (const auto& [z, kappa] : atoms) {
    if (!(z > 0) || !std::isfinite(z)) throw DomainError("atom locations must be positive");
    if (!(kappa > 0) || !std::isfinite(kappa)) throw DomainError("atom masses must be positive");
  }
}

KreinAtoms KreinAtoms::from_json(const json& j) {
  KreinAtoms K;
  K.p = j.value("p", 1.0);
  for (const auto& a : j.at("atoms")) {
    if (a.is_array()) {
      K.atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    } else {
      K.atoms.emplace_back(a.at("z").get<double>(), a.at("kappa").get<double>());
    }
  }
  K.validate();
  return K;
}

json KreinAtoms::to_json() const {
  json a = json::array();
  for (const auto& [z, kappa] : atoms) a.push_back({z, kappa});
  return {{"atoms", a}, {"p", p}};
}

double psi(const KreinAtoms& K) {
  K.validate();
  double s = 0;
  for (const auto& [z, kappa] : K.atoms) s += kappa * K.p / (z * (z + K.p));
  return s;
}

ExcursionMixing excursion_mixing_density(const KreinAtoms& K, bool run_hm2) {
  const double ps = psi(K);
  std::vector<std::pair<double, Density>> comps;
  double total = 0;
  for (const auto& [z, kappa] : K.atoms) {
    double lo = 1 / (z + K.p), hi = 1 / z;
    double w = kappa * (hi - lo) / ps;
    total += w;
    comps.emplace_back(w, Density::indicator(lo, hi));
  }
  if (!(total > 0)) throw DegenerateError("Krein measure puts no mass on any excursion window");
  Density fX = comps.size() == 1 ? comps.front().second : Density::mixture(std::move(comps));
  ExcursionMixing out{fX, ps, std::nullopt};
  if (run_hm2) out.hm2 = hm_test(out.fX, 2);
  return out;
}

double excursion_y3_density(const KreinAtoms& K, double u) {
  if (!(u > 0)) throw DomainError("u must be positive");
  double ps = psi(K);
  double s = 0;
  for (const auto& [z, kappa] : K.atoms) {
    // exp(-u z) (1 - exp(-u p))
    s += kappa * std::exp(-u * z) * -std::expm1(-u * K.p);
  }
  return s / ps;
}

KreinAtoms smooth_krein(double lo, double hi, int n, double p, double mass) {
  if (!(lo > 0) || !(hi > lo) || n < 1) throw DomainError("smooth_krein: need 0 < lo < hi, n >= 1");
  KreinAtoms K;
  K.p = p;
  for (int i = 0; i < n; ++i) {
    K.atoms.emplace_back(lo + (i + 0.5) * (hi - lo) / n, mass / n);
  }
  K.validate();
  return K;
}

// ---------------------------------------------------------------- Levy

std::string to_string(LevySpec::Kind k) {
  switch (k) {
    case LevySpec::Kind::brownian:
      return "brownian";
    case LevySpec::Kind::compound_poisson:
      return "compound-poisson";
    case LevySpec::Kind::drift_minus_subordinator:
      return "drift-minus-subordinator";
  }
  return "?";
}

namespace {

double jump_mean(const LevySpec& s) {
  const Density& J = *s.jump;
  double m;
  if (s.kind == LevySpec::Kind::compound_poisson) {
    m = integrate_against(J, [](double x) { return std::log(x); });
  } else {
    m = integrate_against(J, [](double x) { return x; });
  }
  if (!std::isfinite(m)) throw DomainError("jump law has no finite mean");
  return m;
}

}  // namespace

void LevySpec::validate() const {
  if (!std::isfinite(drift)) throw DomainError("drift must be finite");
  switch (kind) {
    case Kind::brownian:
      if (!(sigma2 >= 0) || !std::isfinite(sigma2)) throw DomainError("sigma2 must be >= 0");
      if (!(drift < 0)) throw DomainError("brownian: drift must be negative");
      break;
    case Kind::compound_poisson:
    case Kind::drift_minus_subordinator:
      if (!(rate > 0) || !std::isfinite(rate)) throw DomainError("jump rate must be positive");
      if (!jump) throw DomainError(to_string(kind) + ": jump law required");
      if (kind == Kind::drift_minus_subordinator && !(drift < 0)) {
        throw DomainError("drift-minus-subordinator: drift must be negative");
      }
      if (!(mean_drift() < 0)) throw DomainError(to_string(kind) + ": E[xi_1] must be negative");
      break;
  }
}

double LevySpec::mean_drift() const {
  switch (kind) {
    case Kind::brownian:
      return drift;
    case Kind::compound_poisson:
      return drift + rate * jump_mean(*this);
    case Kind::drift_minus_subordinator:
      return drift - rate * jump_mean(*this);
  }
  return drift;
}

LevySpec LevySpec::from_json(const json& j) {
  LevySpec s;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "brownian") {
    s.kind = Kind::brownian;
    s.sigma2 = j.value("sigma2", 2.0);
    s.drift = j.value("drift", -1.0);
  } else if (kind == "compound-poisson" || kind == "drift-minus-subordinator") {
    s.kind = kind == "compound-poisson" ? Kind::compound_poisson : Kind::drift_minus_subordinator;
    s.rate = j.value("rate", 1.0);
    s.drift = j.value("drift", kind == "compound-poisson" ? 0.0 : -1.0);
    const auto& jp = j.at("jump");
    s.jump = jp.is_string() ? Density::parse(jp.get<std::string>()) : Density::from_json(jp);
  } else {
    throw ParseError("unknown Levy kind '" + kind + "'");
  }
  s.validate();
  return s;
}

json LevySpec::to_json() const {
  json j{{"kind", to_string(kind)}, {"drift", drift}};
  if (kind == Kind::brownian) {
    j["sigma2"] = sigma2;
  } else {
    j["rate"] = rate;
    j["jump"] = jump->to_json();
  }
  return j;
}

namespace {

struct PathResult {
  double value;
  bool finished;
};

PathResult brownian_path(const LevySpec& s, std::mt19937_64& gen, double horizon, double dt,
                         double tail_rel, double tail_scale) {
  boost::random::normal_distribution<double> normal;
  const double sd = std::sqrt(s.sigma2 * dt), mu = s.drift * dt;
  const long steps = static_cast<long>(std::ceil(horizon / dt));
  double xi = 0, e = 1, acc = 0;
  for (long i = 0; i < steps; ++i) {
    xi += mu + (sd > 0 ? sd * normal(gen) : 0.0);
    double e1 = std::exp(xi);
    acc += 0.5 * dt * (e + e1);
    e = e1;
    if (e * tail_scale < tail_rel * acc) return {acc, true};
  }
  return {acc, false};
}

PathResult jump_path(const LevySpec& s, std::mt19937_64& gen, double horizon, double tail_rel,
                     double tail_scale) {
  std::exponential_distribution<double> wait(s.rate);
  const Density& J = *s.jump;
  double t = 0, xi = 0, acc = 0;
  while (t < horizon) {
    double tau = std::min(wait(gen), horizon - t);
    double seg = s.drift == 0 ? tau : std::expm1(s.drift * tau) / s.drift;
    acc += std::exp(xi) * seg;
    xi += s.drift * tau;
    t += tau;
    if (t >= horizon) break;
    double x = J.draw(gen);
    if (s.kind == LevySpec::Kind::compound_poisson) {
      xi += std::log(x);
    } else {
      xi -= x;
    }
    if (std::exp(xi) * tail_scale < tail_rel * acc) return {acc, true};
  }
  return {acc, std::exp(xi) * tail_scale < tail_rel * acc};
}

}  // namespace

SimBatch simulate_exp_functional(const LevySpec& spec, std::size_t n, std::uint64_t seed,
                                 const SimOptions& opt) {
  spec.validate();
  if (n == 0) throw DomainError("simulate: n must be >= 1");
  if (!(opt.dt > 0) || !(opt.tail_rel > 0)) throw DomainError("simulate: dt and tail_rel must be positive");
  const double m = spec.mean_drift();
  const double tail_scale = 1 / std::abs(m);
  const double horizon = opt.horizon > 0 ? opt.horizon : 60 / std::abs(m);

  SimBatch out;
  out.seed = seed;
  out.samples.assign(n, 0.0);
  std::vector<char> finished(n, 0);
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      std::mt19937_64 gen(derive_seed(seed, i));
      PathResult r = spec.kind == LevySpec::Kind::brownian
                         ? brownian_path(spec, gen, horizon, opt.dt, opt.tail_rel, tail_scale)
                         : jump_path(spec, gen, horizon, opt.tail_rel, tail_scale);
      out.samples[i] = r.value;
      finished[i] = r.finished;
    }
  };
  unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) {
      pool.emplace_back(work, n * k / threads, n * (k + 1) / threads);
    }
    for (auto& th : pool) th.join();
  }

  std::size_t unfinished = std::count(finished.begin(), finished.end(), 0);
  if (static_cast<double>(unfinished) > opt.max_unfinished * static_cast<double>(n)) {
    std::ostringstream msg;
    msg << unfinished << " of " << n << " paths reached horizon " << horizon
        << " before the tail fell below " << opt.tail_rel;
    throw HorizonError(msg.str(), 2 * horizon);
  }
  std::ostringstream meta;
  meta << "mt19937_64 per path; " << spec.to_json().dump() << "; horizon=" << horizon;
  if (spec.kind == LevySpec::Kind::brownian) meta << "; dt=" << opt.dt;
  meta << "; unfinished=" << unfinished;
  out.meta = meta.str();
  return out;
}

Density dufresne_law(double sigma2, double drift) {
  if (!(sigma2 > 0) || !(drift < 0)) throw DomainError("Dufresne law needs sigma2 > 0, drift < 0");
  return Density::scaled(Density::power_of(Density::gamma(2 * std::abs(drift) / sigma2, 1.0), -1.0),
                         2 / sigma2);
}

double ks_distance(const SimBatch& batch, const Density& ref) {
  if (batch.samples.empty()) throw DomainError("ks_distance: empty batch");
  std::vector<double> x = batch.samples;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double F = ref.cdf(x[i]);
    d = std::max({d, std::abs((i + 1) / n - F), std::abs(F - i / n)});
  }
  return std::min(d, 1.0);
}

// ---------------------------------------------------------------- ladder

void LadderBetaSpec::validate() const {
  if (!(b > 0) || !(c > 0) || !(aH >= 0)) throw DomainError("ladder spec needs b > 0, c > 0, a_H >= 0");
}

LadderFactor ladder_factor(const LadderBetaSpec& spec) {
  spec.validate();
  if (spec.aH > 0) {
    double beta2 = spec.c / spec.aH;
    Density z = Density::beta(spec.b + 1, beta2);
    return {spec.aH == 1 ? z : Density::scaled(z, 1 / spec.aH), "beta",
            std::min(static_cast<int>(std::floor(spec.b + 1)), static_cast<int>(std::floor(beta2)))};
  }
  return {Density::gamma(spec.b + 1, spec.c), "gamma", std::nullopt};
}

// ---------------------------------------------------------------- GGC screen

json GgcScreenReport::to_json() const {
  return {{"samples", samples}, {"tolerance", tolerance}, {"hcm", hcm.to_json()}};
}

GgcScreenReport ggc_screen(const SimBatch& batch, int n_max, int u_points) {
  if (batch.samples.size() < 10) throw DomainError("ggc_screen: need at least 10 samples");
  auto xs = std::make_shared<std::vector<double>>(batch.samples);
  std::sort(xs->begin(), xs->end());
  const double median = (*xs)[xs->size() / 2];
  ScalarFn phi;
  phi.label = "empirical Laplace transform";
  phi.fast = [xs](double s) {
    double acc = 0;
    for (double x : *xs) acc += std::exp(-s * x);
    return acc / static_cast<double>(xs->size());
  };
  phi.fast_rel_error = 1e-14;
  phi.scale_hint = std::make_pair(0.1 / median, 10 / median);

  GgcScreenReport r;
  r.samples = xs->size();
  // Sampling error of the mean is below 0.5 / sqrt(n); an n-th difference
  // can amplify it by 2^n.
  r.tolerance = std::ldexp(0.5 / std::sqrt(static_cast<double>(xs->size())), n_max);
  HCMConfig cfg;
  cfg.n_max = n_max;
  cfg.u_points = u_points;
  cfg.u_range = *phi.scale_hint;
  cfg.cm.tol_abs = r.tolerance;
  r.hcm = hcm_test(phi, cfg);
  return r;
}

}  // namespace hmggc
