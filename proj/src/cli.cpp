#include "hmggc/cli.hpp"

#include "hmggc/errors.hpp"
#include "hmggc/hyperbolic.hpp"
#include "hmggc/levy.hpp"
#include "hmggc/mixtures.hpp"
#include "hmggc/sampling.hpp"
#include "hmggc/thorin.hpp"
#include "hmggc/transforms.hpp"
#include "hmggc/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace hmggc::cli {

using nlohmann::json;

namespace {

struct Common {
  std::string out;
  bool no_timestamp = false;
  unsigned threads = 1;
  unsigned precision = kDefaultBits;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "write the JSON report here instead of stdout");
  sub->add_flag("--no-timestamp", c.no_timestamp, "omit timestamp and elapsed time from the report");
  sub->add_option("--threads", c.threads, "worker cap (path simulation only)")->check(CLI::Range(1u, 1024u));
  sub->add_option("--precision", c.precision, "working precision in bits for high-precision paths")
      ->check(CLI::Range(64u, 1u << 16));
}

struct Outcome {
  json config = json::object();
  Verdict verdict = Verdict::pass;
  json witnesses = json::array();
  json metrics = json::object();
};

// Splits a detector report into witnesses and the remaining metrics.
void absorb(Outcome& o, json report) {
  if (report.contains("witnesses")) {
    for (auto& w : report["witnesses"]) o.witnesses.push_back(w);
    report.erase("witnesses");
  }
  o.metrics = std::move(report);
}

std::vector<double> parse_numbers(const std::string& text, std::size_t n, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError(what + ": bad number '" + item + "'");
    }
  }
  if (v.size() != n) throw ParseError(what + " expects " + std::to_string(n) + " comma-separated numbers");
  return v;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError("malformed " + what + " JSON: " + e.what());
  }
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, n == 1 ? 0.0 : double(i) / (n - 1)));
  return g;
}

// ---------------------------------------------------------------- transforms

struct TransformArgs {
  bool laplace = false, stieltjes = false, product_lt = false;
  std::string ggc, catalog, density;
  double k = 1;
};

void add_transform(CLI::App* sub, TransformArgs& t) {
  sub->add_flag("--laplace", t.laplace, "Laplace transform of --density");
  sub->add_flag("--stieltjes", t.stieltjes, "order-k Stieltjes transform of --density");
  sub->add_flag("--product-lt", t.product_lt, "integral of (1 + s x)^-k against --density");
  sub->add_option("--ggc", t.ggc, "GGC Laplace transform from Thorin JSON {\"a\":..,\"atoms\":[[t,u],..]}");
  sub->add_option("--catalog", t.catalog, "closed-form Laplace transform of a catalog mixture");
  sub->add_option("--density", t.density, "density as JSON or shorthand (uniform:1,2)");
  sub->add_option("--k", t.k, "transform order")->check(CLI::PositiveNumber);
}

ScalarFn build_transform(const TransformArgs& t, json& config) {
  int kinds = t.laplace + t.stieltjes + t.product_lt + !t.ggc.empty() + !t.catalog.empty();
  if (kinds != 1) {
    throw ParseError("choose exactly one of --laplace, --stieltjes, --product-lt, --ggc, --catalog");
  }
  if (!t.ggc.empty()) {
    ThorinSpec spec = ThorinSpec::from_json(parse_json(t.ggc, "Thorin"));
    config["transform"] = {{"kind", "ggc"}, {"thorin", spec.to_json()}};
    return ggc_fn(spec);
  }
  if (!t.catalog.empty()) {
    if (!is_catalog_name(t.catalog)) throw ParseError("unknown catalog entry '" + t.catalog + "'");
    config["transform"] = {{"kind", "catalog"}, {"name", t.catalog}};
    return catalog_lt_fn(t.catalog);
  }
  if (t.density.empty()) throw ParseError("--density is required for this transform");
  Density f = Density::parse(t.density);
  if (t.laplace) {
    config["transform"] = {{"kind", "laplace"}, {"density", f.to_json()}};
    return laplace_fn(f);
  }
  config["transform"] = {{"kind", t.stieltjes ? "stieltjes" : "product-lt"}, {"k", t.k}, {"density", f.to_json()}};
  return t.stieltjes ? stieltjes_fn(f, t.k) : product_lt_fn(f, t.k);
}

// ---------------------------------------------------------------- commands

Outcome cmd_check_hm(const std::string& density, int order, const HMConfig& cfg, bool lc) {
  Outcome o;
  Density f = Density::parse(density);
  HMReport r = hm_test(f, order, cfg);
  o.config = {{"density", f.to_json()}, {"order", order}, {"log_concavity", lc}};
  o.verdict = r.verdict;
  absorb(o, r.to_json());
  if (lc) {
    LogConcavityReport l = logconcavity_test(f);
    json lj = l.to_json();
    lj.erase("psi");
    o.metrics["log_concavity"] = lj;
  }
  return o;
}

Outcome cmd_check_cm(const TransformArgs& t, double s_lo, double s_hi, int n_max, const CMConfig& cfg) {
  Outcome o;
  ScalarFn phi = build_transform(t, o.config);
  o.config["interval"] = {s_lo, s_hi};
  o.config["n_max"] = n_max;
  CMReport r = cm_test(phi, {s_lo, s_hi}, n_max, cfg);
  o.verdict = r.verdict;
  absorb(o, r.to_json());
  return o;
}

Outcome cmd_check_hcm(const TransformArgs& t, HCMConfig cfg, const std::string& refine) {
  Outcome o;
  ScalarFn phi = build_transform(t, o.config);
  bool eligible = phi.precise && phi.precise_cheap && phi.scale_hint.has_value();
  if (refine == "on") {
    if (!phi.precise) throw ParseError("--refine on needs a transform with a high-precision evaluator");
    cfg.refine.enabled = true;
  } else if (refine == "auto") {
    cfg.refine.enabled = eligible;
    cfg.refine.only_if_coarse_passes = true;
  }
  o.config["refine"] = refine;
  o.config["u_range"] = {cfg.u_range.first, cfg.u_range.second};
  o.config["u_points"] = cfg.u_points;
  o.config["n_max"] = cfg.n_max;
  HCMReport r = hcm_test(phi, cfg);
  o.verdict = r.verdict;
  absorb(o, r.to_json());
  return o;
}

struct MixArgs {
  std::string left, right, op = "product", catalog, krein, ladder, tilt, grid, csv;
};

Outcome cmd_mix(const MixArgs& m) {
  Outcome o;
  int modes = (!m.left.empty() || !m.right.empty()) + !m.catalog.empty() + !m.krein.empty() + !m.ladder.empty();
  if (modes != 1) throw ParseError("choose one of --left/--right, --catalog, --krein, --ladder");
  std::optional<Density> result;
  if (!m.catalog.empty()) {
    if (!is_catalog_name(m.catalog)) throw ParseError("unknown catalog entry '" + m.catalog + "'");
    CatalogEntry e = catalog(m.catalog);
    o.config["catalog"] = m.catalog;
    double worst = 0;
    for (double s : log_grid(0.05, 50, 20)) {
      double num = laplace(e.construction, s), closed = e.lt(s);
      double err = std::abs(num - closed);
      worst = std::max(worst, err);
      if (err > 1e-6) {
        o.verdict = Verdict::fail;
        o.witnesses.push_back({{"check", "laplace"}, {"s", s}, {"numeric", num}, {"closed", closed}});
      }
    }
    o.metrics["laplace_max_abs_error"] = worst;
    result = e.construction;
  } else if (!m.krein.empty()) {
    KreinAtoms K = KreinAtoms::from_json(parse_json(m.krein, "Krein"));
    o.config["krein"] = K.to_json();
    ExcursionMixing ex = excursion_mixing_density(K);
    o.metrics["psi"] = ex.psi;
    o.metrics["fX"] = ex.fX.to_json();
    o.metrics["hypothesis_hm2"] = to_string(ex.hm2->verdict);
    o.metrics["hypothesis_hm2_violations"] = ex.hm2->violations;
    Density g2 = Density::gamma(2, 1);
    double worst = 0;
    for (double u : log_grid(0.1, 10, 10)) {
      double direct = excursion_y3_density(K, u), mixture = product_density(g2, ex.fX, u);
      double err = std::abs(direct - mixture);
      worst = std::max(worst, err);
      if (err > 1e-7) {
        o.verdict = Verdict::fail;
        o.witnesses.push_back({{"check", "gamma2-mixture"}, {"u", u}, {"direct", direct}, {"mixture", mixture}});
      }
    }
    o.metrics["gamma2_mixture_max_abs_error"] = worst;
    result = ex.fX;
  } else if (!m.ladder.empty()) {
    auto v = parse_numbers(m.ladder, 3, "--ladder b,c,aH");
    LadderFactor lf = ladder_factor({v[0], v[1], v[2]});
    o.config["ladder"] = {{"b", v[0]}, {"c", v[1]}, {"aH", v[2]}};
    o.metrics["branch"] = lf.branch;
    o.metrics["density"] = lf.density.to_json();
    if (lf.hm_order) {
      o.metrics["declared_hm_order"] = *lf.hm_order;
      if (*lf.hm_order >= 1) {
        HMReport r = hm_test(lf.density, *lf.hm_order);
        o.verdict = r.verdict;
        json rj = r.to_json();
        for (auto& w : rj["witnesses"]) o.witnesses.push_back(w);
        o.metrics["hm"] = {{"verdict", rj["verdict"]}, {"violations", rj["violations"]}, {"checks", rj["checks"]}};
      }
    } else {
      o.metrics["declared_hm_order"] = "all";
    }
    result = lf.density;
  } else {
    if (m.left.empty() || m.right.empty()) throw ParseError("--left and --right are both required");
    if (m.op != "product" && m.op != "ratio") throw ParseError("--op must be product or ratio");
    Density y = Density::parse(m.left), x = Density::parse(m.right);
    result = m.op == "product" ? Density::product(y, x) : Density::ratio(y, x);
    o.config["left"] = y.to_json();
    o.config["right"] = x.to_json();
    o.config["op"] = m.op;
  }
  if (!m.tilt.empty()) {
    auto v = parse_numbers(m.tilt, 2, "--tilt alpha,delta");
    result = tilt(*result, v[0], v[1]);
    o.config["tilt"] = {{"alpha", v[0]}, {"delta", v[1]}};
  }
  double mass = result->mass();
  o.metrics["mass"] = mass;
  if (std::abs(mass - 1) > 1e-6) {
    o.verdict = Verdict::fail;
    o.witnesses.push_back({{"check", "normalization"}, {"mass", mass}});
  }
  if (!m.grid.empty()) {
    auto g = parse_numbers(m.grid, 3, "--grid lo,hi,n");
    if (!(g[0] < g[1]) || g[2] < 2) throw ParseError("--grid needs lo < hi and n >= 2");
    std::vector<double> xs;
    int n = static_cast<int>(g[2]);
    for (int i = 0; i < n; ++i) xs.push_back(g[0] + (g[1] - g[0]) * i / (n - 1));
    o.config["grid"] = g;
    if (m.csv.empty()) throw ParseError("--grid needs --csv");
    std::ofstream f(m.csv, std::ios::binary);
    if (!f) throw ParseError("cannot write " + m.csv);
    write_csv(f, *result, xs);
  }
  return o;
}

Outcome cmd_catalog(const std::string& name) {
  Outcome o;
  std::vector<std::string> names = name.empty() ? catalog_names() : std::vector<std::string>{name};
  if (!name.empty() && !is_catalog_name(name)) throw ParseError("unknown catalog entry '" + name + "'");
  o.config["names"] = names;
  for (const auto& n : names) {
    CatalogEntry e = catalog(n);
    double lt_err = 0, pdf_err = 0;
    for (double s : log_grid(0.05, 50, 20)) {
      double num = laplace(e.construction, s), closed = e.lt(s);
      lt_err = std::max(lt_err, std::abs(num - closed));
      if (std::abs(num - closed) > 1e-6) {
        o.verdict = Verdict::fail;
        o.witnesses.push_back({{"entry", n}, {"check", "laplace"}, {"s", s}, {"numeric", num}, {"closed", closed}});
      }
    }
    for (double z : log_grid(0.05, 10, 10)) {
      double num = e.construction.pdf(z), closed = e.pdf(z);
      double err = std::abs(num - closed) / std::max(1.0, std::abs(closed));
      pdf_err = std::max(pdf_err, err);
      if (err > 1e-6) {
        o.verdict = Verdict::fail;
        o.witnesses.push_back({{"entry", n}, {"check", "pdf"}, {"z", z}, {"numeric", num}, {"closed", closed}});
      }
    }
    o.metrics[n] = {{"construction", e.construction.to_json()},
                    {"laplace_max_abs_error", lt_err},
                    {"pdf_max_rel_error", pdf_err},
                    {"pdf_at_1", e.pdf(1.0)}};
  }
  return o;
}

Outcome cmd_verify(const SuiteOptions& opt) {
  Outcome o;
  SuiteReport r = run_identity_suite(opt);
  json j = r.to_json();
  o.config = {{"identity", opt.identity}, {"k", opt.k}, {"trials", opt.trials}, {"seed", opt.seed}};
  if (opt.identity == "cm-real-k") o.config["n_max"] = opt.n_max;
  o.verdict = r.verdict;
  o.witnesses = r.witnesses;
  o.metrics = j;
  return o;
}

struct SimArgs {
  std::string levy, kind = "brownian", jump, ks_ref, csv;
  double sigma2 = 2, rate = 1, dt = 1e-3, horizon = 0, ks_max = 0.02;
  std::optional<double> drift;  // unset: the per-kind default
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  bool dufresne = false, ggc = false;
};

Outcome cmd_simulate(const SimArgs& a, unsigned threads) {
  Outcome o;
  LevySpec spec;
  if (!a.levy.empty()) {
    spec = LevySpec::from_json(parse_json(a.levy, "Levy"));
  } else {
    json j{{"kind", a.kind}};
    if (a.drift) j["drift"] = *a.drift;
    if (a.kind == "brownian") {
      j["sigma2"] = a.sigma2;
    } else {
      if (a.jump.empty()) throw ParseError("--jump is required for " + a.kind);
      j["rate"] = a.rate;
      j["jump"] = a.jump;
    }
    spec = LevySpec::from_json(j);
  }
  SimOptions opt;
  opt.dt = a.dt;
  opt.horizon = a.horizon;
  opt.threads = threads;
  o.config = {{"levy", spec.to_json()}, {"n", a.n}, {"seed", a.seed}, {"dt", a.dt}, {"horizon", a.horizon}};
  SimBatch b = simulate_exp_functional(spec, a.n, a.seed, opt);
  std::vector<double> xs = b.samples;
  std::sort(xs.begin(), xs.end());
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  auto q = [&](double p) { return xs[static_cast<std::size_t>(p * (xs.size() - 1))]; };
  o.metrics = {{"mean", mean}, {"min", xs.front()}, {"median", q(0.5)}, {"q99", q(0.99)}, {"max", xs.back()},
               {"meta", b.meta}};
  std::optional<Density> ref;
  if (a.dufresne) {
    if (spec.kind != LevySpec::Kind::brownian) throw ParseError("--dufresne needs the brownian kind");
    ref = dufresne_law(spec.sigma2, spec.drift);
  } else if (!a.ks_ref.empty()) {
    ref = Density::parse(a.ks_ref);
  }
  if (ref) {
    double d = ks_distance(b, *ref);
    o.config["ks_reference"] = ref->to_json();
    o.config["ks_max"] = a.ks_max;
    o.metrics["ks_distance"] = d;
    if (d > a.ks_max) {
      o.verdict = Verdict::fail;
      o.witnesses.push_back({{"check", "ks"}, {"distance", d}, {"max", a.ks_max}});
    }
  }
  if (spec.kind == LevySpec::Kind::drift_minus_subordinator) {
    double bound = 1 / std::abs(spec.drift) + 10 * a.dt;
    o.metrics["support_bound"] = bound;
    if (xs.back() > bound) {
      o.verdict = Verdict::fail;
      o.witnesses.push_back({{"check", "bounded-support"}, {"max", xs.back()}, {"bound", bound}});
    }
  }
  if (a.ggc) {
    GgcScreenReport g = ggc_screen(b);
    json gj = g.to_json();
    o.metrics["ggc_screen"] = {{"verdict", gj["hcm"]["verdict"]}, {"violations", gj["hcm"]["violations"]},
                               {"tolerance", g.tolerance}};
    if (g.hcm.verdict == Verdict::fail) {
      o.verdict = Verdict::fail;
      for (const auto& w : gj["hcm"]["witnesses"]) o.witnesses.push_back(w);
    }
  }
  if (!a.csv.empty()) {
    std::ofstream f(a.csv, std::ios::binary);
    if (!f) throw ParseError("cannot write " + a.csv);
    write_csv(f, b);
  }
  return o;
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperbolic monotonicity and GGC toolkit", "hmggc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;

  auto* hm = app.add_subcommand("check-hm", "test a density for HM_k");
  std::string hm_density;
  int hm_order = 1;
  bool hm_lc = false;
  HMConfig hm_cfg;
  hm->add_option("--density", hm_density, "density as JSON or shorthand")->required();
  hm->add_option("--order", hm_order, "k")->check(CLI::Range(1, 64));
  hm->add_option("--u-points", hm_cfg.u_points)->check(CLI::Range(2, 100000));
  hm->add_option("--w-points", hm_cfg.w_points)->check(CLI::Range(4, 100000));
  hm->add_option("--tol-rel", hm_cfg.tol_rel)->check(CLI::NonNegativeNumber);
  hm->add_option("--tol-abs", hm_cfg.tol_abs)->check(CLI::NonNegativeNumber);
  hm->add_flag("--log-concavity", hm_lc, "also run the log-concavity comparison");
  add_common(hm, common);

  auto* cm = app.add_subcommand("check-cm", "test a transform for complete monotonicity");
  TransformArgs cm_t;
  double s_lo = 1e-3, s_hi = 1e3;
  int cm_n = 8;
  CMConfig cm_cfg;
  add_transform(cm, cm_t);
  cm->add_option("--s-lo", s_lo)->check(CLI::PositiveNumber);
  cm->add_option("--s-hi", s_hi)->check(CLI::PositiveNumber);
  cm->add_option("--n-max", cm_n)->check(CLI::Range(1, 64));
  cm->add_option("--points", cm_cfg.points)->check(CLI::Range(2, 100000));
  cm->add_option("--tol-rel", cm_cfg.tol_rel)->check(CLI::NonNegativeNumber);
  cm->add_option("--tol-abs", cm_cfg.tol_abs)->check(CLI::NonNegativeNumber);
  add_common(cm, common);

  auto* hcm = app.add_subcommand("check-hcm", "test a transform for hyperbolic complete monotonicity");
  TransformArgs hcm_t;
  HCMConfig hcm_cfg;
  std::string refine = "auto";
  add_transform(hcm, hcm_t);
  hcm->add_option("--u-points", hcm_cfg.u_points)->check(CLI::Range(1, 100000));
  hcm->add_option("--u-lo", hcm_cfg.u_range.first)->check(CLI::PositiveNumber);
  hcm->add_option("--u-hi", hcm_cfg.u_range.second)->check(CLI::PositiveNumber);
  hcm->add_option("--n-max", hcm_cfg.n_max)->check(CLI::Range(1, 64));
  hcm->add_option("--tol-rel", hcm_cfg.cm.tol_rel)->check(CLI::NonNegativeNumber);
  hcm->add_option("--refine", refine, "high-order refinement near w = 2")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  add_common(hcm, common);

  auto* mix = app.add_subcommand("mix", "build a mixture density and check it");
  MixArgs mix_a;
  mix->add_option("--left", mix_a.left, "Y");
  mix->add_option("--right", mix_a.right, "X");
  mix->add_option("--op", mix_a.op)->check(CLI::IsMember({"product", "ratio"}));
  mix->add_option("--catalog", mix_a.catalog);
  mix->add_option("--krein", mix_a.krein, "Krein atoms JSON {\"atoms\":[[z,kappa],..],\"p\":..}");
  mix->add_option("--ladder", mix_a.ladder, "b,c,aH");
  mix->add_option("--tilt", mix_a.tilt, "alpha,delta");
  mix->add_option("--grid", mix_a.grid, "lo,hi,n for --csv");
  mix->add_option("--csv", mix_a.csv);
  add_common(mix, common);

  auto* ver = app.add_subcommand("verify", "randomized identity checks");
  SuiteOptions sopt;
  ver->add_option("--identity", sopt.identity)->required()->check(CLI::IsMember(identity_names()));
  ver->add_option("--k", sopt.k)->check(CLI::PositiveNumber);
  ver->add_option("--trials", sopt.trials)->check(CLI::Range(1, 1000000));
  ver->add_option("--seed", sopt.seed);
  ver->add_option("--n-max", sopt.n_max)->check(CLI::Range(1, 64));
  add_common(ver, common);

  auto* sim = app.add_subcommand("simulate", "exponential functionals of Levy processes");
  SimArgs sim_a;
  sim->add_option("--levy", sim_a.levy, "Levy spec JSON");
  sim->add_option("--kind", sim_a.kind)->check(CLI::IsMember({"brownian", "compound-poisson", "drift-minus-subordinator"}));
  sim->add_option("--sigma2", sim_a.sigma2);
  sim->add_option("--drift", sim_a.drift);
  sim->add_option("--rate", sim_a.rate);
  sim->add_option("--jump", sim_a.jump, "jump law (density JSON or shorthand)");
  sim->add_option("--n", sim_a.n)->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
  sim->add_option("--seed", sim_a.seed);
  sim->add_option("--dt", sim_a.dt)->check(CLI::PositiveNumber);
  sim->add_option("--horizon", sim_a.horizon)->check(CLI::NonNegativeNumber);
  sim->add_option("--ks-ref", sim_a.ks_ref, "reference density for the KS distance");
  sim->add_flag("--dufresne", sim_a.dufresne, "KS against the Dufresne law");
  sim->add_option("--ks-max", sim_a.ks_max)->check(CLI::NonNegativeNumber);
  sim->add_flag("--ggc-screen", sim_a.ggc, "empirical-LT HCM screen");
  sim->add_option("--csv", sim_a.csv, "write the samples here");
  add_common(sim, common);

  auto* cat = app.add_subcommand("catalog", "closed-form mixtures and their numeric checks");
  std::string cat_name;
  cat->add_option("--name", cat_name);
  add_common(cat, common);

  std::vector<std::string> argv_store{"hmggc"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  auto t0 = std::chrono::steady_clock::now();
  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  Outcome o;
  try {
    PrecisionGuard guard(common.precision);
    hm_cfg.precision_bits = common.precision;
    cm_cfg.start_bits = std::max(cm_cfg.start_bits, common.precision);
    cm_cfg.max_bits = std::max(cm_cfg.max_bits, cm_cfg.start_bits);
    hcm_cfg.cm.start_bits = std::max(hcm_cfg.cm.start_bits, common.precision);
    hcm_cfg.cm.max_bits = std::max(hcm_cfg.cm.max_bits, hcm_cfg.cm.start_bits);
    if (name == "check-hm") {
      o = cmd_check_hm(hm_density, hm_order, hm_cfg, hm_lc);
    } else if (name == "check-cm") {
      if (!(s_lo < s_hi)) throw ParseError("--s-lo must be below --s-hi");
      o = cmd_check_cm(cm_t, s_lo, s_hi, cm_n, cm_cfg);
    } else if (name == "check-hcm") {
      if (!(hcm_cfg.u_range.first <= hcm_cfg.u_range.second)) throw ParseError("--u-lo must not exceed --u-hi");
      o = cmd_check_hcm(hcm_t, hcm_cfg, refine);
    } else if (name == "mix") {
      o = cmd_mix(mix_a);
    } else if (name == "verify") {
      o = cmd_verify(sopt);
    } else if (name == "simulate") {
      o = cmd_simulate(sim_a, common.threads);
    } else {
      o = cmd_catalog(cat_name);
    }
  } catch (const ParseError& e) {
    err << "hmggc " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "hmggc " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const NormalizationError& e) {
    err << "hmggc " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const IntegrabilityError& e) {
    err << "hmggc " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const SplitSupportError& e) {
    err << "hmggc " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedSampler& e) {
    err << "hmggc " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const HorizonError& e) {
    err << "hmggc " << name << ": " << e.what() << " (suggested horizon " << e.suggested_horizon << ")\n";
    return 3;
  } catch (const Error& e) {
    err << "hmggc " << name << ": numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    err << "hmggc " << name << ": bad JSON: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "hmggc " << name << ": numerical failure: " << e.what() << "\n";
    return 3;
  }

  json report{{"command", name},
              {"config", o.config},
              {"verdict", to_string(o.verdict)},
              {"witnesses", o.witnesses},
              {"metrics", o.metrics},
              {"version", kVersion}};
  report["config"]["precision_bits"] = common.precision;
  report["config"]["threads"] = common.threads;
  if (!common.no_timestamp) {
    report["timestamp"] = utc_now();
    report["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  std::string text = report.dump(2) + "\n";
  if (common.out.empty()) {
    out << text;
  } else {
    std::ofstream f(common.out, std::ios::binary);
    if (!f) {
      err << "hmggc: cannot write " << common.out << "\n";
      return 2;
    }
    f << text;
  }
  return o.verdict == Verdict::pass ? 0 : 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace hmggc::cli
