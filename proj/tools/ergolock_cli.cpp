// Batch front end: one experiment command per process, outputs written
// atomically to the output directory together with manifest.json.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ergolock/config.hpp"
#include "ergolock/errors.hpp"
#include "ergolock/locking.hpp"
#include "ergolock/parallel.hpp"

using namespace ergolock;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kConfig = 2, kContract = 3, kResource = 4 };

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

json jnum(double v) { return std::isfinite(v) ? json(v) : json(num(v)); }

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

json ledger_json(const ConstantsLedger& L) { return json::parse(L.to_json()); }

struct Context {
  Config cfg;
  Suspension sys = Suspension(Sft::golden_mean(), RoofFunction::constant(2, 1));
  ConstantsLedger ledger;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string cache;
  std::map<std::string, std::string> files;
  int status = kOk;

  long P() const { return cfg.get_int("run", "P", 12); }
  double alpha() const { return cfg.get_double("run", "alpha", 1.0); }
  Observable obs(const std::string& which) const {
    std::string name = cfg.get_string("run", which, which);
    return build_observable(cfg, sys, name, alpha());
  }
  OrbitCatalog catalog(const std::vector<const Observable*>& obs = {}) const {
    return cached_catalog(sys, static_cast<int>(P()), cache, obs);
  }
  QuadratureOptions quad() const {
    QuadratureOptions q;
    q.abs_tol = cfg.get_double("run", "abs_tol", q.abs_tol);
    q.rel_tol = cfg.get_double("run", "rel_tol", q.rel_tol);
    return q;
  }
  SubactionOptions subaction_options() const {
    SubactionOptions o;
    o.depth = static_cast<int>(cfg.get_int("run", "depth", o.depth));
    o.fiber_step = cfg.get_rational("run", "fiber_step", o.fiber_step);
    o.gamma = ledger.gamma_exact;
    o.alpha = alpha();
    o.q_factor = cfg.get_double("run", "q_factor", o.q_factor);
    if (ledger.Q.provenance == Provenance::Configured && cfg.get("ledger", "Q")) o.Q = ledger.Q.value;
    return o;
  }
  void fail_contract() { status = std::max(status, static_cast<int>(kContract)); }
};

std::vector<PeriodicOrbit> orbit_list(const Context& c, const std::string& key) {
  return build_orbits(c.sys, c.cfg.get_list("run", key));
}

struct BetaRun {
  BetaResult res;
  OrbitCatalog cat;
};

BetaRun run_beta(const Context& c, const Observable& u, const Observable& psi) {
  OrbitCatalog cat = c.catalog({&u, &psi});
  BetaResult res = beta_over_catalog(cat, u, psi, c.cfg.get_double("run", "tie_tol", 1e-12), c.threads);
  return {std::move(res), std::move(cat)};
}

// Z from run.Z, else the ratio argmin set of u.
std::vector<PeriodicOrbit> minimizing_set(Context& c) {
  auto Z = orbit_list(c, "Z");
  if (!Z.empty()) return Z;
  if (!c.cfg.observable_text(c.cfg.get_string("run", "u", "u")))
    throw Error(ErrorKind::ConfigError, "minimizing_set", "set run.Z or provide the observable u");
  Observable u = c.obs("u"), psi = c.obs("psi");
  return minimizing_set_estimate(run_beta(c, u, psi).res);
}

std::string words(const std::vector<PeriodicOrbit>& Z) {
  std::string s;
  for (const auto& O : Z) s += (s.empty() ? "" : " ") + O.word.to_string();
  return s;
}

// ---------------------------------------------------------------------------

void cmd_enumerate(Context& c) {
  OrbitCatalog cat = c.catalog();
  Csv csv({"index", "word", "length", "period"});
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const auto& O = cat.orbits[i];
    csv.row({std::to_string(i), O.word.to_string(), std::to_string(O.word.size()), to_string(O.period)});
  }
  c.files["catalog.csv"] = csv.str();
  if (!census_matches_trace(cat)) c.fail_contract();
}

void cmd_beta(Context& c) {
  Observable u = c.obs("u"), psi = c.obs("psi");
  BetaRun b = run_beta(c, u, psi);
  Csv csv({"orbit_word", "period", "int_u", "int_psi", "ratio"});
  for (std::size_t i = 0; i < b.cat.size(); ++i) {
    const auto& O = b.cat.orbits[i];
    csv.row({O.word.to_string(), to_string(O.period), to_string(b.res.int_u[i]), to_string(b.res.int_psi[i]),
             num(b.res.ratios[i].get_d())});
  }
  c.files["beta.csv"] = csv.str();
  json j;
  j["P"] = b.res.P;
  j["beta"] = to_string(b.res.beta_hat);
  j["beta_decimal"] = jnum(b.res.beta);
  j["argmin"] = json::array();
  for (const auto& O : b.res.argmin_orbits) j["argmin"].push_back(O.word.to_string());
  j["margin"] = jnum(b.res.margin);
  j["u_hash"] = hex(u.hash());
  j["psi_hash"] = hex(psi.hash());
  c.files["beta.json"] = j.dump(2) + "\n";
}

json certificate_json(const SubactionRun& run, const EdgeScan& scan) {
  const auto& cert = run.cert;
  json j;
  j["beta"] = to_string(run.beta);
  j["status"] = to_string(cert.status);
  j["nodes"] = run.graph->size();
  j["A"] = jnum(cert.A);
  j["alpha"] = jnum(cert.alpha);
  j["gamma"] = jnum(cert.gamma);
  j["slack"] = jnum(cert.slack);
  j["tol"] = jnum(cert.tol);
  j["relaxations"] = cert.relaxations;
  j["witness"] = cert.witness;
  j["witness_weight"] = jnum(cert.witness_weight);
  j["rescan"] = {{"edges", scan.edges}, {"min_margin", jnum(scan.min_margin)}, {"pass", scan.pass}};
  return j;
}

void cmd_subaction(Context& c) {
  Observable u = c.obs("u"), psi = c.obs("psi");
  BetaRun b = run_beta(c, u, psi);
  SubactionRun run = run_subaction(c.sys, u, psi, b.res.beta_hat, c.subaction_options());
  EdgeScan scan = rescan_edges(*run.graph, run.cert);
  json j = certificate_json(run, scan);
  j["feasible"] = run.cert.status == CertificateStatus::Feasible && run.cert.slack >= -run.cert.tol;
  c.files["subaction.json"] = j.dump(2) + "\n";
  Csv csv({"node", "window_point", "U", "v"});
  for (std::size_t i = 0; i < run.graph->size(); ++i)
    csv.row({std::to_string(i), run.graph->net().node(i).to_string(), num(run.graph->node_term(i)),
             num(run.cert.v[i])});
  c.files["subaction_nodes.csv"] = csv.str();
  if (!j["feasible"].get<bool>() || (run.cert.status == CertificateStatus::Feasible && !scan.pass)) c.fail_contract();
}

void cmd_reveal(Context& c) {
  Observable u = c.obs("u"), psi = c.obs("psi");
  BetaRun b = run_beta(c, u, psi);
  SubactionRun run = run_subaction(c.sys, u, psi, b.res.beta_hat, c.subaction_options());
  auto ubar = reveal(c.sys, run, minimizing_set_estimate(b.res));
  RevealCheck chk = check_reveal(c.sys, *ubar, run.graph->net());
  json j;
  j["beta"] = to_string(run.beta);
  j["Z"] = words(ubar->Z());
  j["node_min"] = jnum(chk.node_min);
  j["tol"] = jnum(chk.tol);
  j["nodes_ok"] = chk.nodes_ok;
  j["max_orbit_average"] = jnum(chk.max_orbit_average);
  j["orbits_ok"] = chk.orbits_ok;
  j["riemann_gap"] = jnum(chk.riemann_gap);
  j["sup_bound"] = jnum(ubar->sup_bound());
  j["holder_estimate"] = jnum(ubar->holder_estimate(c.ledger));
  c.files["reveal.json"] = j.dump(2) + "\n";
  Csv csv({"orbit_word", "period", "int_ubar", "avg_ubar"});
  QuadratureOptions q = c.quad();
  for (const auto& O : b.cat.orbits) {
    double I = ubar->orbit_integral(c.sys, O, q).value;
    csv.row({O.word.to_string(), to_string(O.period), num(I), num(I / O.period.get_d())});
  }
  c.files["reveal.csv"] = csv.str();
  if (!chk.nodes_ok || !chk.orbits_ok) c.fail_contract();
}

std::vector<PeriodicOrbit> targets(Context& c) {
  auto list = orbit_list(c, "orbits");
  if (!list.empty()) return list;
  return c.catalog().orbits;
}

void cmd_gap(Context& c) {
  Csv csv({"orbit_word", "period", "gap", "i", "j", "base_distance", "capped"});
  for (const auto& O : targets(c)) {
    GapReport g = gap(c.sys, O, c.ledger);
    csv.row({O.word.to_string(), to_string(O.period), num(g.gap), std::to_string(g.i), std::to_string(g.j),
             num(g.base_distance), g.capped ? "true" : "false"});
  }
  c.files["gap.csv"] = csv.str();
}

void cmd_deviation(Context& c) {
  auto Z = minimizing_set(c);
  const double a = c.alpha();
  auto orbits = targets(c);
  QuadratureOptions q = c.quad();
  auto rows = parallel_map(
      orbits.size(), [&](std::size_t i) { return alpha_deviation(c.sys, orbits[i], Z, a, q); }, c.threads);
  Csv csv({"orbit_word", "period", "Z", "alpha", "deviation", "quadrature_error", "samples"});
  for (std::size_t i = 0; i < orbits.size(); ++i)
    csv.row({orbits[i].word.to_string(), to_string(orbits[i].period), words(Z), num(a), num(rows[i].value),
             num(rows[i].quadrature_error), std::to_string(rows[i].samples)});
  c.files["deviation.csv"] = csv.str();
}

void cmd_split(Context& c) {
  auto Z = minimizing_set(c);
  auto starts = orbit_list(c, "orbits");
  if (starts.empty()) throw Error(ErrorKind::ConfigError, "split", "run.orbits lists the starting orbits");
  const double Lt = c.cfg.get_double("run", "Ltilde", 4.0), a = c.alpha();
  Csv steps({"start", "iteration", "word", "period", "gap", "deviation", "ratio", "action", "q", "shrink"});
  Csv summary({"start", "final", "steps", "iteration_bound", "satisfied", "max_growth", "growth_bound", "error"});
  std::ostringstream trace;
  for (const auto& O0 : starts) {
    const std::string s = O0.word.to_string();
    trace << "[trace." << s << "]\nZ = " << words(Z) << "\nLtilde = " << num(Lt) << "\nalpha = " << num(a) << '\n';
    try {
      SplitTrace tr = split_orbit(c.sys, O0, Z, Lt, a, c.ledger, c.quad());
      for (std::size_t i = 0; i < tr.steps.size(); ++i) {
        const auto& st = tr.steps[i];
        steps.row({s, std::to_string(i), st.word, to_string(st.period), num(st.gap), num(st.deviation), num(st.ratio),
                   to_string(st.action), std::to_string(st.q), num(st.shrink)});
        trace << "step = " << st.word << ' ' << to_string(st.action) << ' ' << st.q << '\n';
      }
      trace << "final = " << tr.final.word.to_string() << "\nsatisfied = " << (tr.satisfied ? "true" : "false")
            << "\n\n";
      summary.row({s, tr.final.word.to_string(), std::to_string(tr.steps.size()), std::to_string(tr.iteration_bound),
                   tr.satisfied ? "true" : "false", num(tr.max_growth), num(tr.growth_bound), ""});
      if (static_cast<int>(tr.steps.size()) > tr.iteration_bound) c.fail_contract();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigError) throw;
      summary.row({s, "", "0", "0", "false", "0", "0", to_string(e.kind())});
      trace << "error = " << to_string(e.kind()) << "\n\n";
      c.fail_contract();
    }
  }
  c.files["split.csv"] = steps.str();
  c.files["split_summary.csv"] = summary.str();
  c.files["split_trace.txt"] = trace.str();
}

void cmd_approx(Context& c) {
  auto Z = minimizing_set(c);
  auto ns = c.cfg.get_int_list("run", "n", {4, 5, 6, 7, 8, 9, 10});
  Csv csv({"n", "p_n", "blocks", "orbit_word", "period", "max_distance", "envelope", "within", "link_max",
           "link_bound", "closing_distance"});
  for (int n : ns) {
    ApproxReport r = periodic_approximation(c.sys, Z, n, c.ledger);
    csv.row({std::to_string(n), std::to_string(r.p_n), std::to_string(r.blocks), r.orbit.word.to_string(),
             to_string(r.orbit.period), num(r.max_distance), num(r.envelope), r.within ? "true" : "false",
             num(r.link_max), num(r.link_bound), num(r.closing_distance)});
    if (!r.within) c.fail_contract();
  }
  c.files["approx.csv"] = csv.str();
}

void cmd_decay(Context& c) {
  auto Z = minimizing_set(c);
  auto ks = c.cfg.get_int_list("run", "ks", {0, 1, 2});
  auto Ps = c.cfg.get_int_list("run", "P_list", {6, 7, 8, 9, 10, 11, 12});
  bool ex = c.cfg.get_string("run", "exclude_Z", "false") == "true";
  auto rows = decay_experiment(c.sys, Z, c.alpha(), ks, Ps, ex, c.quad(), c.threads);
  std::vector<std::string> header{"P", "min_dev", "argmin"};
  for (int k : ks) header.push_back("scaled_k" + std::to_string(k));
  Csv csv(header);
  for (const auto& r : rows) {
    std::vector<std::string> cells{std::to_string(r.P), num(r.min_dev), r.argmin};
    for (double s : r.scaled) cells.push_back(num(s));
    csv.row(cells);
  }
  c.files["decay.csv"] = csv.str();
}

json lock_json(const LockReport& r) {
  json j;
  j["orbit"] = r.orbit.word.to_string();
  j["P"] = r.P;
  j["base_argmin"] = r.base_argmin;
  j["margin"] = jnum(r.margin);
  j["locked"] = r.locked;
  j["trials"] = json::array();
  for (const auto& t : r.trials)
    j["trials"].push_back({{"seed", t.seed},
                           {"h_sup", jnum(t.h_sup)},
                           {"h_holder", jnum(t.h_holder)},
                           {"argmin", t.argmin},
                           {"unique", t.unique},
                           {"margin", jnum(t.margin)}});
  return j;
}

json terms_json(const ComparisonTerms& t) {
  return {{"inner", jnum(t.inner)},     {"bracket", jnum(t.bracket)}, {"middle", jnum(t.middle)},
          {"leading", jnum(t.leading)}, {"rhs", jnum(t.rhs)},         {"h_cap", jnum(t.h_cap)}};
}

void cmd_lock(Context& c) {
  Observable psi = c.obs("psi");
  const double a = c.alpha();
  LockOptions lo;
  lo.trials = static_cast<int>(c.cfg.get_int("run", "trials", 20));
  lo.seed = c.seed;
  lo.threads = c.threads;
  lo.alpha = a;
  lo.quad = c.quad();
  lo.tie_tol = c.cfg.get_double("run", "lock_tie_tol", lo.tie_tol);
  const std::string mode = c.cfg.get_string("run", "mode", "perturbation");
  json j;
  j["mode"] = mode;
  j["ledger"] = ledger_json(c.ledger);
  if (mode == "continuous") {
    auto Os = orbit_list(c, "orbit");
    if (Os.empty()) throw Error(ErrorKind::ConfigError, "lock", "run.orbit names the locked orbit");
    const PeriodicOrbit& O = Os.front();
    OrbitCatalog cat = c.catalog({&psi});
    auto u = orbit_distance_observable(c.sys, O, 1.0);
    const double C = c.ledger.C.value;
    const double window = gap(c.sys, O, c.ledger).gap / (4 * C * C * C * std::exp(2 * c.ledger.beta_exp.value));
    RhoOptions ro;
    ro.lock = lo;
    ro.theta_samples = static_cast<int>(c.cfg.get_int("run", "theta_samples", ro.theta_samples));
    double r1 = c.cfg.get_double("run", "rho1", window / 4), r2 = c.cfg.get_double("run", "rho2", window / 2);
    RhoReport r = continuous_locking_rho(c.sys, *u, psi, O, cat, c.ledger, r1, r2, ro);
    json th = json::array();
    for (const auto& s : r.theta) th.push_back({{"rho", jnum(s.rho)}, {"theta", jnum(s.theta)}, {"points", s.points}});
    j["rho"] = {{"gap", jnum(r.gap)},           {"rho1", jnum(r.rho1)},
                {"rho2", jnum(r.rho2)},         {"theta", th},
                {"theta_rho1", jnum(r.theta_rho1)}, {"theta_far", jnum(r.theta_far)},
                {"first_term", jnum(r.first_term)}, {"second_term", jnum(r.second_term)},
                {"rho_bound", jnum(r.rho_bound)}};
    j["lock"] = lock_json(r.lock);
    if (!(r.rho_bound > 0.0) || !r.lock.locked) c.fail_contract();
    c.files["lock.json"] = j.dump(2) + "\n";
    return;
  }
  if (mode != "perturbation") throw Error(ErrorKind::ConfigError, "lock", "run.mode is perturbation or continuous");
  Observable u = c.obs("u");
  auto Os = orbit_list(c, "orbit");
  std::optional<PeriodicOrbit> target;
  if (!Os.empty()) target = Os.front();
  const double eps = c.cfg.get_double("run", "eps", 0.25);
  OrbitCatalog cat = c.catalog({&u, &psi});
  LockExperiment e = run_lock_experiment(c.sys, u, psi, cat, target, eps, c.ledger, c.subaction_options(), lo);
  const auto& O = e.orbit;
  const auto& cr = e.comparison;
  const auto& lr = e.lock;
  const LockOutcome out = e.outcome;
  j["orbit"] = O.word.to_string();
  j["Z"] = words(e.Z);
  j["beta"] = to_string(e.beta.beta_hat);
  j["ubar_sup"] = jnum(e.ubar_sup);
  j["ubar_holder"] = jnum(e.ubar_holder);
  j["eps"] = jnum(eps);
  j["comparison"] = {{"lhs", jnum(cr.lhs)},
                     {"lhs_conservative", jnum(cr.lhs_conservative)},
                     {"gap", jnum(cr.gap)},
                     {"deviation", jnum(cr.deviation)},
                     {"deviation_error", jnum(cr.deviation_error)},
                     {"with_psi_gamma", terms_json(cr.with_psi_gamma)},
                     {"with_psi", terms_json(cr.with_psi)},
                     {"rhs", jnum(cr.rhs)},
                     {"h_cap", jnum(cr.h_cap)},
                     {"satisfied", cr.satisfied}};
  j["lock"] = lock_json(lr);
  j["outcome"] = to_string(out);
  c.files["lock.json"] = j.dump(2) + "\n";
  if (out == LockOutcome::SatisfiedNotLocked) c.fail_contract();
}

void cmd_calibrate(Context& c) {
  int budget = static_cast<int>(c.cfg.get_int("run", "budget", 200));
  CalibrationReport r = calibrate_constants(c.sys, budget, c.seed, c.ledger);
  json j;
  j["budget"] = budget;
  j["ledger"] = ledger_json(r.ledger);
  j["measured"] = {{"lambda", jnum(r.lambda_measured)}, {"beta", jnum(r.beta_measured)},
                   {"C_bracket", jnum(r.C_bracket)},    {"C_stable", jnum(r.C_stable)},
                   {"C_unstable", jnum(r.C_unstable)},  {"C_expansion", jnum(r.C_expansion)},
                   {"L", jnum(r.L_measured)},           {"pair_samples", r.pair_samples},
                   {"closing_samples", r.closing_samples}};
  c.files["calibrate.json"] = j.dump(2) + "\n";
}

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::CacheMismatch:
    case ErrorKind::InvalidArgument: return kConfig;
    case ErrorKind::NetTooLarge: return kResource;
    default: return kContract;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergolock: periodic-orbit locking experiments on suspension flows"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir = "out", cache_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "Experiment config file");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--threads", threads, "Worker threads");
  app.add_option("--cache", cache_path, "Orbit cache file");

  using Handler = void (*)(Context&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands{
      {"enumerate", "Build the periodic orbit catalog", cmd_enumerate},
      {"beta", "Ratio minimum over the catalog", cmd_beta},
      {"subaction", "Chain-graph subaction certificate", cmd_subaction},
      {"reveal", "Revealed observable and its positivity check", cmd_reveal},
      {"gap", "Gap of each orbit", cmd_gap},
      {"deviation", "alpha-deviation from the minimizing set", cmd_deviation},
      {"split", "Good-orbit splitting traces", cmd_split},
      {"approx", "Block-recoding periodic approximation", cmd_approx},
      {"decay", "Deviation decay table", cmd_decay},
      {"lock", "Locking verification", cmd_lock},
      {"calibrate", "Measure the ledger constants", cmd_calibrate}};
  std::vector<std::string> assignments;
  std::map<CLI::App*, Handler> handlers;
  for (const auto& [name, desc, h] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("assignments", assignments, "key=value overrides of [run] or section.key=value");
    handlers[sub] = h;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  CLI::App* sub = app.get_subcommands().front();

  Context c;
  std::vector<std::pair<std::string, std::string>> env;
  try {
    c.cfg = config_path.empty() ? Config{} : Config::load(config_path);
    env = c.cfg.apply_env();
    for (const auto& a : assignments) c.cfg.apply_assignment(a);
    c.seed = seed ? *seed : static_cast<std::uint64_t>(c.cfg.get_int("run", "seed", 1));
    c.threads = threads ? *threads : static_cast<int>(c.cfg.get_int("run", "threads", 1));
    if (c.threads < 1) throw Error(ErrorKind::ConfigError, "main", "threads must be positive");
    c.cache = cache_path.empty() ? c.cfg.get_string("run", "cache", "") : cache_path;
    c.sys = build_system(c.cfg);
    c.ledger = build_ledger(c.cfg, c.sys);
    handlers.at(sub)(c);
  } catch (const Error& e) {
    std::cerr << "ergolock " << sub->get_name() << ": " << e.what() << '\n';
    return exit_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ergolock " << sub->get_name() << ": " << e.what() << '\n';
    return kConfig;
  }

  json manifest;
  manifest["command"] = sub->get_name();
  manifest["version"] = kVersion;
  manifest["config_hash"] = hex(c.cfg.hash());
  manifest["system_hash"] = hex(c.sys.hash());
  manifest["seed"] = c.seed;
  manifest["threads"] = c.threads;
  manifest["env_overrides"] = json::array();
  for (const auto& [k, v] : env) manifest["env_overrides"].push_back(k + "=" + v);
  manifest["assignments"] = assignments;
  manifest["ledger"] = ledger_json(c.ledger);
  manifest["status"] = c.status;
  manifest["outputs"] = json::array();
  try {
    for (const auto& [name, content] : c.files) {
      write_atomic((std::filesystem::path(out_dir) / name).string(), content);
      manifest["outputs"].push_back({{"file", name}, {"bytes", content.size()}, {"fnv1a64", hex(fnv1a64(content))}});
    }
    write_atomic((std::filesystem::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "ergolock " << sub->get_name() << ": " << e.what() << '\n';
    return kConfig;
  }
  for (const auto& [name, content] : c.files) std::cout << (std::filesystem::path(out_dir) / name).string() << '\n';
  return c.status;
}
