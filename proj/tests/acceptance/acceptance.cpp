// Acceptance gate: one PASS/FAIL line per criterion.
//
//   acceptance <ergolock_cli> <configs_dir> <scratch_dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ergolock/errors.hpp"
#include "ergolock/locking.hpp"

using namespace ergolock;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Symbols S(const char* s) { return parse_symbols(s); }

Suspension golden() { return Suspension(Sft::golden_mean(), RoofFunction::constant(2, 1)); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// trace([[1,1],[1,0]]^n) by repeated integer multiplication.
long golden_trace(int n) {
  long a = 1, b = 0, c = 0, d = 1;
  for (int i = 0; i < n; ++i) {
    long na = a + b, nb = a, nc = c + d, nd = c;
    a = na, b = nb, c = nc, d = nd;
  }
  return a + d;
}

Outcome census() {
  const auto t0 = std::chrono::steady_clock::now();
  OrbitCatalog cat = build_catalog(golden(), 12);
  std::map<std::size_t, long> classes;
  for (const auto& O : cat.orbits) ++classes[O.word.size()];
  bool ok = true;
  for (int n = 1; n <= 12; ++n) {
    long sum = 0;
    for (int d = 1; d <= n; ++d)
      if (n % d == 0) sum += d * classes[d];
    ok = ok && sum == golden_trace(n);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {ok && secs < 10.0, std::to_string(cat.size()) + " classes, n=1..12, " + fmt(secs) + " s < 10 s"};
}

Outcome ratio_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  Suspension g = golden();
  Observable one = Observable::constant(g, 1);
  Observable ind0 = Observable::indicator(g, 0), ind1 = Observable::indicator(g, 1);
  OrbitCatalog full = build_catalog(g, 12);
  bool ok = true;
  for (int P = 2; P <= 12; ++P) {
    BetaResult r = beta_over_catalog(build_catalog(g, P), ind0, one);
    ok = ok && r.beta_hat == Rational(1, 2) && r.argmin_orbits.size() == 1 &&
         r.argmin_orbits[0].word.to_string() == "01";
  }
  BetaResult r1 = beta_over_catalog(full, ind1, one);
  ok = ok && r1.beta_hat == 0 && r1.argmin_orbits.size() == 1 && r1.argmin_orbits[0].word.to_string() == "0";
  const Rational c(7, 3);
  BetaResult base = beta_over_catalog(full, ind0, one);
  BetaResult shifted = beta_over_catalog(full, combine(1, ind0, c, one), one);
  ok = ok && shifted.beta_hat == base.beta_hat + c;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {ok && secs < 30.0, "beta=1/2 argmin 01 for P=2..12, beta(ind1)=0, affine c=7/3 exact, " + fmt(secs) +
                                 " s < 30 s"};
}

Outcome subaction_certificate() {
  Suspension g = golden();
  Observable one = Observable::constant(g, 1);
  Observable u = combine(1, Observable::indicator(g, 0), Rational(-1, 2), one);
  OrbitCatalog cat = build_catalog(g, 12);
  BetaResult b = beta_over_catalog(cat, u, one);
  SubactionOptions opt;
  opt.depth = 3;
  opt.gamma = 4;
  SubactionRun run = run_subaction(g, u, one, b.beta_hat, opt);
  const auto& cert = run.cert;
  EdgeScan scan = rescan_edges(*run.graph, cert);
  bool ok = cert.status == CertificateStatus::Feasible && cert.slack >= -cert.tol && scan.pass;
  ChainGraph injected = *run.graph;
  injected.inject_cycle({3, 17, 40}, -0.1);
  SubactionCertificate neg = solve_subaction(injected);
  const double resum = neg.witness.empty() ? 0.0 : cycle_weight(injected, neg.witness);
  ok = ok && neg.status == CertificateStatus::NegativeCycle && std::fabs(resum + 0.1) <= 1e-12;
  return {ok, "beta=" + to_string(b.beta_hat) + ", slack " + fmt(cert.slack) + " >= -" + fmt(cert.tol) + ", " +
                  std::to_string(scan.edges) + " edges rescanned, injected witness sums to " + fmt(resum) +
                  " (+-1e-12)"};
}

Outcome reveal_positivity() {
  Suspension g = golden();
  Observable one = Observable::constant(g, 1);
  OrbitCatalog cat = build_catalog(g, 10);
  std::mt19937_64 rng(2024);
  int passed = 0;
  double worst_node = INFINITY, worst_avg = -INFINITY;
  for (int trial = 0; trial < 5; ++trial) {
    Observable u = random_observable(g, 1, rng);
    BetaResult b = beta_over_catalog(cat, u, one);
    SubactionRun run = run_subaction(g, u, one, b.beta_hat, SubactionOptions{});
    if (run.cert.status != CertificateStatus::Feasible) continue;
    auto ubar = reveal(g, run, minimizing_set_estimate(b));
    RevealCheck chk = check_reveal(g, *ubar, run.graph->net());
    worst_node = std::min(worst_node, chk.node_min + chk.tol);
    worst_avg = std::max(worst_avg, chk.max_orbit_average - chk.tol);
    if (chk.nodes_ok && chk.orbits_ok) ++passed;
  }
  return {passed == 5, std::to_string(passed) + "/5 random u; min(node_min + tol) " + fmt(worst_node) +
                           ", max(|avg| - tol) " + fmt(worst_avg)};
}

// Periodic with w on (-inf, len + n), then one flipped symbol.
BiSequence pseudo_periodic(const Symbols& w, int reps, int n) {
  const long len = static_cast<long>(w.size()) * reps;
  Symbols core;
  for (long i = 0; i < len + n; ++i) core.push_back(w[i % w.size()]);
  core.push_back(1 - w[n % w.size()]);
  return BiSequence(w, 0, core, S("0"));
}

Outcome closing_contracts() {
  Suspension g(Sft::full_shift(2), RoofFunction({Rational(1), Rational(3, 2)}));
  CalibrationReport cal = calibrate_constants(g, 200, 1);
  const ConstantsLedger& L = cal.ledger;
  const double Lc = L.L.value;
  const char* words[] = {"001", "01", "011", "0001", "0011", "0111", "00101", "00011", "001011"};
  int segments = 0, ok_contract = 0, decay_pairs = 0, ok_decay = 0;
  double worst_factor = INFINITY;
  for (const char* w : words) {
    const Symbols sw = S(w);
    const int reps = std::max(2, static_cast<int>(std::ceil(12.0 / sw.size())));
    double prev_mid = -1;
    for (int n = 3; n <= 8; ++n) {
      BiSequence x = pseudo_periodic(sw, reps, n);
      const Rational T = g.word_time(sw) * reps + Rational(1, 1L << (n + 2));
      ClosingResult c = close_segment(g, Segment{FlowPoint{x, 0}, T}, L);
      ++segments;
      const double d = c.endpoint_distance;
      if (c.period_defect <= Lc * d && c.shadow_max <= Lc * d) ++ok_contract;
      if (prev_mid > 0) {
        ++decay_pairs;
        const double factor = prev_mid / c.shadow_mid;
        worst_factor = std::min(worst_factor, factor);
        if (factor >= 1.8) ++ok_decay;
      }
      prev_mid = c.shadow_mid;
    }
  }
  return {segments >= 50 && ok_contract == segments && ok_decay == decay_pairs,
          std::to_string(ok_contract) + "/" + std::to_string(segments) + " segments within L=" + fmt(Lc) +
              " (calibrated), mid-shadow decay " + std::to_string(ok_decay) + "/" + std::to_string(decay_pairs) +
              " steps, worst factor " + fmt(worst_factor) + " >= 1.8"};
}

Outcome good_orbit_splitting() {
  Suspension g = golden();
  ConstantsLedger L = default_ledger(g);
  const std::vector<PeriodicOrbit> Z{make_orbit(g, S("0"))};
  int instances = 0, ok = 0, in_Z = 0;
  for (int a = 4; a <= 8; ++a)
    for (int b = a + 1; b <= a + 2; ++b) {
      const std::string w = std::string(a, '0') + "1" + std::string(b, '0') + "1";
      PeriodicOrbit O0 = make_orbit(g, parse_symbols(w));
      ++instances;
      try {
        SplitTrace tr = split_orbit(g, O0, Z, 4.0, 1.0, L);
        const int bound = static_cast<int>(std::ceil(std::log(O0.period.get_d() / (3 * L.K.value)) / std::log(1.5))) + 2;
        bool good = tr.satisfied && static_cast<int>(tr.steps.size()) <= bound;
        for (const auto& st : tr.steps)
          if (st.action == SplitAction::Split) good = good && st.shrink >= 1.0 / 3 - 1e-9;
        const double D = gap(g, tr.final, L).gap;
        const double dev = alpha_deviation(g, tr.final, Z, 1.0).value;
        good = good && (dev == 0.0 || D / dev > 4.0);
        if (good) ++ok;
        if (dev == 0.0) ++in_Z;
      } catch (const Error&) {
      }
    }
  return {instances == 10 && ok == instances,
          std::to_string(ok) + "/" + std::to_string(instances) + " instances 0^a 1 0^b 1 with Z={0}, Ltilde=4; " +
              std::to_string(in_Z) + " end on an orbit of Z"};
}

Outcome approximation_decay() {
  Suspension g = golden();
  ConstantsLedger L = default_ledger(g);
  std::vector<PeriodicOrbit> Z0{make_orbit(g, S("0"))};
  auto rows = decay_experiment(g, Z0, 1.0, {0, 1, 2}, {6, 7, 8, 9, 10, 11, 12});
  bool table_ok = rows.size() == 7;
  for (std::size_t i = 1; i < rows.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) table_ok = table_ok && rows[i].scaled[k] <= rows[i - 1].scaled[k] + 1e-12;
  std::vector<PeriodicOrbit> Z{make_orbit(g, S("0")), make_orbit(g, S("01"))};
  bool approx_ok = true;
  double prev = INFINITY, worst_ratio = 0.0;
  for (int n = 4; n <= 10; ++n) {
    ApproxReport r = periodic_approximation(g, Z, n, L);
    approx_ok = approx_ok && r.within && r.max_distance <= r.envelope && r.max_distance <= prev + 1e-12;
    worst_ratio = std::max(worst_ratio, r.max_distance / r.envelope);
    prev = r.max_distance;
  }
  return {table_ok && approx_ok, std::string("decay table nonincreasing for k=0,1,2 P=6..12: ") +
                                     (table_ok ? "yes" : "no") + "; Z={0,01} n=4..10 nonincreasing, max distance/" +
                                     "envelope " + fmt(worst_ratio)};
}

Outcome locking_fixture() {
  const auto t0 = std::chrono::steady_clock::now();
  Suspension g = golden();
  Observable u = Observable::indicator(g, 1), psi = Observable::constant(g, 1);
  OrbitCatalog cat = build_catalog(g, 8);
  ConstantsLedger L = default_ledger(g);
  LockOptions lo;
  lo.trials = 20;
  LockExperiment e =
      run_lock_experiment(g, u, psi, cat, make_orbit(g, S("0")), 0.25, L, SubactionOptions{}, lo);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = e.outcome != LockOutcome::SatisfiedNotLocked && e.lock.trials.size() == 20 && secs < 60.0;
  return {ok, std::string(to_string(e.outcome)) + ", margin " + fmt(e.lock.margin) + ", h_cap " +
                  fmt(e.comparison.h_cap) + ", " + fmt(secs) + " s < 60 s"};
}

Outcome continuous_locking() {
  Suspension g = golden();
  ConstantsLedger L = default_ledger(g);
  PeriodicOrbit O = make_orbit(g, S("0"));
  auto u = orbit_distance_observable(g, O, 1.0);
  Observable psi = Observable::constant(g, 1);
  OrbitCatalog cat = build_catalog(g, 8);
  RhoOptions ro;
  ro.lock.trials = 20;
  RhoReport r = continuous_locking_rho(g, *u, psi, O, cat, L, 1.0 / 2048, 1.0 / 1024, ro);
  bool unique = r.lock.trials.size() == 20;
  for (const auto& t : r.lock.trials) unique = unique && t.unique && t.argmin == "0";
  return {r.rho_bound > 0.0 && r.lock.locked && unique,
          "rho " + fmt(r.rho_bound) + " > 0, theta(rho1) " + fmt(r.theta_rho1) + ", 20 Lipschitz h locked: " +
              (r.lock.locked ? "yes" : "no")};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

Outcome determinism(const std::string& cli, const std::string& configs, const fs::path& scratch) {
  const std::string fixed = configs + "/golden_fixed_point.cfg", two = configs + "/golden_two_cycle.cfg";
  const std::vector<std::pair<std::string, std::string>> runs{
      {two, "enumerate"},
      {two, "beta"},
      {two, "subaction"},
      {fixed, "reveal"},
      {fixed, "gap P=8"},
      {fixed, "deviation P=8"},
      {fixed, "split orbits=000010000001,0000100000001"},
      {fixed, "approx n=4..6"},
      {fixed, "decay P_list=6..10"},
      {fixed, "lock P=8"},
      {fixed, "lock P=8 mode=continuous orbit=0 rho1=1/2048 rho2=1/1024"},
      {fixed, "calibrate budget=40"}};
  int same = 0;
  std::string bad;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::map<std::string, std::string> outs[2];
    for (int rep = 0; rep < 2; ++rep) {
      fs::path dir = scratch / ("run" + std::to_string(i) + "_" + std::to_string(rep));
      fs::remove_all(dir);
      const std::string cmd = "\"" + cli + "\" --config \"" + runs[i].first + "\" --seed 7 --out \"" + dir.string() +
                              "\" " + runs[i].second + " > /dev/null";
      const int rc = std::system(cmd.c_str());
      outs[rep] = read_dir(dir);
      if (rc != 0) outs[rep]["<rc>"] = std::to_string(rc);
    }
    if (!outs[0].empty() && outs[0].count("manifest.json") && outs[0] == outs[1])
      ++same;
    else
      bad += " " + runs[i].second.substr(0, runs[i].second.find(' '));
  }
  const bool ok = same == static_cast<int>(runs.size());
  return {ok, std::to_string(same) + "/" + std::to_string(runs.size()) + " command runs byte-identical" +
                  (bad.empty() ? "" : ", differing:" + bad)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 4) {
    std::cerr << "usage: acceptance <ergolock_cli> <configs_dir> <scratch_dir>\n";
    return 2;
  }
  const std::string cli = argv[1], configs = argv[2];
  const fs::path scratch = argv[3];
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"orbit census", census},
      {"ratio optimization exactness", ratio_exactness},
      {"subaction certificate", subaction_certificate},
      {"reveal positivity", reveal_positivity},
      {"closing contracts", closing_contracts},
      {"good-orbit splitting", good_orbit_splitting},
      {"periodic approximation decay", approximation_decay},
      {"locking fixture", locking_fixture},
      {"continuous-observable locking", continuous_locking},
      {"determinism", [&] { return determinism(cli, configs, scratch); }}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
