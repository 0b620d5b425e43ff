#include <doctest.h>

#include <cmath>
#include <random>

#include "ergolock/ergopt.hpp"
#include "ergolock/errors.hpp"

using namespace ergolock;

namespace {

Symbols S(const char* s) { return parse_symbols(s); }

Suspension golden() { return Suspension(Sft::golden_mean(), RoofFunction::constant(2, 1)); }

// Ratio minimum by direct enumeration of every cyclically admissible word,
// with no rotation-class reduction.
Rational brute_beta(const Suspension& sys, int P, const Observable& u, const Observable& psi) {
  Rational best = 0;
  bool have = false;
  for (int n = 1; n <= P; ++n) {
    for (const auto& w : sys.sft.admissible_words(n)) {
      if (!sys.sft.cyclically_admissible(w)) continue;
      FlowPoint p{BiSequence::periodic(w), 0};
      Rational T = sys.word_time(w);
      Rational r = segment_integral(sys, Segment{p, T}, u) / segment_integral(sys, Segment{p, T}, psi);
      if (!have || r < best) best = r;
      have = true;
    }
  }
  return best;
}

std::vector<std::string> words(const std::vector<PeriodicOrbit>& orbits) {
  std::vector<std::string> out;
  for (const auto& O : orbits) out.push_back(O.word.to_string());
  return out;
}

}  // namespace

TEST_CASE("catalog census against the trace formula") {
  Suspension g = golden();
  OrbitCatalog cat = build_catalog(g, 12);
  CHECK(census_matches_trace(cat));
  CHECK(words(build_catalog(g, 4).orbits) == std::vector<std::string>{"0", "01", "001", "0001"});
  Suspension f3(Sft::full_shift(3), RoofFunction::constant(3, 1));
  CHECK(census_matches_trace(build_catalog(f3, 7)));
}

TEST_CASE("ratio averages") {
  Suspension g = golden();
  Observable one = Observable::constant(g, 1);
  Observable ind1 = Observable::indicator(g, 1);
  CHECK(ratio_average(g, make_orbit(g, S("001")), ind1, one) == Rational(1, 3));
  CHECK(ratio_average(g, make_orbit(g, S("010")), ind1, one) == Rational(1, 3));
  Observable psi = combine(1, one, 1, ind1);
  CHECK(ratio_average(g, make_orbit(g, S("001")), psi, psi) == 1);
  CHECK_THROWS_AS(ratio_average(g, make_orbit(g, S("01")), one, Observable::constant(g, 0)), Error);
  try {
    ratio_average(g, make_orbit(g, S("01")), one, Observable::indicator(g, 0));
    FAIL("expected NonPositiveWeight");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveWeight);
  }
}

TEST_CASE("beta over the golden-mean catalog") {
  Suspension g = golden();
  Observable one = Observable::constant(g, 1);
  Observable ind0 = Observable::indicator(g, 0), ind1 = Observable::indicator(g, 1);
  for (int P = 2; P <= 12; ++P) {
    OrbitCatalog cat = build_catalog(g, P);
    BetaResult b0 = beta_over_catalog(cat, ind0, one);
    CHECK(b0.beta_hat == Rational(1, 2));
    CHECK(words(b0.argmin_orbits) == std::vector<std::string>{"01"});
    BetaResult b1 = beta_over_catalog(cat, ind1, one);
    CHECK(b1.beta_hat == 0);
    CHECK(words(minimizing_set_estimate(b1)) == std::vector<std::string>{"0"});
  }
}

TEST_CASE("beta matches brute-force enumeration for random observables") {
  std::mt19937_64 rng(7);
  Suspension sys(Sft::golden_mean(), RoofFunction({Rational(1, 2), Rational(3, 2)}));
  OrbitCatalog cat = build_catalog(sys, 9);
  for (int trial = 0; trial < 5; ++trial) {
    Observable u = random_observable(sys, 1, rng);
    Observable psi = combine(1, Observable::constant(sys, 2), Rational(1, 4), random_observable(sys, 0, rng));
    CHECK(beta_over_catalog(cat, u, psi).beta_hat == brute_beta(sys, 9, u, psi));
  }
}

TEST_CASE("affine and scaling equivariance, monotonicity in P") {
  std::mt19937_64 rng(13);
  Suspension g = golden();
  Observable psi = combine(1, Observable::constant(g, 1), Rational(1, 2), Observable::indicator(g, 1));
  Observable u = random_observable(g, 1, rng);
  OrbitCatalog cat = build_catalog(g, 10);
  BetaResult base = beta_over_catalog(cat, u, psi);
  Rational c(7, 3);
  BetaResult shifted = beta_over_catalog(cat, combine(1, u, c, psi), psi);
  CHECK(shifted.beta_hat == base.beta_hat + c);
  CHECK(shifted.argmin == base.argmin);
  BetaResult scaled = beta_over_catalog(cat, combine(Rational(5, 2), u, 0, psi), psi);
  CHECK(scaled.beta_hat == Rational(5, 2) * base.beta_hat);
  CHECK(scaled.argmin == base.argmin);
  Rational prev = beta_over_catalog(build_catalog(g, 1), u, psi).beta_hat;
  for (int P = 2; P <= 10; ++P) {
    Rational b = beta_over_catalog(build_catalog(g, P), u, psi).beta_hat;
    CHECK(b <= prev);
    prev = b;
  }
}

TEST_CASE("exact ties are preserved") {
  Suspension f2(Sft::full_shift(2), RoofFunction::constant(2, 1));
  Observable one = Observable::constant(f2, 1);
  Observable u = Observable::indicator(f2, 1);
  BetaResult all = beta_over_catalog(build_catalog(f2, 4), one, one);
  CHECK(all.argmin.size() == build_catalog(f2, 4).size());
  std::map<Symbols, Polynomial> t{{S("0"), Polynomial{0, 0, 0, 0}}, {S("1"), Polynomial{0, 0, 0, 0}}};
  CHECK(beta_over_catalog(build_catalog(f2, 3), Observable(f2, 0, t), one).argmin.size() == 5);
  BetaResult b = beta_over_catalog(build_catalog(f2, 3), u, one);
  CHECK(words(b.argmin_orbits) == std::vector<std::string>{"0"});
  CHECK(b.margin == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("net construction and projection") {
  Suspension g = golden();
  Net net(g, 3, Rational(1, 4));
  CHECK(net.size() == g.sft.admissible_words(7).size() * 4);
  for (std::size_t i = 0; i < net.size(); ++i) CHECK(net.project(net.node(i)) == i);
  for (const auto& x : net.nodes()) {
    FlowPoint img = flow(g, x, 4);
    double d = sus_distance(g, img, net.node(net.project(img)));
    CHECK(d <= std::ldexp(1.0, -3) + 0.25);
  }
  CHECK_THROWS_AS(Net(g, 3, Rational(1, 4), 10), Error);
}

TEST_CASE("subaction on nonnegative and single-node graphs") {
  Suspension g = golden();
  Net net(g, 2, Rational(1, 2));
  ChainGraph zero(g, net, std::vector<double>(net.size(), 0.0), 4, 2.5, 1.0);
  SubactionCertificate c = solve_subaction(zero);
  CHECK(c.status == CertificateStatus::Feasible);
  CHECK(c.slack >= 0.0);
  for (double v : c.v) CHECK(v == 0.0);
  Suspension one(Sft::full_shift(1), RoofFunction::constant(1, 1));
  for (double w : {0.5, 0.0, -0.25}) {
    ChainGraph single(one, Net(one, 0, 1), {w}, 1, 1.0, 1.0);
    CHECK((solve_subaction(single).status == CertificateStatus::NegativeCycle) == (w < 0));
  }
}

TEST_CASE("subaction fixture, edge rescan and injected cycles") {
  Suspension g = golden();
  Observable one = Observable::constant(g, 1);
  Observable u = combine(1, Observable::indicator(g, 0), Rational(-1, 2), one);
  BetaResult b = beta_over_catalog(build_catalog(g, 8), u, one);
  CHECK(b.beta_hat == 0);
  SubactionOptions opt;
  SubactionRun run = run_subaction(g, u, one, b.beta_hat, opt);
  CHECK(run.cert.status == CertificateStatus::Feasible);
  CHECK(run.cert.slack >= -run.cert.tol);
  EdgeScan scan = rescan_edges(*run.graph, run.cert);
  CHECK(scan.pass);
  CHECK(scan.edges == static_cast<long>(run.graph->size() * run.graph->size()));
  std::mt19937_64 rng(99);
  for (int k = 0; k < 100; ++k) {
    std::size_t i = rng() % run.graph->size(), j = rng() % run.graph->size();
    CHECK(run.graph->weight(i, j) + run.cert.v[j] - run.cert.v[i] >= -1e-9);
  }
  ChainGraph injected = *run.graph;
  injected.inject_cycle({5}, -0.1);
  SubactionCertificate neg = solve_subaction(injected);
  CHECK(neg.status == CertificateStatus::NegativeCycle);
  CHECK(neg.witness == std::vector<std::size_t>{5});
  CHECK(std::fabs(neg.witness_weight + 0.1) <= 1e-12);
  ChainGraph multi = *run.graph;
  multi.inject_cycle({3, 17, 40}, -0.1);
  SubactionCertificate neg2 = solve_subaction(multi);
  CHECK(neg2.status == CertificateStatus::NegativeCycle);
  CHECK(cycle_weight(multi, neg2.witness) < 0.0);
  CHECK_THROWS_AS(reveal(g, SubactionRun{std::make_shared<ChainGraph>(multi), neg2, run.shifted, 0}, {}), Error);
}

TEST_CASE("overestimated beta produces a negative cycle") {
  Suspension g = golden();
  Observable one = Observable::constant(g, 1);
  Observable u = Observable::indicator(g, 0);
  // <"01", u - 3/5> = -1/5, far below the net error budget.
  SubactionRun run = run_subaction(g, u, one, Rational(3, 5), SubactionOptions{});
  CHECK(run.cert.status == CertificateStatus::NegativeCycle);
  CHECK(run.cert.witness_weight < 0.0);
}

TEST_CASE("reveal transform") {
  Suspension g = golden();
  Observable one = Observable::constant(g, 1);
  OrbitCatalog cat = build_catalog(g, 8);
  SUBCASE("u = beta psi") {
    Observable psi = combine(1, one, Rational(1, 2), Observable::indicator(g, 1));
    Observable u = combine(Rational(3, 2), psi, 0, psi);
    BetaResult b = beta_over_catalog(cat, u, psi);
    CHECK(b.beta_hat == Rational(3, 2));
    SubactionRun run = run_subaction(g, u, psi, b.beta_hat, SubactionOptions{});
    auto ubar = reveal(g, run, minimizing_set_estimate(b));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) CHECK(std::fabs(ubar->evaluate(random_point(g, rng, 10))) <= ubar->tol() + 1e-12);
  }
  SUBCASE("indicator of symbol 1") {
    Observable u = Observable::indicator(g, 1);
    BetaResult b = beta_over_catalog(cat, u, one);
    SubactionRun run = run_subaction(g, u, one, b.beta_hat, SubactionOptions{});
    REQUIRE(run.cert.status == CertificateStatus::Feasible);
    for (double v : run.cert.v) CHECK(v == 0.0);
    auto ubar = reveal(g, run, minimizing_set_estimate(b));
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
      FlowPoint p = random_point(g, rng, 10);
      CHECK(ubar->evaluate(p) == doctest::Approx(time_average(g, u, p, 4).get_d()));
      CHECK(ubar->evaluate(p) >= 0.0);
    }
    PeriodicOrbit zero = make_orbit(g, S("0"));
    CHECK(ubar->evaluate(zero.base) == 0.0);
    RevealCheck chk = check_reveal(g, *ubar, run.graph->net());
    CHECK(chk.nodes_ok);
    CHECK(chk.orbits_ok);
    CHECK(chk.riemann_gap <= 1e-9);
    for (std::size_t i = 0; i < cat.size(); ++i) {
      const auto& O = cat.orbits[i];
      double avg = ubar->orbit_integral(g, O, {}).value / O.period.get_d();
      double identity = Rational(b.int_u[i] / O.period).get_d() - b.beta * Rational(b.int_psi[i] / O.period).get_d();
      CHECK(avg == doctest::Approx(identity));
      CHECK(avg >= -ubar->tol());
    }
  }
}
