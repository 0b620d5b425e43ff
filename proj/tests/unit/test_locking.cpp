#include <doctest.h>

#include <cmath>
#include <map>

#include "ergolock/errors.hpp"
#include "ergolock/locking.hpp"

using namespace ergolock;

namespace {

Suspension golden() { return Suspension(Sft::golden_mean(), RoofFunction::constant(2, 1)); }

PeriodicOrbit orbit(const Suspension& sys, const char* w) { return make_orbit(sys, parse_symbols(w)); }

struct Fixture {
  Suspension sys = golden();
  ConstantsLedger ledger = default_ledger(sys);
  Observable u = Observable::indicator(sys, 1);
  Observable psi = Observable::constant(sys, 1);
  PeriodicOrbit O = orbit(sys, "0");
  std::shared_ptr<RevealedObservable> ubar;
  OrbitCatalog cat = build_catalog(sys, 8);

  Fixture() {
    SubactionRun run = run_subaction(sys, u, psi, 0, SubactionOptions{});
    ubar = std::make_shared<RevealedObservable>(sys, run, std::vector<PeriodicOrbit>{O});
  }
};

}  // namespace

TEST_CASE("calibration keeps model entries and grows C with the budget") {
  auto sys = golden();
  double prev = 0.0;
  for (int budget : {20, 80, 320}) {
    CalibrationReport rep = calibrate_constants(sys, budget, 7);
    CHECK(rep.ledger.tau0.value == doctest::Approx(1.0));
    CHECK(rep.ledger.lambda.value == doctest::Approx(std::log(2.0)));
    CHECK(rep.ledger.lambda.provenance == Provenance::ModelExact);
    CHECK(rep.lambda_measured >= std::log(2.0) / 1.1);
    CHECK(rep.ledger.C.provenance == Provenance::Calibrated);
    CHECK(rep.ledger.C.samples == rep.pair_samples);
    CHECK(rep.ledger.C.value >= 1.0);
    CHECK(rep.ledger.C.value >= prev);
    CHECK(rep.ledger.K.value >= rep.ledger.L.value);
    prev = rep.ledger.C.value;
  }
  CHECK_THROWS_AS(calibrate_constants(sys, 0), Error);
}

TEST_CASE("calibrated stable contraction per unit time") {
  auto sys = golden();
  CalibrationReport rep = calibrate_constants(sys, 100, 3);
  const double lam = rep.ledger.lambda.value, C = rep.ledger.C.value;
  // common future, disagreement at -k
  for (int k = 2; k <= 8; ++k) {
    Symbols core(static_cast<std::size_t>(k), 0);
    core[0] = 1;
    FlowPoint x{BiSequence::periodic(parse_symbols("0")), 0};
    FlowPoint y{BiSequence(parse_symbols("0"), -k, core, parse_symbols("0")), 0};
    double d0 = sus_distance(sys, x, y);
    for (int t = 1; t <= 6; ++t) {
      double dt = sus_distance(sys, flow(sys, x, t), flow(sys, y, t));
      CHECK(dt <= C * std::exp(-lam * t) * d0 * 1.1);
      CHECK(dt <= std::pow(std::exp(-lam) * 1.1, t) * d0);
    }
  }
}

TEST_CASE("comparison condition terms") {
  auto sys = golden();
  auto L = default_ledger(sys);
  auto psi = Observable::constant(sys, 1);
  auto O = orbit(sys, "0001001");
  std::vector<PeriodicOrbit> Z{orbit(sys, "0")};
  SUBCASE("zero ubar norm annihilates the right side") {
    auto rep = comparison_rhs(sys, 0.0, 0.0, psi, 0.5, O, Z, L, 1.0);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.lhs > 0.0);
    CHECK(rep.satisfied);
  }
  SUBCASE("leading factor decreases in eps") {
    auto a = comparison_terms(1, 2, 1, 1, 1, 0.25, 1.0, 0.1, 7, L);
    auto b = comparison_terms(1, 2, 1, 1, 1, 0.5, 1.0, 0.1, 7, L);
    CHECK(b.leading < a.leading);
    CHECK(b.leading == doctest::Approx(a.leading / 2));
  }
  SUBCASE("independent re-evaluation on the revealed fixture") {
    Fixture f;
    const double us = f.ubar->sup_bound(), uh = f.ubar->holder_estimate(f.ledger);
    auto rep = comparison_rhs(f.sys, us, uh, f.psi, 0.25, f.O, {f.O}, f.ledger, 1.0);
    const double C = 2.0, lam = std::log(2.0), b = std::log(2.0), eps = 0.25, tau0 = 1.0;
    const double pmin = 1.0, p0 = 1.0, pg = 1.0;
    double inner = 4 * C * C * C * (uh + 10 * eps + (us + 1) / pmin * pg);
    double expect = (inner / (lam * eps * tau0) + 1 + 1 / tau0) * (uh * p0 / pmin) * (100 * 4 * C * C * C * std::exp(2 * b) / eps);
    CHECK(rep.rhs == doctest::Approx(expect).epsilon(1e-9));
    double cap = (eps / 2) * (0.25 / (4 * C * C * C * std::exp(2 * b))) / ((inner / (lam * eps) + 1 + 1) * (p0 + pmin) / pmin);
    CHECK(rep.h_cap == doctest::Approx(std::min(cap, 1.0)).epsilon(1e-9));
    CHECK(rep.gap == doctest::Approx(0.25));
    CHECK(rep.deviation == 0.0);
    CHECK(rep.satisfied);
  }
  SUBCASE("conservative budgeting") {
    auto rep = comparison_rhs(sys, 1.0, 1.0, psi, 0.5, O, Z, L, 1.0);
    CHECK(rep.lhs_conservative <= rep.lhs);
    CHECK(rep.rhs >= rep.with_psi_gamma.rhs);
    CHECK(rep.rhs >= rep.with_psi.rhs);
    CHECK(rep.h_cap <= rep.with_psi.h_cap);
    CHECK(rep.satisfied == (rep.lhs_conservative > rep.rhs));
  }
  CHECK_THROWS_AS(comparison_rhs(sys, 0, 0, psi, 0.0, O, Z, L, 1.0), Error);
  CHECK_THROWS_AS(comparison_rhs(sys, 0, 0, Observable::constant(sys, 0), 0.5, O, Z, L, 1.0), Error);
}

TEST_CASE("perturbation examples") {
  Fixture f;
  const double eps = 0.25;
  auto base = std::make_shared<ObservableIntegrand>(f.u);
  auto pert = build_perturbation(f.sys, base, f.O, eps, 1.0);
  for (Rational t = 0; t < 1; t += Rational(1, 8)) {
    FlowPoint p = flow(f.sys, f.O.base, t);
    CHECK(pert->evaluate(p) == doctest::Approx(f.u.evaluate(p)));
  }
  std::mt19937_64 rng(5);
  Observable h = random_perturbation(f.sys, rng, 0.1, 0.05, 1, 3, 1.0);
  auto with_h = build_perturbation(f.sys, base, f.O, eps, 1.0, h);
  QuadratureOptions q;
  Rational uh = orbit_integral(f.sys, f.O, f.u) + orbit_integral(f.sys, f.O, h);
  CHECK(with_h->orbit_integral(f.sys, f.O, q).value == doctest::Approx(uh.get_d()).epsilon(1e-9));
  for (const auto& Q : f.cat.orbits) {
    double lhs = pert->orbit_integral(f.sys, Q, q).value;
    double rhs = orbit_integral(f.sys, Q, f.u).get_d() + eps * alpha_deviation(f.sys, Q, {f.O}, 1.0).value;
    CHECK(lhs >= rhs - 1e-8);
  }
}

TEST_CASE("random perturbations respect both caps") {
  auto sys = golden();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    Observable h = random_perturbation(sys, rng, 0.3, 0.01, 1, 3, 1.0);
    CHECK(h.holder_norm() < 0.3);
    CHECK(h.sup_norm() < 0.01);
  }
  CHECK(random_perturbation(sys, rng, 0.0, 1.0, 1, 3, 1.0).holder_norm() < 1e-9);
}

TEST_CASE("locking on the revealed fixture") {
  Fixture f;
  const double eps = 0.25;
  auto cr = comparison_rhs(f.sys, f.ubar->sup_bound(), f.ubar->holder_estimate(f.ledger), f.psi, eps, f.O, {f.O},
                           f.ledger, 1.0);
  LockOptions lo;
  lo.h_norm = 10 * eps;
  lo.h_cap = cr.h_cap;
  lo.seed = 99;
  auto pert = build_perturbation(f.sys, f.ubar, f.O, eps, 1.0);
  auto rep = verify_locking(f.sys, *pert, f.psi, f.O, f.cat, lo);
  CHECK(rep.locked);
  CHECK(rep.base_argmin == "0");
  CHECK(rep.trials.size() == 20);
  for (const auto& t : rep.trials) {
    CHECK(t.argmin == "0");
    CHECK(t.unique);
    CHECK(t.h_sup < cr.h_cap);
    CHECK(t.h_holder < 10 * eps);
  }
  CHECK(classify(cr, rep) == LockOutcome::SatisfiedLocked);
  auto again = verify_locking(f.sys, *pert, f.psi, f.O, f.cat, lo);
  for (std::size_t i = 0; i < rep.trials.size(); ++i) {
    CHECK(again.trials[i].seed == rep.trials[i].seed);
    CHECK(again.trials[i].margin == rep.trials[i].margin);
  }
}

TEST_CASE("exact ties are not locked") {
  Suspension sys(Sft::full_shift(2), RoofFunction::constant(2, 1));
  std::map<Symbols, Polynomial> table;
  for (const auto& w : sys.sft.admissible_words(3)) table[w] = {Rational(w[0] != w[1] ? 1 : 0), 0, 0, 0};
  Observable u(sys, 1, table);
  Observable psi = Observable::constant(sys, 1);
  OrbitCatalog cat = build_catalog(sys, 6);
  LockOptions lo;
  lo.trials = 0;
  auto rep = verify_locking(sys, ObservableIntegrand(u), psi, orbit(sys, "0"), cat, lo);
  CHECK_FALSE(rep.locked);
  CHECK(rep.margin == doctest::Approx(0.0));
}

TEST_CASE("margin grows with eps") {
  Fixture f;
  LockOptions lo;
  lo.trials = 0;
  double prev = -1.0;
  for (double eps : {0.125, 0.25, 0.5}) {
    auto rep = verify_locking(f.sys, *build_perturbation(f.sys, f.ubar, f.O, eps, 1.0), f.psi, f.O, f.cat, lo);
    CHECK(rep.margin > prev);
    prev = rep.margin;
  }
}

TEST_CASE("locking is invariant under u + c psi and joint scaling") {
  Fixture f;
  LockOptions lo;
  lo.h_norm = 0.5;
  lo.h_cap = 1e-3;
  lo.trials = 5;
  auto base = std::make_shared<ObservableIntegrand>(f.u);
  auto r0 = verify_locking(f.sys, *build_perturbation(f.sys, base, f.O, 0.25, 1.0), f.psi, f.O, f.cat, lo);
  auto shifted = std::make_shared<ObservableIntegrand>(combine(1, f.u, 3, f.psi));
  auto r1 = verify_locking(f.sys, *build_perturbation(f.sys, shifted, f.O, 0.25, 1.0), f.psi, f.O, f.cat, lo);
  CHECK(r0.locked == r1.locked);
  CHECK(r0.margin == doctest::Approx(r1.margin));
  auto scaled = std::make_shared<ObservableIntegrand>(combine(3, f.u, 0, f.psi));
  LockOptions l3 = lo;
  l3.h_norm *= 3;
  l3.h_cap *= 3;
  auto r2 = verify_locking(f.sys, *build_perturbation(f.sys, scaled, f.O, 0.75, 1.0), f.psi, f.O, f.cat, l3);
  CHECK(r0.locked == r2.locked);
  for (std::size_t i = 0; i < r0.trials.size(); ++i) CHECK(r0.trials[i].argmin == r2.trials[i].argmin);
}

TEST_CASE("continuous-observable locking") {
  Fixture f;
  auto du = orbit_distance_observable(f.sys, f.O, 1.0);
  RhoReport rep = continuous_locking_rho(f.sys, *du, f.psi, f.O, f.cat, f.ledger, 1.0 / 2048, 1.0 / 1024);
  for (const auto& s : rep.theta) {
    CHECK(s.points > 0);
    CHECK(s.theta >= s.rho);
  }
  CHECK(rep.rho_bound > 0.0);
  CHECK(rep.lock.locked);
  for (const auto& t : rep.lock.trials) CHECK(t.h_holder < rep.rho_bound);
  CHECK_THROWS_AS(continuous_locking_rho(f.sys, *du, f.psi, f.O, f.cat, f.ledger, 1.0 / 1024, 1.0 / 256), Error);
  auto ind = std::make_shared<ObservableIntegrand>(Observable::indicator(f.sys, 0));
  CHECK_THROWS_AS(continuous_locking_rho(f.sys, *ind, f.psi, f.O, f.cat, f.ledger, 1.0 / 2048, 1.0 / 1024), Error);
}
