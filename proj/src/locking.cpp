#include "ergolock/locking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergolock/errors.hpp"
#include "ergolock/parallel.hpp"

namespace ergolock {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// A symbol other than `avoid` that may follow `prev`, or -1.
Symbol other_successor(const Sft& sft, Symbol prev, Symbol avoid, std::mt19937_64& rng) {
  std::vector<Symbol> c;
  for (Symbol b = 0; b < sft.alphabet_size(); ++b)
    if (b != avoid && sft.allowed(prev, b)) c.push_back(b);
  if (c.empty()) return -1;
  return c[rng() % c.size()];
}

Symbol other_predecessor(const Sft& sft, Symbol next, Symbol avoid, std::mt19937_64& rng) {
  std::vector<Symbol> c;
  for (Symbol b = 0; b < sft.alphabet_size(); ++b)
    if (b != avoid && sft.allowed(b, next)) c.push_back(b);
  if (c.empty()) return -1;
  return c[rng() % c.size()];
}

// Same future as x, first disagreement at index -k.
std::optional<BiSequence> change_past(const Sft& sft, const BiSequence& x, long k, std::mt19937_64& rng) {
  Symbol b = other_predecessor(sft, x.at(-k + 1), x.at(-k), rng);
  if (b < 0) return std::nullopt;
  Symbols w{b};
  Symbols mid = x.window(-k + 1, 0);
  w.insert(w.end(), mid.begin(), mid.end());
  return BiSequence::splice(extend_word(sft, w, -k), x);
}

// Same past as x, first disagreement at index k.
std::optional<BiSequence> change_future(const Sft& sft, const BiSequence& x, long k, std::mt19937_64& rng) {
  Symbol b = other_successor(sft, x.at(k - 1), x.at(k), rng);
  if (b < 0) return std::nullopt;
  Symbols w = x.window(0, k);
  w.push_back(b);
  return BiSequence::splice(x, extend_word(sft, w, 0));
}

struct PairTrace {
  double d0 = 0.0;
  std::vector<std::pair<double, double>> samples;  // (t, distance)
};

PairTrace trace_pair(const Suspension& sys, const FlowPoint& x, const FlowPoint& y, const std::vector<Rational>& times) {
  PairTrace tr;
  tr.d0 = sus_distance(sys, x, y);
  for (const Rational& t : times) tr.samples.emplace_back(t.get_d(), sus_distance(sys, flow(sys, x, t), flow(sys, y, t)));
  return tr;
}

}  // namespace

// ---------------------------------------------------------------------------

CalibrationReport calibrate_constants(const Suspension& sys, int sample_budget, std::uint64_t seed) {
  return calibrate_constants(sys, sample_budget, seed, default_ledger(sys));
}

CalibrationReport calibrate_constants(const Suspension& sys, int sample_budget, std::uint64_t seed,
                                      const ConstantsLedger& base) {
  if (sample_budget < 1) throw Error(ErrorKind::InvalidArgument, "calibrate_constants", "sample budget must be positive");
  CalibrationReport rep;
  rep.ledger = base;
  const Sft& sft = sys.sft;
  const Rational T = sys.roof.r_max() * 6;
  std::vector<Rational> fwd = sample_grid(sys, T), bwd;
  for (const auto& t : fwd) bwd.push_back(-t);
  std::vector<Rational> both = bwd;
  both.insert(both.end(), fwd.begin() + 1, fwd.end());

  std::mt19937_64 rng(seed);
  std::vector<PairTrace> stable, unstable, general;
  std::vector<std::pair<FlowPoint, FlowPoint>> close_pairs;
  for (int n = 0; n < sample_budget; ++n) {
    FlowPoint x = random_point(sys, rng, 16);
    long k = 2 + static_cast<long>(rng() % 7);
    auto ys = change_past(sft, x.base, k, rng);
    auto yu = change_future(sft, x.base, k, rng);
    if (ys) stable.push_back(trace_pair(sys, x, FlowPoint{*ys, x.fiber}, fwd));
    if (yu) unstable.push_back(trace_pair(sys, x, FlowPoint{*yu, x.fiber}, bwd));
    if (ys) {
      auto yg = change_future(sft, *ys, k + static_cast<long>(rng() % 3), rng);
      if (yg) {
        FlowPoint y{*yg, x.fiber};
        general.push_back(trace_pair(sys, x, y, both));
        close_pairs.emplace_back(x, y);
      }
    }
  }
  rep.pair_samples = static_cast<long>(stable.size() + unstable.size() + general.size());

  // Asymptotic rates over the full window.
  rep.lambda_measured = std::numeric_limits<double>::infinity();
  const double Td = T.get_d();
  for (const auto* set : {&stable, &unstable}) {
    for (const auto& p : *set) {
      double dT = p.samples.back().second;
      if (dT > 0.0 && p.d0 > 0.0) rep.lambda_measured = std::min(rep.lambda_measured, std::log(p.d0 / dT) / Td);
    }
  }
  rep.beta_measured = 0.0;
  for (const auto& p : general) {
    for (const auto& [t, d] : p.samples) {
      if (std::abs(t) < 1.0 || d <= 0.0 || p.d0 <= 0.0) continue;
      rep.beta_measured = std::max(rep.beta_measured, std::log(d / p.d0) / std::abs(t));
    }
  }
  ConstantsLedger& L = rep.ledger;
  const long pairs = rep.pair_samples;
  if (std::isfinite(rep.lambda_measured) && rep.lambda_measured * 1.1 < L.lambda.value)
    L.lambda = {rep.lambda_measured / 1.1, Provenance::Calibrated, pairs};
  if (rep.beta_measured > 1.1 * L.beta_exp.value) L.beta_exp = {rep.beta_measured * 1.1, Provenance::Calibrated, pairs};

  auto envelope_max = [](const std::vector<PairTrace>& set, auto env) {
    double c = 1.0;
    for (const auto& p : set)
      for (const auto& [t, d] : p.samples)
        if (p.d0 > 0.0) c = std::max(c, d / (env(t) * p.d0));
    return c;
  };
  const double lam = L.lambda.value, beta = L.beta_exp.value;
  rep.C_stable = envelope_max(stable, [&](double t) { return std::exp(-lam * t); });
  rep.C_unstable = envelope_max(unstable, [&](double t) { return std::exp(lam * t); });
  rep.C_expansion = envelope_max(general, [&](double t) { return std::exp(beta * std::abs(t)); });
  for (const auto& [x, y] : close_pairs) {
    double d = sus_distance(sys, x, y);
    if (d <= 0.0 || d > L.delta_prime.value) continue;
    Bracket b;
    try {
      b = bracket(sys, x, y, L);
    } catch (const Error&) {
      continue;
    }
    FlowPoint xv = flow(sys, x, b.v);
    double m = std::max({std::abs(b.v.get_d()), sus_distance(sys, xv, b.w), sus_distance(sys, y, b.w),
                         sus_distance(sys, xv, x), sus_distance(sys, b.w, x)});
    rep.C_bracket = std::max(rep.C_bracket, m / d);
  }
  double C = std::max({1.0, rep.C_stable, rep.C_unstable, rep.C_expansion, rep.C_bracket});
  L.C = {C, Provenance::Calibrated, pairs};

  // Closing contract fits on pseudo-periodic segments.
  const int closings = std::max(1, sample_budget / 4);
  double Lhat = 0.0;
  for (int n = 0; n < closings; ++n) {
    int len = 1 + static_cast<int>(rng() % 6);
    Symbols w = random_walk(sft, len, rng);
    int radius = 3 + static_cast<int>(rng() % 6);
    int extra = static_cast<int>(rng() % 2);
    if (!sft.cyclically_admissible(w) || !is_primitive(w)) continue;
    Rational wt = sys.word_time(w);
    Rational q = base.K_exact / wt;
    mpz_class up;
    mpz_cdiv_q(up.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    long reps = std::max(1L, up.get_si()) + extra;
    Symbols core;
    for (long i = 0; i < reps * static_cast<long>(w.size()) + radius; ++i) core.push_back(w[i % w.size()]);
    BiSequence x = BiSequence::splice(BiSequence::periodic(w), extend_word(sft, core, 0));
    Segment s{FlowPoint{x, 0}, wt * reps};
    try {
      ClosingResult c = close_segment(sys, s, base, true);
      if (c.endpoint_distance <= 0.0) continue;
      Lhat = std::max(Lhat, std::max(c.period_defect, c.shadow_max) / c.endpoint_distance);
      ++rep.closing_samples;
    } catch (const Error&) {
    }
  }
  rep.L_measured = Lhat;
  if (rep.closing_samples > 0) L.L = {std::max(1.0, 1.1 * Lhat), Provenance::Calibrated, rep.closing_samples};
  L.refresh_derived(sys.roof.r_max());
  return rep;
}

// ---------------------------------------------------------------------------

ComparisonTerms comparison_terms(double ubar_sup, double ubar_holder, double psi_sup, double psi_min,
                                 double psi_gamma_holder, double eps, double alpha, double gap, const Rational& period,
                                 const ConstantsLedger& ledger) {
  const double C = ledger.C.value, lam = ledger.lambda.value, beta = ledger.beta_exp.value, tau0 = ledger.tau0.value;
  ComparisonTerms t;
  t.inner = 4.0 * std::pow(C, 3.0 * alpha) * (ubar_holder + 10.0 * eps + (ubar_sup + 1.0) / psi_min * psi_gamma_holder);
  t.bracket = t.inner / (lam * alpha * eps * tau0) + 1.0 + 1.0 / tau0;
  t.middle = ubar_holder * psi_sup / psi_min;
  const double far = 4.0 * C * C * C * std::exp(2.0 * beta);
  t.leading = 100.0 * std::pow(far, alpha) / eps;
  t.rhs = t.bracket * t.middle * t.leading;
  double num = eps / 2.0 * std::pow(gap / far, alpha);
  double den = (t.inner / (lam * alpha * eps) + period.get_d() + 1.0) * (psi_sup + psi_min) / psi_min;
  t.h_cap = std::min(num / den, 1.0);
  return t;
}

double psi_gamma_holder_bound(const Observable& psi, const ConstantsLedger& ledger, double alpha) {
  return psi.sup_norm() +
         std::pow(ledger.C.value, alpha) * std::exp(alpha * ledger.beta_exp.value * ledger.gamma.value) * psi.seminorm();
}

ComparisonReport comparison_rhs(const Suspension& sys, double ubar_sup, double ubar_holder, const Observable& psi,
                                double eps, const PeriodicOrbit& O, const std::vector<PeriodicOrbit>& Z,
                                const ConstantsLedger& ledger, double alpha, const QuadratureOptions& opt) {
  if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorKind::InvalidArgument, "comparison_rhs", "eps must lie in (0, 1]");
  const double pmin = psi.min_value();
  if (!(pmin > 0.0)) throw Error(ErrorKind::NonPositiveWeight, "comparison_rhs", "psi_min must be positive");
  ComparisonReport rep;
  rep.gap = gap(sys, O, ledger).gap;
  DeviationReport dev = alpha_deviation(sys, O, Z, alpha, opt);
  rep.deviation = dev.value;
  rep.deviation_error = dev.quadrature_error;
  const double num = std::pow(rep.gap, alpha);
  const double inf = std::numeric_limits<double>::infinity();
  rep.lhs = dev.value > 0.0 ? num / dev.value : inf;
  double hi = dev.value + dev.quadrature_error;
  rep.lhs_conservative = hi > 0.0 ? num / hi : inf;
  rep.with_psi_gamma = comparison_terms(ubar_sup, ubar_holder, psi.sup_norm(), pmin,
                                        psi_gamma_holder_bound(psi, ledger, alpha), eps, alpha, rep.gap, O.period,
                                        ledger);
  rep.with_psi = comparison_terms(ubar_sup, ubar_holder, psi.sup_norm(), pmin, psi.holder_norm(), eps, alpha, rep.gap,
                                  O.period, ledger);
  rep.rhs = std::max(rep.with_psi_gamma.rhs, rep.with_psi.rhs);
  rep.h_cap = std::min(rep.with_psi_gamma.h_cap, rep.with_psi.h_cap);
  rep.satisfied = rep.lhs_conservative > rep.rhs;
  return rep;
}

IntegrandPtr build_perturbation(const Suspension& sys, IntegrandPtr u, const PeriodicOrbit& O, double eps,
                                double alpha, const std::optional<Observable>& h) {
  std::vector<double> c{1.0, eps};
  std::vector<IntegrandPtr> parts{std::move(u), orbit_distance_observable(sys, O, alpha)};
  if (h) {
    c.push_back(1.0);
    parts.push_back(std::make_shared<ObservableIntegrand>(*h));
  }
  return std::make_shared<SumIntegrand>(std::move(c), std::move(parts));
}

// ---------------------------------------------------------------------------

Observable random_perturbation(const Suspension& sys, std::mt19937_64& rng, double h_norm, double h_cap, int radius,
                               int degree, double alpha) {
  Observable zero = Observable::constant(sys, 0, alpha);
  if (!(h_norm > 0.0) || !(h_cap > 0.0)) return zero;
  Observable h0 = random_observable(sys, radius, rng, degree, alpha);
  if (h0.holder_norm() <= 0.0) return zero;
  double c = 0.999 * std::min(h_norm / h0.holder_norm(), h_cap / std::max(h0.sup_norm(), 1e-300));
  for (int tries = 0; tries < 64; ++tries) {
    Observable h = combine(Rational(c), h0, 0, zero);
    if (h.holder_norm() < h_norm && h.sup_norm() < h_cap) return h;
    c *= 0.99;
  }
  return zero;
}

namespace {

struct RatioScan {
  std::string argmin;
  bool unique = false;
  double margin = 0.0;
};

RatioScan scan_ratios(const std::vector<double>& num, const std::vector<double>& den, std::size_t target,
                      const OrbitCatalog& cat, double tie_tol) {
  std::size_t best = 0;
  std::vector<double> r(num.size());
  for (std::size_t i = 0; i < num.size(); ++i) {
    r[i] = num[i] / den[i];
    if (r[i] < r[best]) best = i;
  }
  RatioScan s;
  s.argmin = cat.orbits[best].word.to_string();
  s.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i)
    if (i != target) s.margin = std::min(s.margin, r[i] - r[target]);
  s.unique = s.margin > tie_tol;
  return s;
}

}  // namespace

LockReport verify_locking(const Suspension& sys, const Integrand& u_pert, const Observable& psi,
                          const PeriodicOrbit& O, const OrbitCatalog& cat, const LockOptions& opt) {
  if (!(psi.min_value() > 0.0)) throw Error(ErrorKind::NonPositiveWeight, "verify_locking", "psi_min must be positive");
  auto it = std::find(cat.orbits.begin(), cat.orbits.end(), O);
  if (it == cat.orbits.end())
    throw Error(ErrorKind::InvalidArgument, "verify_locking", "orbit '" + O.word.to_string() + "' not in the catalog");
  const std::size_t target = static_cast<std::size_t>(it - cat.orbits.begin());
  LockReport rep;
  rep.orbit = O;
  rep.P = cat.P;
  std::vector<double> num = parallel_map(
      cat.size(), [&](std::size_t i) { return u_pert.orbit_integral(sys, cat.orbits[i], opt.quad).value; },
      opt.threads);
  std::vector<double> den(cat.size());
  for (std::size_t i = 0; i < cat.size(); ++i) den[i] = orbit_integral(sys, cat.orbits[i], psi).get_d();
  RatioScan base = scan_ratios(num, den, target, cat, opt.tie_tol);
  rep.base_argmin = base.argmin;
  rep.margin = base.margin;
  bool locked = base.unique;

  rep.trials = parallel_map(
      static_cast<std::size_t>(std::max(opt.trials, 0)),
      [&](std::size_t t) {
        LockTrial tr;
        tr.seed = mix_seed(opt.seed, t);
        std::mt19937_64 rng(tr.seed);
        Observable h = random_perturbation(sys, rng, opt.h_norm, opt.h_cap, opt.h_radius, opt.h_degree, opt.alpha);
        tr.h_sup = h.sup_norm();
        tr.h_holder = h.holder_norm();
        std::vector<double> n2 = num;
        for (std::size_t i = 0; i < cat.size(); ++i) n2[i] += orbit_integral(sys, cat.orbits[i], h).get_d();
        RatioScan s = scan_ratios(n2, den, target, cat, opt.tie_tol);
        tr.argmin = s.argmin;
        tr.unique = s.unique;
        tr.margin = s.margin;
        return tr;
      },
      opt.threads);
  for (const auto& tr : rep.trials) {
    locked = locked && tr.unique;
    rep.margin = std::min(rep.margin, tr.margin);
  }
  rep.locked = locked;
  return rep;
}

const char* to_string(LockOutcome o) {
  switch (o) {
    case LockOutcome::SatisfiedLocked: return "condition satisfied + locked";
    case LockOutcome::FailedLocked: return "condition failed + locked anyway";
    case LockOutcome::FailedNotLocked: return "condition failed + not locked";
    case LockOutcome::SatisfiedNotLocked: return "condition satisfied + not locked";
  }
  return "unknown";
}

LockOutcome classify(const ComparisonReport& c, const LockReport& l) {
  if (c.satisfied) return l.locked ? LockOutcome::SatisfiedLocked : LockOutcome::SatisfiedNotLocked;
  return l.locked ? LockOutcome::FailedLocked : LockOutcome::FailedNotLocked;
}

// ---------------------------------------------------------------------------

std::vector<FlowPoint> near_orbit_points(const Suspension& sys, const PeriodicOrbit& O, int count,
                                         std::mt19937_64& rng) {
  std::vector<FlowPoint> out;
  auto crossings = orbit_crossings(sys, O);
  for (int n = 0; n < count; ++n) {
    int kind = static_cast<int>(rng() % 4);
    const BiSequence& xb = crossings[rng() % crossings.size()].point.base;
    long k = 1 + static_cast<long>(rng() % 24);
    std::optional<BiSequence> y;
    if (kind == 1) y = change_future(sys.sft, xb, k, rng);
    if (kind == 2) y = change_past(sys.sft, xb, k, rng);
    if (kind == 3) {
      y = change_future(sys.sft, xb, k, rng);
      if (y) y = change_past(sys.sft, *y, k, rng);
    }
    std::uint64_t frac = rng() % 64;
    if (!y) {
      out.push_back(random_point(sys, rng));
      continue;
    }
    out.push_back(FlowPoint{*y, sys.roof(y->at(0)) * Rational(static_cast<long>(frac), 64)});
  }
  return out;
}

RhoReport continuous_locking_rho(const Suspension& sys, const Integrand& u, const Observable& psi,
                                 const PeriodicOrbit& O, const OrbitCatalog& cat, const ConstantsLedger& ledger,
                                 double rho1, double rho2, const RhoOptions& opt) {
  RhoReport rep;
  const double C = ledger.C.value, beta = ledger.beta_exp.value, lam = ledger.lambda.value;
  rep.gap = gap(sys, O, ledger).gap;
  rep.rho1 = rho1;
  rep.rho2 = rho2;
  const double window = rep.gap / (4.0 * C * C * C * std::exp(2.0 * beta));
  if (!(0.0 < rho1 && rho1 < rho2 && rho2 < window))
    throw Error(ErrorKind::GapTooSmall, "continuous_locking_rho",
                "need 0 < rho1 < rho2 < " + std::to_string(window) + " for orbit '" + O.word.to_string() + "'");
  const double pmin = psi.min_value();
  if (!(pmin > 0.0)) throw Error(ErrorKind::NonPositiveWeight, "continuous_locking_rho", "psi_min must be positive");
  for (const Rational& t : sample_grid(sys, O.period))
    if (std::abs(u.evaluate(flow(sys, O.base, t))) > 1e-12)
      throw Error(ErrorKind::InvalidArgument, "continuous_locking_rho", "u does not vanish on the orbit");

  std::mt19937_64 rng(opt.lock.seed);
  std::vector<FlowPoint> pts = near_orbit_points(sys, O, opt.theta_samples, rng);
  std::vector<double> d(pts.size()), val(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d[i] = distance_to_orbit(sys, pts[i], O);
    val[i] = u.evaluate(pts[i]);
    if (val[i] < -1e-12)
      throw Error(ErrorKind::InvalidArgument, "continuous_locking_rho", "u takes a negative value");
  }
  auto theta = [&](double rho) {
    ThetaSample s{rho, std::numeric_limits<double>::infinity(), 0};
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (d[i] >= rho) {
        s.theta = std::min(s.theta, val[i]);
        ++s.points;
      }
    return s;
  };
  const double far = rep.gap / (4.0 * C * C * std::exp(2.0 * beta));
  for (int j = 0; j < opt.grid; ++j) {
    double rho = opt.grid == 1 ? rho1 : rho1 * std::pow(far / rho1, static_cast<double>(j) / (opt.grid - 1));
    rep.theta.push_back(theta(rho));
  }
  rep.theta_rho1 = theta(rho1).theta;
  rep.theta_far = theta(far).theta;
  const double psi1 = psi.with_alpha(1.0).holder_norm();
  const double w = (1.0 + pmin) / pmin;
  rep.first_term = pmin * rep.theta_rho1 / (1.0 + pmin);
  rep.second_term =
      rep.theta_far / ((1.0 + psi1 / pmin) * 4.0 * C * C * C * rho2 / lam + O.period.get_d() * w + w);
  rep.rho_bound = 0.5 * std::min(rep.first_term, rep.second_term);
  LockOptions lo = opt.lock;
  lo.alpha = 1.0;
  lo.h_norm = rep.rho_bound;
  lo.h_cap = rep.rho_bound;
  rep.lock = verify_locking(sys, u, psi, O, cat, lo);
  return rep;
}

LockExperiment run_lock_experiment(const Suspension& sys, const Observable& u, const Observable& psi,
                                   const OrbitCatalog& cat, const std::optional<PeriodicOrbit>& O, double eps,
                                   const ConstantsLedger& ledger, const SubactionOptions& sub, LockOptions lock) {
  LockExperiment e;
  e.beta = beta_over_catalog(cat, u, psi, 1e-12, lock.threads);
  e.Z = minimizing_set_estimate(e.beta);
  e.orbit = O ? *O : e.Z.front();
  SubactionRun run = run_subaction(sys, u, psi, e.beta.beta_hat, sub);
  auto ubar = reveal(sys, run, e.Z);
  e.ubar_sup = ubar->sup_bound();
  e.ubar_holder = ubar->holder_estimate(ledger);
  e.comparison =
      comparison_rhs(sys, e.ubar_sup, e.ubar_holder, psi, eps, e.orbit, e.Z, ledger, lock.alpha, lock.quad);
  lock.h_norm = 10 * eps;
  lock.h_cap = e.comparison.h_cap;
  auto pert = build_perturbation(sys, ubar, e.orbit, eps, lock.alpha);
  e.lock = verify_locking(sys, *pert, psi, e.orbit, cat, lock);
  e.outcome = classify(e.comparison, e.lock);
  return e;
}

}  // namespace ergolock
