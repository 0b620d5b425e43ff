#include "ergolock/geometry.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "ergolock/errors.hpp"
#include "ergolock/parallel.hpp"

namespace ergolock {

bool disk_membership(const Suspension& sys, const FlowPoint& x, const FlowPoint& y, double eta,
                     const ConstantsLedger& ledger) {
  if (!(eta > 0.0) || eta > std::max(ledger.delta.value, ledger.delta_prime.value) + 1e-15)
    throw Error(ErrorKind::InvalidArgument, "disk_membership", "eta outside (0, max(delta, delta')]");
  if (x.cell() != y.cell() || x.fiber != y.fiber) return false;
  return sus_distance(sys, x, y) <= eta;
}

double d_metric(const Suspension& sys, const FlowPoint& x, const FlowPoint& y, const ConstantsLedger& ledger) {
  const double dp = ledger.delta_prime.value;
  return disk_membership(sys, x, y, dp, ledger) ? sus_distance(sys, x, y) : dp;
}

GapReport gap(const Suspension& sys, const PeriodicOrbit& O, const ConstantsLedger& ledger) {
  (void)sys;
  GapReport g;
  const double dp = ledger.delta_prime.value;
  g.gap = dp;
  g.base_distance = dp;
  const auto& w = O.word.symbols;
  const long n = static_cast<long>(w.size());
  const BiSequence x = BiSequence::periodic(w);
  for (long i = 0; i < n; ++i) {
    for (long j = i + 1; j < n; ++j) {
      if (w[i] != w[j]) continue;
      double d = shift_distance(x, i, x, j);
      if (d <= dp && (g.capped || d < g.base_distance)) {
        g.capped = false;
        g.base_distance = d;
        g.gap = d;
        g.i = i;
        g.j = j;
      }
    }
  }
  return g;
}

DeviationReport alpha_deviation(const Suspension& sys, const Segment& S, const std::vector<PeriodicOrbit>& Z,
                                double alpha, const QuadratureOptions& opt) {
  OrbitDistanceIntegrand f(sys, Z, alpha);
  IntegralValue v = f.integrate(sys, S, opt);
  return {std::max(v.value, 0.0), v.error, v.evaluations};
}

DeviationReport alpha_deviation(const Suspension& sys, const PeriodicOrbit& O, const std::vector<PeriodicOrbit>& Z,
                                double alpha, const QuadratureOptions& opt) {
  return alpha_deviation(sys, Segment{O.base, O.period}, Z, alpha, opt);
}

double max_distance_to_set(const Suspension& sys, const PeriodicOrbit& O, const std::vector<PeriodicOrbit>& Z) {
  OrbitSet set(Z);
  const BiSequence& x = O.base.base;
  double best = 0.0;
  for (long j = 0; j < static_cast<long>(O.word.size()); ++j) {
    DistanceProfile dp = distance_profile(sys, x, j, set);
    std::vector<double> s = dp.breaks();
    s.push_back(0.0);
    s.push_back(dp.roof);
    for (double v : s) best = std::max(best, dp.at(v));
  }
  return best;
}

// ---------------------------------------------------------------------------

LockingTestReport locking_test(const Suspension& sys, const FlowPoint& p, const PeriodicOrbit& O, const Rational& T,
                               const ConstantsLedger& ledger) {
  LockingTestReport rep;
  const double C = ledger.C.value;
  rep.threshold = gap(sys, O, ledger).gap / (4.0 * C * C * std::exp(ledger.beta_exp.value));
  std::vector<Rational> grid = sample_grid(sys, T);
  std::vector<double> dist;
  for (const Rational& t : grid) {
    FlowPoint pt = flow(sys, p, t);
    double d = distance_to_orbit(sys, pt, O);
    ++rep.samples;
    if (d > rep.threshold) {
      rep.escaped = true;
      rep.escape_time = t;
      rep.escape_cell = flow_step(sys, p.base, 0, p.fiber, t).crossings;
      return rep;
    }
    dist.push_back(d);
  }
  std::vector<FlowPoint> cands;
  auto crossings = orbit_crossings(sys, O);
  for (const auto& c : crossings) {
    cands.push_back(make_point(sys, c.point.base, p.fiber));
    cands.push_back(make_point(sys, c.point.base, p.fiber - sys.roof(p.cell())));
    cands.push_back(make_point(sys, c.point.base, p.fiber + sys.roof(p.base.at(-1))));
  }
  rep.worst_ratio = std::numeric_limits<double>::infinity();
  for (const auto& y : cands) {
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size() && worst < rep.worst_ratio; ++k) {
      double dy = sus_distance(sys, flow(sys, p, grid[k]), flow(sys, y, grid[k]));
      if (dy == 0.0) continue;
      worst = dist[k] > 0.0 ? std::max(worst, dy / (C * dist[k])) : std::numeric_limits<double>::infinity();
    }
    if (worst < rep.worst_ratio) {
      rep.worst_ratio = worst;
      rep.match = y;
    }
  }
  rep.tracking_ok = rep.worst_ratio <= 1.0 + 1e-12;
  return rep;
}

// ---------------------------------------------------------------------------

const char* to_string(SplitAction a) {
  switch (a) {
    case SplitAction::Accept: return "Accept";
    case SplitAction::Split: return "Split";
    case SplitAction::Close: return "Close";
    case SplitAction::Concatenate: return "Concatenate";
    case SplitAction::Stop: return "Stop";
  }
  return "Unknown";
}

SplitTrace split_orbit(const Suspension& sys, const PeriodicOrbit& O0, const std::vector<PeriodicOrbit>& Z,
                       double Ltilde, double alpha, const ConstantsLedger& ledger, const QuadratureOptions& opt) {
  if (Z.empty()) throw Error(ErrorKind::InvalidArgument, "split_orbit", "empty orbit set");
  SplitTrace tr;
  const double K = ledger.K.value;
  const double C = ledger.C.value, L = ledger.L.value, lam = ledger.lambda.value, beta = ledger.beta_exp.value;
  double p0 = O0.period.get_d();
  tr.iteration_bound = static_cast<int>(std::ceil(std::max(0.0, std::log(p0 / (3.0 * K)) / std::log(1.5)))) + 2;
  tr.growth_bound = (std::pow(C, alpha) * std::exp(alpha * beta) + 1.0) *
                    (2.0 * std::pow(2.0 * C * C * L, alpha) / (lam * alpha) * Ltilde + 1.0);
  PeriodicOrbit O = O0;
  double prev_dev = -1.0;
  const int max_iter = 4 * tr.iteration_bound + 16;
  for (int iter = 0;; ++iter) {
    if (iter > max_iter)
      throw Error(ErrorKind::SplitStalled, "split_orbit", "no convergence after " + std::to_string(max_iter) + " steps");
    GapReport g = gap(sys, O, ledger);
    DeviationReport dev = alpha_deviation(sys, O, Z, alpha, opt);
    SplitStep step;
    step.word = O.word.to_string();
    step.period = O.period;
    step.gap = g.gap;
    step.deviation = dev.value;
    double floor = std::max(opt.abs_tol, dev.quadrature_error);
    step.ratio = dev.value <= floor ? std::numeric_limits<double>::infinity()
                                    : std::pow(g.gap, alpha) / (dev.value + dev.quadrature_error);
    if (prev_dev > 0.0) tr.max_growth = std::max(tr.max_growth, dev.value / prev_dev);
    prev_dev = dev.value;
    if (step.ratio > Ltilde) {
      step.action = SplitAction::Accept;
      tr.steps.push_back(step);
      tr.satisfied = true;
      break;
    }
    if (g.capped) {
      step.action = SplitAction::Stop;
      tr.steps.push_back(step);
      break;
    }
    const auto& w = O.word.symbols;
    const long n = static_cast<long>(w.size());
    const BiSequence x = BiSequence::periodic(w);
    Symbols w1 = x.window(g.i, g.j), w2 = x.window(g.j, g.i + n);
    Rational t1 = sys.word_time(w1), t2 = sys.word_time(w2);
    bool first = t1 <= t2;
    const Symbols& piece = first ? w1 : w2;
    const long start = first ? g.i : g.j;
    const Rational l = first ? t1 : t2;
    Segment seg{FlowPoint{x.shifted(start), 0}, l};
    if (l.get_d() > 3.0 * K) {
      step.action = SplitAction::Split;
    } else if (l.get_d() < K) {
      step.action = SplitAction::Concatenate;
      step.q = std::max(2, static_cast<int>(std::ceil(K / l.get_d())));
      Symbols rep;
      for (int c = 0; c < step.q; ++c) rep.insert(rep.end(), piece.begin(), piece.end());
      Symbols tail = x.window(start + static_cast<long>(piece.size()), start + static_cast<long>(piece.size()) + n);
      BiSequence future(w, 0, rep, tail);
      seg = Segment{FlowPoint{BiSequence::splice(x.shifted(start), future), 0}, l * step.q};
    } else {
      step.action = SplitAction::Close;
    }
    ClosingResult res;
    try {
      res = close_segment(sys, seg, ledger, true);
    } catch (const Error& e) {
      throw Error(ErrorKind::SplitStalled, "split_orbit",
                  "closing the piece of '" + step.word + "' failed: " + std::string(e.what()));
    }
    if (!res.defect_ok || !res.shadow_ok)
      throw Error(ErrorKind::SplitStalled, "split_orbit", "closing contract failed on the piece of '" + step.word + "'");
    if (res.orbit == O)
      throw Error(ErrorKind::SplitStalled, "split_orbit", "closing returned the same orbit '" + step.word + "'");
    if (step.action == SplitAction::Split) step.shrink = Rational(res.orbit.period / O.period).get_d();
    tr.steps.push_back(step);
    O = res.orbit;
  }
  tr.final = O;
  return tr;
}

// ---------------------------------------------------------------------------

ApproxReport periodic_approximation(const Suspension& sys, const std::vector<PeriodicOrbit>& Z, int n,
                                    const ConstantsLedger& ledger) {
  if (Z.empty()) throw Error(ErrorKind::InvalidArgument, "periodic_approximation", "empty orbit set");
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "periodic_approximation", "n must be at least 2");
  const double dpp = ledger.delta_pp.value;
  int m = 0;
  while (std::ldexp(1.0, -(m + 1)) >= dpp) ++m;
  int b = 0;
  while (std::ldexp(1.0, -b) >= dpp) ++b;
  const Rational h(mpz_class(1), mpz_class(1) << b);

  // Itineraries of grid starting points under the time-one map, coded by the
  // partition (window of radius m) x (fiber bin of width h).
  std::map<std::pair<Symbols, long>, int> code_id;
  struct Start {
    FlowPoint x;
    std::vector<int> codes;
  };
  std::vector<Start> starts;
  for (const auto& O : Z) {
    const long period = O.period.get_num().get_si();
    for (Rational tau = 0; tau < O.period; tau += h) {
      Start s{flow(sys, O.base, tau), {}};
      FlowPoint q = s.x;
      for (long k = 0; k < period; ++k) {
        Rational bin = q.fiber / h;
        mpz_class bi = bin.get_num() / bin.get_den();
        auto key = std::make_pair(q.base.window(-m, m + 1), bi.get_si());
        auto it = code_id.emplace(key, static_cast<int>(code_id.size())).first;
        s.codes.push_back(it->second);
        q = flow(sys, q, 1);
      }
      starts.push_back(std::move(s));
    }
  }
  std::map<std::vector<int>, int> block_id;
  std::map<std::pair<int, int>, std::pair<std::size_t, long>> pair_rep;
  auto block = [&](const std::vector<int>& c, long k) {
    std::vector<int> out;
    const long p = static_cast<long>(c.size());
    for (long i = 0; i < n; ++i) out.push_back(c[(k + i) % p]);
    return out;
  };
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const auto& c = starts[s].codes;
    for (long k = 0; k < static_cast<long>(c.size()); ++k) {
      int u = block_id.emplace(block(c, k), static_cast<int>(block_id.size())).first->second;
      int v = block_id.emplace(block(c, k + n), static_cast<int>(block_id.size())).first->second;
      pair_rep.emplace(std::make_pair(u, v), std::make_pair(s, k));
    }
  }
  std::vector<std::vector<int>> succ(block_id.size());
  for (const auto& [uv, rep] : pair_rep) succ[uv.first].push_back(uv.second);
  for (auto& s : succ) std::sort(s.begin(), s.end());
  std::vector<int> cycle = shortest_cycle(succ);
  if (cycle.empty()) throw Error(ErrorKind::NotCloseable, "periodic_approximation", "block graph has no cycle");

  ApproxReport rep;
  rep.n = n;
  rep.p_n = static_cast<int>(cycle.size());
  rep.blocks = block_id.size();
  const std::size_t p = cycle.size();
  std::vector<FlowPoint> xs;
  for (std::size_t i = 0; i < p; ++i) {
    auto [s, k] = pair_rep.at({cycle[i], cycle[(i + 1) % p]});
    xs.push_back(flow(sys, starts[s].x, k));
  }
  const Rational nr(n);
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < p; ++i) {
    Rational v;
    try {
      v = bracket(sys, flow(sys, xs[i], nr), xs[(i + 1) % p], ledger).v;
    } catch (const Error& e) {
      throw Error(e.kind(), "periodic_approximation", "segment " + std::to_string(i) + ": " + e.what());
    }
    segs.push_back(Segment{flow(sys, xs[i], nr / 2), nr + v});
  }
  const double C = ledger.C.value, L = ledger.L.value, lam = ledger.lambda.value;
  const double decay = std::exp(-n * lam / 2.0) * dpp;
  rep.link_bound = 2.0 * C * C * decay;
  for (std::size_t i = 0; i < p; ++i)
    rep.link_max = std::max(rep.link_max, sus_distance(sys, segment_end(sys, segs[i]), segs[(i + 1) % p].start));
  Segment chain = segs[0];
  for (std::size_t i = 1; i < p; ++i) {
    try {
      chain = join(sys, chain, segs[i], ledger).segment;
    } catch (const Error& e) {
      throw Error(e.kind(), "periodic_approximation", "join at chain index " + std::to_string(i) + ": " + e.what());
    }
  }
  rep.closing_distance = sus_distance(sys, chain.start, segment_end(sys, chain));
  ClosingResult res;
  try {
    res = close_segment(sys, chain, ledger, true);
  } catch (const Error& e) {
    throw Error(e.kind(), "periodic_approximation", std::string("closing: ") + e.what());
  }
  rep.orbit = res.orbit;
  rep.max_distance = max_distance_to_set(sys, rep.orbit, Z);
  const double pn = static_cast<double>(p);
  rep.envelope = (2.0 * std::pow(C, 4) * L * pn + std::pow(C, 5) * pn * pn) * decay;
  rep.within = rep.max_distance <= rep.envelope;
  return rep;
}

std::vector<DecayRow> decay_experiment(const Suspension& sys, const std::vector<PeriodicOrbit>& Z, double alpha,
                                       const std::vector<int>& ks, const std::vector<int>& P_list, bool exclude_Z,
                                       const QuadratureOptions& opt, int threads) {
  if (P_list.empty()) return {};
  int Pmax = *std::max_element(P_list.begin(), P_list.end());
  int len = static_cast<int>(std::floor(Pmax / sys.roof.r_min().get_d() + 1e-9));
  OrbitCatalog cat = build_catalog(sys, std::max(len, 1));
  auto devs = parallel_map(
      cat.size(), [&](std::size_t i) { return alpha_deviation(sys, cat.orbits[i], Z, alpha, opt).value; }, threads);
  std::vector<DecayRow> rows;
  for (int P : P_list) {
    DecayRow row;
    row.P = P;
    row.min_dev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cat.size(); ++i) {
      const auto& O = cat.orbits[i];
      if (O.period > P) continue;
      if (exclude_Z && std::find(Z.begin(), Z.end(), O) != Z.end()) continue;
      if (devs[i] < row.min_dev) {
        row.min_dev = devs[i];
        row.argmin = O.word.to_string();
      }
    }
    for (int k : ks) row.scaled.push_back(std::pow(static_cast<double>(P), k) * row.min_dev);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ergolock
