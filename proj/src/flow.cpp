#include "ergolock/flow.hpp"

#include <algorithm>
#include <cmath>

#include "ergolock/errors.hpp"

namespace ergolock {

namespace {

double abs_d(const Rational& q) { return std::abs(q.get_d()); }

Rational abs_q(const Rational& q) { return q < 0 ? Rational(-q) : q; }

}  // namespace

RoofFunction::RoofFunction(std::vector<Rational> heights) : r_(std::move(heights)) {
  if (r_.empty()) throw Error(ErrorKind::InvalidArgument, "RoofFunction", "no heights");
  for (auto& h : r_) {
    h.canonicalize();
    if (h <= 0) throw Error(ErrorKind::InvalidArgument, "RoofFunction", "roof must be positive");
  }
  rmin_ = *std::min_element(r_.begin(), r_.end());
  rmax_ = *std::max_element(r_.begin(), r_.end());
}

RoofFunction RoofFunction::constant(int symbols, const Rational& r) {
  return RoofFunction(std::vector<Rational>(static_cast<std::size_t>(symbols), r));
}

std::uint64_t RoofFunction::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& q : r_)
    for (char c : to_string(q) + ";") {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
  return h;
}

Suspension::Suspension(Sft s, RoofFunction r) : sft(std::move(s)), roof(std::move(r)) {
  if (roof.size() != sft.alphabet_size())
    throw Error(ErrorKind::InvalidArgument, "Suspension", "roof size differs from alphabet size");
}

Rational Suspension::word_time(const Symbols& w) const {
  Rational t = 0;
  for (Symbol a : w) t += roof(a);
  return t;
}

std::uint64_t Suspension::hash() const { return sft.hash() ^ (roof.hash() * 31u); }

std::string FlowPoint::to_string() const { return base.to_string() + "@" + ergolock::to_string(fiber); }

FlowStep flow_step(const Suspension& sys, const BiSequence& base, long offset, const Rational& fiber,
                   const Rational& t) {
  Rational s = fiber + t;
  long idx = offset;
  for (;;) {
    const Rational& r = sys.roof(base.at(idx));
    if (s >= r) {
      s -= r;
      ++idx;
    } else {
      break;
    }
  }
  while (s < 0) {
    --idx;
    s += sys.roof(base.at(idx));
  }
  return {idx - offset, s};
}

FlowPoint make_point(const Suspension& sys, const BiSequence& base, const Rational& fiber, long offset) {
  FlowStep st = flow_step(sys, base, offset, fiber, Rational(0));
  long shift = offset + st.crossings;
  return FlowPoint{shift == 0 ? base : base.shifted(shift), st.fiber};
}

FlowPoint flow(const Suspension& sys, const FlowPoint& p, const Rational& t) {
  if (t == 0) return p;
  FlowStep st = flow_step(sys, p.base, 0, p.fiber, t);
  return FlowPoint{st.crossings == 0 ? p.base : p.base.shifted(st.crossings), st.fiber};
}

std::vector<Representative> representatives(const Suspension& sys, const FlowPoint& p) {
  std::vector<Representative> reps;
  reps.reserve(3);
  Symbol c0 = p.base.at(0);
  Symbol cm = p.base.at(-1);
  reps.push_back({&p.base, 0, p.fiber, c0});
  reps.push_back({&p.base, -1, p.fiber + sys.roof(cm), cm});
  reps.push_back({&p.base, 1, p.fiber - sys.roof(c0), p.base.at(1)});
  return reps;
}

double rep_distance(const Representative& a, const Representative& b) {
  if (a.cell != b.cell) return 1.0;
  double base = shift_distance(*a.base, a.offset, *b.base, b.offset);
  double fib = abs_d(a.fiber - b.fiber);
  return std::max(base, fib);
}

namespace {

// (i, j) index pairs into representatives(): one of the two is canonical.
constexpr int kPairs[5][2] = {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {0, 2}};

}  // namespace

double sus_distance(const Suspension& sys, const FlowPoint& p, const FlowPoint& q) {
  if (p == q) return 0.0;
  auto rp = representatives(sys, p);
  auto rq = representatives(sys, q);
  double best = 1.0;
  for (const auto& pr : kPairs) best = std::min(best, rep_distance(rp[pr[0]], rq[pr[1]]));
  return std::min(best, 1.0);
}

FlowPoint segment_end(const Suspension& sys, const Segment& s) { return flow(sys, s.start, s.duration); }

Segment sub_segment(const Suspension& sys, const Segment& s, const Rational& a, const Rational& b) {
  if (a < 0 || b > s.duration || b < a)
    throw Error(ErrorKind::InvalidArgument, "sub_segment", "interval outside the segment");
  return Segment{flow(sys, s.start, a), b - a};
}

std::vector<Rational> crossing_times(const Suspension& sys, const Segment& s) {
  std::vector<Rational> out;
  Rational t = sys.roof(s.start.cell()) - s.start.fiber;
  long idx = 1;
  while (t < s.duration) {
    out.push_back(t);
    t += sys.roof(s.start.base.at(idx));
    ++idx;
  }
  return out;
}

std::string PeriodicOrbit::to_string() const {
  return "word=" + word.to_string() + ";period=" + ergolock::to_string(period);
}

PeriodicOrbit make_orbit(const Suspension& sys, const Symbols& word) {
  Word w = make_word(sys.sft, word);
  if (!w.primitive)
    throw Error(ErrorKind::InvalidArgument, "make_orbit", "word '" + to_string(word) + "' is not primitive");
  PeriodicOrbit O;
  O.period = sys.word_time(w.symbols);
  O.base = FlowPoint{BiSequence::periodic(w.symbols), Rational(0)};
  O.word = std::move(w);
  return O;
}

PeriodicOrbit parse_orbit(const Suspension& sys, std::string_view text) {
  std::string word, period;
  std::string s(text);
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t semi = s.find(';', pos);
    std::string part = s.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos);
    auto eq = part.find('=');
    if (eq != std::string::npos) {
      std::string key = part.substr(0, eq), val = part.substr(eq + 1);
      auto trim = [](std::string& x) {
        auto b = x.find_first_not_of(" \t");
        auto e = x.find_last_not_of(" \t");
        x = b == std::string::npos ? "" : x.substr(b, e - b + 1);
      };
      trim(key);
      trim(val);
      if (key == "word") word = val;
      else if (key == "period") period = val;
    }
    if (semi == std::string::npos) break;
    pos = semi + 1;
  }
  if (word.empty()) throw Error(ErrorKind::InvalidArgument, "parse_orbit", "missing word in '" + s + "'");
  PeriodicOrbit O = make_orbit(sys, parse_symbols(word));
  if (!period.empty() && parse_rational(period) != O.period)
    throw Error(ErrorKind::InvalidArgument, "parse_orbit", "period does not match roof for '" + s + "'");
  return O;
}

std::vector<Crossing> orbit_crossings(const Suspension& sys, const PeriodicOrbit& O) {
  std::vector<Crossing> out;
  Rational t = 0;
  const auto& w = O.word.symbols;
  for (std::size_t j = 0; j < w.size(); ++j) {
    out.push_back({FlowPoint{BiSequence::periodic(w, static_cast<long>(j)), Rational(0)}, t});
    t += sys.roof(w[j]);
  }
  return out;
}

Bracket bracket(const Suspension& sys, const FlowPoint& x, const FlowPoint& y, const ConstantsLedger& ledger) {
  auto rx = representatives(sys, x);
  auto ry = representatives(sys, y);
  int best = -1;
  double best_d = 2.0;
  for (int k = 0; k < 5; ++k) {
    const auto& a = rx[kPairs[k][0]];
    const auto& b = ry[kPairs[k][1]];
    if (a.cell != b.cell) continue;
    double d = rep_distance(a, b);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  if (best < 0) throw Error(ErrorKind::CellMismatch, "bracket", "no representatives share a cell");
  if (best_d > ledger.delta_prime.value)
    throw Error(ErrorKind::TooFar, "bracket",
                "distance " + std::to_string(best_d) + " exceeds delta' " + std::to_string(ledger.delta_prime.value));
  const auto& a = rx[kPairs[best][0]];
  const auto& b = ry[kPairs[best][1]];
  BiSequence future = a.offset == 0 ? x.base : x.base.shifted(a.offset);
  BiSequence past = b.offset == 0 ? y.base : y.base.shifted(b.offset);
  Bracket out{make_point(sys, BiSequence::splice(past, future), b.fiber), b.fiber - a.fiber, best_d};
  return out;
}

Rational grid_spacing(const Suspension& sys) {
  Rational h = sys.roof.r_min() / 4;
  return h < Rational(1, 8) ? h : Rational(1, 8);
}

std::vector<Rational> sample_grid(const Suspension& sys, const Rational& T) {
  std::vector<Rational> out;
  Rational h = grid_spacing(sys);
  for (Rational t = 0; t < T; t += h) out.push_back(t);
  out.push_back(T);
  return out;
}

JoinResult join(const Suspension& sys, const Segment& s1, const Segment& s2, const ConstantsLedger& ledger) {
  if (s1.duration < 1) throw Error(ErrorKind::InvalidArgument, "join", "first segment shorter than 1");
  FlowPoint s1R = segment_end(sys, s1);
  JoinResult res;
  res.endpoint_distance = sus_distance(sys, s1R, s2.start);
  if (res.endpoint_distance > ledger.delta_prime.value)
    throw Error(ErrorKind::TooFar, "join", "endpoint distance exceeds delta'");
  Bracket br = bracket(sys, s2.start, s1R, ledger);
  res.v = br.v;
  res.segment = Segment{flow(sys, br.w, -s1.duration), s1.duration + s2.duration - br.v};
  res.length_ok = abs_q(br.v) <= 1;

  const double C = ledger.C.value;
  res.hausdorff_bound = C * C * C * res.endpoint_distance;
  FlowPoint z = res.segment.start;
  Rational prev = 0;
  for (const Rational& t : sample_grid(sys, res.segment.duration)) {
    z = flow(sys, z, t - prev);
    prev = t;
    Rational t1 = t < s1.duration ? t : s1.duration;
    double d = sus_distance(sys, z, flow(sys, s1.start, t1));
    Rational t2 = t - s1.duration + br.v;
    if (t2 < 0) t2 = 0;
    if (t2 > s2.duration) t2 = s2.duration;
    d = std::min(d, sus_distance(sys, z, flow(sys, s2.start, t2)));
    res.hausdorff = std::max(res.hausdorff, d);
  }
  res.hausdorff_ok = res.hausdorff <= res.hausdorff_bound + 1e-15;

  if (s1.duration >= from_double(ledger.P0.value) && s2.duration >= from_double(ledger.P0.value)) {
    FlowPoint endR = segment_end(sys, res.segment);
    res.contraction_lhs = res.endpoint_distance;
    res.contraction_rhs =
        2.0 * sus_distance(sys, s1.start, res.segment.start) + 2.0 * sus_distance(sys, endR, segment_end(sys, s2));
    res.contraction_ok = res.contraction_lhs >= res.contraction_rhs;
  }
  return res;
}

ClosingResult close_segment(const Suspension& sys, const Segment& s, const ConstantsLedger& ledger,
                            bool check_length) {
  if (check_length && s.duration.get_d() < ledger.K.value)
    throw Error(ErrorKind::TooShort, "close_segment",
                "duration " + to_string(s.duration) + " below K " + std::to_string(ledger.K.value));
  if (s.duration <= 0) throw Error(ErrorKind::TooShort, "close_segment", "empty segment");
  const FlowPoint& p = s.start;
  const BiSequence& x = p.base;
  FlowStep st = flow_step(sys, x, 0, p.fiber, s.duration);
  const long k = st.crossings;
  ClosingResult res;
  FlowPoint q{x.shifted(k), st.fiber};
  res.endpoint_distance = sus_distance(sys, p, q);
  if (res.endpoint_distance > ledger.delta_prime.value)
    throw Error(ErrorKind::TooFar, "close_segment", "endpoints farther apart than delta'");

  // candidate representative offsets (a for s^L, b relative to k for s^R)
  const int cand[5][2] = {{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  auto fiber_at = [&](long base_fiber_offset, const Rational& f, long off) {
    Rational g = f;
    if (off == -1) g += sys.roof(x.at(base_fiber_offset - 1));
    if (off == 1) g -= sys.roof(x.at(base_fiber_offset));
    return g;
  };
  int best = -1;
  double best_d = 2.0;
  long best_a = 0, best_e = 0;
  Rational best_fa;
  for (int c = 0; c < 5; ++c) {
    long a = cand[c][0];
    long e = k + cand[c][1];
    if (e - a < 1) continue;
    if (x.at(a) != x.at(e)) continue;
    Rational fa = fiber_at(0, p.fiber, a);
    Rational fe = fiber_at(k, st.fiber, cand[c][1]);
    double d = std::max(shift_distance(x, a, x, e), abs_d(fa - fe));
    if (d < best_d) {
      best_d = d;
      best = c;
      best_a = a;
      best_e = e;
      best_fa = fa;
    }
  }
  if (best < 0) throw Error(ErrorKind::NotCloseable, "close_segment", "no matching cell at the endpoints");
  Symbols word = x.window(best_a, best_e);
  if (!sys.sft.cyclically_admissible(word))
    throw Error(ErrorKind::NotCloseable, "close_segment", "spliced word is not admissible");
  std::size_t per = primitive_period(word);
  res.multiplicity = static_cast<int>(word.size() / per);
  res.orbit = make_orbit(sys, Symbols(word.begin(), word.begin() + static_cast<long>(per)));
  res.loop_length = sys.word_time(word);
  res.aligned_start = make_point(sys, BiSequence::periodic(word), best_fa);

  const double Ld = ledger.L.value * res.endpoint_distance;
  res.period_defect = abs_d(s.duration - res.loop_length);
  res.defect_ok = res.period_defect <= Ld + 1e-15;

  Rational h = grid_spacing(sys);
  res.grid_step = h.get_d();
  Rational horizon = s.duration > res.loop_length ? s.duration : res.loop_length;
  Rational mid = s.duration / 2;
  FlowPoint a = res.aligned_start, b = p;
  Rational t = 0;
  bool mid_done = false;
  for (;;) {
    res.shadow_max = std::max(res.shadow_max, sus_distance(sys, a, b));
    if (!mid_done && t + h > mid) {
      res.shadow_mid = sus_distance(sys, flow(sys, a, mid - t), flow(sys, b, mid - t));
      mid_done = true;
    }
    if (t == horizon) break;
    Rational step = t + h > horizon ? Rational(horizon - t) : h;
    a = flow(sys, a, step);
    b = flow(sys, b, step);
    t += step;
  }
  res.shadow_ok = res.shadow_max <= Ld + 1e-15;
  return res;
}

ShadowReport shadow_check(const Suspension& sys, const FlowPoint& y, const FlowPoint& x, const Rational& T, double eta,
                          const ConstantsLedger& ledger) {
  ShadowReport rep;
  const double C = ledger.C.value;
  const double lambda = ledger.lambda.value;
  rep.reparam_bound = 2.0 * C * eta;
  rep.grid_step = grid_spacing(sys).get_d();
  rep.v = bracket(sys, y, x, ledger).v;
  const double d0 = sus_distance(sys, y, x);
  const double dT = sus_distance(sys, flow(sys, y, T), flow(sys, x, T));
  const FlowPoint yv = flow(sys, y, rep.v);
  for (const Rational& t : sample_grid(sys, T)) {
    ShadowSample smp;
    smp.t = t;
    FlowPoint yt = flow(sys, y, t), xt = flow(sys, x, t);
    try {
      smp.reparam = abs_d(bracket(sys, yt, xt, ledger).v);
    } catch (const Error&) {
      smp.defined = false;
    }
    smp.distance = sus_distance(sys, flow(sys, yv, t), xt);
    double tm = std::min(t.get_d(), Rational(T - t).get_d());
    smp.envelope = C * C * std::exp(-lambda * tm) * (d0 + dT);
    smp.pass = smp.defined && smp.reparam <= rep.reparam_bound + 1e-15 && smp.distance <= smp.envelope + 1e-15;
    rep.max_reparam = std::max(rep.max_reparam, smp.reparam);
    rep.max_excess = std::max(rep.max_excess, smp.distance - smp.envelope);
    rep.pass = rep.pass && smp.pass;
    rep.samples.push_back(std::move(smp));
  }
  return rep;
}

ConstantsLedger default_ledger(const Suspension& sys) {
  ConstantsLedger L;
  const double ln2 = std::log(2.0);
  L.lambda = {ln2 / sys.roof.r_max().get_d(), Provenance::ModelExact, 0};
  L.beta_exp = {ln2 / sys.roof.r_min().get_d(), Provenance::Derived, 0};
  L.tau0 = {sys.roof.r_min().get_d(), Provenance::ModelExact, 0};
  L.tau0_exact = sys.roof.r_min();
  L.refresh_derived(sys.roof.r_max());
  return L;
}

}  // namespace ergolock
