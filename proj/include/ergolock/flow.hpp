#pragma once

// Suspension flow over an SFT under a depth-1 rational roof.

#include <optional>
#include <string>
#include <vector>

#include "ergolock/constants.hpp"
#include "ergolock/rational.hpp"
#include "ergolock/symbolic.hpp"

namespace ergolock {

class RoofFunction {
 public:
  explicit RoofFunction(std::vector<Rational> heights);
  static RoofFunction constant(int symbols, const Rational& r);

  const Rational& operator()(Symbol a) const { return r_[a]; }
  const Rational& r_min() const noexcept { return rmin_; }
  const Rational& r_max() const noexcept { return rmax_; }
  int size() const noexcept { return static_cast<int>(r_.size()); }
  const std::vector<Rational>& heights() const noexcept { return r_; }
  std::uint64_t hash() const;

 private:
  std::vector<Rational> r_;
  Rational rmin_, rmax_;
};

struct Suspension {
  Sft sft;
  RoofFunction roof;

  Suspension(Sft s, RoofFunction r);

  Rational word_time(const Symbols& w) const;
  std::uint64_t hash() const;
};

/// Point (x, s) of the suspension with 0 <= s < r(x_0).
struct FlowPoint {
  BiSequence base;
  Rational fiber;

  Symbol cell() const { return base.at(0); }
  bool operator==(const FlowPoint& o) const { return fiber == o.fiber && base == o.base; }
  bool operator!=(const FlowPoint& o) const { return !(*this == o); }
  std::string to_string() const;
};

/// Canonical point for the base shifted by `offset` with an arbitrary fiber.
FlowPoint make_point(const Suspension& sys, const BiSequence& base, const Rational& fiber, long offset = 0);

struct FlowStep {
  long crossings = 0;
  Rational fiber;
};

/// Net crossings and resulting fiber for flowing (base shifted by offset, fiber) by t.
FlowStep flow_step(const Suspension& sys, const BiSequence& base, long offset, const Rational& fiber,
                   const Rational& t);

FlowPoint flow(const Suspension& sys, const FlowPoint& p, const Rational& t);

/// A gluing representative: the point is (sigma^offset base, fiber) with the
/// fiber possibly outside [0, r(cell)).
struct Representative {
  const BiSequence* base = nullptr;
  long offset = 0;
  Rational fiber;
  Symbol cell = 0;
};

/// The canonical representative and its neighbours one roof below and above.
std::vector<Representative> representatives(const Suspension& sys, const FlowPoint& p);

/// 1 if cells differ, else max(base distance, |fiber difference|).
double rep_distance(const Representative& a, const Representative& b);

double sus_distance(const Suspension& sys, const FlowPoint& p, const FlowPoint& q);

struct Segment {
  FlowPoint start;
  Rational duration;
};

FlowPoint segment_end(const Suspension& sys, const Segment& s);

/// Restriction of s to [a, b] in its own time.
Segment sub_segment(const Suspension& sys, const Segment& s, const Rational& a, const Rational& b);

/// Times in (0, duration) at which the segment crosses into a new cell.
std::vector<Rational> crossing_times(const Suspension& sys, const Segment& s);

struct PeriodicOrbit {
  Word word;
  FlowPoint base;
  Rational period;

  std::string to_string() const;
  bool operator==(const PeriodicOrbit& o) const { return word == o.word; }
};

/// Orbit of a cyclically admissible primitive word (any rotation is accepted).
PeriodicOrbit make_orbit(const Suspension& sys, const Symbols& word);
/// `word=...;period=p/q`; the period is checked against the roof.
PeriodicOrbit parse_orbit(const Suspension& sys, std::string_view text);

/// Points of O at the start of each cell, with their orbit times.
struct Crossing {
  FlowPoint point;
  Rational time;
};
std::vector<Crossing> orbit_crossings(const Suspension& sys, const PeriodicOrbit& O);

struct Bracket {
  FlowPoint w;
  Rational v;
  double distance = 0.0;
};

/// Local product of x and y; requires d(x, y) <= delta'.
Bracket bracket(const Suspension& sys, const FlowPoint& x, const FlowPoint& y, const ConstantsLedger& ledger);

/// Uniform time grid on [0, T] with spacing min(r_min/4, 1/8), endpoints included.
std::vector<Rational> sample_grid(const Suspension& sys, const Rational& T);
Rational grid_spacing(const Suspension& sys);

struct JoinResult {
  Segment segment;
  Rational v;
  double endpoint_distance = 0.0;
  bool length_ok = false;
  double hausdorff = 0.0;
  double hausdorff_bound = 0.0;
  bool hausdorff_ok = false;
  /// Present when both durations are at least P0.
  std::optional<bool> contraction_ok;
  double contraction_lhs = 0.0;
  double contraction_rhs = 0.0;
};

JoinResult join(const Suspension& sys, const Segment& s1, const Segment& s2, const ConstantsLedger& ledger);

struct ClosingResult {
  PeriodicOrbit orbit;
  int multiplicity = 1;
  /// Point of the orbit matched in time with s^L.
  FlowPoint aligned_start;
  /// Length of the closed loop, multiplicity * period.
  Rational loop_length;
  double endpoint_distance = 0.0;
  double period_defect = 0.0;
  double shadow_max = 0.0;
  /// Shadow distance at the middle of the segment.
  double shadow_mid = 0.0;
  double grid_step = 0.0;
  bool defect_ok = false;
  bool shadow_ok = false;
};

/// Symbolic Anosov closing of an almost closed segment.
ClosingResult close_segment(const Suspension& sys, const Segment& s, const ConstantsLedger& ledger,
                            bool check_length = true);

struct ShadowSample {
  Rational t;
  double reparam = 0.0;
  double distance = 0.0;
  double envelope = 0.0;
  bool defined = true;
  bool pass = true;
};

struct ShadowReport {
  Rational v;
  double max_reparam = 0.0;
  double reparam_bound = 0.0;
  double max_excess = 0.0;
  bool pass = true;
  double grid_step = 0.0;
  std::vector<ShadowSample> samples;
};

ShadowReport shadow_check(const Suspension& sys, const FlowPoint& y, const FlowPoint& x, const Rational& T, double eta,
                          const ConstantsLedger& ledger);

/// Ledger with model-exact lambda = ln 2 / r_max, tau0 = r_min, beta = ln 2 / r_min
/// and derived delta, P0, K.
ConstantsLedger default_ledger(const Suspension& sys);

}  // namespace ergolock
