#pragma once

// Transversal geometry of periodic orbits: disks, gaps, deviations from an
// orbit set, orbit splitting and symbolic periodic approximation.

#include <optional>
#include <string>
#include <vector>

#include "ergolock/ergopt.hpp"

namespace ergolock {

/// Same cell, equal fiber and d(x, y) <= eta.
bool disk_membership(const Suspension& sys, const FlowPoint& x, const FlowPoint& y, double eta,
                     const ConstantsLedger& ledger);

/// d(x, y) when y lies in the delta'-disk of x, delta' otherwise.
double d_metric(const Suspension& sys, const FlowPoint& x, const FlowPoint& y, const ConstantsLedger& ledger);

struct GapReport {
  double gap = 0.0;
  long i = -1;
  long j = -1;
  double base_distance = 0.0;
  bool capped = true;
};

/// Minimal same-cell distance between distinct crossings of O, capped at delta'.
GapReport gap(const Suspension& sys, const PeriodicOrbit& O, const ConstantsLedger& ledger);

struct DeviationReport {
  double value = 0.0;
  double quadrature_error = 0.0;
  long samples = 0;
};

DeviationReport alpha_deviation(const Suspension& sys, const Segment& S, const std::vector<PeriodicOrbit>& Z,
                                double alpha, const QuadratureOptions& opt = {});
DeviationReport alpha_deviation(const Suspension& sys, const PeriodicOrbit& O, const std::vector<PeriodicOrbit>& Z,
                                double alpha, const QuadratureOptions& opt = {});

/// max over the orbit of d(., Z), exact on the piecewise-linear distance profile.
double max_distance_to_set(const Suspension& sys, const PeriodicOrbit& O, const std::vector<PeriodicOrbit>& Z);

struct LockingTestReport {
  double threshold = 0.0;
  bool escaped = false;
  std::optional<Rational> escape_time;
  long escape_cell = -1;
  /// Matched orbit point y (when no escape) and the worst d(phi_t p, phi_t y) / (C d(phi_t p, O)).
  std::optional<FlowPoint> match;
  double worst_ratio = 0.0;
  bool tracking_ok = false;
  long samples = 0;
};

/// Sampled test of whether p stays within D(O) / (4 C^2 e^beta) of O on [0, T].
LockingTestReport locking_test(const Suspension& sys, const FlowPoint& p, const PeriodicOrbit& O, const Rational& T,
                               const ConstantsLedger& ledger);

enum class SplitAction { Accept, Split, Close, Concatenate, Stop };
const char* to_string(SplitAction a);

struct SplitStep {
  std::string word;
  Rational period;
  double gap = 0.0;
  double deviation = 0.0;
  double ratio = 0.0;
  SplitAction action = SplitAction::Accept;
  int q = 1;
  /// Period ratio new / old on Split steps, 0 otherwise.
  double shrink = 0.0;
};

struct SplitTrace {
  std::vector<SplitStep> steps;
  PeriodicOrbit final;
  bool satisfied = false;
  /// ceil(log_{3/2}(|O_0| / 3K)) + 2.
  int iteration_bound = 0;
  /// (C^a e^{a beta} + 1)(2 (2 C^2 L)^a / (lambda a) L~ + 1).
  double growth_bound = 0.0;
  double max_growth = 0.0;
};

SplitTrace split_orbit(const Suspension& sys, const PeriodicOrbit& O0, const std::vector<PeriodicOrbit>& Z,
                       double Ltilde, double alpha, const ConstantsLedger& ledger, const QuadratureOptions& opt = {});

struct ApproxReport {
  int n = 0;
  int p_n = 0;
  std::size_t blocks = 0;
  PeriodicOrbit orbit;
  double max_distance = 0.0;
  /// (2 C^4 L p_n + C^5 p_n^2) e^{-n lambda / 2} delta''.
  double envelope = 0.0;
  bool within = false;
  double link_max = 0.0;
  /// 2 C^2 e^{-n lambda / 2} delta''.
  double link_bound = 0.0;
  double closing_distance = 0.0;
};

/// Block recoding of Z, shortest block cycle, join chain and closing.
ApproxReport periodic_approximation(const Suspension& sys, const std::vector<PeriodicOrbit>& Z, int n,
                                    const ConstantsLedger& ledger);

struct DecayRow {
  int P = 0;
  double min_dev = 0.0;
  std::string argmin;
  /// P^k min_dev for each requested k.
  std::vector<double> scaled;
};

/// min over the catalog of d_{alpha,Z}; orbits of Z are skipped when exclude_Z is set.
std::vector<DecayRow> decay_experiment(const Suspension& sys, const std::vector<PeriodicOrbit>& Z, double alpha,
                                       const std::vector<int>& ks, const std::vector<int>& P_list,
                                       bool exclude_Z = false, const QuadratureOptions& opt = {}, int threads = 1);

}  // namespace ergolock
