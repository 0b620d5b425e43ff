#pragma once

#include <string>
#include <vector>

#include "ergolock/rational.hpp"

namespace ergolock {

enum class Provenance { Configured, Calibrated, ModelExact, Derived };

const char* to_string(Provenance p);

struct LedgerEntry {
  double value = 0.0;
  Provenance provenance = Provenance::Configured;
  long samples = 0;
};

/// System constants used by every contract check. Time-like entries that feed
/// exact flow computations (gamma, tau0, K) also keep a rational value.
struct ConstantsLedger {
  LedgerEntry C{2.0, Provenance::Configured, 0};
  LedgerEntry lambda{0.0, Provenance::ModelExact, 0};
  LedgerEntry beta_exp{0.0, Provenance::Configured, 0};
  LedgerEntry delta{1.0 / 16.0, Provenance::Derived, 0};
  LedgerEntry delta_prime{0.25, Provenance::Configured, 0};
  LedgerEntry epsilon_bracket{0.5, Provenance::Configured, 0};
  LedgerEntry K{2.0, Provenance::Configured, 0};
  LedgerEntry L{2.0, Provenance::Configured, 0};
  LedgerEntry gamma{4.0, Provenance::Configured, 0};
  LedgerEntry Q{10.0, Provenance::Configured, 0};
  LedgerEntry tau0{1.0, Provenance::ModelExact, 0};
  LedgerEntry delta_pp{0.5, Provenance::Configured, 0};
  LedgerEntry P0{1.0, Provenance::Derived, 0};

  Rational gamma_exact{4};
  Rational tau0_exact{1};
  Rational K_exact{2};

  /// Net coupling A = Q / gamma.
  double A() const { return Q.value / gamma.value; }

  /// Smallest integer P0 >= 1 with C^2 e^{-lambda(P0-1)} + C^2 e^{-lambda P0} < 1/2.
  static double derive_P0(double C, double lambda);

  /// Recomputes delta = eps/8, P0 and K >= max(L, 2 r_max) after C, L or eps change.
  void refresh_derived(const Rational& r_max);

  struct Row {
    std::string name;
    LedgerEntry entry;
  };
  std::vector<Row> rows() const;
  std::string to_json() const;
};

}  // namespace ergolock
