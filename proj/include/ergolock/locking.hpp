#pragma once

// Locking experiments: constants calibration, the comparison condition,
// perturbations u + eps d^alpha(., O) + h and brute-force verification that O
// stays the unique ratio minimizer over a catalog.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergolock/geometry.hpp"

namespace ergolock {

struct CalibrationReport {
  ConstantsLedger ledger;
  /// Worst measured exponential rates; the model values are kept unless these contradict them.
  double lambda_measured = 0.0;
  double beta_measured = 0.0;
  double C_bracket = 1.0;
  double C_stable = 1.0;
  double C_unstable = 1.0;
  double C_expansion = 1.0;
  double L_measured = 0.0;
  long pair_samples = 0;
  long closing_samples = 0;
};

/// Samples stable, unstable and general nearby pairs plus pseudo-periodic
/// segments. Sampling consumes the generator identically for every budget,
/// so a larger budget scans a superset of pairs.
CalibrationReport calibrate_constants(const Suspension& sys, int sample_budget, std::uint64_t seed = 1);
CalibrationReport calibrate_constants(const Suspension& sys, int sample_budget, std::uint64_t seed,
                                      const ConstantsLedger& base);

struct ComparisonTerms {
  double inner = 0.0;    // 4 C^{3a} (|ubar|_a + 10 eps + (|ubar|_0 + 1) / psi_min |psi_g|_a)
  double bracket = 0.0;  // inner / (lambda a eps tau0) + 1 + 1 / tau0
  double middle = 0.0;   // |ubar|_a |psi|_0 / psi_min
  double leading = 0.0;  // 100 (4 C^3 e^{2 beta})^a / eps
  double rhs = 0.0;
  double h_cap = 0.0;
};

ComparisonTerms comparison_terms(double ubar_sup, double ubar_holder, double psi_sup, double psi_min,
                                 double psi_gamma_holder, double eps, double alpha, double gap, const Rational& period,
                                 const ConstantsLedger& ledger);

struct ComparisonReport {
  double lhs = 0.0;
  /// lhs with the deviation raised by its quadrature error.
  double lhs_conservative = 0.0;
  double gap = 0.0;
  double deviation = 0.0;
  double deviation_error = 0.0;
  /// Terms with the propagated psi_gamma bound and with |psi_gamma|_a <= |psi|_a.
  ComparisonTerms with_psi_gamma;
  ComparisonTerms with_psi;
  double rhs = 0.0;
  double h_cap = 0.0;
  bool satisfied = false;
};

/// Evaluates the comparison condition for O relative to Z; the larger rhs and
/// the smaller cap of the two psi_gamma treatments are the ones compared.
ComparisonReport comparison_rhs(const Suspension& sys, double ubar_sup, double ubar_holder, const Observable& psi,
                                double eps, const PeriodicOrbit& O, const std::vector<PeriodicOrbit>& Z,
                                const ConstantsLedger& ledger, double alpha, const QuadratureOptions& opt = {});

/// Propagated bound |psi_gamma|_a <= |psi|_0 + C^a e^{a beta gamma} [psi]_a.
double psi_gamma_holder_bound(const Observable& psi, const ConstantsLedger& ledger, double alpha);

/// u + eps d(., O)^alpha + h.
IntegrandPtr build_perturbation(const Suspension& sys, IntegrandPtr u, const PeriodicOrbit& O, double eps,
                                double alpha, const std::optional<Observable>& h = std::nullopt);

struct LockTrial {
  std::uint64_t seed = 0;
  double h_sup = 0.0;
  double h_holder = 0.0;
  std::string argmin;
  bool unique = false;
  double margin = 0.0;
};

struct LockReport {
  PeriodicOrbit orbit;
  int P = 0;
  /// Unperturbed (h = 0) outcome.
  std::string base_argmin;
  double margin = 0.0;
  std::vector<LockTrial> trials;
  bool locked = false;
};

struct LockOptions {
  int trials = 20;
  /// Strict bounds on the Hoelder norm and on the sup norm of h.
  double h_norm = 0.0;
  double h_cap = 1.0;
  int h_radius = 1;
  int h_degree = 3;
  double alpha = 1.0;
  std::uint64_t seed = 1;
  double tie_tol = 1e-9;
  int threads = 1;
  QuadratureOptions quad{};
};

/// Ratio averages of u_pert + h over the catalog for h = 0 and for `trials`
/// random cylinder-fiber h scaled below both norm bounds.
LockReport verify_locking(const Suspension& sys, const Integrand& u_pert, const Observable& psi,
                          const PeriodicOrbit& O, const OrbitCatalog& cat, const LockOptions& opt);

/// Random h with |h|_alpha < h_norm and |h|_0 < h_cap under the certified bounds.
Observable random_perturbation(const Suspension& sys, std::mt19937_64& rng, double h_norm, double h_cap, int radius,
                               int degree, double alpha);

enum class LockOutcome { SatisfiedLocked, FailedLocked, FailedNotLocked, SatisfiedNotLocked };
const char* to_string(LockOutcome o);
LockOutcome classify(const ComparisonReport& c, const LockReport& l);

/// Full pipeline: beta over the catalog, subaction, reveal, comparison
/// condition and locking trials with |h|_alpha < 10 eps, |h|_0 < h_cap.
struct LockExperiment {
  BetaResult beta;
  std::vector<PeriodicOrbit> Z;
  PeriodicOrbit orbit;
  double ubar_sup = 0.0;
  double ubar_holder = 0.0;
  ComparisonReport comparison;
  LockReport lock;
  LockOutcome outcome = LockOutcome::FailedNotLocked;
};

/// O defaults to the first argmin orbit; lock.h_norm and lock.h_cap are overwritten.
LockExperiment run_lock_experiment(const Suspension& sys, const Observable& u, const Observable& psi,
                                   const OrbitCatalog& cat, const std::optional<PeriodicOrbit>& O, double eps,
                                   const ConstantsLedger& ledger, const SubactionOptions& sub, LockOptions lock);

struct ThetaSample {
  double rho = 0.0;
  double theta = 0.0;
  long points = 0;
};

struct RhoReport {
  double gap = 0.0;
  double rho1 = 0.0;
  double rho2 = 0.0;
  std::vector<ThetaSample> theta;
  double theta_rho1 = 0.0;
  double theta_far = 0.0;
  double first_term = 0.0;
  double second_term = 0.0;
  /// Strict upper bound for rho; trials use norms below it.
  double rho_bound = 0.0;
  LockReport lock;
};

struct RhoOptions {
  int theta_samples = 4000;
  int grid = 8;
  LockOptions lock{};
};

/// Samples theta(rho) = min{u(x) : d(x, O) >= rho}, evaluates the bound on
/// rho and checks locking for Lipschitz h with |h|_1 < rho.
RhoReport continuous_locking_rho(const Suspension& sys, const Integrand& u, const Observable& psi,
                                 const PeriodicOrbit& O, const OrbitCatalog& cat, const ConstantsLedger& ledger,
                                 double rho1, double rho2, const RhoOptions& opt = {});

/// Points at controlled distances from O: random points plus orbit points
/// with the itinerary changed beyond a random depth.
std::vector<FlowPoint> near_orbit_points(const Suspension& sys, const PeriodicOrbit& O, int count,
                                         std::mt19937_64& rng);

}  // namespace ergolock
