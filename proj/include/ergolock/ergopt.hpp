#pragma once

// Ratio ergodic optimization over periodic-orbit catalogs and the discrete
// subaction solver with its reveal transform.

#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ergolock/observables.hpp"

namespace ergolock {

/// All primitive periodic orbits with word length <= P, one per rotation class.
struct OrbitCatalog {
  std::shared_ptr<const Suspension> sys;
  int P = 0;
  std::vector<PeriodicOrbit> orbits;

  std::size_t size() const noexcept { return orbits.size(); }
};

OrbitCatalog build_catalog(const Suspension& sys, int P);

/// sum_{d | n} d * #classes(d) == trace(A^n) for every n <= P.
bool census_matches_trace(const OrbitCatalog& cat);

std::vector<Rational> catalog_integrals(const OrbitCatalog& cat, const Observable& u, int threads = 1);

/// <O,u> / <O,psi>; NonPositiveWeight unless psi's certified minimum is positive.
Rational ratio_average(const Suspension& sys, const PeriodicOrbit& O, const Observable& u, const Observable& psi);

struct BetaResult {
  Rational beta_hat;
  double beta = 0.0;
  int P = 0;
  /// Catalog indices of every orbit within the tie tolerance, in catalog order.
  std::vector<std::size_t> argmin;
  std::vector<PeriodicOrbit> argmin_orbits;
  std::vector<Rational> int_u, int_psi, ratios;
  /// Smallest ratio gap between a non-argmin orbit and beta_hat (infinite if none).
  double margin = 0.0;
};

BetaResult beta_over_catalog(const OrbitCatalog& cat, const Observable& u, const Observable& psi,
                             double tie_tol = 1e-12, int threads = 1);

/// Ratio minimum for an integrand evaluated by quadrature on each orbit.
struct QuadBetaResult {
  double beta = 0.0;
  int P = 0;
  std::vector<std::size_t> argmin;
  std::vector<double> int_u, int_u_error, int_psi, ratios, ratio_error;
  double margin = 0.0;
};

QuadBetaResult beta_over_catalog(const OrbitCatalog& cat, const Integrand& u, const Observable& psi,
                                 double tie_tol = 1e-9, const QuadratureOptions& opt = {}, int threads = 1);

/// Union of the argmin orbits; an inner approximation of the minimizing set.
std::vector<PeriodicOrbit> minimizing_set_estimate(const BetaResult& result);

// ---------------------------------------------------------------------------
// Nets and chain graphs

/// Admissible (2 depth + 1)-windows times fiber bins [j h, (j+1) h) of each cell.
/// Node points carry the window extended by shortest cycles and the bin start.
class Net {
 public:
  Net(const Suspension& sys, int depth, const Rational& fiber_step, std::size_t cap = 200000);

  std::size_t size() const noexcept { return nodes_.size(); }
  const FlowPoint& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<FlowPoint>& nodes() const noexcept { return nodes_; }
  int depth() const noexcept { return depth_; }
  const Rational& fiber_step() const noexcept { return step_; }

  /// Index of the node sharing p's window and fiber bin.
  std::size_t project(const FlowPoint& p) const;
  /// Bound on d(p, project(p)) used in tolerances: 2^-depth + fiber step.
  double projection_bound() const;

 private:
  std::size_t code(const BiSequence& x) const;

  std::shared_ptr<const Suspension> sys_;
  int depth_;
  Rational step_;
  std::vector<FlowPoint> nodes_;
  std::vector<long> first_;  // window code -> first node index, -1 if inadmissible
};

/// Complete digraph on a net with weight(i -> j) = U_i + A d^alpha(phi_gamma x_i, x_j),
/// where U_i = int_0^gamma (u - beta psi)(phi_t x_i) dt.
class ChainGraph {
 public:
  ChainGraph(const Suspension& sys, Net net, std::vector<double> U, const Rational& gamma, double A, double alpha);

  std::size_t size() const noexcept { return net_.size(); }
  double weight(std::size_t i, std::size_t j) const;
  double node_term(std::size_t i) const { return U_[i]; }
  const FlowPoint& image(std::size_t i) const { return images_[i]; }
  const Net& net() const noexcept { return net_; }
  double A() const noexcept { return A_; }
  double alpha() const noexcept { return alpha_; }
  const Rational& gamma() const noexcept { return gamma_; }

  /// Replaces the weights along the closed node sequence so that the cycle sums to `total`.
  void inject_cycle(const std::vector<std::size_t>& cycle, double total);

 private:
  std::shared_ptr<const Suspension> sys_;
  Net net_;
  std::vector<double> U_;
  Rational gamma_;
  double A_, alpha_;
  std::vector<FlowPoint> images_;
  std::vector<double> dense_;  // d^alpha(image_i, node_j), empty for large nets
  std::vector<std::tuple<std::size_t, std::size_t, double>> overrides_;
};

/// U_i for every net node, computed exactly.
std::vector<double> node_terms(const Suspension& sys, const Net& net, const Observable& u, const Observable& psi,
                               const Rational& beta, const Rational& gamma);

enum class CertificateStatus { Feasible, NegativeCycle };
const char* to_string(CertificateStatus s);

struct SubactionCertificate {
  CertificateStatus status = CertificateStatus::Feasible;
  /// Node potential in the reveal sign: U_i + v(nn(phi_gamma x_i)) - v_i >= -A d^alpha.
  std::vector<double> v;
  double A = 0.0;
  double alpha = 1.0;
  double gamma = 1.0;
  /// min over nodes of (U_i + v(nn(phi_gamma x_i)) - v_i) / gamma.
  double slack = 0.0;
  /// A (2^-depth + fiber step)^alpha / gamma.
  double tol = 0.0;
  long relaxations = 0;
  std::vector<std::size_t> witness;
  double witness_weight = 0.0;
};

SubactionCertificate solve_subaction(const ChainGraph& g);

/// Sum of weights along the closed node sequence.
double cycle_weight(const ChainGraph& g, const std::vector<std::size_t>& cycle);

/// Independent scan of weight(i -> j) - v_j + v_i >= -slack_tol over all edges.
struct EdgeScan {
  double min_margin = 0.0;
  long edges = 0;
  bool pass = false;
};
EdgeScan rescan_edges(const ChainGraph& g, const SubactionCertificate& cert, double slack_tol = 1e-9);

struct SubactionOptions {
  int depth = 3;
  Rational fiber_step{1, 4};
  Rational gamma{4};
  double alpha = 1.0;
  /// Coupling numerator; A = Q / gamma. Unset means Q = q_factor * ||u - beta psi||_alpha.
  std::optional<double> Q;
  double q_factor = 10.0;
  std::size_t cap = 200000;
};

struct SubactionRun {
  std::shared_ptr<ChainGraph> graph;
  SubactionCertificate cert;
  Observable shifted;  // u - beta psi
  Rational beta;
};

SubactionRun run_subaction(const Suspension& sys, const Observable& u, const Observable& psi, const Rational& beta,
                           const SubactionOptions& opt);

/// ubar(p) = (U(p) + v(nn(phi_gamma p)) - v(nn(p))) / gamma with U(p) = int_0^gamma (u - beta psi)(phi_t p) dt.
class RevealedObservable final : public Integrand {
 public:
  RevealedObservable(const Suspension& sys, const SubactionRun& run, std::vector<PeriodicOrbit> Z);

  double evaluate(const FlowPoint& p) const override;
  CellProfile profile(const BiSequence& x, long offset) const override;
  /// Exact: the coboundary integrates to zero over a period.
  IntegralValue orbit_integral(const Suspension& sys, const PeriodicOrbit& O,
                               const QuadratureOptions& opt) const override;
  /// Left Riemann sum of ubar on the grid of step h; equal to <O, u - beta psi>
  /// whenever h divides both |O| and gamma.
  double riemann_orbit_integral(const PeriodicOrbit& O, const Rational& h) const;

  double tol() const noexcept { return tol_; }
  const Rational& beta() const noexcept { return beta_; }
  const Rational& gamma() const noexcept { return gamma_; }
  const std::vector<PeriodicOrbit>& Z() const noexcept { return Z_; }
  const std::vector<double>& v() const noexcept { return v_; }
  const Observable& shifted() const noexcept { return f_; }

  /// Certified sup bound ||u - beta psi||_0 + (max v - min v) / gamma.
  double sup_bound() const;
  /// Hoelder estimate: expansion-propagated [u - beta psi]_alpha plus the
  /// discrete Hoelder quotient of v over node pairs, scaled by 2 / gamma.
  double holder_estimate(const ConstantsLedger& ledger) const;

 private:
  std::shared_ptr<const Suspension> sys_;
  std::shared_ptr<const ChainGraph> graph_;
  Observable f_;
  Rational beta_, gamma_;
  std::vector<double> v_;
  double tol_;
  double alpha_;
  std::vector<PeriodicOrbit> Z_;
};

struct RevealCheck {
  double node_min = 0.0;
  double tol = 0.0;
  bool nodes_ok = false;
  /// max over Z of |<O, ubar>| / |O|.
  double max_orbit_average = 0.0;
  bool orbits_ok = false;
  /// max over the checked orbits of |Riemann sum - exact integral|.
  double riemann_gap = 0.0;
};

/// InfeasibleCertificate unless the certificate is feasible.
std::shared_ptr<RevealedObservable> reveal(const Suspension& sys, const SubactionRun& run,
                                           std::vector<PeriodicOrbit> Z);

RevealCheck check_reveal(const Suspension& sys, const RevealedObservable& ubar, const Net& net);

}  // namespace ergolock
