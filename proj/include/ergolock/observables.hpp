#pragma once

// Functions on the suspension space and their integrals along segments.

#include <array>
#include <functional>
#include <map>
#include <random>
#include <memory>
#include <string>
#include <vector>

#include "ergolock/flow.hpp"

namespace ergolock {

/// c0 + c1 s + c2 s^2 + c3 s^3.
using Polynomial = std::array<Rational, 4>;

Rational poly_eval(const Polynomial& p, const Rational& s);
double poly_eval(const Polynomial& p, double s);
/// Integral of p over [a, b].
Rational poly_integral(const Polynomial& p, const Rational& a, const Rational& b);
Polynomial poly_add(const Polynomial& a, const Polynomial& b);
Polynomial poly_scale(const Polynomial& a, const Rational& c);
/// Certified bounds of p on [0, r]: {min, max}.
std::pair<double, double> poly_range(const Polynomial& p, const Rational& r);
/// Certified bound of |p'| on [0, r].
double poly_lipschitz(const Polynomial& p, const Rational& r);

/// Cylinder-fiber observable: the value at (x, s) is coeffs[x_{-k..k}](s).
class Observable {
 public:
  /// Every admissible window x_{-k..k} must be present in `table`.
  Observable(const Suspension& sys, int radius, const std::map<Symbols, Polynomial>& table, double alpha = 1.0);

  static Observable constant(const Suspension& sys, const Rational& c, double alpha = 1.0);
  /// value on cell `a`, 0 elsewhere.
  static Observable indicator(const Suspension& sys, Symbol a, const Rational& value = 1, double alpha = 1.0);
  /// u(x, s) = s.
  static Observable fiber_coordinate(const Suspension& sys, double alpha = 1.0);

  /// Parses `window = k` and `cyl "w" = c0 c1 c2 c3` lines.
  static Observable parse(const Suspension& sys, const std::string& text, double alpha = 1.0);
  std::string to_text() const;

  int radius() const noexcept { return k_; }
  double alpha() const noexcept { return alpha_; }
  const Polynomial& poly(const Symbols& window) const;
  const Polynomial& poly_at(const BiSequence& x, long offset = 0) const;
  std::vector<std::pair<Symbols, Polynomial>> entries() const;

  Rational evaluate_exact(const FlowPoint& p) const;
  double evaluate(const FlowPoint& p) const { return evaluate_exact(p).get_d(); }

  /// Certified upper bounds of the sup norm and of the alpha-Hoelder seminorm on
  /// the product metric max(shift distance, |fiber difference|) within a cell.
  double sup_norm() const noexcept { return sup_; }
  double seminorm() const noexcept { return semi_; }
  double holder_norm() const noexcept { return sup_ + semi_; }
  /// Certified lower bound of the minimum value.
  double min_value() const noexcept { return min_; }

  Observable lifted(int radius) const;
  Observable with_alpha(double alpha) const;
  std::uint64_t hash() const;

  friend Observable combine(const Rational& a, const Observable& u, const Rational& b, const Observable& w);
  const Suspension& system() const { return *sys_; }

 private:
  Observable() = default;
  void finish();
  std::size_t code(const BiSequence& x, long offset) const;
  std::size_t code(const Symbols& w) const;

  std::shared_ptr<const Suspension> sys_;
  int k_ = 0;
  int m_ = 1;
  double alpha_ = 1.0;
  std::vector<Polynomial> table_;
  std::vector<bool> present_;
  double sup_ = 0.0, semi_ = 0.0, min_ = 0.0;
};

Observable combine(const Rational& a, const Observable& u, const Rational& b, const Observable& w);

/// Exact integral of u along s.
Rational segment_integral(const Suspension& sys, const Segment& s, const Observable& u);
Rational orbit_integral(const Suspension& sys, const PeriodicOrbit& O, const Observable& u);
/// (1/gamma) int_0^gamma u(phi_t p) dt.
Rational time_average(const Suspension& sys, const Observable& u, const FlowPoint& p, const Rational& gamma);

struct HolderData {
  double sup_norm = 0.0;
  double seminorm = 0.0;
};
HolderData holder_data(const Observable& u);

// ---------------------------------------------------------------------------
// General integrands

/// Restriction of an integrand to one cell visit as a function of the fiber,
/// smooth between the listed breakpoints.
struct CellProfile {
  std::function<double(double)> f;
  std::vector<double> breaks;
};

struct IntegralValue {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  int max_depth = 40;
};

class Integrand {
 public:
  virtual ~Integrand() = default;
  virtual double evaluate(const FlowPoint& p) const = 0;
  /// Profile on the cell visit (sigma^offset x, s), s in [0, r(x_offset)).
  virtual CellProfile profile(const BiSequence& x, long offset) const = 0;
  virtual IntegralValue integrate(const Suspension& sys, const Segment& s, const QuadratureOptions& opt) const;
  virtual IntegralValue orbit_integral(const Suspension& sys, const PeriodicOrbit& O,
                                       const QuadratureOptions& opt) const;
};

using IntegrandPtr = std::shared_ptr<const Integrand>;

/// Adaptive Gauss-Legendre along the segment, split at cell crossings and
/// profile breakpoints; the error is the two-level difference.
IntegralValue adaptive_integral(const Suspension& sys, const Integrand& f, const Segment& s,
                                const QuadratureOptions& opt);

class ObservableIntegrand final : public Integrand {
 public:
  explicit ObservableIntegrand(Observable u) : u_(std::move(u)) {}
  double evaluate(const FlowPoint& p) const override { return u_.evaluate(p); }
  CellProfile profile(const BiSequence& x, long offset) const override;
  IntegralValue integrate(const Suspension& sys, const Segment& s, const QuadratureOptions& opt) const override;
  const Observable& observable() const { return u_; }

 private:
  Observable u_;
};

/// sum_i c_i f_i; errors of the parts add up with |c_i| weights.
class SumIntegrand final : public Integrand {
 public:
  SumIntegrand(std::vector<double> coeffs, std::vector<IntegrandPtr> parts);
  double evaluate(const FlowPoint& p) const override;
  CellProfile profile(const BiSequence& x, long offset) const override;
  IntegralValue integrate(const Suspension& sys, const Segment& s, const QuadratureOptions& opt) const override;
  IntegralValue orbit_integral(const Suspension& sys, const PeriodicOrbit& O,
                               const QuadratureOptions& opt) const override;

 private:
  std::vector<double> c_;
  std::vector<IntegrandPtr> parts_;
};

// ---------------------------------------------------------------------------
// Distance to periodic orbits

/// Base-distance data of a cell visit relative to an orbit set:
/// d((x, s), Z) = min(1, a0, max(au, s), max(ad, r - s)).
struct DistanceProfile {
  double a0 = 1.0;
  double au = 1.0;
  double ad = 1.0;
  double roof = 1.0;

  double at(double s) const;
  std::vector<double> breaks() const;
};

/// Crossing sequences of a finite orbit set, precomputed for distance scans.
struct OrbitSet {
  std::vector<PeriodicOrbit> orbits;
  std::vector<BiSequence> bases;
  std::vector<Symbol> cells;

  explicit OrbitSet(std::vector<PeriodicOrbit> Z);
};

DistanceProfile distance_profile(const Suspension& sys, const BiSequence& x, long offset, const OrbitSet& Z);

double distance_to_orbit(const Suspension& sys, const FlowPoint& p, const PeriodicOrbit& O);
double distance_to_set(const Suspension& sys, const FlowPoint& p, const std::vector<PeriodicOrbit>& Z);

/// p -> scale * d(p, Z)^alpha.
class OrbitDistanceIntegrand final : public Integrand {
 public:
  OrbitDistanceIntegrand(const Suspension& sys, std::vector<PeriodicOrbit> Z, double alpha, double scale = 1.0);
  double evaluate(const FlowPoint& p) const override;
  CellProfile profile(const BiSequence& x, long offset) const override;
  double alpha() const { return alpha_; }

 private:
  std::shared_ptr<const Suspension> sys_;
  OrbitSet Z_;
  double alpha_, scale_;
};

IntegrandPtr orbit_distance_observable(const Suspension& sys, const PeriodicOrbit& O, double alpha);

/// eps * (soft-min/soft-max smoothing of d(., O) at scale mu / log 4), so that
/// |w - eps d(., O)| <= eps mu.
class MollifiedDistance final : public Integrand {
 public:
  MollifiedDistance(const Suspension& sys, PeriodicOrbit O, double eps, double mu);
  double evaluate(const FlowPoint& p) const override;
  CellProfile profile(const BiSequence& x, long offset) const override;
  double eps() const { return eps_; }
  double mu() const { return mu_; }

 private:
  double smooth(const DistanceProfile& d, double s) const;
  std::shared_ptr<const Suspension> sys_;
  OrbitSet Z_;
  double eps_, mu_, tau_;
};

IntegrandPtr mollified_orbit_distance(const Suspension& sys, const PeriodicOrbit& O, double eps, double mu);

/// Sampled check of the smoothing contract on random points.
struct MollifierCheck {
  double max_deviation = 0.0;
  double deviation_bound = 0.0;
  double max_quotient = 0.0;
  double quotient_bound = 0.0;
  long samples = 0;
  bool pass = false;
};
MollifierCheck check_mollifier(const Suspension& sys, const MollifiedDistance& w, const PeriodicOrbit& O,
                               int samples, std::uint64_t seed);

/// 1 on different cells, else max(shift distance, |fiber difference|); the
/// metric the Hoelder data of cylinder-fiber observables refer to.
double product_distance(const FlowPoint& p, const FlowPoint& q);

/// Cylinder-fiber observable with coefficients k/64, |k| <= 64, at every
/// admissible window; fiber degree at most `degree`.
Observable random_observable(const Suspension& sys, int radius, std::mt19937_64& rng, int degree = 3,
                             double alpha = 1.0);

/// Random point with an admissible random core around the origin.
FlowPoint random_point(const Suspension& sys, std::mt19937_64& rng, int core_len = 8);

}  // namespace ergolock
