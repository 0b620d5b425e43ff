#include "ergolock/ergopt.hpp"

#include <cmath>
#include <limits>

#include "ergolock/errors.hpp"
#include "ergolock/parallel.hpp"

namespace ergolock {

OrbitCatalog build_catalog(const Suspension& sys, int P) {
  if (P < 1) throw Error(ErrorKind::InvalidArgument, "build_catalog", "P must be at least 1");
  OrbitCatalog cat;
  cat.sys = std::make_shared<Suspension>(sys);
  cat.P = P;
  for (const auto& w : enumerate_periodic_words(sys.sft, P)) cat.orbits.push_back(make_orbit(sys, w.symbols));
  return cat;
}

bool census_matches_trace(const OrbitCatalog& cat) {
  std::vector<long> count(static_cast<std::size_t>(cat.P) + 1, 0);
  for (const auto& O : cat.orbits) ++count[O.word.size()];
  for (int n = 1; n <= cat.P; ++n) {
    mpz_class sum = 0;
    for (int d = 1; d <= n; ++d)
      if (n % d == 0) sum += mpz_class(static_cast<long>(d)) * mpz_class(count[d]);
    if (sum != cat.sys->sft.trace_power(n)) return false;
  }
  return true;
}

std::vector<Rational> catalog_integrals(const OrbitCatalog& cat, const Observable& u, int threads) {
  return parallel_map(
      cat.size(), [&](std::size_t i) { return orbit_integral(*cat.sys, cat.orbits[i], u); }, threads);
}

namespace {

void require_positive(const Observable& psi, const char* where) {
  if (!(psi.min_value() > 0.0))
    throw Error(ErrorKind::NonPositiveWeight, where, "weight observable has certified minimum <= 0");
}

}  // namespace

Rational ratio_average(const Suspension& sys, const PeriodicOrbit& O, const Observable& u, const Observable& psi) {
  require_positive(psi, "ratio_average");
  return orbit_integral(sys, O, u) / orbit_integral(sys, O, psi);
}

BetaResult beta_over_catalog(const OrbitCatalog& cat, const Observable& u, const Observable& psi, double tie_tol,
                             int threads) {
  require_positive(psi, "beta_over_catalog");
  if (cat.orbits.empty()) throw Error(ErrorKind::InvalidArgument, "beta_over_catalog", "empty catalog");
  BetaResult r;
  r.P = cat.P;
  r.int_u = catalog_integrals(cat, u, threads);
  r.int_psi = catalog_integrals(cat, psi, threads);
  r.ratios.resize(cat.size());
  for (std::size_t i = 0; i < cat.size(); ++i) r.ratios[i] = r.int_u[i] / r.int_psi[i];
  r.beta_hat = *std::min_element(r.ratios.begin(), r.ratios.end());
  r.beta = r.beta_hat.get_d();
  r.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cat.size(); ++i) {
    double gap = Rational(r.ratios[i] - r.beta_hat).get_d();
    if (gap <= tie_tol) {
      r.argmin.push_back(i);
      r.argmin_orbits.push_back(cat.orbits[i]);
    } else {
      r.margin = std::min(r.margin, gap);
    }
  }
  return r;
}

QuadBetaResult beta_over_catalog(const OrbitCatalog& cat, const Integrand& u, const Observable& psi, double tie_tol,
                                 const QuadratureOptions& opt, int threads) {
  require_positive(psi, "beta_over_catalog");
  if (cat.orbits.empty()) throw Error(ErrorKind::InvalidArgument, "beta_over_catalog", "empty catalog");
  QuadBetaResult r;
  r.P = cat.P;
  auto vals = parallel_map(
      cat.size(), [&](std::size_t i) { return u.orbit_integral(*cat.sys, cat.orbits[i], opt); }, threads);
  auto psis = catalog_integrals(cat, psi, threads);
  for (std::size_t i = 0; i < cat.size(); ++i) {
    double ip = psis[i].get_d();
    r.int_u.push_back(vals[i].value);
    r.int_u_error.push_back(vals[i].error);
    r.int_psi.push_back(ip);
    r.ratios.push_back(vals[i].value / ip);
    r.ratio_error.push_back(vals[i].error / ip);
  }
  r.beta = *std::min_element(r.ratios.begin(), r.ratios.end());
  r.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cat.size(); ++i) {
    double gap = r.ratios[i] - r.beta;
    if (gap <= tie_tol)
      r.argmin.push_back(i);
    else
      r.margin = std::min(r.margin, gap);
  }
  return r;
}

std::vector<PeriodicOrbit> minimizing_set_estimate(const BetaResult& result) { return result.argmin_orbits; }

// ---------------------------------------------------------------------------

Net::Net(const Suspension& sys, int depth, const Rational& fiber_step, std::size_t cap)
    : sys_(std::make_shared<Suspension>(sys)), depth_(depth), step_(fiber_step) {
  if (depth < 0) throw Error(ErrorKind::InvalidArgument, "Net", "negative depth");
  if (fiber_step <= 0) throw Error(ErrorKind::InvalidArgument, "Net", "fiber step must be positive");
  const int m = sys.sft.alphabet_size();
  double codes = std::pow(static_cast<double>(m), 2 * depth + 1);
  if (codes > 4e7) throw Error(ErrorKind::NetTooLarge, "Net", "window alphabet too large");
  first_.assign(static_cast<std::size_t>(codes), -1);
  auto words = sys.sft.admissible_words(2 * depth + 1);
  std::size_t total = 0;
  std::vector<long> bins;
  for (const auto& w : words) {
    Rational q = sys.roof(w[depth]) / fiber_step;
    mpz_class c = q.get_num() / q.get_den();
    if (c * q.get_den() != q.get_num()) c += 1;
    bins.push_back(c.get_si());
    total += static_cast<std::size_t>(bins.back());
    if (total > cap)
      throw Error(ErrorKind::NetTooLarge, "Net",
                  "more than " + std::to_string(cap) + " nodes at depth " + std::to_string(depth));
  }
  nodes_.reserve(total);
  for (std::size_t k = 0; k < words.size(); ++k) {
    std::size_t c = 0;
    for (Symbol a : words[k]) c = c * static_cast<std::size_t>(m) + static_cast<std::size_t>(a);
    first_[c] = static_cast<long>(nodes_.size());
    BiSequence x = extend_word(sys.sft, words[k], -depth);
    for (long j = 0; j < bins[k]; ++j) nodes_.push_back(FlowPoint{x, fiber_step * j});
  }
}

std::size_t Net::code(const BiSequence& x) const {
  std::size_t c = 0;
  const auto m = static_cast<std::size_t>(sys_->sft.alphabet_size());
  for (long i = -depth_; i <= depth_; ++i) c = c * m + static_cast<std::size_t>(x.at(i));
  return c;
}

std::size_t Net::project(const FlowPoint& p) const {
  long f = first_[code(p.base)];
  if (f < 0) throw Error(ErrorKind::InvalidArgument, "Net::project", "point window is not admissible");
  Rational q = p.fiber / step_;
  mpz_class bin = q.get_num() / q.get_den();
  return static_cast<std::size_t>(f + bin.get_si());
}

double Net::projection_bound() const { return std::ldexp(1.0, -depth_) + step_.get_d(); }

ChainGraph::ChainGraph(const Suspension& sys, Net net, std::vector<double> U, const Rational& gamma, double A,
                       double alpha)
    : sys_(std::make_shared<Suspension>(sys)), net_(std::move(net)), U_(std::move(U)), gamma_(gamma), A_(A),
      alpha_(alpha) {
  if (!(A > 0.0)) throw Error(ErrorKind::InvalidArgument, "ChainGraph", "coupling A must be positive");
  if (U_.size() != net_.size()) throw Error(ErrorKind::InvalidArgument, "ChainGraph", "node term count mismatch");
  images_.reserve(net_.size());
  for (const auto& x : net_.nodes()) images_.push_back(flow(sys, x, gamma));
  const std::size_t n = net_.size();
  if (n <= 2048) {
    dense_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        dense_[i * n + j] = std::pow(sus_distance(sys, images_[i], net_.node(j)), alpha_);
  }
}

double ChainGraph::weight(std::size_t i, std::size_t j) const {
  for (const auto& [a, b, w] : overrides_)
    if (a == i && b == j) return w;
  const std::size_t n = net_.size();
  double d = dense_.empty() ? std::pow(sus_distance(*sys_, images_[i], net_.node(j)), alpha_) : dense_[i * n + j];
  return U_[i] + A_ * d;
}

void ChainGraph::inject_cycle(const std::vector<std::size_t>& cycle, double total) {
  if (cycle.empty()) throw Error(ErrorKind::InvalidArgument, "inject_cycle", "empty cycle");
  const double each = total / static_cast<double>(cycle.size());
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    std::size_t a = cycle[k], b = cycle[(k + 1) % cycle.size()];
    overrides_.emplace_back(a, b, each);
  }
}

std::vector<double> node_terms(const Suspension& sys, const Net& net, const Observable& u, const Observable& psi,
                               const Rational& beta, const Rational& gamma) {
  Observable f = combine(1, u, -beta, psi);
  std::vector<double> U;
  U.reserve(net.size());
  for (const auto& x : net.nodes()) U.push_back(segment_integral(sys, Segment{x, gamma}, f).get_d());
  return U;
}

const char* to_string(CertificateStatus s) {
  return s == CertificateStatus::Feasible ? "Feasible" : "NegativeCycle";
}

double cycle_weight(const ChainGraph& g, const std::vector<std::size_t>& cycle) {
  double total = 0.0;
  for (std::size_t k = 0; k < cycle.size(); ++k) total += g.weight(cycle[k], cycle[(k + 1) % cycle.size()]);
  return total;
}

SubactionCertificate solve_subaction(const ChainGraph& g) {
  const std::size_t n = g.size();
  SubactionCertificate cert;
  cert.A = g.A();
  cert.alpha = g.alpha();
  cert.gamma = g.gamma().get_d();
  cert.tol = g.A() * std::pow(g.net().projection_bound(), g.alpha()) / cert.gamma;
  // Virtual source with zero edges to every node: all distances start at 0.
  std::vector<double> dist(n, 0.0);
  std::vector<long> pred(n, -1);
  long last = -1;
  for (std::size_t round = 0; round <= n; ++round) {
    last = -1;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double cand = dist[i] + g.weight(i, j);
        if (cand < dist[j] - 1e-12 * (1.0 + std::fabs(dist[j]))) {
          dist[j] = cand;
          pred[j] = static_cast<long>(i);
          last = static_cast<long>(j);
          ++cert.relaxations;
        }
      }
    }
    if (last < 0) break;
  }
  if (last >= 0) {
    cert.status = CertificateStatus::NegativeCycle;
    std::size_t x = static_cast<std::size_t>(last);
    for (std::size_t k = 0; k < n; ++k) x = static_cast<std::size_t>(pred[x]);
    std::vector<std::size_t> rev{x};
    for (std::size_t y = static_cast<std::size_t>(pred[x]); y != x; y = static_cast<std::size_t>(pred[y]))
      rev.push_back(y);
    cert.witness.assign(rev.rbegin(), rev.rend());
    cert.witness_weight = cycle_weight(g, cert.witness);
    cert.slack = -std::numeric_limits<double>::infinity();
    return cert;
  }
  cert.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) cert.v[i] = -dist[i];
  cert.slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = g.net().project(g.image(i));
    cert.slack = std::min(cert.slack, (g.node_term(i) + cert.v[j] - cert.v[i]) / cert.gamma);
  }
  return cert;
}

EdgeScan rescan_edges(const ChainGraph& g, const SubactionCertificate& cert, double slack_tol) {
  EdgeScan s;
  if (cert.status != CertificateStatus::Feasible) return s;
  s.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      // dist_j <= dist_i + w with dist = -v.
      s.min_margin = std::min(s.min_margin, g.weight(i, j) + cert.v[j] - cert.v[i]);
      ++s.edges;
    }
  }
  s.pass = s.min_margin >= -slack_tol;
  return s;
}

SubactionRun run_subaction(const Suspension& sys, const Observable& u, const Observable& psi, const Rational& beta,
                           const SubactionOptions& opt) {
  if (opt.gamma <= 0) throw Error(ErrorKind::InvalidArgument, "run_subaction", "gamma must be positive");
  SubactionRun run{nullptr, {}, combine(1, u, -beta, psi).with_alpha(opt.alpha), beta};
  Net net(sys, opt.depth, opt.fiber_step, opt.cap);
  double Q = opt.Q ? *opt.Q : opt.q_factor * std::max(run.shifted.holder_norm(), 1e-12);
  auto U = node_terms(sys, net, u, psi, beta, opt.gamma);
  run.graph = std::make_shared<ChainGraph>(sys, std::move(net), std::move(U), opt.gamma, Q / opt.gamma.get_d(),
                                           opt.alpha);
  run.cert = solve_subaction(*run.graph);
  return run;
}

// ---------------------------------------------------------------------------

RevealedObservable::RevealedObservable(const Suspension& sys, const SubactionRun& run, std::vector<PeriodicOrbit> Z)
    : sys_(std::make_shared<Suspension>(sys)),
      graph_(run.graph),
      f_(run.shifted),
      beta_(run.beta),
      gamma_(run.graph->gamma()),
      v_(run.cert.v),
      tol_(run.cert.tol),
      alpha_(run.cert.alpha),
      Z_(std::move(Z)) {}

double RevealedObservable::evaluate(const FlowPoint& p) const {
  const Net& net = graph_->net();
  double U = segment_integral(*sys_, Segment{p, gamma_}, f_).get_d();
  FlowPoint img = flow(*sys_, p, gamma_);
  return (U + v_[net.project(img)] - v_[net.project(p)]) / gamma_.get_d();
}

CellProfile RevealedObservable::profile(const BiSequence& x, long offset) const {
  BiSequence y = x.shifted(offset);
  auto self = this;
  const Rational r = sys_->roof(y.at(0));
  CellProfile prof;
  prof.f = [self, y, r](double s) {
    Rational q = from_double(s);
    if (q < 0) q = 0;
    if (q >= r) q = r - Rational(1, 1 << 30);
    return self->evaluate(FlowPoint{y, q});
  };
  const Rational& h = graph_->net().fiber_step();
  for (Rational b = h; b < r; b += h) prof.breaks.push_back(b.get_d());
  return prof;
}

IntegralValue RevealedObservable::orbit_integral(const Suspension& sys, const PeriodicOrbit& O,
                                                 const QuadratureOptions&) const {
  IntegralValue v;
  v.value = ergolock::orbit_integral(sys, O, f_).get_d();
  return v;
}

double RevealedObservable::riemann_orbit_integral(const PeriodicOrbit& O, const Rational& h) const {
  double acc = 0.0;
  FlowPoint p = O.base;
  for (Rational t = 0; t < O.period; t += h) {
    acc += evaluate(p);
    p = flow(*sys_, p, h);
  }
  return acc * h.get_d();
}

double RevealedObservable::sup_bound() const {
  double vmax = *std::max_element(v_.begin(), v_.end());
  double vmin = *std::min_element(v_.begin(), v_.end());
  return f_.sup_norm() + (vmax - vmin) / gamma_.get_d();
}

double RevealedObservable::holder_estimate(const ConstantsLedger& ledger) const {
  const Net& net = graph_->net();
  double vq = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j = i + 1; j < net.size(); ++j) {
      double d = sus_distance(*sys_, net.node(i), net.node(j));
      if (d > 0.0) vq = std::max(vq, std::fabs(v_[i] - v_[j]) / std::pow(d, alpha_));
    }
  double spread = std::pow(ledger.C.value, alpha_) * std::exp(alpha_ * ledger.beta_exp.value * gamma_.get_d());
  return f_.seminorm() * spread + 2.0 * vq / gamma_.get_d();
}

std::shared_ptr<RevealedObservable> reveal(const Suspension& sys, const SubactionRun& run,
                                           std::vector<PeriodicOrbit> Z) {
  if (run.cert.status != CertificateStatus::Feasible)
    throw Error(ErrorKind::InfeasibleCertificate, "reveal",
                "certificate has a negative cycle of weight " + std::to_string(run.cert.witness_weight));
  return std::make_shared<RevealedObservable>(sys, run, std::move(Z));
}

RevealCheck check_reveal(const Suspension& sys, const RevealedObservable& ubar, const Net& net) {
  RevealCheck c;
  c.tol = ubar.tol();
  c.node_min = std::numeric_limits<double>::infinity();
  for (const auto& x : net.nodes()) c.node_min = std::min(c.node_min, ubar.evaluate(x));
  c.nodes_ok = c.node_min >= -c.tol - 1e-12;
  for (const auto& O : ubar.Z()) {
    double exact = ubar.orbit_integral(sys, O, {}).value;
    c.max_orbit_average = std::max(c.max_orbit_average, std::fabs(exact) / O.period.get_d());
    // Grid commensurate with |O| and gamma.
    mpz_class D;
    mpz_lcm(D.get_mpz_t(), O.period.get_den().get_mpz_t(), ubar.gamma().get_den().get_mpz_t());
    D *= 8;
    Rational h(mpz_class(1), D);
    c.riemann_gap = std::max(c.riemann_gap, std::fabs(ubar.riemann_orbit_integral(O, h) - exact));
  }
  c.orbits_ok = c.max_orbit_average <= c.tol;
  return c;
}

}  // namespace ergolock
