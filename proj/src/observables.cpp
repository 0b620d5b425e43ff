#include "ergolock/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ergolock/errors.hpp"

namespace ergolock {

namespace {

constexpr double kMargin = 1e-12;

long ipow(long b, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::uint64_t fnv(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 1099511628211ull;
  }
  return h;
}

double outward(double v) { return v + kMargin * (1.0 + std::fabs(v)); }

// Real roots of c0 + c1 s + c2 s^2 in (lo, hi).
std::vector<double> quadratic_roots(double c0, double c1, double c2, double lo, double hi) {
  std::vector<double> out;
  if (c2 == 0.0) {
    if (c1 != 0.0) out.push_back(-c0 / c1);
  } else {
    double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      double sq = std::sqrt(disc);
      out.push_back((-c1 + sq) / (2.0 * c2));
      out.push_back((-c1 - sq) / (2.0 * c2));
    }
  }
  std::vector<double> in;
  for (double s : out)
    if (s > lo && s < hi) in.push_back(s);
  return in;
}

}  // namespace

Rational poly_eval(const Polynomial& p, const Rational& s) {
  return ((p[3] * s + p[2]) * s + p[1]) * s + p[0];
}

double poly_eval(const Polynomial& p, double s) {
  return ((p[3].get_d() * s + p[2].get_d()) * s + p[1].get_d()) * s + p[0].get_d();
}

Rational poly_integral(const Polynomial& p, const Rational& a, const Rational& b) {
  auto F = [&](const Rational& s) -> Rational {
    return ((((p[3] / 4) * s + p[2] / 3) * s + p[1] / 2) * s + p[0]) * s;
  };
  return F(b) - F(a);
}

Polynomial poly_add(const Polynomial& a, const Polynomial& b) {
  Polynomial r;
  for (int i = 0; i < 4; ++i) r[i] = a[i] + b[i];
  return r;
}

Polynomial poly_scale(const Polynomial& a, const Rational& c) {
  Polynomial r;
  for (int i = 0; i < 4; ++i) r[i] = a[i] * c;
  return r;
}

std::pair<double, double> poly_range(const Polynomial& p, const Rational& r) {
  double lo = std::min(p[0].get_d(), poly_eval(p, r).get_d());
  double hi = std::max(p[0].get_d(), poly_eval(p, r).get_d());
  for (double s : quadratic_roots(p[1].get_d(), 2.0 * p[2].get_d(), 3.0 * p[3].get_d(), 0.0, r.get_d())) {
    double v = poly_eval(p, s);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double pad = kMargin * (1.0 + std::max(std::fabs(lo), std::fabs(hi)));
  return {lo - pad, hi + pad};
}

double poly_lipschitz(const Polynomial& p, const Rational& r) {
  double c1 = p[1].get_d(), c2 = 2.0 * p[2].get_d(), c3 = 3.0 * p[3].get_d();
  double rd = r.get_d();
  auto d = [&](double s) { return std::fabs(c1 + c2 * s + c3 * s * s); };
  double m = std::max(d(0.0), d(rd));
  if (c3 != 0.0) {
    double v = -c2 / (2.0 * c3);
    if (v > 0.0 && v < rd) m = std::max(m, d(v));
  }
  return outward(m);
}

// ---------------------------------------------------------------------------

Observable::Observable(const Suspension& sys, int radius, const std::map<Symbols, Polynomial>& table, double alpha)
    : sys_(std::make_shared<Suspension>(sys)), k_(radius), m_(sys.sft.alphabet_size()), alpha_(alpha) {
  if (radius < 0) throw Error(ErrorKind::InvalidArgument, "Observable", "negative window radius");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidArgument, "Observable", "alpha must be in (0, 1]");
  double cells = std::pow(static_cast<double>(m_), 2 * k_ + 1);
  if (cells > double(1 << 24)) throw Error(ErrorKind::InvalidArgument, "Observable", "window table too large");
  std::size_t n = static_cast<std::size_t>(ipow(m_, 2 * k_ + 1));
  table_.assign(n, Polynomial{});
  present_.assign(n, false);
  for (const auto& w : sys.sft.admissible_words(2 * k_ + 1)) present_[code(w)] = true;
  for (const auto& [w, p] : table) {
    if (static_cast<int>(w.size()) != 2 * k_ + 1)
      throw Error(ErrorKind::InvalidArgument, "Observable", "window '" + to_string(w) + "' has wrong length");
    if (!sys.sft.admissible(w))
      throw Error(ErrorKind::InvalidArgument, "Observable", "window '" + to_string(w) + "' is not admissible");
    table_[code(w)] = p;
  }
  for (const auto& w : sys.sft.admissible_words(2 * k_ + 1))
    if (!table.count(w))
      throw Error(ErrorKind::InvalidArgument, "Observable", "window '" + to_string(w) + "' is missing");
  finish();
}

std::size_t Observable::code(const Symbols& w) const {
  std::size_t c = 0;
  for (Symbol a : w) c = c * static_cast<std::size_t>(m_) + static_cast<std::size_t>(a);
  return c;
}

std::size_t Observable::code(const BiSequence& x, long offset) const {
  std::size_t c = 0;
  for (long i = -k_; i <= k_; ++i) c = c * static_cast<std::size_t>(m_) + static_cast<std::size_t>(x.at(offset + i));
  return c;
}

void Observable::finish() {
  const int len = 2 * k_ + 1;
  const auto& roof = sys_->roof;
  std::vector<Symbols> words = sys_->sft.admissible_words(len);
  if (words.empty()) throw Error(ErrorKind::InvalidArgument, "Observable", "no admissible windows");
  struct Info {
    double lo, hi, lip;
  };
  std::vector<Info> info;
  info.reserve(words.size());
  sup_ = 0.0;
  min_ = std::numeric_limits<double>::infinity();
  double lip = 0.0;
  for (const auto& w : words) {
    const Polynomial& p = table_[code(w)];
    const Rational& r = roof(w[k_]);
    auto [lo, hi] = poly_range(p, r);
    double l = poly_lipschitz(p, r);
    info.push_back({lo, hi, l});
    sup_ = std::max({sup_, std::fabs(lo), std::fabs(hi)});
    min_ = std::min(min_, lo);
    lip = std::max(lip, l);
  }
  double fiber_term = lip * std::pow(roof.r_max().get_d(), 1.0 - alpha_);
  semi_ = fiber_term;
  if (words.size() <= 4096) {
    for (std::size_t a = 0; a < words.size(); ++a) {
      for (std::size_t b = a + 1; b < words.size(); ++b) {
        const Symbols& wa = words[a];
        const Symbols& wb = words[b];
        if (wa[k_] != wb[k_]) {
          semi_ = std::max(semi_, std::max(info[a].hi - info[b].lo, info[b].hi - info[a].lo));
          continue;
        }
        int j = 0;
        for (int t = 1; t <= k_; ++t) {
          if (wa[k_ - t] != wb[k_ - t] || wa[k_ + t] != wb[k_ + t]) {
            j = t;
            break;
          }
        }
        Polynomial diff = poly_add(table_[code(wa)], poly_scale(table_[code(wb)], -1));
        auto [dlo, dhi] = poly_range(diff, roof(wa[k_]));
        double dsup = std::max(std::fabs(dlo), std::fabs(dhi));
        semi_ = std::max(semi_, dsup * std::pow(2.0, alpha_ * j) + fiber_term);
      }
    }
  } else {
    semi_ = std::max(semi_, 2.0 * sup_ * std::pow(2.0, alpha_ * k_) + fiber_term);
  }
  semi_ = outward(semi_);
}

Observable Observable::constant(const Suspension& sys, const Rational& c, double alpha) {
  std::map<Symbols, Polynomial> t;
  for (int a = 0; a < sys.sft.alphabet_size(); ++a) t[{a}] = Polynomial{c, 0, 0, 0};
  return Observable(sys, 0, t, alpha);
}

Observable Observable::indicator(const Suspension& sys, Symbol a, const Rational& value, double alpha) {
  if (a < 0 || a >= sys.sft.alphabet_size())
    throw Error(ErrorKind::InvalidArgument, "Observable::indicator", "symbol out of range");
  std::map<Symbols, Polynomial> t;
  for (int b = 0; b < sys.sft.alphabet_size(); ++b) t[{b}] = Polynomial{b == a ? value : Rational(0), 0, 0, 0};
  return Observable(sys, 0, t, alpha);
}

Observable Observable::fiber_coordinate(const Suspension& sys, double alpha) {
  std::map<Symbols, Polynomial> t;
  for (int a = 0; a < sys.sft.alphabet_size(); ++a) t[{a}] = Polynomial{0, 1, 0, 0};
  return Observable(sys, 0, t, alpha);
}

Observable Observable::parse(const Suspension& sys, const std::string& text, double alpha) {
  std::istringstream in(text);
  std::string line;
  int k = -1;
  std::map<Symbols, Polynomial> t;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::ConfigError, "Observable::parse", "line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    line = line.substr(b);
    if (line.front() == '[') continue;
    if (line.rfind("window", 0) == 0) {
      auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected 'window = k'");
      try {
        k = std::stoi(line.substr(eq + 1));
      } catch (const std::exception&) {
        fail("bad window radius");
      }
      continue;
    }
    if (line.rfind("cyl", 0) == 0) {
      if (k < 0) fail("cyl line before window");
      auto q1 = line.find('"');
      auto q2 = q1 == std::string::npos ? q1 : line.find('"', q1 + 1);
      auto eq = q2 == std::string::npos ? q2 : line.find('=', q2);
      if (eq == std::string::npos) fail("expected cyl \"w\" = c0 c1 c2 c3");
      Symbols w = parse_symbols(line.substr(q1 + 1, q2 - q1 - 1));
      std::istringstream cs(line.substr(eq + 1));
      Polynomial p{};
      std::string tok;
      int i = 0;
      while (cs >> tok) {
        if (i >= 4) fail("more than four coefficients");
        p[i++] = parse_rational(tok);
      }
      if (i == 0) fail("no coefficients");
      t[w] = p;
      continue;
    }
    fail("unrecognized line '" + line + "'");
  }
  if (k < 0) fail("missing window");
  return Observable(sys, k, t, alpha);
}

std::string Observable::to_text() const {
  std::ostringstream o;
  o << "window = " << k_ << "\n";
  for (const auto& [w, p] : entries()) {
    o << "cyl \"" << to_string(w) << "\" =";
    for (const auto& c : p) o << ' ' << to_string(c);
    o << "\n";
  }
  return o.str();
}

const Polynomial& Observable::poly(const Symbols& window) const {
  if (static_cast<int>(window.size()) != 2 * k_ + 1)
    throw Error(ErrorKind::InvalidArgument, "Observable::poly", "window has wrong length");
  return table_[code(window)];
}

const Polynomial& Observable::poly_at(const BiSequence& x, long offset) const { return table_[code(x, offset)]; }

std::vector<std::pair<Symbols, Polynomial>> Observable::entries() const {
  std::vector<std::pair<Symbols, Polynomial>> out;
  for (const auto& w : sys_->sft.admissible_words(2 * k_ + 1)) out.emplace_back(w, table_[code(w)]);
  return out;
}

Rational Observable::evaluate_exact(const FlowPoint& p) const { return poly_eval(poly_at(p.base), p.fiber); }

Observable Observable::lifted(int radius) const {
  if (radius < k_) throw Error(ErrorKind::InvalidArgument, "Observable::lifted", "cannot shrink the window");
  std::map<Symbols, Polynomial> t;
  int d = radius - k_;
  for (const auto& w : sys_->sft.admissible_words(2 * radius + 1)) {
    Symbols inner(w.begin() + d, w.end() - d);
    t[w] = table_[code(inner)];
  }
  return Observable(*sys_, radius, t, alpha_);
}

Observable Observable::with_alpha(double alpha) const {
  auto e = entries();
  std::map<Symbols, Polynomial> t(e.begin(), e.end());
  return Observable(*sys_, k_, t, alpha);
}

std::uint64_t Observable::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  h = fnv(h, static_cast<std::uint64_t>(k_));
  for (const auto& [w, p] : entries()) {
    for (Symbol a : w) h = fnv(h, static_cast<std::uint64_t>(a));
    for (const auto& c : p)
      for (char ch : to_string(c)) h = fnv(h, static_cast<unsigned char>(ch));
  }
  return h;
}

Observable combine(const Rational& a, const Observable& u, const Rational& b, const Observable& w) {
  int k = std::max(u.radius(), w.radius());
  Observable U = u.lifted(k), W = w.lifted(k);
  std::map<Symbols, Polynomial> t;
  for (const auto& [win, p] : U.entries()) t[win] = poly_add(poly_scale(p, a), poly_scale(W.poly(win), b));
  return Observable(u.system(), k, t, std::min(u.alpha(), w.alpha()));
}

HolderData holder_data(const Observable& u) { return {u.sup_norm(), u.seminorm()}; }

Rational segment_integral(const Suspension& sys, const Segment& s, const Observable& u) {
  if (s.duration < 0) throw Error(ErrorKind::InvalidArgument, "segment_integral", "negative duration");
  Rational total = 0, remaining = s.duration, fiber = s.start.fiber;
  long idx = 0;
  const BiSequence& x = s.start.base;
  while (remaining > 0) {
    const Rational& r = sys.roof(x.at(idx));
    Rational span = r - fiber;
    if (span > remaining) span = remaining;
    total += poly_integral(u.poly_at(x, idx), fiber, fiber + span);
    remaining -= span;
    fiber = 0;
    ++idx;
  }
  return total;
}

Rational orbit_integral(const Suspension& sys, const PeriodicOrbit& O, const Observable& u) {
  return segment_integral(sys, Segment{O.base, O.period}, u);
}

Rational time_average(const Suspension& sys, const Observable& u, const FlowPoint& p, const Rational& gamma) {
  if (gamma <= 0) throw Error(ErrorKind::InvalidArgument, "time_average", "gamma must be positive");
  return segment_integral(sys, Segment{p, gamma}, u) / gamma;
}

// ---------------------------------------------------------------------------

namespace {

const double kGLx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
const double kGLw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                        0.2369268850561891};

double gauss(const std::function<double(double)>& f, double a, double b, long& evals) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a), acc = 0.0;
  for (int i = 0; i < 5; ++i) acc += kGLw[i] * f(c + h * kGLx[i]);
  evals += 5;
  return acc * h;
}

void adapt(const std::function<double(double)>& f, double a, double b, double coarse, double tol, int depth,
           IntegralValue& out) {
  double m = 0.5 * (a + b);
  double left = gauss(f, a, m, out.evaluations);
  double right = gauss(f, m, b, out.evaluations);
  double fine = left + right;
  double err = std::fabs(fine - coarse);
  if (err <= tol || depth <= 0 || b - a < 1e-14) {
    out.value += fine;
    out.error += err;
    return;
  }
  adapt(f, a, m, left, 0.5 * tol, depth - 1, out);
  adapt(f, m, b, right, 0.5 * tol, depth - 1, out);
}

}  // namespace

IntegralValue adaptive_integral(const Suspension& sys, const Integrand& f, const Segment& s,
                                const QuadratureOptions& opt) {
  IntegralValue out;
  if (s.duration <= 0) return out;
  const double T = s.duration.get_d();
  Rational remaining = s.duration, fiber = s.start.fiber;
  const BiSequence& x = s.start.base;
  long idx = 0;
  struct Piece {
    std::function<double(double)> f;
    double a, b;
  };
  std::vector<Piece> pieces;
  while (remaining > 0) {
    const Rational& r = sys.roof(x.at(idx));
    Rational span = r - fiber;
    if (span > remaining) span = remaining;
    double a = fiber.get_d(), b = Rational(fiber + span).get_d();
    CellProfile prof = f.profile(x, idx);
    std::vector<double> cuts{a};
    for (double br : prof.breaks)
      if (br > a && br < b) cuts.push_back(br);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    auto fn = std::make_shared<std::function<double(double)>>(prof.f);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      if (cuts[i + 1] > cuts[i]) pieces.push_back({*fn, cuts[i], cuts[i + 1]});
    remaining -= span;
    fiber = 0;
    ++idx;
  }
  double rough = 0.0;
  std::vector<double> coarse(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    coarse[i] = gauss(pieces[i].f, pieces[i].a, pieces[i].b, out.evaluations);
    rough += coarse[i];
  }
  double target = std::max(opt.abs_tol, opt.rel_tol * std::fabs(rough));
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    double share = target * (pieces[i].b - pieces[i].a) / T;
    adapt(pieces[i].f, pieces[i].a, pieces[i].b, coarse[i], share, opt.max_depth, out);
  }
  return out;
}

IntegralValue Integrand::integrate(const Suspension& sys, const Segment& s, const QuadratureOptions& opt) const {
  return adaptive_integral(sys, *this, s, opt);
}

IntegralValue Integrand::orbit_integral(const Suspension& sys, const PeriodicOrbit& O,
                                        const QuadratureOptions& opt) const {
  return integrate(sys, Segment{O.base, O.period}, opt);
}

CellProfile ObservableIntegrand::profile(const BiSequence& x, long offset) const {
  Polynomial p = u_.poly_at(x, offset);
  return {[p](double s) { return poly_eval(p, s); }, {}};
}

IntegralValue ObservableIntegrand::integrate(const Suspension& sys, const Segment& s,
                                             const QuadratureOptions&) const {
  IntegralValue v;
  v.value = segment_integral(sys, s, u_).get_d();
  return v;
}

SumIntegrand::SumIntegrand(std::vector<double> coeffs, std::vector<IntegrandPtr> parts)
    : c_(std::move(coeffs)), parts_(std::move(parts)) {
  if (c_.size() != parts_.size()) throw Error(ErrorKind::InvalidArgument, "SumIntegrand", "size mismatch");
}

double SumIntegrand::evaluate(const FlowPoint& p) const {
  double v = 0.0;
  for (std::size_t i = 0; i < c_.size(); ++i) v += c_[i] * parts_[i]->evaluate(p);
  return v;
}

CellProfile SumIntegrand::profile(const BiSequence& x, long offset) const {
  std::vector<CellProfile> ps;
  CellProfile out;
  for (const auto& part : parts_) {
    ps.push_back(part->profile(x, offset));
    out.breaks.insert(out.breaks.end(), ps.back().breaks.begin(), ps.back().breaks.end());
  }
  std::vector<double> c = c_;
  out.f = [ps, c](double s) {
    double v = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) v += c[i] * ps[i].f(s);
    return v;
  };
  return out;
}

IntegralValue SumIntegrand::integrate(const Suspension& sys, const Segment& s, const QuadratureOptions& opt) const {
  IntegralValue out;
  for (std::size_t i = 0; i < c_.size(); ++i) {
    IntegralValue v = parts_[i]->integrate(sys, s, opt);
    out.value += c_[i] * v.value;
    out.error += std::fabs(c_[i]) * v.error;
    out.evaluations += v.evaluations;
  }
  return out;
}

IntegralValue SumIntegrand::orbit_integral(const Suspension& sys, const PeriodicOrbit& O,
                                           const QuadratureOptions& opt) const {
  IntegralValue out;
  for (std::size_t i = 0; i < c_.size(); ++i) {
    IntegralValue v = parts_[i]->orbit_integral(sys, O, opt);
    out.value += c_[i] * v.value;
    out.error += std::fabs(c_[i]) * v.error;
    out.evaluations += v.evaluations;
  }
  return out;
}

// ---------------------------------------------------------------------------

double DistanceProfile::at(double s) const {
  return std::min({1.0, a0, std::max(au, s), std::max(ad, roof - s)});
}

std::vector<double> DistanceProfile::breaks() const {
  std::vector<double> c{au, roof - ad, a0, roof - a0, 0.5 * roof, ad, roof - au, 1.0, roof - 1.0};
  std::vector<double> out;
  for (double v : c)
    if (v > 0.0 && v < roof) out.push_back(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

OrbitSet::OrbitSet(std::vector<PeriodicOrbit> Z) : orbits(std::move(Z)) {
  for (const auto& O : orbits) {
    const auto& w = O.word.symbols;
    for (std::size_t j = 0; j < w.size(); ++j) {
      bases.push_back(BiSequence::periodic(w, static_cast<long>(j)));
      cells.push_back(w[j]);
    }
  }
}

DistanceProfile distance_profile(const Suspension& sys, const BiSequence& x, long offset, const OrbitSet& Z) {
  DistanceProfile d;
  d.roof = sys.roof(x.at(offset)).get_d();
  Symbol c0 = x.at(offset), cu = x.at(offset - 1), cd = x.at(offset + 1);
  for (std::size_t j = 0; j < Z.bases.size(); ++j) {
    Symbol c = Z.cells[j];
    if (c == c0) d.a0 = std::min(d.a0, shift_distance(x, offset, Z.bases[j], 0));
    if (c == cu) d.au = std::min(d.au, shift_distance(x, offset - 1, Z.bases[j], 0));
    if (c == cd) d.ad = std::min(d.ad, shift_distance(x, offset + 1, Z.bases[j], 0));
  }
  return d;
}

double distance_to_set(const Suspension& sys, const FlowPoint& p, const std::vector<PeriodicOrbit>& Z) {
  OrbitSet set(Z);
  return distance_profile(sys, p.base, 0, set).at(p.fiber.get_d());
}

double distance_to_orbit(const Suspension& sys, const FlowPoint& p, const PeriodicOrbit& O) {
  return distance_to_set(sys, p, {O});
}

OrbitDistanceIntegrand::OrbitDistanceIntegrand(const Suspension& sys, std::vector<PeriodicOrbit> Z, double alpha,
                                               double scale)
    : sys_(std::make_shared<Suspension>(sys)), Z_(std::move(Z)), alpha_(alpha), scale_(scale) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "OrbitDistanceIntegrand", "alpha must be in (0, 1]");
  if (Z_.orbits.empty()) throw Error(ErrorKind::InvalidArgument, "OrbitDistanceIntegrand", "empty orbit set");
}

double OrbitDistanceIntegrand::evaluate(const FlowPoint& p) const {
  return scale_ * std::pow(distance_profile(*sys_, p.base, 0, Z_).at(p.fiber.get_d()), alpha_);
}

CellProfile OrbitDistanceIntegrand::profile(const BiSequence& x, long offset) const {
  DistanceProfile d = distance_profile(*sys_, x, offset, Z_);
  double a = alpha_, sc = scale_;
  return {[d, a, sc](double s) { return sc * std::pow(d.at(s), a); }, d.breaks()};
}

IntegrandPtr orbit_distance_observable(const Suspension& sys, const PeriodicOrbit& O, double alpha) {
  return std::make_shared<OrbitDistanceIntegrand>(sys, std::vector<PeriodicOrbit>{O}, alpha);
}

MollifiedDistance::MollifiedDistance(const Suspension& sys, PeriodicOrbit O, double eps, double mu)
    : sys_(std::make_shared<Suspension>(sys)),
      Z_(std::vector<PeriodicOrbit>{std::move(O)}),
      eps_(eps),
      mu_(mu),
      tau_(mu / std::log(4.0)) {
  if (!(mu > 0.0)) throw Error(ErrorKind::InvalidArgument, "MollifiedDistance", "mu must be positive");
}

namespace {

double softmax2(double a, double b, double tau) {
  double m = std::max(a, b);
  return m + tau * std::log(std::exp((a - m) / tau) + std::exp((b - m) / tau));
}

double softmin(std::initializer_list<double> xs, double tau) {
  double m = std::min(xs);
  double acc = 0.0;
  for (double v : xs) acc += std::exp(-(v - m) / tau);
  return m - tau * std::log(acc);
}

}  // namespace

double MollifiedDistance::smooth(const DistanceProfile& d, double s) const {
  // softmax overshoots by <= tau ln 2, softmin of four terms undershoots by <= tau ln 4.
  double up = softmax2(d.au, s, tau_);
  double down = softmax2(d.ad, d.roof - s, tau_);
  return eps_ * softmin({1.0, d.a0, up, down}, tau_);
}

double MollifiedDistance::evaluate(const FlowPoint& p) const {
  return smooth(distance_profile(*sys_, p.base, 0, Z_), p.fiber.get_d());
}

CellProfile MollifiedDistance::profile(const BiSequence& x, long offset) const {
  DistanceProfile d = distance_profile(*sys_, x, offset, Z_);
  return {[this, d](double s) { return smooth(d, s); }, {}};
}

IntegrandPtr mollified_orbit_distance(const Suspension& sys, const PeriodicOrbit& O, double eps, double mu) {
  return std::make_shared<MollifiedDistance>(sys, O, eps, mu);
}

double product_distance(const FlowPoint& p, const FlowPoint& q) {
  if (p.cell() != q.cell()) return 1.0;
  return std::max(shift_distance(p.base, q.base), std::fabs(Rational(p.fiber - q.fiber).get_d()));
}

Observable random_observable(const Suspension& sys, int radius, std::mt19937_64& rng, int degree, double alpha) {
  std::map<Symbols, Polynomial> t;
  for (const auto& w : sys.sft.admissible_words(2 * radius + 1)) {
    Polynomial p{};
    for (int i = 0; i <= std::min(degree, 3); ++i) p[i] = Rational(static_cast<long>(rng() % 129) - 64, 64);
    t[w] = p;
  }
  return Observable(sys, radius, t, alpha);
}

FlowPoint random_point(const Suspension& sys, std::mt19937_64& rng, int core_len) {
  Symbols w = random_walk(sys.sft, std::max(core_len, 1), rng);
  long lo = -static_cast<long>(w.size()) / 2;
  BiSequence x = extend_word(sys.sft, w, lo);
  const Rational& r = sys.roof(x.at(0));
  Rational fiber = r * Rational(static_cast<long>(rng() % 64), 64);
  return FlowPoint{x, fiber};
}

MollifierCheck check_mollifier(const Suspension& sys, const MollifiedDistance& w, const PeriodicOrbit& O,
                               int samples, std::uint64_t seed) {
  MollifierCheck out;
  out.deviation_bound = w.eps() * w.mu() * (1.0 + 1e-9);
  out.quotient_bound = 2.0 * w.eps() * (1.0 + 1e-9);
  std::mt19937_64 rng(seed);
  OrbitSet set(std::vector<PeriodicOrbit>{O});
  auto crossings = orbit_crossings(sys, O);
  for (int i = 0; i < samples; ++i) {
    FlowPoint p;
    if (i % 2 == 0) {
      p = random_point(sys, rng, 8);
    } else {
      // Near the orbit: a crossing point with its base perturbed far out.
      const auto& c = crossings[rng() % crossings.size()];
      long depth = 2 + static_cast<long>(rng() % 8);
      Symbols core = c.point.base.window(-depth, depth + 1);
      BiSequence x = extend_word(sys.sft, core, -depth);
      const Rational& r = sys.roof(x.at(0));
      p = FlowPoint{x, r * Rational(static_cast<long>(rng() % 64), 64)};
    }
    double dist = distance_profile(sys, p.base, 0, set).at(p.fiber.get_d());
    double val = w.evaluate(p);
    out.max_deviation = std::max(out.max_deviation, std::fabs(val - w.eps() * dist));
    Rational dt(static_cast<long>(1 + rng() % 16), 1024);
    FlowPoint q = flow(sys, p, dt);
    double dpq = sus_distance(sys, p, q);
    if (dpq > 0.0) out.max_quotient = std::max(out.max_quotient, std::fabs(w.evaluate(q) - val) / dpq);
    ++out.samples;
  }
  out.pass = out.max_deviation <= out.deviation_bound && out.max_quotient <= out.quotient_bound;
  return out;
}

}  // namespace ergolock
