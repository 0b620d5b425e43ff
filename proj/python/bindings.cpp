#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "ergolock/config.hpp"
#include "ergolock/errors.hpp"
#include "ergolock/locking.hpp"

namespace py = pybind11;
using namespace ergolock;

namespace {

// Exact values cross the boundary as fractions.Fraction.
py::object fraction(const Rational& q) {
  static py::object cls = py::module_::import("fractions").attr("Fraction");
  return cls(py::str(to_string(q)));
}

Rational rational(const py::handle& o) { return parse_rational(py::str(o).cast<std::string>()); }

struct System {
  Suspension sys;
  ConstantsLedger ledger;
};

System make_system(int alphabet, const std::vector<std::string>& forbidden, const std::vector<py::object>& roof) {
  std::vector<std::pair<Symbol, Symbol>> pairs;
  for (const auto& f : forbidden) {
    Symbols s = parse_symbols(f);
    if (s.size() != 2) throw Error(ErrorKind::InvalidArgument, "System", "forbidden transitions have two symbols");
    pairs.emplace_back(s[0], s[1]);
  }
  std::vector<Rational> r;
  for (const auto& o : roof) r.push_back(rational(o));
  if (r.empty()) r.assign(alphabet, Rational(1));
  Suspension s(Sft::from_forbidden(alphabet, pairs), RoofFunction(r));
  return System{s, default_ledger(s)};
}

PeriodicOrbit orbit(const System& s, const std::string& w) {
  return w.find('=') != std::string::npos ? parse_orbit(s.sys, w) : make_orbit(s.sys, parse_symbols(w));
}

std::vector<PeriodicOrbit> orbits(const System& s, const std::vector<std::string>& ws) {
  std::vector<PeriodicOrbit> out;
  for (const auto& w : ws) out.push_back(orbit(s, w));
  return out;
}

std::vector<std::string> words(const std::vector<PeriodicOrbit>& os) {
  std::vector<std::string> out;
  for (const auto& O : os) out.push_back(O.word.to_string());
  return out;
}

py::dict ledger_dict(const ConstantsLedger& L) {
  py::dict d;
  for (const auto& row : L.rows()) d[py::str(row.name)] = py::make_tuple(row.entry.value, to_string(row.entry.provenance));
  return d;
}

py::dict lock_dict(const LockReport& r) {
  py::dict d;
  d["orbit"] = r.orbit.word.to_string();
  d["P"] = r.P;
  d["base_argmin"] = r.base_argmin;
  d["margin"] = r.margin;
  d["locked"] = r.locked;
  py::list trials;
  for (const auto& t : r.trials) {
    py::dict td;
    td["seed"] = t.seed;
    td["h_sup"] = t.h_sup;
    td["h_holder"] = t.h_holder;
    td["argmin"] = t.argmin;
    td["unique"] = t.unique;
    td["margin"] = t.margin;
    trials.append(td);
  }
  d["trials"] = trials;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ergolock, m) {
  m.doc() = "Periodic-orbit locking experiments on suspension flows over subshifts of finite type";

  static PyObject* exc_type = py::exception<Error>(m, "ErgolockError").release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(exc_type)(e.what());
      err.attr("kind") = to_string(e.kind());
      err.attr("where") = e.where();
      PyErr_SetObject(exc_type, err.ptr());
    }
  });

  py::class_<System>(m, "System")
      .def(py::init(&make_system), py::arg("alphabet") = 2, py::arg("forbidden") = std::vector<std::string>{"11"},
           py::arg("roof") = std::vector<py::object>{})
      .def_static("golden", [] { return make_system(2, {"11"}, {}); })
      .def_static(
          "from_config",
          [](const std::string& text) {
            Config c = Config::parse(text);
            Suspension s = build_system(c);
            return System{s, build_ledger(c, s)};
          },
          py::arg("text"))
      .def_property_readonly("alphabet", [](const System& s) { return s.sys.sft.alphabet_size(); })
      .def("roof", [](const System& s, int a) { return fraction(s.sys.roof(static_cast<Symbol>(a))); })
      .def("ledger", [](const System& s) { return ledger_dict(s.ledger); })
      .def("period", [](const System& s, const std::string& w) { return fraction(orbit(s, w).period); });

  py::class_<Observable>(m, "Observable")
      .def_static(
          "parse", [](const System& s, const std::string& text, double a) { return Observable::parse(s.sys, text, a); },
          py::arg("system"), py::arg("text"), py::arg("alpha") = 1.0)
      .def_static(
          "constant", [](const System& s, const py::object& c) { return Observable::constant(s.sys, rational(c)); },
          py::arg("system"), py::arg("value"))
      .def_static(
          "indicator",
          [](const System& s, int a, const py::object& v) {
            return Observable::indicator(s.sys, static_cast<Symbol>(a), rational(v));
          },
          py::arg("system"), py::arg("symbol"), py::arg("value") = py::int_(1))
      .def(
          "orbit_integral",
          [](const Observable& u, const System& s, const std::string& w) {
            return fraction(orbit_integral(s.sys, orbit(s, w), u));
          },
          py::arg("system"), py::arg("word"))
      .def("to_text", &Observable::to_text)
      .def_property_readonly("sup_norm", &Observable::sup_norm)
      .def_property_readonly("seminorm", &Observable::seminorm)
      .def(
          "combine",
          [](const Observable& u, const py::object& a, const py::object& b, const Observable& w) {
            return combine(rational(a), u, rational(b), w);
          },
          py::arg("a"), py::arg("b"), py::arg("other"), "a * self + b * other");

  m.def(
      "catalog",
      [](const System& s, int P) {
        OrbitCatalog cat = build_catalog(s.sys, P);
        py::list out;
        for (const auto& O : cat.orbits) out.append(py::make_tuple(O.word.to_string(), fraction(O.period)));
        return out;
      },
      py::arg("system"), py::arg("P"), "Primitive periodic orbits with word length <= P as (word, period)");

  m.def(
      "census_matches_trace", [](const System& s, int P) { return census_matches_trace(build_catalog(s.sys, P)); },
      py::arg("system"), py::arg("P"));

  m.def(
      "beta",
      [](const System& s, const Observable& u, const std::optional<Observable>& psi, int P) {
        Observable w = psi ? *psi : Observable::constant(s.sys, 1);
        BetaResult r = beta_over_catalog(build_catalog(s.sys, P), u, w);
        py::dict d;
        d["beta"] = fraction(r.beta_hat);
        d["argmin"] = words(r.argmin_orbits);
        d["margin"] = r.margin;
        py::list ratios;
        for (const auto& q : r.ratios) ratios.append(fraction(q));
        d["ratios"] = ratios;
        return d;
      },
      py::arg("system"), py::arg("u"), py::arg("psi") = py::none(), py::arg("P") = 12);

  m.def(
      "subaction",
      [](const System& s, const Observable& u, const std::optional<Observable>& psi, const py::object& beta, int depth,
         const py::object& gamma) {
        Observable w = psi ? *psi : Observable::constant(s.sys, 1);
        SubactionOptions opt;
        opt.depth = depth;
        opt.gamma = rational(gamma);
        SubactionRun run = run_subaction(s.sys, u, w, rational(beta), opt);
        EdgeScan scan = rescan_edges(*run.graph, run.cert);
        py::dict d;
        d["status"] = to_string(run.cert.status);
        d["slack"] = run.cert.slack;
        d["tol"] = run.cert.tol;
        d["nodes"] = run.graph->size();
        d["rescan_pass"] = scan.pass;
        d["witness_weight"] = run.cert.witness_weight;
        return d;
      },
      py::arg("system"), py::arg("u"), py::arg("psi") = py::none(), py::arg("beta") = py::int_(0),
      py::arg("depth") = 3, py::arg("gamma") = py::int_(4));

  m.def(
      "reveal_check",
      [](const System& s, const Observable& u, const std::optional<Observable>& psi, int P) {
        Observable w = psi ? *psi : Observable::constant(s.sys, 1);
        BetaResult b = beta_over_catalog(build_catalog(s.sys, P), u, w);
        SubactionRun run = run_subaction(s.sys, u, w, b.beta_hat, SubactionOptions{});
        auto ubar = reveal(s.sys, run, minimizing_set_estimate(b));
        RevealCheck c = check_reveal(s.sys, *ubar, run.graph->net());
        py::dict d;
        d["node_min"] = c.node_min;
        d["tol"] = c.tol;
        d["nodes_ok"] = c.nodes_ok;
        d["orbits_ok"] = c.orbits_ok;
        d["max_orbit_average"] = c.max_orbit_average;
        d["sup_bound"] = ubar->sup_bound();
        d["holder_estimate"] = ubar->holder_estimate(s.ledger);
        return d;
      },
      py::arg("system"), py::arg("u"), py::arg("psi") = py::none(), py::arg("P") = 12);

  m.def(
      "gap", [](const System& s, const std::string& w) { return gap(s.sys, orbit(s, w), s.ledger).gap; },
      py::arg("system"), py::arg("word"));

  m.def(
      "alpha_deviation",
      [](const System& s, const std::string& w, const std::vector<std::string>& Z, double alpha) {
        return alpha_deviation(s.sys, orbit(s, w), orbits(s, Z), alpha).value;
      },
      py::arg("system"), py::arg("word"), py::arg("Z"), py::arg("alpha") = 1.0);

  m.def(
      "split",
      [](const System& s, const std::string& w, const std::vector<std::string>& Z, double Ltilde, double alpha) {
        SplitTrace t = split_orbit(s.sys, orbit(s, w), orbits(s, Z), Ltilde, alpha, s.ledger);
        py::list steps;
        for (const auto& st : t.steps) steps.append(py::make_tuple(st.word, to_string(st.action), st.ratio));
        py::dict d;
        d["steps"] = steps;
        d["final"] = t.final.word.to_string();
        d["satisfied"] = t.satisfied;
        d["iteration_bound"] = t.iteration_bound;
        return d;
      },
      py::arg("system"), py::arg("word"), py::arg("Z"), py::arg("Ltilde") = 4.0, py::arg("alpha") = 1.0);

  m.def(
      "approximate",
      [](const System& s, const std::vector<std::string>& Z, int n) {
        ApproxReport r = periodic_approximation(s.sys, orbits(s, Z), n, s.ledger);
        py::dict d;
        d["orbit"] = r.orbit.word.to_string();
        d["p_n"] = r.p_n;
        d["max_distance"] = r.max_distance;
        d["envelope"] = r.envelope;
        d["within"] = r.within;
        return d;
      },
      py::arg("system"), py::arg("Z"), py::arg("n"));

  m.def(
      "decay",
      [](const System& s, const std::vector<std::string>& Z, const std::vector<int>& P_list,
         const std::vector<int>& ks, double alpha, bool exclude_Z) {
        py::list out;
        for (const auto& r : decay_experiment(s.sys, orbits(s, Z), alpha, ks, P_list, exclude_Z))
          out.append(py::make_tuple(r.P, r.min_dev, r.argmin, r.scaled));
        return out;
      },
      py::arg("system"), py::arg("Z"), py::arg("P_list"), py::arg("ks") = std::vector<int>{0, 1, 2},
      py::arg("alpha") = 1.0, py::arg("exclude_Z") = false);

  m.def(
      "lock",
      [](const System& s, const Observable& u, const std::optional<Observable>& psi, int P,
         const std::optional<std::string>& target, double eps, int trials, std::uint64_t seed) {
        Observable w = psi ? *psi : Observable::constant(s.sys, 1);
        LockOptions lo;
        lo.trials = trials;
        lo.seed = seed;
        std::optional<PeriodicOrbit> O;
        if (target) O = orbit(s, *target);
        LockExperiment e =
            run_lock_experiment(s.sys, u, w, build_catalog(s.sys, P), O, eps, s.ledger, SubactionOptions{}, lo);
        py::dict d = lock_dict(e.lock);
        d["beta"] = fraction(e.beta.beta_hat);
        d["Z"] = words(e.Z);
        d["satisfied"] = e.comparison.satisfied;
        d["lhs"] = e.comparison.lhs;
        d["rhs"] = e.comparison.rhs;
        d["h_cap"] = e.comparison.h_cap;
        d["outcome"] = to_string(e.outcome);
        return d;
      },
      py::arg("system"), py::arg("u"), py::arg("psi") = py::none(), py::arg("P") = 8, py::arg("orbit") = py::none(),
      py::arg("eps") = 0.25, py::arg("trials") = 20, py::arg("seed") = 1);

  m.def(
      "continuous_lock",
      [](const System& s, const std::string& w, double rho1, double rho2, int P, int trials, std::uint64_t seed) {
        PeriodicOrbit O = orbit(s, w);
        auto u = orbit_distance_observable(s.sys, O, 1.0);
        RhoOptions ro;
        ro.lock.trials = trials;
        ro.lock.seed = seed;
        RhoReport r = continuous_locking_rho(s.sys, *u, Observable::constant(s.sys, 1), O, build_catalog(s.sys, P),
                                             s.ledger, rho1, rho2, ro);
        py::dict d = lock_dict(r.lock);
        d["rho"] = r.rho_bound;
        d["gap"] = r.gap;
        d["theta_rho1"] = r.theta_rho1;
        d["theta_far"] = r.theta_far;
        return d;
      },
      py::arg("system"), py::arg("orbit"), py::arg("rho1"), py::arg("rho2"), py::arg("P") = 8, py::arg("trials") = 20,
      py::arg("seed") = 1);

  m.def(
      "calibrate",
      [](const System& s, int budget, std::uint64_t seed) {
        CalibrationReport r = calibrate_constants(s.sys, budget, seed, s.ledger);
        py::dict d;
        d["ledger"] = ledger_dict(r.ledger);
        d["lambda_measured"] = r.lambda_measured;
        d["beta_measured"] = r.beta_measured;
        d["L_measured"] = r.L_measured;
        d["pair_samples"] = r.pair_samples;
        return d;
      },
      py::arg("system"), py::arg("budget") = 200, py::arg("seed") = 1);
}
