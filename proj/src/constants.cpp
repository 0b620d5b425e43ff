#include "ergolock/constants.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace ergolock {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Configured: return "Configured";
    case Provenance::Calibrated: return "Calibrated";
    case Provenance::ModelExact: return "ModelExact";
    case Provenance::Derived: return "Derived";
  }
  return "Unknown";
}

double ConstantsLedger::derive_P0(double C, double lambda) {
  for (int p = 1; p < 100000; ++p) {
    double lhs = C * C * std::exp(-lambda * (p - 1)) + C * C * std::exp(-lambda * p);
    if (lhs < 0.5) return p;
  }
  return 100000;
}

void ConstantsLedger::refresh_derived(const Rational& r_max) {
  delta = {epsilon_bracket.value / 8.0, Provenance::Derived, 0};
  P0 = {derive_P0(C.value, lambda.value), Provenance::Derived, 0};
  double k = std::max(L.value, 2.0 * r_max.get_d());
  // rounded up to a multiple of 1/8 so segment length comparisons stay exact
  K_exact = Rational(static_cast<long>(std::ceil(k * 8.0 - 1e-12)), 8);
  K_exact.canonicalize();
  K = {K_exact.get_d(), Provenance::Derived, 0};
  gamma.value = gamma_exact.get_d();
}

std::vector<ConstantsLedger::Row> ConstantsLedger::rows() const {
  return {{"C", C},          {"lambda", lambda},   {"beta_exp", beta_exp},
          {"delta", delta},  {"delta_prime", delta_prime}, {"epsilon_bracket", epsilon_bracket},
          {"K", K},          {"L", L},             {"gamma", gamma},
          {"Q", Q},          {"tau0", tau0},       {"delta_pp", delta_pp},
          {"P0", P0}};
}

std::string ConstantsLedger::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& r : rows()) {
    j[r.name] = {{"value", r.entry.value},
                 {"provenance", to_string(r.entry.provenance)},
                 {"samples", r.entry.samples}};
  }
  j["gamma_exact"] = ergolock::to_string(gamma_exact);
  j["tau0_exact"] = ergolock::to_string(tau0_exact);
  j["K_exact"] = ergolock::to_string(K_exact);
  return j.dump(2);
}

}  // namespace ergolock
