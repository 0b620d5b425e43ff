#include "ergolock/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ergolock/errors.hpp"

extern char** environ;

namespace ergolock {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

[[noreturn]] void config_error(const std::string& op, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, op, msg);
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool is_multi(const std::string& key) { return key == "forbidden"; }

bool same_key(const std::string& a, const std::string& b) { return lower(a) == lower(b); }

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string raw = line;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error("Config::parse", "line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) config_error("Config::parse", "line " + std::to_string(lineno) + ": empty section name");
      cfg.sections_[section];
      continue;
    }
    if (section.empty()) config_error("Config::parse", "line " + std::to_string(lineno) + ": entry outside a section");
    if (section.rfind("observable.", 0) == 0) {
      // kept verbatim; the observable parser reads window and cyl lines
      cfg.sections_[section].emplace_back("", line);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      config_error("Config::parse", "line " + std::to_string(lineno) + ": expected key = value in '" + trim(raw) + "'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) config_error("Config::parse", "line " + std::to_string(lineno) + ": empty key");
    cfg.set(section, key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("Config::load", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  auto& entries = sections_[section];
  if (!is_multi(key)) {
    entries.erase(std::remove_if(entries.begin(), entries.end(), [&](const auto& e) { return same_key(e.first, key); }),
                  entries.end());
  }
  entries.emplace_back(key, value);
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) return std::nullopt;
  for (auto e = it->second.rbegin(); e != it->second.rend(); ++e)
    if (same_key(e->first, key)) return unquote(e->second);
  return std::nullopt;
}

std::vector<std::string> Config::get_all(const std::string& section, const std::string& key) const {
  std::vector<std::string> out;
  auto it = sections_.find(section);
  if (it == sections_.end()) return out;
  for (const auto& e : it->second)
    if (same_key(e.first, key)) out.push_back(e.second);
  return out;
}

std::vector<std::pair<std::string, std::string>> Config::apply_env() {
  std::vector<std::pair<std::string, std::string>> applied;
  const std::string prefix = "ERGOLOCK_";
  for (char** e = environ; e && *e; ++e) {
    std::string s = *e;
    if (s.rfind(prefix, 0) != 0) continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) continue;
    std::string name = s.substr(0, eq), value = s.substr(eq + 1);
    std::string rest = name.substr(prefix.size());
    auto us = rest.find('_');
    if (us == std::string::npos || us == 0 || us + 1 >= rest.size()) continue;
    applied.emplace_back(name, value);
  }
  std::sort(applied.begin(), applied.end());
  for (const auto& [name, value] : applied) {
    std::string rest = name.substr(prefix.size());
    auto us = rest.find('_');
    set(lower(rest.substr(0, us)), lower(rest.substr(us + 1)), value);
  }
  return applied;
}

void Config::apply_assignment(const std::string& text) {
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) config_error("Config::apply_assignment", "expected key=value, got '" + text + "'");
  std::string key = trim(text.substr(0, eq)), value = trim(text.substr(eq + 1));
  std::string section = "run";
  if (auto dot = key.find('.'); dot != std::string::npos && key.rfind("roof.", 0) != 0) {
    section = key.substr(0, dot);
    key = key.substr(dot + 1);
  }
  set(section, key, value);
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& def) const {
  return get(section, key).value_or(def);
}

long Config::get_int(const std::string& section, const std::string& key, long def) const {
  auto v = get(section, key);
  if (!v) return def;
  try {
    std::size_t pos = 0;
    long out = std::stol(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    config_error("Config::get_int", section + "." + key + ": not an integer: '" + *v + "'");
  }
}

double Config::get_double(const std::string& section, const std::string& key, double def) const {
  auto v = get(section, key);
  if (!v) return def;
  try {
    return parse_rational(*v).get_d();
  } catch (const Error&) {
  }
  try {
    std::size_t pos = 0;
    double out = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    config_error("Config::get_double", section + "." + key + ": not a number: '" + *v + "'");
  }
}

Rational Config::get_rational(const std::string& section, const std::string& key, const Rational& def) const {
  auto v = get(section, key);
  if (!v) return def;
  try {
    return parse_rational(*v);
  } catch (const Error&) {
    config_error("Config::get_rational", section + "." + key + ": not a rational: '" + *v + "'");
  }
}

std::vector<std::string> Config::get_list(const std::string& section, const std::string& key) const {
  std::vector<std::string> out;
  auto v = get(section, key);
  if (!v) return out;
  std::string s = *v;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(unquote(tok));
  return out;
}

std::vector<int> Config::get_int_list(const std::string& section, const std::string& key, std::vector<int> def) const {
  if (!get(section, key)) return def;
  std::vector<int> out;
  for (const auto& item : get_list(section, key)) {
    try {
      if (auto dots = item.find(".."); dots != std::string::npos) {
        int a = std::stoi(item.substr(0, dots)), b = std::stoi(item.substr(dots + 2));
        for (int i = a; i <= b; ++i) out.push_back(i);
      } else {
        out.push_back(std::stoi(item));
      }
    } catch (const std::exception&) {
      config_error("Config::get_int_list", section + "." + key + ": bad item '" + item + "'");
    }
  }
  return out;
}

std::string Config::canonical() const {
  std::ostringstream out;
  for (const auto& [name, entries] : sections_) {
    out << '[' << name << "]\n";
    if (name.rfind("observable.", 0) == 0) {
      for (const auto& e : entries) out << e.second << '\n';
      continue;
    }
    std::vector<std::pair<std::string, std::string>> sorted = entries;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [k, v] : sorted) out << k << " = " << v << '\n';
  }
  return out.str();
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

std::optional<std::string> Config::observable_text(const std::string& name) const {
  auto it = sections_.find("observable." + name);
  if (it == sections_.end()) return std::nullopt;
  std::string text;
  for (const auto& e : it->second) text += e.second + "\n";
  return text;
}

// ---------------------------------------------------------------------------

Suspension build_system(const Config& cfg) {
  if (!cfg.has_section("system")) return Suspension(Sft::golden_mean(), RoofFunction::constant(2, 1));
  std::string text = "alphabet = " + cfg.get_string("system", "alphabet", "2") + "\n";
  for (const auto& f : cfg.get_all("system", "forbidden")) text += "forbidden = " + f + "\n";
  Sft sft = [&] {
    try {
      return Sft::parse(text);
    } catch (const Error& e) {
      config_error("build_system", e.what());
    }
  }();
  std::vector<Rational> heights;
  const Rational dflt = cfg.get_rational("system", "roof", Rational(1));
  for (int a = 0; a < sft.alphabet_size(); ++a)
    heights.push_back(cfg.get_rational("system", "roof." + std::to_string(a), dflt));
  try {
    return Suspension(std::move(sft), RoofFunction(std::move(heights)));
  } catch (const Error& e) {
    config_error("build_system", e.what());
  }
}

ConstantsLedger build_ledger(const Config& cfg, const Suspension& sys) {
  ConstantsLedger L = default_ledger(sys);
  struct Field {
    const char* key;
    LedgerEntry* entry;
  };
  const Field fields[] = {{"C", &L.C},
                          {"lambda", &L.lambda},
                          {"beta_exp", &L.beta_exp},
                          {"delta_prime", &L.delta_prime},
                          {"epsilon_bracket", &L.epsilon_bracket},
                          {"L", &L.L},
                          {"Q", &L.Q},
                          {"delta_pp", &L.delta_pp}};
  for (const auto& f : fields) {
    if (!cfg.get("ledger", f.key)) continue;
    double v = cfg.get_double("ledger", f.key, f.entry->value);
    if (!(v > 0.0)) config_error("build_ledger", std::string("ledger.") + f.key + " must be positive");
    *f.entry = {v, Provenance::Configured, 0};
  }
  if (cfg.get("ledger", "gamma")) {
    L.gamma_exact = cfg.get_rational("ledger", "gamma", L.gamma_exact);
    if (L.gamma_exact <= 0) config_error("build_ledger", "ledger.gamma must be positive");
    L.gamma = {L.gamma_exact.get_d(), Provenance::Configured, 0};
  }
  if (L.C.value < 1.0) config_error("build_ledger", "ledger.C must be at least 1");
  L.refresh_derived(sys.roof.r_max());
  return L;
}

Observable build_observable(const Config& cfg, const Suspension& sys, const std::string& name, double alpha) {
  auto text = cfg.observable_text(name);
  if (!text) {
    if (name == "psi") return Observable::constant(sys, 1, alpha);
    config_error("build_observable", "missing section [observable." + name + "]");
  }
  try {
    return Observable::parse(sys, *text, alpha);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error("build_observable", "[observable." + name + "]: " + e.what());
  }
}

std::vector<PeriodicOrbit> build_orbits(const Suspension& sys, const std::vector<std::string>& items) {
  std::vector<PeriodicOrbit> out;
  for (const auto& it : items) {
    try {
      out.push_back(it.find('=') != std::string::npos ? parse_orbit(sys, it) : make_orbit(sys, parse_symbols(it)));
    } catch (const Error& e) {
      config_error("build_orbits", "orbit '" + it + "': " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string OrbitCache::to_text() const {
  std::ostringstream out;
  out << "ergolock-orbit-cache " << kVersion << '\n';
  out << "sft " << hex(sft_hash) << " roof " << hex(roof_hash) << " P " << P << '\n';
  out << "rows " << rows.size() << '\n';
  for (const auto& r : rows) {
    out << r.word << ' ' << to_string(r.period);
    for (const auto& [h, v] : r.integrals) out << ' ' << hex(h) << '=' << to_string(v);
    out << '\n';
  }
  return out.str();
}

OrbitCache OrbitCache::parse(const std::string& text) {
  auto bad = [](const std::string& why) -> OrbitCache {
    throw Error(ErrorKind::CacheMismatch, "OrbitCache::parse", why);
  };
  std::istringstream in(text);
  std::string magic, tag_s, tag_r, tag_p, tag_rows;
  int version = 0;
  OrbitCache c;
  std::string sh, rh;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != "ergolock-orbit-cache") return bad("not an orbit cache");
  if (version != kVersion) return bad("unsupported cache version " + std::to_string(version));
  if (!(in >> tag_s >> sh >> tag_r >> rh >> tag_p >> c.P) || tag_s != "sft" || tag_r != "roof" || tag_p != "P")
    return bad("malformed header");
  if (!(in >> tag_rows >> count) || tag_rows != "rows") return bad("malformed row count");
  c.sft_hash = std::stoull(sh, nullptr, 16);
  c.roof_hash = std::stoull(rh, nullptr, 16);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    Row r;
    std::string period, tok;
    if (!(ls >> r.word >> period)) return bad("malformed row '" + line + "'");
    try {
      r.period = parse_rational(period);
      while (ls >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) return bad("malformed integral '" + tok + "'");
        r.integrals[std::stoull(tok.substr(0, eq), nullptr, 16)] = parse_rational(tok.substr(eq + 1));
      }
    } catch (const Error&) {
      return bad("malformed row '" + line + "'");
    }
    c.rows.push_back(std::move(r));
  }
  if (c.rows.size() != count) return bad("row count mismatch");
  return c;
}

OrbitCache OrbitCache::from_catalog(const OrbitCatalog& cat, const std::vector<const Observable*>& observables) {
  OrbitCache c;
  c.sft_hash = cat.sys->sft.hash();
  c.roof_hash = cat.sys->roof.hash();
  c.P = cat.P;
  for (const auto& O : cat.orbits) {
    Row r{O.word.to_string(), O.period, {}};
    for (const Observable* u : observables) r.integrals[u->hash()] = orbit_integral(*cat.sys, O, *u);
    c.rows.push_back(std::move(r));
  }
  return c;
}

OrbitCatalog OrbitCache::to_catalog(const Suspension& sys, int P_req, const std::vector<const Observable*>& observables) const {
  auto mismatch = [](const std::string& why) -> OrbitCatalog {
    throw Error(ErrorKind::CacheMismatch, "OrbitCache::to_catalog", why);
  };
  if (sft_hash != sys.sft.hash() || roof_hash != sys.roof.hash()) return mismatch("system hash differs");
  if (P != P_req) return mismatch("cache holds P = " + std::to_string(P) + ", requested " + std::to_string(P_req));
  OrbitCatalog cat;
  cat.sys = std::make_shared<const Suspension>(sys);
  cat.P = P;
  for (const auto& r : rows) {
    try {
      cat.orbits.push_back(make_orbit(sys, parse_symbols(r.word)));
    } catch (const Error& e) {
      return mismatch(std::string("row '") + r.word + "': " + e.what());
    }
  }
  if (!rows.empty()) {
    const std::size_t k = static_cast<std::size_t>(fnv1a64(to_text()) % rows.size());
    const auto& r = rows[k];
    const auto& O = cat.orbits[k];
    if (O.period != r.period) return mismatch("self-check: period of '" + r.word + "' differs");
    for (const Observable* u : observables) {
      auto it = r.integrals.find(u->hash());
      if (it != r.integrals.end() && it->second != orbit_integral(sys, O, *u))
        return mismatch("self-check: cached integral of '" + r.word + "' differs");
    }
  }
  return cat;
}

OrbitCatalog cached_catalog(const Suspension& sys, int P, const std::string& path,
                            const std::vector<const Observable*>& observables) {
  if (!path.empty() && std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return OrbitCache::parse(ss.str()).to_catalog(sys, P, observables);
  }
  OrbitCatalog cat = build_catalog(sys, P);
  if (!path.empty()) write_atomic(path, OrbitCache::from_catalog(cat, observables).to_text());
  return cat;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::ConfigError, "write_atomic", "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::ConfigError, "write_atomic", "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, p);
}

}  // namespace ergolock
