#pragma once

// Structured-text experiment configuration and the orbit cache.
//
//   [system]            alphabet = 2, forbidden = "11", roof.0 = 1, ...
//   [ledger]            overrides of ConstantsLedger entries
//   [observable.NAME]   window = k, cyl "w" = c0 c1 c2 c3
//   [run]               command parameters
//
// Environment variables ERGOLOCK_<SECTION>_<KEY> override file values.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolock/ergopt.hpp"

namespace ergolock {

class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  /// Later values of a key win; `forbidden` keeps every occurrence. Keys compare case-insensitively.
  void set(const std::string& section, const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_all(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

  /// Applies ERGOLOCK_<SECTION>_<KEY> variables; returns the applied (name, value) pairs in name order.
  std::vector<std::pair<std::string, std::string>> apply_env();
  /// `key=value` for [run] or `section.key=value`.
  void apply_assignment(const std::string& text);

  std::string get_string(const std::string& section, const std::string& key, const std::string& def) const;
  long get_int(const std::string& section, const std::string& key, long def) const;
  double get_double(const std::string& section, const std::string& key, double def) const;
  Rational get_rational(const std::string& section, const std::string& key, const Rational& def) const;
  /// Comma or space separated; integer items accept `a..b` ranges.
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
  std::vector<int> get_int_list(const std::string& section, const std::string& key, std::vector<int> def) const;

  /// Sorted dump of every section; the config hash is taken over it.
  std::string canonical() const;
  std::uint64_t hash() const;

  /// Raw text of an [observable.NAME] section.
  std::optional<std::string> observable_text(const std::string& name) const;

 private:
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections_;
};

/// Golden-mean shift with unit roof when [system] is absent.
Suspension build_system(const Config& cfg);
/// Default ledger with [ledger] overrides, marked Configured, then derived entries refreshed.
ConstantsLedger build_ledger(const Config& cfg, const Suspension& sys);
/// psi defaults to the constant 1; other names must be present.
Observable build_observable(const Config& cfg, const Suspension& sys, const std::string& name, double alpha = 1.0);
/// Words, or `word=...;period=p/q` entries.
std::vector<PeriodicOrbit> build_orbits(const Suspension& sys, const std::vector<std::string>& items);

/// Orbit catalog persisted as text, keyed by (Sft hash, roof hash, P).
struct OrbitCache {
  static constexpr int kVersion = 1;
  std::uint64_t sft_hash = 0;
  std::uint64_t roof_hash = 0;
  int P = 0;
  struct Row {
    std::string word;
    Rational period;
    std::map<std::uint64_t, Rational> integrals;
  };
  std::vector<Row> rows;

  std::string to_text() const;
  static OrbitCache parse(const std::string& text);

  static OrbitCache from_catalog(const OrbitCatalog& cat, const std::vector<const Observable*>& observables);
  /// Throws CacheMismatch when the key differs or the self-check row disagrees with a recomputation.
  OrbitCatalog to_catalog(const Suspension& sys, int P, const std::vector<const Observable*>& observables) const;
};

/// Loads `path` when it exists (self-checked), otherwise builds the catalog and writes the cache.
OrbitCatalog cached_catalog(const Suspension& sys, int P, const std::string& path,
                            const std::vector<const Observable*>& observables);

/// Writes through a temporary file and rename.
void write_atomic(const std::string& path, const std::string& content);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace ergolock
