#pragma once

// Exact machinery for one-step subshifts of finite type: admissibility,
// eventually periodic two-sided sequences, the shift metric and periodic
// word enumeration.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace ergolock {

using Symbol = int;
using Symbols = std::vector<Symbol>;

/// Symbols are written 0-9 then a-z.
char symbol_char(Symbol s);
Symbol parse_symbol(char c);
std::string to_string(const Symbols& w);
Symbols parse_symbols(std::string_view text);

/// Smallest p dividing |w| with w == (w[0..p))^(|w|/p).
std::size_t primitive_period(const Symbols& w);
bool is_primitive(const Symbols& w);
/// Lexicographically minimal rotation (Booth).
Symbols min_rotation(const Symbols& w);

class Sft {
 public:
  /// Throws InvalidArgument unless the transition matrix is irreducible and
  /// every symbol has a successor.
  Sft(int alphabet_size, std::vector<std::vector<bool>> adjacency);

  static Sft full_shift(int m);
  /// Two symbols, the transition 1 -> 1 forbidden.
  static Sft golden_mean();
  static Sft from_forbidden(int m, const std::vector<std::pair<Symbol, Symbol>>& forbidden);

  /// `alphabet = m` followed by one `forbidden = "ab"` line per forbidden transition.
  static Sft parse(std::string_view text);
  std::string to_text() const;

  int alphabet_size() const noexcept { return m_; }
  bool allowed(Symbol a, Symbol b) const { return adj_[a][b]; }
  const std::vector<std::vector<bool>>& adjacency() const noexcept { return adj_; }

  bool admissible(const Symbols& w) const;
  bool cyclically_admissible(const Symbols& w) const;

  /// All admissible words of the given length in lexicographic order.
  std::vector<Symbols> admissible_words(int length) const;

  /// A shortest cycle through `a`, written starting at `a` (used to close tails).
  const Symbols& cycle_through(Symbol a) const { return cycles_[a]; }

  /// trace(A^n) with exact integer arithmetic.
  mpz_class trace_power(int n) const;

  /// Topological entropy log(spectral radius of A).
  double entropy() const;

  std::uint64_t hash() const;

  bool operator==(const Sft& o) const { return m_ == o.m_ && adj_ == o.adj_; }

 private:
  int m_;
  std::vector<std::vector<bool>> adj_;
  std::vector<Symbols> cycles_;
};

/// Eventually periodic two-sided sequence in canonical form.
///
/// x(i) = left[(i - lo) mod |left|] for i < lo, core[i - lo] for lo <= i < hi and
/// right[(i - hi) mod |right|] for i >= hi. Canonical form has primitive tails,
/// lo <= 0 < hi and the shortest core with that property.
class BiSequence {
 public:
  /// The fixed point 0^inf.
  BiSequence() : left_{0}, lo_(0), core_{0}, hi_(1), right_{0} {}
  BiSequence(Symbols left, long lo, Symbols core, Symbols right);

  /// x(i) = word[(i + phase) mod |word|].
  static BiSequence periodic(const Symbols& word, long phase = 0);

  /// i < 0 taken from `past`, i >= 0 taken from `future`.
  static BiSequence splice(const BiSequence& past, const BiSequence& future);

  Symbol at(long i) const;
  long lo() const noexcept { return lo_; }
  long hi() const noexcept { return hi_; }
  const Symbols& left() const noexcept { return left_; }
  const Symbols& core() const noexcept { return core_; }
  const Symbols& right() const noexcept { return right_; }

  /// result(i) = x(i + n).
  BiSequence shifted(long n) const;

  /// Symbols at indices [from, to).
  Symbols window(long from, long to) const;

  bool admissible(const Sft& sft) const;

  /// Purely periodic from both ends with the same tail.
  bool is_periodic() const;

  std::string to_string() const;
  std::uint64_t hash() const;

  bool operator==(const BiSequence& o) const {
    return lo_ == o.lo_ && hi_ == o.hi_ && core_ == o.core_ && left_ == o.left_ &&
           right_ == o.right_;
  }
  bool operator!=(const BiSequence& o) const { return !(*this == o); }

 private:
  void normalize();

  Symbols left_;
  long lo_;
  Symbols core_;
  long hi_;
  Symbols right_;
};

/// Sequence with x[lo, lo + |w|) = w, continued on both sides by shortest
/// cycles through the end symbols of w.
BiSequence extend_word(const Sft& sft, const Symbols& w, long lo);

/// Uniform-choice random walk of the given length on the transition graph.
Symbols random_walk(const Sft& sft, int length, std::mt19937_64& rng);

/// min{|i| : x(i + dx) != y(i + dy)}, or nullopt if the shifted sequences agree.
std::optional<long> first_disagreement(const BiSequence& x, long dx, const BiSequence& y,
                                       long dy);

/// 2^-min{|i| : x_i != y_i}, 0 when equal.
double shift_distance(const BiSequence& x, const BiSequence& y);
/// shift_distance(sigma^dx x, sigma^dy y) without materializing the shifts.
double shift_distance(const BiSequence& x, long dx, const BiSequence& y, long dy);

/// A cyclically admissible word; rotation classes are represented by the
/// lexicographically minimal rotation.
struct Word {
  Symbols symbols;
  bool primitive = true;

  std::size_t size() const noexcept { return symbols.size(); }
  std::string to_string() const { return ergolock::to_string(symbols); }
  bool operator==(const Word& o) const { return symbols == o.symbols; }
  bool operator<(const Word& o) const {
    if (symbols.size() != o.symbols.size()) return symbols.size() < o.symbols.size();
    return symbols < o.symbols;
  }
};

/// Canonical word for a cycle: lex-minimal rotation, primitivity recorded.
Word make_word(const Sft& sft, const Symbols& symbols);

/// All primitive cyclically admissible words of length <= max_len, one per
/// rotation class, ordered by length then lexicographically.
std::vector<Word> enumerate_periodic_words(const Sft& sft, int max_len);

/// Number of primitive rotation classes of each length 1..max_len.
std::vector<long> primitive_class_counts(const Sft& sft, int max_len);

/// Shortest cycle of a directed graph given by successor lists, returned as
/// the lex-minimal rotation; among equally short cycles the lex-smallest.
/// Empty if the graph is acyclic.
std::vector<int> shortest_cycle(const std::vector<std::vector<int>>& successors);

Word shortest_periodic_word(const Sft& sft);

/// Comparison of a shortest cycle against the bound 1 + M e^{1-h}.
struct CycleBoundReport {
  std::size_t length = 0;
  double bound = 0.0;
  bool within = false;
};

CycleBoundReport shortest_cycle_bound(std::size_t cycle_length, int symbols, double entropy);

}  // namespace ergolock
