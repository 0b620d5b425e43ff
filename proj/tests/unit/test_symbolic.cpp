#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ergolock/errors.hpp"
#include "ergolock/symbolic.hpp"

using namespace ergolock;

namespace {

Symbols S(const char* s) { return parse_symbols(s); }

// Random admissible eventually periodic sequence over a full shift on m symbols.
BiSequence random_sequence(std::mt19937_64& rng, int m) {
  std::uniform_int_distribution<int> sym(0, m - 1), len(1, 4), core_len(0, 6), lo(-5, 1);
  auto word = [&](int n) {
    Symbols w(n);
    for (auto& a : w) a = sym(rng);
    return w;
  };
  return BiSequence(word(len(rng)), lo(rng), word(core_len(rng)), word(len(rng)));
}

// Independent index scan: first |i| where they differ, looking far enough out.
double scan_distance(const BiSequence& x, const BiSequence& y, long reach = 400) {
  for (long m = 0; m <= reach; ++m) {
    if (x.at(m) != y.at(m) || x.at(-m) != y.at(-m)) return std::ldexp(1.0, static_cast<int>(-m));
  }
  return 0.0;
}

bool naive_primitive(const Symbols& w) {
  const std::size_t n = w.size();
  for (std::size_t p = 1; p < n; ++p) {
    if (n % p) continue;
    bool rep = true;
    for (std::size_t i = 0; i < n && rep; ++i) rep = w[i] == w[i % p];
    if (rep) return false;
  }
  return true;
}

Symbols naive_min_rotation(const Symbols& w) {
  Symbols best = w;
  for (std::size_t r = 1; r < w.size(); ++r) {
    Symbols c(w.begin() + r, w.end());
    c.insert(c.end(), w.begin(), w.begin() + r);
    best = std::min(best, c);
  }
  return best;
}

std::vector<Symbols> brute_force_words(const Sft& sft, int max_len) {
  std::set<std::pair<std::size_t, Symbols>> seen;
  const int m = sft.alphabet_size();
  for (int n = 1; n <= max_len; ++n) {
    long total = 1;
    for (int i = 0; i < n; ++i) total *= m;
    for (long code = 0; code < total; ++code) {
      Symbols w(n);
      long c = code;
      for (int i = n - 1; i >= 0; --i) {
        w[i] = static_cast<Symbol>(c % m);
        c /= m;
      }
      bool ok = true;
      for (int i = 0; i < n; ++i) ok = ok && sft.allowed(w[i], w[(i + 1) % n]);
      if (!ok || !naive_primitive(w)) continue;
      seen.insert({w.size(), naive_min_rotation(w)});
    }
  }
  std::vector<Symbols> out;
  for (auto& [n, w] : seen) out.push_back(w);
  return out;
}

long long naive_trace(const Sft& sft, int n) {
  const int m = sft.alphabet_size();
  std::vector<std::vector<long long>> P(m, std::vector<long long>(m, 0)), Q;
  for (int i = 0; i < m; ++i) P[i][i] = 1;
  for (int step = 0; step < n; ++step) {
    Q.assign(m, std::vector<long long>(m, 0));
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k)
        for (int j = 0; j < m; ++j) Q[i][j] += P[i][k] * (sft.allowed(k, j) ? 1 : 0);
    P = Q;
  }
  long long t = 0;
  for (int i = 0; i < m; ++i) t += P[i][i];
  return t;
}

}  // namespace

TEST_CASE("symbol text round trip") {
  CHECK(to_string(S("0129az")) == "0129az");
  CHECK_THROWS_AS(parse_symbol('#'), Error);
}

TEST_CASE("sft construction rejects reducible or dead matrices") {
  CHECK_NOTHROW(Sft::golden_mean());
  CHECK_THROWS_AS(Sft(2, {{true, true}, {false, true}}), Error);
  CHECK_THROWS_AS(Sft(2, {{true, false}, {false, false}}), Error);
  Sft g = Sft::golden_mean();
  CHECK(g.allowed(0, 1));
  CHECK_FALSE(g.allowed(1, 1));
}

TEST_CASE("sft text format round trip") {
  Sft g = Sft::parse("alphabet = 2\nforbidden = \"11\"\n");
  CHECK(g == Sft::golden_mean());
  CHECK(Sft::parse(g.to_text()) == g);
  CHECK_THROWS_AS(Sft::parse("forbidden = \"11\""), Error);
}

TEST_CASE("shift of fixed points and periodic sequences") {
  BiSequence zero = BiSequence::periodic(S("0"));
  CHECK(zero.shifted(5) == zero);
  BiSequence alt = BiSequence::periodic(S("01"));
  BiSequence alt1 = alt.shifted(1);
  CHECK(alt1.at(0) == 1);
  CHECK(alt1 == BiSequence::periodic(S("01"), 1));
  CHECK(alt1 == BiSequence::periodic(S("10")));
}

TEST_CASE("shift composition and inverse against index comparison") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> n(-12, 12);
  for (int trial = 0; trial < 50; ++trial) {
    BiSequence x = random_sequence(rng, 3);
    int a = n(rng), b = n(rng);
    BiSequence y = x.shifted(a).shifted(b);
    CHECK(y == x.shifted(a + b));
    for (long i = -30; i <= 30; ++i) CHECK(y.at(i) == x.at(i + a + b));
    CHECK(x.shifted(a).shifted(-a) == x);
  }
}

TEST_CASE("canonical form identifies equal sequences") {
  // the same sequence ...000 1 000... written with different cores
  BiSequence a(S("0"), -2, S("00100"), S("0"));
  BiSequence b(S("00"), 0, S("1"), S("000"));
  CHECK(a == b);
  CHECK(a.lo() == 0);
  CHECK(a.hi() == 1);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    BiSequence x = random_sequence(rng, 2);
    BiSequence rewritten(x.window(x.lo() - 7, x.lo() - 4), x.lo() - 4, x.window(x.lo() - 4, x.hi() + 5),
                         x.window(x.hi() + 5, x.hi() + 5 + static_cast<long>(x.right().size())));
    // the left tail must be a whole period that continues x to the left
    bool left_ok = true;
    for (long i = x.lo() - 40; i < x.lo() - 4; ++i)
      left_ok = left_ok && x.at(i) == x.at(i - static_cast<long>(x.left().size()));
    if (x.left().size() == 3 && left_ok) CHECK(rewritten == x);
    BiSequence r2(x.left(), x.lo(), x.core(), x.right());
    CHECK(r2 == x);
  }
}

TEST_CASE("shift distance basics") {
  BiSequence zero = BiSequence::periodic(S("0"));
  BiSequence alt = BiSequence::periodic(S("01"));
  CHECK(shift_distance(zero, zero) == 0.0);
  CHECK(shift_distance(zero, alt) == 0.5);
  CHECK(shift_distance(zero, alt) == scan_distance(zero, alt));
  BiSequence y(S("1"), -4, S("0000"), S("0"));
  CHECK(shift_distance(zero, y) == std::ldexp(1.0, -5));
}

TEST_CASE("shift distance matches index scan, symmetric and ultrametric") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    BiSequence x = random_sequence(rng, 2);
    BiSequence y = random_sequence(rng, 2);
    BiSequence z = random_sequence(rng, 2);
    double dxy = shift_distance(x, y), dyz = shift_distance(y, z), dxz = shift_distance(x, z);
    CHECK(dxy == scan_distance(x, y));
    CHECK(dxy == shift_distance(y, x));
    CHECK(dxz <= std::max(dxy, dyz));
    double l = std::log2(dxy);
    if (dxy > 0) CHECK(l == std::round(l));
  }
}

TEST_CASE("offset distance equals distance of shifted sequences") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> n(-6, 6);
  for (int trial = 0; trial < 100; ++trial) {
    BiSequence x = random_sequence(rng, 2), y = random_sequence(rng, 2);
    int a = n(rng), b = n(rng);
    CHECK(shift_distance(x, a, y, b) == shift_distance(x.shifted(a), y.shifted(b)));
  }
}

TEST_CASE("splice takes past and future") {
  BiSequence past(S("1"), -3, S("000"), S("0"));
  BiSequence future = BiSequence::periodic(S("01"));
  BiSequence w = BiSequence::splice(past, future);
  for (long i = -20; i < 0; ++i) CHECK(w.at(i) == past.at(i));
  for (long i = 0; i < 20; ++i) CHECK(w.at(i) == future.at(i));
}

TEST_CASE("primitive period and minimal rotation") {
  CHECK(primitive_period(S("010101")) == 2);
  CHECK(primitive_period(S("0100")) == 4);
  CHECK(is_primitive(S("001")));
  CHECK_FALSE(is_primitive(S("00")));
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> sym(0, 2), len(1, 9);
  for (int trial = 0; trial < 200; ++trial) {
    Symbols w(len(rng));
    for (auto& a : w) a = sym(rng);
    CHECK(min_rotation(w) == naive_min_rotation(w));
    CHECK(is_primitive(w) == naive_primitive(w));
  }
}

TEST_CASE("golden mean enumeration up to length 4") {
  Sft g = Sft::golden_mean();
  auto words = enumerate_periodic_words(g, 4);
  std::vector<std::string> got;
  for (auto& w : words) got.push_back(w.to_string());
  CHECK(got == std::vector<std::string>{"0", "01", "001", "0001"});
}

TEST_CASE("enumeration agrees with brute force") {
  std::vector<Sft> systems{Sft::golden_mean(), Sft::full_shift(2), Sft::full_shift(3),
                           Sft::from_forbidden(3, {{0, 0}, {1, 2}, {2, 1}})};
  for (const auto& sft : systems) {
    auto words = enumerate_periodic_words(sft, 7);
    auto brute = brute_force_words(sft, 7);
    REQUIRE(words.size() == brute.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      CHECK(words[i].symbols == brute[i]);
      CHECK(words[i].primitive);
    }
  }
}

TEST_CASE("periodic point census matches trace of matrix powers") {
  for (const auto& sft : {Sft::golden_mean(), Sft::full_shift(3), Sft::from_forbidden(3, {{0, 0}, {1, 2}})}) {
    const int N = 10;
    auto counts = primitive_class_counts(sft, N);
    for (int n = 1; n <= N; ++n) {
      long long sum = 0;
      for (int d = 1; d <= n; ++d)
        if (n % d == 0) sum += static_cast<long long>(d) * counts[d - 1];
      CHECK(sum == naive_trace(sft, n));
      CHECK(mpz_class(static_cast<long>(sum)) == sft.trace_power(n));
    }
  }
  CHECK(Sft::golden_mean().trace_power(4) == 7);
}

TEST_CASE("single symbol shift") {
  Sft one = Sft::full_shift(1);
  auto words = enumerate_periodic_words(one, 3);
  REQUIRE(words.size() == 1);
  CHECK(words[0].to_string() == "0");
  CHECK(one.entropy() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("shortest periodic word") {
  CHECK(shortest_periodic_word(Sft::golden_mean()).to_string() == "0");
  Sft cyc(3, {{false, true, false}, {false, false, true}, {true, false, false}});
  CHECK(shortest_periodic_word(cyc).to_string() == "012");
  CHECK(shortest_periodic_word(Sft::full_shift(4)).size() == 1);
  Sft no_loops = Sft::from_forbidden(3, {{0, 0}, {1, 1}, {2, 2}});
  CHECK(shortest_periodic_word(no_loops).to_string() == "01");
}

TEST_CASE("shortest cycle on a generic digraph") {
  // 0->1->2->0 and 3->4->3 ; girth 2 from {3,4}
  std::vector<std::vector<int>> succ{{1}, {2}, {0}, {4}, {3}};
  CHECK(shortest_cycle(succ) == std::vector<int>{3, 4});
  std::vector<std::vector<int>> acyclic{{1}, {2}, {}};
  CHECK(shortest_cycle(acyclic).empty());
}

TEST_CASE("entropy and cycle bound") {
  Sft g = Sft::golden_mean();
  CHECK(g.entropy() == doctest::Approx(std::log((1 + std::sqrt(5.0)) / 2)).epsilon(1e-12));
  CHECK(Sft::full_shift(3).entropy() == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  auto r = shortest_cycle_bound(1, 2, g.entropy());
  CHECK(r.within);
  CHECK(r.bound == doctest::Approx(1 + 2 * std::exp(1 - g.entropy())));
}

TEST_CASE("cycles through each symbol") {
  Sft g = Sft::golden_mean();
  CHECK(g.cycle_through(0) == S("0"));
  CHECK(g.cycle_through(1) == S("10"));
}
