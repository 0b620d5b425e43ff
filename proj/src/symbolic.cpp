#include "ergolock/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "ergolock/errors.hpp"

namespace ergolock {

namespace {

long pos_mod(long a, long n) {
  long r = a % n;
  return r < 0 ? r + n : r;
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

Symbols primitive_root(const Symbols& w) {
  return Symbols(w.begin(), w.begin() + static_cast<long>(primitive_period(w)));
}

}  // namespace

char symbol_char(Symbol s) {
  if (s >= 0 && s < 10) return static_cast<char>('0' + s);
  if (s >= 10 && s < 36) return static_cast<char>('a' + (s - 10));
  throw Error(ErrorKind::InvalidArgument, "symbol_char", "symbol out of range");
}

Symbol parse_symbol(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'z') return 10 + (c - 'a');
  throw Error(ErrorKind::InvalidArgument, "parse_symbol", std::string("bad symbol '") + c + "'");
}

std::string to_string(const Symbols& w) {
  std::string s;
  s.reserve(w.size());
  for (Symbol a : w) s.push_back(symbol_char(a));
  return s;
}

Symbols parse_symbols(std::string_view text) {
  Symbols w;
  w.reserve(text.size());
  for (char c : text) w.push_back(parse_symbol(c));
  return w;
}

std::size_t primitive_period(const Symbols& w) {
  const std::size_t n = w.size();
  if (n == 0) return 0;
  // prefix function: smallest period is n - pi[n-1] if it divides n
  std::vector<std::size_t> pi(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t k = pi[i - 1];
    while (k > 0 && w[i] != w[k]) k = pi[k - 1];
    if (w[i] == w[k]) ++k;
    pi[i] = k;
  }
  std::size_t p = n - pi[n - 1];
  return n % p == 0 ? p : n;
}

bool is_primitive(const Symbols& w) { return !w.empty() && primitive_period(w) == w.size(); }

Symbols min_rotation(const Symbols& w) {
  const std::size_t n = w.size();
  if (n == 0) return w;
  // Booth's least rotation
  std::vector<Symbol> s(w);
  s.insert(s.end(), w.begin(), w.end());
  std::vector<long> f(2 * n, -1);
  std::size_t k = 0;
  for (std::size_t j = 1; j < 2 * n; ++j) {
    Symbol sj = s[j];
    long i = f[j - k - 1];
    while (i != -1 && sj != s[k + i + 1]) {
      if (sj < s[k + i + 1]) k = j - i - 1;
      i = f[i];
    }
    if (sj != s[k + i + 1]) {
      if (sj < s[k]) k = j;
      f[j - k] = -1;
    } else {
      f[j - k] = i + 1;
    }
  }
  Symbols out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = w[(k + i) % n];
  return out;
}

// ---------------------------------------------------------------------------
// Sft

Sft::Sft(int alphabet_size, std::vector<std::vector<bool>> adjacency)
    : m_(alphabet_size), adj_(std::move(adjacency)) {
  if (m_ < 1 || m_ > 36)
    throw Error(ErrorKind::InvalidArgument, "Sft", "alphabet size must be in 1..36");
  if (static_cast<int>(adj_.size()) != m_)
    throw Error(ErrorKind::InvalidArgument, "Sft", "adjacency has wrong row count");
  for (const auto& row : adj_) {
    if (static_cast<int>(row.size()) != m_)
      throw Error(ErrorKind::InvalidArgument, "Sft", "adjacency has wrong column count");
    if (std::none_of(row.begin(), row.end(), [](bool b) { return b; }))
      throw Error(ErrorKind::InvalidArgument, "Sft", "symbol without successor");
  }
  auto reach = [&](bool reverse) {
    std::vector<bool> seen(m_, false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      for (int b = 0; b < m_; ++b) {
        bool e = reverse ? adj_[b][a] : adj_[a][b];
        if (e && !seen[b]) {
          seen[b] = true;
          stack.push_back(b);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  };
  if (!reach(false) || !reach(true))
    throw Error(ErrorKind::InvalidArgument, "Sft", "transition matrix is not irreducible");

  cycles_.resize(m_);
  for (int a = 0; a < m_; ++a) {
    std::vector<int> parent(m_, -1);
    std::vector<bool> seen(m_, false);
    std::queue<int> q;
    int last = -1;
    for (int b = 0; b < m_ && last < 0; ++b) {
      if (!adj_[a][b]) continue;
      if (b == a) last = a;
      else if (!seen[b]) {
        seen[b] = true;
        parent[b] = a;
        q.push(b);
      }
    }
    while (last < 0 && !q.empty()) {
      int c = q.front();
      q.pop();
      if (adj_[c][a]) {
        last = c;
        break;
      }
      for (int b = 0; b < m_; ++b) {
        if (adj_[c][b] && !seen[b] && b != a) {
          seen[b] = true;
          parent[b] = c;
          q.push(b);
        }
      }
    }
    Symbols path;
    if (last == a) {
      path = {a};
    } else {
      for (int c = last; c != a; c = parent[c]) path.push_back(c);
      path.push_back(a);
      std::reverse(path.begin(), path.end());
    }
    cycles_[a] = std::move(path);
  }
}

Sft Sft::full_shift(int m) {
  return Sft(m, std::vector<std::vector<bool>>(m, std::vector<bool>(m, true)));
}

Sft Sft::golden_mean() { return from_forbidden(2, {{1, 1}}); }

Sft Sft::from_forbidden(int m, const std::vector<std::pair<Symbol, Symbol>>& forbidden) {
  if (m < 1 || m > 36) throw Error(ErrorKind::InvalidArgument, "Sft", "alphabet size must be in 1..36");
  std::vector<std::vector<bool>> adj(m, std::vector<bool>(m, true));
  for (auto [a, b] : forbidden) {
    if (a < 0 || a >= m || b < 0 || b >= m)
      throw Error(ErrorKind::InvalidArgument, "Sft", "forbidden transition outside alphabet");
    adj[a][b] = false;
  }
  return Sft(m, std::move(adj));
}

Sft Sft::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int m = -1;
  std::vector<std::pair<Symbol, Symbol>> forbidden;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw Error(ErrorKind::ConfigError, "Sft::parse", "expected key = value: " + line);
      continue;
    }
    auto strip = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r\"");
      auto e = s.find_last_not_of(" \t\r\"");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = strip(line.substr(0, eq));
    std::string val = strip(line.substr(eq + 1));
    if (key == "alphabet") {
      try {
        m = std::stoi(val);
      } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigError, "Sft::parse", "bad alphabet size '" + val + "'");
      }
    } else if (key == "forbidden") {
      if (val.size() != 2) throw Error(ErrorKind::ConfigError, "Sft::parse", "forbidden needs two symbols");
      forbidden.emplace_back(parse_symbol(val[0]), parse_symbol(val[1]));
    }
  }
  if (m < 1) throw Error(ErrorKind::ConfigError, "Sft::parse", "missing alphabet");
  return from_forbidden(m, forbidden);
}

std::string Sft::to_text() const {
  std::string out = "alphabet = " + std::to_string(m_) + "\n";
  for (int a = 0; a < m_; ++a)
    for (int b = 0; b < m_; ++b)
      if (!adj_[a][b]) {
        out += "forbidden = \"";
        out.push_back(symbol_char(a));
        out.push_back(symbol_char(b));
        out += "\"\n";
      }
  return out;
}

bool Sft::admissible(const Symbols& w) const {
  for (Symbol a : w)
    if (a < 0 || a >= m_) return false;
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    if (!adj_[w[i]][w[i + 1]]) return false;
  return true;
}

bool Sft::cyclically_admissible(const Symbols& w) const {
  return !w.empty() && admissible(w) && adj_[w.back()][w.front()];
}

std::vector<Symbols> Sft::admissible_words(int length) const {
  std::vector<Symbols> out;
  if (length <= 0) return out;
  Symbols cur;
  std::function<void()> rec = [&]() {
    if (static_cast<int>(cur.size()) == length) {
      out.push_back(cur);
      return;
    }
    for (int b = 0; b < m_; ++b) {
      if (!cur.empty() && !adj_[cur.back()][b]) continue;
      cur.push_back(b);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

mpz_class Sft::trace_power(int n) const {
  using Mat = std::vector<std::vector<mpz_class>>;
  auto mul = [&](const Mat& a, const Mat& b) {
    Mat c(m_, std::vector<mpz_class>(m_, 0));
    for (int i = 0; i < m_; ++i)
      for (int k = 0; k < m_; ++k) {
        if (a[i][k] == 0) continue;
        for (int j = 0; j < m_; ++j) c[i][j] += a[i][k] * b[k][j];
      }
    return c;
  };
  Mat result(m_, std::vector<mpz_class>(m_, 0));
  for (int i = 0; i < m_; ++i) result[i][i] = 1;
  Mat base(m_, std::vector<mpz_class>(m_, 0));
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) base[i][j] = adj_[i][j] ? 1 : 0;
  for (int e = n; e > 0; e >>= 1) {
    if (e & 1) result = mul(result, base);
    base = mul(base, base);
  }
  mpz_class tr = 0;
  for (int i = 0; i < m_; ++i) tr += result[i][i];
  return tr;
}

double Sft::entropy() const {
  // Perron root of A + I is rho(A) + 1; the shift makes the iteration aperiodic.
  std::vector<double> v(m_, 1.0), w(m_);
  double rho = 1.0;
  for (int it = 0; it < 5000; ++it) {
    for (int i = 0; i < m_; ++i) {
      double s = v[i];
      for (int j = 0; j < m_; ++j)
        if (adj_[i][j]) s += v[j];
      w[i] = s;
    }
    double norm = *std::max_element(w.begin(), w.end());
    for (int i = 0; i < m_; ++i) w[i] /= norm;
    double diff = 0.0;
    for (int i = 0; i < m_; ++i) diff = std::max(diff, std::abs(w[i] - v[i]));
    v.swap(w);
    rho = norm;
    if (diff < 1e-15) break;
  }
  return std::log(rho - 1.0);
}

std::uint64_t Sft::hash() const {
  std::uint64_t h = fnv1a(kFnvOffset, static_cast<std::uint64_t>(m_));
  for (int a = 0; a < m_; ++a)
    for (int b = 0; b < m_; ++b) h = fnv1a(h, adj_[a][b] ? 1u : 0u);
  return h;
}

// ---------------------------------------------------------------------------
// BiSequence

BiSequence::BiSequence(Symbols left, long lo, Symbols core, Symbols right)
    : left_(std::move(left)), lo_(lo), core_(std::move(core)), right_(std::move(right)) {
  if (left_.empty() || right_.empty())
    throw Error(ErrorKind::InvalidArgument, "BiSequence", "tail words must be nonempty");
  hi_ = lo_ + static_cast<long>(core_.size());
  normalize();
}

void BiSequence::normalize() {
  left_ = primitive_root(left_);
  right_ = primitive_root(right_);
  const long pl = static_cast<long>(left_.size());
  const long pr = static_cast<long>(right_.size());
  auto raw = [&](long i) -> Symbol {
    if (i < lo_) return left_[pos_mod(i - lo_, pl)];
    if (i < hi_) return core_[i - lo_];
    return right_[pos_mod(i - hi_, pr)];
  };
  long nlo = std::min(lo_, 0L);
  long nhi = std::max(hi_, 1L);
  while (nlo < 0 && raw(nlo) == raw(nlo - pl)) ++nlo;
  while (nhi > 1 && raw(nhi - 1) == raw(nhi - 1 + pr)) --nhi;
  if (nlo == lo_ && nhi == hi_) return;
  Symbols ncore;
  ncore.reserve(static_cast<std::size_t>(nhi - nlo));
  for (long i = nlo; i < nhi; ++i) ncore.push_back(raw(i));
  Symbols nleft(pl), nright(pr);
  for (long k = 0; k < pl; ++k) nleft[k] = raw(nlo - pl + k);
  for (long k = 0; k < pr; ++k) nright[k] = raw(nhi + k);
  left_ = std::move(nleft);
  right_ = std::move(nright);
  core_ = std::move(ncore);
  lo_ = nlo;
  hi_ = nhi;
}

BiSequence BiSequence::periodic(const Symbols& word, long phase) {
  if (word.empty()) throw Error(ErrorKind::InvalidArgument, "BiSequence::periodic", "empty word");
  const long n = static_cast<long>(word.size());
  Symbols rot(n);
  for (long k = 0; k < n; ++k) rot[k] = word[pos_mod(k + phase, n)];
  return BiSequence(rot, 0, {}, rot);
}

BiSequence BiSequence::splice(const BiSequence& past, const BiSequence& future) {
  Symbols core = past.window(past.lo(), 0);
  Symbols f = future.window(0, future.hi());
  core.insert(core.end(), f.begin(), f.end());
  return BiSequence(past.left(), past.lo(), std::move(core), future.right());
}

Symbol BiSequence::at(long i) const {
  if (i < lo_) return left_[pos_mod(i - lo_, static_cast<long>(left_.size()))];
  if (i < hi_) return core_[i - lo_];
  return right_[pos_mod(i - hi_, static_cast<long>(right_.size()))];
}

BiSequence BiSequence::shifted(long n) const {
  if (n == 0) return *this;
  return BiSequence(left_, lo_ - n, core_, right_);
}

Symbols BiSequence::window(long from, long to) const {
  Symbols out;
  if (to <= from) return out;
  out.reserve(static_cast<std::size_t>(to - from));
  for (long i = from; i < to; ++i) out.push_back(at(i));
  return out;
}

bool BiSequence::admissible(const Sft& sft) const {
  auto ok = [&](Symbol a, Symbol b) { return sft.allowed(a, b); };
  for (Symbol a : left_)
    if (a < 0 || a >= sft.alphabet_size()) return false;
  for (Symbol a : right_)
    if (a < 0 || a >= sft.alphabet_size()) return false;
  if (!sft.cyclically_admissible(left_) || !sft.cyclically_admissible(right_)) return false;
  if (!sft.admissible(core_)) return false;
  if (!ok(at(lo_ - 1), at(lo_))) return false;
  if (!ok(at(hi_ - 1), at(hi_))) return false;
  return true;
}

bool BiSequence::is_periodic() const {
  // periodic iff the right tail continues to the left through the core
  const long p = static_cast<long>(right_.size());
  if (left_.size() != right_.size()) return false;
  for (long i = lo_ - p; i < hi_; ++i)
    if (at(i) != right_[pos_mod(i - hi_, p)]) return false;
  return true;
}

std::string BiSequence::to_string() const {
  std::string s = "(" + ergolock::to_string(left_) + ")";
  for (long i = lo_; i < hi_; ++i) {
    if (i == 0) s.push_back('.');
    s.push_back(symbol_char(core_[i - lo_]));
  }
  s += "(" + ergolock::to_string(right_) + ")";
  return s;
}

std::uint64_t BiSequence::hash() const {
  std::uint64_t h = fnv1a(kFnvOffset, static_cast<std::uint64_t>(lo_));
  h = fnv1a(h, static_cast<std::uint64_t>(hi_));
  for (Symbol a : left_) h = fnv1a(h, static_cast<std::uint64_t>(a) + 1);
  h = fnv1a(h, 0xAAu);
  for (Symbol a : core_) h = fnv1a(h, static_cast<std::uint64_t>(a) + 1);
  h = fnv1a(h, 0xBBu);
  for (Symbol a : right_) h = fnv1a(h, static_cast<std::uint64_t>(a) + 1);
  return h;
}

BiSequence extend_word(const Sft& sft, const Symbols& w, long lo) {
  if (w.empty() || !sft.admissible(w))
    throw Error(ErrorKind::InvalidArgument, "extend_word", "word is empty or not admissible");
  Symbols left = sft.cycle_through(w.front());
  Symbols right = sft.cycle_through(w.back());
  std::rotate(right.begin(), right.begin() + 1, right.end());
  return BiSequence(left, lo, w, right);
}

Symbols random_walk(const Sft& sft, int length, std::mt19937_64& rng) {
  Symbols w;
  if (length <= 0) return w;
  w.push_back(static_cast<Symbol>(rng() % static_cast<std::uint64_t>(sft.alphabet_size())));
  std::vector<Symbol> next;
  while (static_cast<int>(w.size()) < length) {
    next.clear();
    for (int b = 0; b < sft.alphabet_size(); ++b)
      if (sft.allowed(w.back(), b)) next.push_back(b);
    w.push_back(next[rng() % next.size()]);
  }
  return w;
}

std::optional<long> first_disagreement(const BiSequence& x, long dx, const BiSequence& y, long dy) {
  const long right_start = std::max({x.hi() - dx, y.hi() - dy, 0L});
  const long right_end =
      right_start + std::lcm(static_cast<long>(x.right().size()), static_cast<long>(y.right().size()));
  const long left_start = std::min({x.lo() - dx, y.lo() - dy, 0L});
  const long left_end =
      left_start - std::lcm(static_cast<long>(x.left().size()), static_cast<long>(y.left().size()));
  const long reach = std::max(right_end, -left_end);
  for (long m = 0; m <= reach; ++m) {
    if (m < right_end && x.at(m + dx) != y.at(m + dy)) return m;
    if (m > 0 && -m >= left_end && x.at(-m + dx) != y.at(-m + dy)) return m;
  }
  return std::nullopt;
}

double shift_distance(const BiSequence& x, long dx, const BiSequence& y, long dy) {
  auto m = first_disagreement(x, dx, y, dy);
  if (!m) return 0.0;
  return std::ldexp(1.0, static_cast<int>(-std::min(*m, 2000L)));
}

double shift_distance(const BiSequence& x, const BiSequence& y) { return shift_distance(x, 0, y, 0); }

// ---------------------------------------------------------------------------
// periodic words

Word make_word(const Sft& sft, const Symbols& symbols) {
  if (!sft.cyclically_admissible(symbols))
    throw Error(ErrorKind::InvalidArgument, "make_word",
                "word '" + to_string(symbols) + "' is not cyclically admissible");
  Word w;
  w.symbols = min_rotation(symbols);
  w.primitive = is_primitive(w.symbols);
  return w;
}

std::vector<Word> enumerate_periodic_words(const Sft& sft, int max_len) {
  if (max_len < 1)
    throw Error(ErrorKind::InvalidArgument, "enumerate_periodic_words", "max_len must be >= 1");
  std::vector<Word> out;
  const int m = sft.alphabet_size();
  for (int n = 1; n <= max_len; ++n) {
    // Fredricksen-Kessler-Maiorana generation of Lyndon words of length n,
    // pruned to admissible prefixes.
    std::vector<int> a(n + 1, 0);
    std::function<void(int, int)> gen = [&](int t, int p) {
      if (t > n) {
        if (p == n && sft.allowed(a[n], a[1])) {
          Word w;
          w.symbols.assign(a.begin() + 1, a.end());
          w.primitive = true;
          out.push_back(std::move(w));
        }
        return;
      }
      a[t] = a[t - p];
      if (t == 1 || sft.allowed(a[t - 1], a[t])) gen(t + 1, p);
      for (int j = a[t - p] + 1; j < m; ++j) {
        a[t] = j;
        if (t == 1 || sft.allowed(a[t - 1], a[t])) gen(t + 1, t);
      }
    };
    gen(1, 1);
  }
  std::stable_sort(out.begin(), out.end());
  return out;
}

std::vector<long> primitive_class_counts(const Sft& sft, int max_len) {
  std::vector<long> counts(static_cast<std::size_t>(max_len), 0);
  for (const auto& w : enumerate_periodic_words(sft, max_len)) ++counts[w.size() - 1];
  return counts;
}

std::vector<int> shortest_cycle(const std::vector<std::vector<int>>& successors) {
  const int n = static_cast<int>(successors.size());
  std::vector<std::vector<int>> pred(n), succ(n);
  for (int u = 0; u < n; ++u) {
    succ[u] = successors[u];
    std::sort(succ[u].begin(), succ[u].end());
    succ[u].erase(std::unique(succ[u].begin(), succ[u].end()), succ[u].end());
    for (int v : succ[u]) pred[v].push_back(u);
  }
  const int inf = std::numeric_limits<int>::max();
  // dist_to[v][u]: shortest path length u -> v
  auto dist_to = [&](int v) {
    std::vector<int> d(n, inf);
    std::queue<int> q;
    d[v] = 0;
    q.push(v);
    while (!q.empty()) {
      int c = q.front();
      q.pop();
      for (int p : pred[c])
        if (d[p] == inf) {
          d[p] = d[c] + 1;
          q.push(p);
        }
    }
    return d;
  };
  int girth = inf;
  std::vector<std::vector<int>> dists(n);
  for (int v = 0; v < n; ++v) {
    dists[v] = dist_to(v);
    for (int s : succ[v])
      if (dists[v][s] != inf) girth = std::min(girth, dists[v][s] + 1);
  }
  if (girth == inf) return {};
  std::vector<int> best;
  for (int v = 0; v < n; ++v) {
    bool through = false;
    for (int s : succ[v])
      if (dists[v][s] != inf && dists[v][s] + 1 == girth) through = true;
    if (!through) continue;
    std::vector<int> cyc{v};
    int c = v;
    for (int k = 0; k + 1 < girth; ++k) {
      for (int s : succ[c]) {
        if (s != v && dists[v][s] != inf && dists[v][s] <= girth - k - 1) {
          c = s;
          break;
        }
      }
      cyc.push_back(c);
    }
    cyc = min_rotation(cyc);
    if (best.empty() || cyc < best) best = cyc;
  }
  return best;
}

Word shortest_periodic_word(const Sft& sft) {
  std::vector<std::vector<int>> succ(sft.alphabet_size());
  for (int a = 0; a < sft.alphabet_size(); ++a)
    for (int b = 0; b < sft.alphabet_size(); ++b)
      if (sft.allowed(a, b)) succ[a].push_back(b);
  return make_word(sft, shortest_cycle(succ));
}

CycleBoundReport shortest_cycle_bound(std::size_t cycle_length, int symbols, double entropy) {
  CycleBoundReport r;
  r.length = cycle_length;
  r.bound = 1.0 + symbols * std::exp(1.0 - entropy);
  r.within = static_cast<double>(cycle_length) <= r.bound;
  return r;
}

}  // namespace ergolock
