#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace bdr {

// Letters are 0-based: 0..r-1 are the generators, letter i+r is the inverse of letter i.
using Letter = std::uint8_t;

inline std::uint64_t checked_pow(std::uint64_t base, int exp) {
  std::uint64_t out = 1;
  for (int i = 0; i < exp; ++i) {
    if (out > std::numeric_limits<std::uint64_t>::max() / base)
      throw BudgetError("integer power overflows 64 bits");
    out *= base;
  }
  return out;
}

class GroupContext {
 public:
  static constexpr std::uint64_t kDefaultBudget = 100'000'000;

  explicit GroupContext(int rank, double epsilon = 1.0,
                        std::uint64_t enumeration_budget = kDefaultBudget)
      : rank_(rank), epsilon_(epsilon), budget_(enumeration_budget) {
    require(rank >= 2 && rank <= 60, "rank must lie in [2, 60]");
    require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive");
    q_ = 2 * rank - 1;
    Q_ = std::log(static_cast<double>(q_));
  }

  int rank() const { return rank_; }
  int alphabet() const { return 2 * rank_; }
  double epsilon() const { return epsilon_; }
  // Branching number 2r-1 of the tree.
  int q() const { return q_; }
  double critical_exponent() const { return Q_; }
  double dimension() const { return Q_ / epsilon_; }
  double hyperbolicity() const { return 0.0; }
  std::uint64_t budget() const { return budget_; }

  Letter inverse_letter(Letter a) const {
    return static_cast<Letter>((a + rank_) % (2 * rank_));
  }

  // Number of level-n words (|S_n|); 1 for n = 0.
  std::uint64_t sphere_size(int n) const {
    require(n >= 0, "negative length");
    if (n == 0) return 1;
    return static_cast<std::uint64_t>(2 * rank_) * checked_pow(q_, n - 1);
  }

  std::uint64_t ball_size(int n) const {
    std::uint64_t total = 0;
    for (int k = 0; k <= n; ++k) total += sphere_size(k);
    return total;
  }

  void check_budget(std::uint64_t count) const {
    if (count > budget_)
      throw BudgetError("enumeration of " + std::to_string(count) +
                        " words exceeds budget " + std::to_string(budget_));
  }

  // q^x for real x.
  double qpow(double x) const { return std::exp(x * Q_); }

 private:
  int rank_;
  double epsilon_;
  std::uint64_t budget_;
  int q_ = 3;
  double Q_ = 0.0;
};

struct ReducedWord {
  std::vector<Letter> letters;

  int length() const { return static_cast<int>(letters.size()); }
  bool empty() const { return letters.empty(); }
  std::span<const Letter> span() const { return letters; }
  friend bool operator==(const ReducedWord&, const ReducedWord&) = default;
  friend auto operator<=>(const ReducedWord&, const ReducedWord&) = default;
};

inline bool is_reduced(const GroupContext& ctx, std::span<const Letter> w) {
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] >= ctx.alphabet()) return false;
    if (j + 1 < w.size() && w[j + 1] == ctx.inverse_letter(w[j])) return false;
  }
  return true;
}

inline ReducedWord make_word(const GroupContext& ctx, std::vector<Letter> letters) {
  require(is_reduced(ctx, letters), "word is not freely reduced");
  return ReducedWord{std::move(letters)};
}

// "aB" style: lower case a,b,... are generators, upper case their inverses; "e" is the identity.
inline ReducedWord parse_word(const GroupContext& ctx, const std::string& s) {
  std::vector<Letter> out;
  if (s == "e") return {};
  for (char c : s) {
    int idx;
    if (c >= 'a' && c <= 'z')
      idx = c - 'a';
    else if (c >= 'A' && c <= 'Z')
      idx = c - 'A' + ctx.rank();
    else
      throw PreconditionError(std::string("bad letter '") + c + "'");
    require((c >= 'a' && c - 'a' < ctx.rank()) || (c >= 'A' && c - 'A' < ctx.rank()),
            std::string("letter '") + c + "' outside the alphabet");
    out.push_back(static_cast<Letter>(idx));
  }
  return make_word(ctx, std::move(out));
}

inline std::string to_string(const GroupContext& ctx, std::span<const Letter> w) {
  if (w.empty()) return "e";
  std::string s;
  for (Letter a : w)
    s += a < ctx.rank() ? static_cast<char>('a' + a) : static_cast<char>('A' + a - ctx.rank());
  return s;
}

inline std::string to_string(const GroupContext& ctx, const ReducedWord& w) {
  return to_string(ctx, w.span());
}

inline ReducedWord inverse(const GroupContext& ctx, const ReducedWord& w) {
  ReducedWord out;
  out.letters.resize(w.letters.size());
  const std::size_t n = w.letters.size();
  for (std::size_t j = 0; j < n; ++j) out.letters[j] = ctx.inverse_letter(w.letters[n - 1 - j]);
  return out;
}

inline ReducedWord multiply(const GroupContext& ctx, const ReducedWord& a, const ReducedWord& b) {
  std::size_t cancel = 0;
  const std::size_t na = a.letters.size(), nb = b.letters.size();
  while (cancel < na && cancel < nb &&
         b.letters[cancel] == ctx.inverse_letter(a.letters[na - 1 - cancel]))
    ++cancel;
  ReducedWord out;
  out.letters.reserve(na + nb - 2 * cancel);
  out.letters.insert(out.letters.end(), a.letters.begin(), a.letters.end() - cancel);
  out.letters.insert(out.letters.end(), b.letters.begin() + cancel, b.letters.end());
  return out;
}

inline int common_prefix(std::span<const Letter> a, std::span<const Letter> b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t m = 0;
  while (m < n && a[m] == b[m]) ++m;
  return static_cast<int>(m);
}

inline int word_distance(const GroupContext& ctx, const ReducedWord& g, const ReducedWord& h) {
  return multiply(ctx, inverse(ctx, g), h).length();
}

// (g,h)_o; on the tree this is the common-prefix length.
inline int gromov_product_group(const ReducedWord& g, const ReducedWord& h) {
  return common_prefix(g.span(), h.span());
}

// Same quantity from the three distances.
inline int gromov_product_from_distances(const GroupContext& ctx, const ReducedWord& g,
                                         const ReducedWord& h) {
  return (g.length() + h.length() - word_distance(ctx, g, h)) / 2;
}

// Lexicographic rank of a reduced word among the words of its length.
// The rank is mixed radix: the first letter has 2r choices, every later one q.
inline std::uint64_t word_index(const GroupContext& ctx, std::span<const Letter> w) {
  if (w.empty()) return 0;
  std::uint64_t idx = w[0];
  for (std::size_t j = 1; j < w.size(); ++j) {
    const Letter bad = ctx.inverse_letter(w[j - 1]);
    idx = idx * ctx.q() + (w[j] - (w[j] > bad ? 1 : 0));
  }
  return idx;
}

// Rank of the first k letters of head ++ tail.
inline std::uint64_t concat_index(const GroupContext& ctx, std::span<const Letter> head,
                                  std::span<const Letter> tail, int k) {
  if (k == 0) return 0;
  auto at = [&](int j) -> Letter {
    return j < static_cast<int>(head.size()) ? head[j] : tail[j - head.size()];
  };
  Letter prev = at(0);
  std::uint64_t idx = prev;
  for (int j = 1; j < k; ++j) {
    const Letter cur = at(j);
    const Letter bad = ctx.inverse_letter(prev);
    idx = idx * ctx.q() + (cur - (cur > bad ? 1 : 0));
    prev = cur;
  }
  return idx;
}

// Index of the level-k prefix of the level-`level` word with index idx.
inline std::uint64_t prefix_index(const GroupContext& ctx, std::uint64_t idx, int level, int k) {
  if (k == 0) return 0;
  std::uint64_t div = 1;
  for (int j = k; j < level; ++j) div *= ctx.q();
  return idx / div;
}

inline void word_at_into(const GroupContext& ctx, int n, std::uint64_t idx, std::vector<Letter>& out) {
  out.resize(n);
  if (n == 0) return;
  std::vector<int> digits(n);
  for (int j = n - 1; j >= 1; --j) {
    digits[j] = static_cast<int>(idx % ctx.q());
    idx /= ctx.q();
  }
  require(idx < static_cast<std::uint64_t>(ctx.alphabet()), "index outside the sphere");
  out[0] = static_cast<Letter>(idx);
  for (int j = 1; j < n; ++j) {
    const int bad = ctx.inverse_letter(out[j - 1]);
    out[j] = static_cast<Letter>(digits[j] + (digits[j] >= bad ? 1 : 0));
  }
}

inline ReducedWord word_at(const GroupContext& ctx, int n, std::uint64_t idx) {
  ReducedWord w;
  word_at_into(ctx, n, idx, w.letters);
  return w;
}

// Smallest letter allowed after prev (prev < 0 means no constraint).
inline Letter first_allowed(const GroupContext& ctx, int prev) {
  if (prev < 0) return 0;
  return ctx.inverse_letter(static_cast<Letter>(prev)) == 0 ? 1 : 0;
}

// Advances w to the next reduced word of the same length in lexicographic order,
// leaving positions before `frozen` untouched. Returns false after the last word.
inline bool next_word(const GroupContext& ctx, std::vector<Letter>& w, int frozen = 0) {
  const int n = static_cast<int>(w.size());
  for (int j = n - 1; j >= frozen; --j) {
    const int bad = j > 0 ? ctx.inverse_letter(w[j - 1]) : -1;
    int next = w[j] + 1;
    if (next == bad) ++next;
    if (next < ctx.alphabet()) {
      w[j] = static_cast<Letter>(next);
      for (int i = j + 1; i < n; ++i) w[i] = first_allowed(ctx, w[i - 1]);
      return true;
    }
  }
  return false;
}

// Calls fn(span) for the sphere words with ranks in [begin, end).
template <class Fn>
void for_each_in_sphere(const GroupContext& ctx, int n, std::uint64_t begin, std::uint64_t end,
                        Fn&& fn) {
  if (begin >= end) return;
  std::vector<Letter> w;
  word_at_into(ctx, n, begin, w);
  for (std::uint64_t i = begin; i < end; ++i) {
    fn(std::span<const Letter>(w), i);
    if (i + 1 < end) next_word(ctx, w);
  }
}

inline std::vector<ReducedWord> enumerate_sphere(const GroupContext& ctx, int n) {
  require(n >= 0, "negative sphere radius");
  const std::uint64_t count = ctx.sphere_size(n);
  ctx.check_budget(count);
  std::vector<ReducedWord> out;
  out.reserve(count);
  for_each_in_sphere(ctx, n, 0, count,
                     [&](std::span<const Letter> w, std::uint64_t) {
                       out.push_back(ReducedWord{{w.begin(), w.end()}});
                     });
  return out;
}

// All words of length <= n, by length then lexicographically.
inline std::vector<ReducedWord> enumerate_ball(const GroupContext& ctx, int n) {
  ctx.check_budget(ctx.ball_size(n));
  std::vector<ReducedWord> out;
  for (int k = 0; k <= n; ++k) {
    auto s = enumerate_sphere(ctx, k);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

// Exponent of the Busemann cocycle on the cylinder of u: 2m - |g| with m = (u, g)_o.
inline int busemann_on_cylinder(std::span<const Letter> u, std::span<const Letter> g) {
  require(u.size() >= g.size(), "cylinder level below the word length");
  return 2 * common_prefix(u, g) - static_cast<int>(g.size());
}

inline int busemann_on_cylinder(const ReducedWord& u, const ReducedWord& g) {
  return busemann_on_cylinder(u.span(), g.span());
}

// Eventually periodic boundary point prefix·block·block·...
struct Ray {
  ReducedWord prefix;
  ReducedWord block;
};

inline Ray make_ray(const GroupContext& ctx, ReducedWord prefix, ReducedWord block) {
  require(!block.empty(), "ray block must be nonempty");
  ReducedWord probe = prefix;
  probe.letters.insert(probe.letters.end(), block.letters.begin(), block.letters.end());
  probe.letters.insert(probe.letters.end(), block.letters.begin(), block.letters.end());
  require(is_reduced(ctx, probe.letters), "prefix·block·block is not reduced");
  return Ray{std::move(prefix), std::move(block)};
}

inline ReducedWord ray_prefix(const Ray& ray, int k) {
  require(k >= 0, "negative depth");
  ReducedWord out;
  out.letters.reserve(k);
  for (int j = 0; j < k; ++j) {
    const int p = ray.prefix.length();
    out.letters.push_back(j < p ? ray.prefix.letters[j]
                                : ray.block.letters[(j - p) % ray.block.length()]);
  }
  return out;
}

// Boundary point whose Gromov product with g is exactly |g|.
inline Ray hat_extension(const ReducedWord& g) {
  require(!g.empty(), "hat extension of the identity");
  return Ray{g, ReducedWord{{g.letters.back()}}};
}

// Least-squares slope of log|B(o,n)| over the upper half n in [ceil(n_max/2), n_max].
inline double critical_exponent_estimate(const GroupContext& ctx, int n_max) {
  require(n_max >= 2, "n_max must be at least 2");
  const int lo = (n_max + 1) / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  // |B(o,n)| = 1 + 2r(q^n - 1)/(q - 1), evaluated in logs so large n stay finite.
  for (int n = lo; n <= n_max; ++n) {
    const double q = ctx.q();
    const double logb =
        n * std::log(q) + std::log(2.0 * ctx.rank() / (q - 1)) +
        std::log1p(-std::exp(-n * std::log(q)) * (1.0 - (q - 1) / (2.0 * ctx.rank())));
    sx += n;
    sy += logb;
    sxx += double(n) * n;
    sxy += n * logb;
    ++cnt;
  }
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

}  // namespace bdr
