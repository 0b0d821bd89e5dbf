#pragma once

// Cantor subset C (first kappa_i children on one side of every band, below
// root band 1) and the mass distribution mu giving each generation-n
// cylinder mass 1 / (kappa_1 ... kappa_n).

#include "harperdim/cantor/tree.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace harperdim::cantor {

class MassMeasure {
 public:
  explicit MassMeasure(std::vector<std::int64_t> kappa, Side side = Side::Right)
      : kappa_(std::move(kappa)), side_(side) {
    for (std::size_t i = 0; i < kappa_.size(); ++i)
      if (kappa_[i] < 1)
        throw Error("precondition violation: kappa_" + std::to_string(i + 1) + " = " + std::to_string(kappa_[i]) +
                    " (need b1 a >= 1)");
    prefix_.push_back(1);
    for (auto k : kappa_) prefix_.push_back(prefix_.back() * k);
  }

  /// kappa_n = floor(b1 a_{m+n}). Requires a_{m+n} >= 2/b1 so that kappa_n >= 2.
  static MassMeasure from_tree(const CoveringTree& t, Side side = Side::Right) {
    const HSConstants& k = t.constants();
    std::vector<std::int64_t> kappa;
    for (std::size_t n = 1; n <= t.depth(); ++n) {
      const double a = t.a(n);
      if (a * k.b1 < 2 - 1e-9)
        throw Error("precondition violation: a_" + std::to_string(k.m + n) + " = " + format_double(a) +
                    " < 2/b1 = " + format_double(2 / k.b1));
      // The 1e-9 guards products like 0.29 * 100 = 28.999999999999996.
      kappa.push_back(static_cast<std::int64_t>(std::floor(k.b1 * a + 1e-9)));
    }
    return MassMeasure(std::move(kappa), side);
  }

  std::size_t depth() const { return kappa_.size(); }
  Side side() const { return side_; }
  /// kappa_n, 1-based.
  std::int64_t kappa(std::size_t n) const { return kappa_.at(n - 1); }
  const std::vector<std::int64_t>& kappas() const { return kappa_; }

  /// |Theta^_n| = kappa_1 ... kappa_n.
  const BigInt& cylinders(std::size_t n) const { return prefix_.at(n); }

  /// Letter of the j-th Theta^ child (j = 1..kappa) on the chosen side.
  int letter(std::int64_t j) const { return static_cast<int>(side_ == Side::Right ? j : -j); }

  bool contains(const Word& w) const {
    if (w.empty() || w[0] != 1 || w.size() - 1 > depth()) return false;
    for (std::size_t i = 1; i < w.size(); ++i) {
      const std::int64_t j = side_ == Side::Right ? w[i] : -static_cast<std::int64_t>(w[i]);
      if (j < 1 || j > kappa_[i - 1]) return false;
    }
    return true;
  }

  /// mu(J_w) = 1 / prod_{i<=k} kappa_i for w in Theta^_k, else 0.
  BigRational measure(const Word& w) const {
    if (!contains(w)) return BigRational(0);
    return BigRational(BigInt(1), prefix_[w.size() - 1]);
  }

 private:
  std::vector<std::int64_t> kappa_;
  Side side_;
  std::vector<BigInt> prefix_;
};

/// Theta^_n in lexicographic (left-to-right) order.
inline std::vector<Word> cantor_words(const MassMeasure& mm, std::size_t n, std::size_t max_words = 10'000'000) {
  if (n > mm.depth()) throw Error("cantor_words: n exceeds the measure depth");
  if (mm.cylinders(n) > max_words) throw Error("cantor_words: more than " + std::to_string(max_words) + " words");
  std::vector<Word> out{{1}};
  for (std::size_t i = 1; i <= n; ++i) {
    std::vector<Word> next;
    next.reserve(out.size() * static_cast<std::size_t>(mm.kappa(i)));
    for (const auto& w : out) {
      for (std::int64_t j = 1; j <= mm.kappa(i); ++j) {
        // left side runs -kappa..-1 from left to right
        const std::int64_t jj = mm.side() == Side::Right ? j : mm.kappa(i) + 1 - j;
        Word c = w;
        c.push_back(mm.letter(jj));
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

inline std::vector<Word> cantor_words(const CoveringTree& t, std::size_t n) {
  if (n > t.depth()) throw Error("cantor_words: tree depth is smaller than n");
  return cantor_words(MassMeasure::from_tree(t), n);
}

/// Theta^ children of w, left to right.
inline std::vector<Child> cantor_children(const CoveringTree& t, const MassMeasure& mm, const Word& w,
                                          const Segment& s) {
  const std::size_t gen = w.size();  // generation of the children
  if (gen > mm.depth() || gen > t.depth()) return {};
  const auto limit = static_cast<std::size_t>(mm.kappa(gen));
  auto kids = t.children(w, s, mm.side(), limit);
  if (kids.size() != limit)
    throw Error("tree node " + to_string(w) + " has fewer than kappa = " + std::to_string(limit) +
                " children on the measure side");
  return kids;
}

inline std::size_t resolved_depth(const CoveringTree& t, const MassMeasure& mm) {
  return std::min(t.depth(), mm.depth());
}

/// Point of C given by a coding word; path[k] = J_{omega|k}, x = midpoint
/// of the deepest band.
struct CantorPoint {
  Word coding;
  std::vector<Segment> path;
  Coord x;
};

inline CantorPoint cantor_point(const CoveringTree& t, const MassMeasure& mm, const Word& coding) {
  if (!mm.contains(coding)) throw Error("coding " + to_string(coding) + " is not a Cantor word");
  CantorPoint p;
  p.coding = {1};
  p.path.push_back(t.segment({1}));
  for (std::size_t i = 1; i < coding.size(); ++i) {
    bool found = false;
    for (const auto& c : cantor_children(t, mm, p.coding, p.path.back())) {
      if (c.letter == coding[i]) {
        p.path.push_back(c.segment);
        found = true;
        break;
      }
    }
    if (!found) throw Error("no node " + to_string(coding));
    p.coding.push_back(coding[i]);
  }
  p.x = p.path.back().mid();
  return p;
}

/// Uniformly random coding of length depth+1 (mu-distributed up to the
/// resolved depth).
inline CantorPoint sample_point(const CoveringTree& t, const MassMeasure& mm, detail::SplitMix64& rng) {
  const std::size_t D = resolved_depth(t, mm);
  Word w{1};
  for (std::size_t i = 1; i <= D; ++i)
    w.push_back(mm.letter(1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(mm.kappa(i))))));
  return cantor_point(t, mm, w);
}

inline Segment ball(const Coord& x, const Coord& r) { return {x - r, x + r}; }

/// Smallest n with J_{omega|n} inside B(x, r); nullopt if even the deepest
/// band is not inside (r below resolution).
inline std::optional<std::size_t> n_r(const CantorPoint& p, const Coord& r) {
  const Segment b = ball(p.x, r);
  for (std::size_t k = 0; k < p.path.size(); ++k)
    if (b.contains(p.path[k])) return k;
  return std::nullopt;
}

/// mu([x-r, x+r]): cylinders inside the ball count fully, bands meeting it
/// only partially are refined down to the resolved depth, where they count
/// fully. Exact rational.
inline BigRational measure_of_ball(const CoveringTree& t, const MassMeasure& mm, const Coord& x, const Coord& r) {
  if (!(r > 0)) throw Error("measure_of_ball: r must be positive");
  const std::size_t D = resolved_depth(t, mm);
  const Segment b = ball(x, r);
  std::vector<BigInt> count(D + 1, 0);
  std::vector<std::pair<Word, Segment>> stack{{{1}, t.segment({1})}};
  while (!stack.empty()) {
    auto [w, s] = std::move(stack.back());
    stack.pop_back();
    if (!b.intersects(s)) continue;
    const std::size_t gen = w.size() - 1;
    if (b.contains(s) || gen == D) {
      count[gen] += 1;
      continue;
    }
    for (auto& c : cantor_children(t, mm, w, s)) {
      Word cw = w;
      cw.push_back(c.letter);
      stack.push_back({std::move(cw), c.segment});
    }
  }
  BigInt num = 0;
  for (std::size_t g = 0; g <= D; ++g) num += count[g] * (mm.cylinders(D) / mm.cylinders(g));
  return BigRational(num, mm.cylinders(D));
}

/// Theta^ bands of generation g meeting B(x, r).
inline std::size_t bands_meeting(const CoveringTree& t, const MassMeasure& mm, std::size_t g, const Segment& b) {
  std::size_t n = 0;
  std::vector<std::pair<Word, Segment>> stack{{{1}, t.segment({1})}};
  while (!stack.empty()) {
    auto [w, s] = std::move(stack.back());
    stack.pop_back();
    if (!b.intersects(s)) continue;
    if (w.size() - 1 == g) {
      ++n;
      continue;
    }
    for (auto& c : cantor_children(t, mm, w, s)) {
      Word cw = w;
      cw.push_back(c.letter);
      stack.push_back({std::move(cw), c.segment});
    }
  }
  return n;
}

struct ClaimResult {
  bool holds = false;
  /// n_r, when J_{omega|n} is inside the ball for some resolved n.
  std::optional<std::size_t> n_r;
  std::size_t intersecting = 0;
  /// All a_{m+i} >= max(C1, C~) over the resolved depth.
  bool hypothesis_ok = true;
  std::vector<std::string> flags;
};

inline bool claim_hypothesis(const CoveringTree& t, const MassMeasure& mm) {
  const double thr = quotient_threshold(t.constants());
  for (std::size_t i = 1; i <= resolved_depth(t, mm); ++i)
    if (t.a(i) < thr) return false;
  return true;
}

/// Whether B(x, r) meets exactly one Theta^ band of generation n_r - 1.
inline ClaimResult claim_check(const CoveringTree& t, const MassMeasure& mm, const CantorPoint& p, const Coord& r) {
  ClaimResult res;
  res.hypothesis_ok = claim_hypothesis(t, mm);
  if (!res.hypothesis_ok) res.flags.push_back("hypothesis violated");
  res.n_r = n_r(p, r);
  if (!res.n_r) {
    res.flags.push_back("r below resolution of the built depth");
    return res;
  }
  if (*res.n_r == 0) {
    res.flags.push_back("r larger than the root band");
    return res;
  }
  res.intersecting = bands_meeting(t, mm, *res.n_r - 1, ball(p.x, r));
  res.holds = res.intersecting == 1;
  return res;
}

namespace detail {

/// Outermost point of C_D inside J_w: leftmost (toward = left) or rightmost.
inline Coord extreme_leaf(const CoveringTree& t, const MassMeasure& mm, Word w, Segment s, bool leftmost) {
  const std::size_t D = resolved_depth(t, mm);
  while (w.size() - 1 < D) {
    auto kids = cantor_children(t, mm, w, s);
    const Child& c = leftmost ? kids.front() : kids.back();
    w.push_back(c.letter);
    s = c.segment;
  }
  return leftmost ? s.lo : s.hi;
}

inline bool close(const Coord& a, const Coord& b, const Coord& scale) {
  using boost::multiprecision::abs;
  return abs(a - b) <= scale * Coord(1e-60);
}

}  // namespace detail

/// Order of a gap of C_D (union of Theta^_D bands): the generation k of the
/// deepest Theta^ band containing it.
inline std::size_t gap_order(const CoveringTree& t, const MassMeasure& mm, const Segment& gap) {
  const std::size_t D = resolved_depth(t, mm);
  Word w{1};
  Segment s = t.segment(w);
  const Coord scale = s.length();
  auto not_a_gap = [&] { return Error("not a gap: [" + format_real(gap.lo) + ", " + format_real(gap.hi) + "]"); };
  if (!(gap.lo < gap.hi) || !s.contains(gap)) throw not_a_gap();
  while (w.size() - 1 < D) {
    const auto kids = cantor_children(t, mm, w, s);
    const Child* inside = nullptr;
    for (const auto& c : kids)
      if (c.segment.contains(gap)) inside = &c;
    if (inside) {
      w.push_back(inside->letter);
      s = inside->segment;
      continue;
    }
    for (std::size_t i = 0; i + 1 < kids.size(); ++i) {
      if (kids[i].segment.lo <= gap.lo && gap.hi <= kids[i + 1].segment.hi) {
        Word lw = w, rw = w;
        lw.push_back(kids[i].letter);
        rw.push_back(kids[i + 1].letter);
        const Coord lo = detail::extreme_leaf(t, mm, lw, kids[i].segment, false);
        const Coord hi = detail::extreme_leaf(t, mm, rw, kids[i + 1].segment, true);
        if (detail::close(lo, gap.lo, scale) && detail::close(hi, gap.hi, scale)) return w.size() - 1;
      }
    }
    throw not_a_gap();
  }
  throw not_a_gap();
}

/// Complementary intervals of C_D on either side of J_w (w in Theta^);
/// nullopt when J_w is extreme on that side.
struct AdjacentGaps {
  std::optional<Segment> left;
  std::optional<Segment> right;
};

inline AdjacentGaps adjacent_gaps(const CoveringTree& t, const MassMeasure& mm, const Word& w) {
  if (!mm.contains(w)) throw Error("adjacent_gaps: " + to_string(w) + " is not a Cantor word");
  AdjacentGaps g;
  const CantorPoint p = cantor_point(t, mm, w);
  const Coord lo = detail::extreme_leaf(t, mm, w, p.path.back(), true);
  const Coord hi = detail::extreme_leaf(t, mm, w, p.path.back(), false);
  // Nearest Theta^ sibling of some ancestor, on each side.
  for (std::size_t level = w.size() - 1; level >= 1 && (!g.left || !g.right); --level) {
    Word parent(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(level));
    const auto kids = cantor_children(t, mm, parent, p.path[level - 1]);
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (kids[i].letter != w[level]) continue;
      if (!g.left && i > 0) {
        Word sw = parent;
        sw.push_back(kids[i - 1].letter);
        g.left = Segment{detail::extreme_leaf(t, mm, sw, kids[i - 1].segment, false), lo};
      }
      if (!g.right && i + 1 < kids.size()) {
        Word sw = parent;
        sw.push_back(kids[i + 1].letter);
        g.right = Segment{hi, detail::extreme_leaf(t, mm, sw, kids[i + 1].segment, true)};
      }
    }
  }
  return g;
}

struct LocalSample {
  double r = 0;
  double log_r = 0;
  double log_mu = 0;
  double quotient = 0;
  std::optional<std::size_t> n_r;
};

struct LocalDimension {
  std::vector<LocalSample> samples;
  /// Minimum quotient over the ladder: finite-depth evidence for the lower
  /// local dimension, not a limit.
  double running_min = std::numeric_limits<double>::infinity();
  bool truncated = false;
  std::vector<std::string> flags;
};

namespace detail {

inline double log_rational(const BigRational& q) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  return log_big(numerator(q)) - log_big(denominator(q));
}

}  // namespace detail

/// Radii from |J_{omega|first}| down to |J_{omega|D}|, geometric with
/// per_generation steps between consecutive band lengths.
inline std::vector<Coord> radius_ladder(const CantorPoint& p, std::size_t first, std::size_t per_generation) {
  std::vector<Coord> out;
  if (p.path.size() < 2 || per_generation == 0) return out;
  const std::size_t D = p.path.size() - 1;
  first = std::min(first, D);
  for (std::size_t k = first; k < D; ++k) {
    const Coord a = p.path[k].length(), b = p.path[k + 1].length();
    for (std::size_t s = 0; s < per_generation; ++s) {
      const double f = static_cast<double>(s) / static_cast<double>(per_generation);
      out.push_back(a * boost::multiprecision::pow(b / a, Coord(f)));
    }
  }
  out.push_back(p.path[D].length());
  return out;
}

/// log mu(B(x, r)) / log r along a decreasing ladder of radii.
inline LocalDimension local_dimension(const CoveringTree& t, const MassMeasure& mm, const CantorPoint& p,
                                      const std::vector<Coord>& ladder) {
  LocalDimension res;
  if (resolved_depth(t, mm) == 0 || ladder.empty()) {
    res.flags.push_back("empty ladder");
    return res;
  }
  const Coord floor_r = p.path.back().length() / 2;
  for (const Coord& r : ladder) {
    if (r < floor_r) {
      res.truncated = true;
      continue;
    }
    if (!(r < 1)) {
      res.flags.push_back("r >= 1 skipped");
      continue;
    }
    LocalSample s;
    s.r = r.convert_to<double>();
    s.log_r = boost::multiprecision::log(r).convert_to<double>();
    s.log_mu = detail::log_rational(measure_of_ball(t, mm, p.x, r));
    s.quotient = s.log_mu / s.log_r;
    s.n_r = n_r(p, r);
    res.running_min = std::min(res.running_min, s.quotient);
    res.samples.push_back(s);
  }
  if (res.truncated) res.flags.push_back("ladder below resolution of the built depth truncated");
  if (res.samples.empty()) res.flags.push_back("empty ladder");
  return res;
}

}  // namespace harperdim::cantor
