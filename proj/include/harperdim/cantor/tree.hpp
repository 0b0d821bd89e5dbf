#pragma once

// Simulated covering structure: nested bands J_theta indexed by coding
// words. Generated trees are lazy; a node's children are a pure function of
// (seed, word, parent band), so any node can be produced on demand and
// traversals never have to store the (exponentially large) tree.

#include "harperdim/cantor/constants.hpp"
#include "harperdim/common.hpp"
#include "harperdim/contfrac.hpp"
#include "harperdim/harper.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace harperdim::cantor {

/// Coding word: first letter is the root band (1..q_m), later letters are
/// children; a trailing 0 marks a mid-band. Generation = size() - 1.
using Word = std::vector<int>;

inline std::string to_string(const Word& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(w[i]);
  }
  return s;
}

inline Word parse_word(std::string_view s) {
  Word w;
  if (s.empty()) throw Error("empty coding word");
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t dot = std::min(s.find('.', pos), s.size());
    const std::string_view part = s.substr(pos, dot - pos);
    int v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size())
      throw Error("bad coding word '" + std::string(s) + "'");
    w.push_back(v);
    pos = dot + 1;
  }
  if (w.front() < 1) throw Error("coding word must start with a root letter >= 1");
  return w;
}

struct Segment {
  Coord lo;
  Coord hi;

  Coord length() const { return hi - lo; }
  Coord mid() const { return (lo + hi) / 2; }
  bool contains(const Segment& o) const { return lo <= o.lo && o.hi <= hi; }
  bool intersects(const Segment& o) const { return !(o.hi < lo || hi < o.lo); }
};

enum class Side { Right, Left };

struct LayoutOptions {
  /// Draw the per-node child count uniformly from the admissible window
  /// instead of always using the smallest admissible count.
  bool spread = true;
  /// Self-similar mode: every non-mid child has length ratio rho.
  std::optional<double> fixed_ratio;
  /// Gaps between consecutive children sit at the floor c1/a; the slack
  /// goes to the gap next to the mid-band.
  bool packed = false;
};

struct Child {
  int letter = 0;
  Segment segment;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// SplitMix64; portable and fully specified, unlike std distributions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }
  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform on {0, ..., n-1}.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t word_key(std::uint64_t seed, const Word& w, std::uint64_t salt) {
  std::uint64_t h = mix64(seed ^ mix64(salt + 0x51ED270B27A3C4F1ULL));
  for (int l : w) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(l) + 0x1000003));
  return h;
}

}  // namespace detail

/// Layout parameters shared by all parents of one generation.
struct GenerationPlan {
  double a = 0;
  int min_count = 1;
  int max_count = 1;
  double ratio_lo = 0;  // e^{-d2 a}
  double ratio_hi = 0;  // e^{-d1 a}
  double gap_floor = 0; // c1 / a

  /// Largest child ratio that still leaves n gaps at the floor on one side.
  double cap(int n, double eps0) const { return ((1 - eps0) / 2 - n * gap_floor) / n; }
};

class CoveringTree {
 public:
  /// Generated tree; see build_tree.
  CoveringTree(ContinuedFraction cf, HSConstants constants, std::size_t depth, std::uint64_t seed,
               LayoutOptions layout = {})
      : cf_(std::move(cf)), k_(constants), depth_(depth), seed_(seed), layout_(layout) {
    init();
  }

  /// Explicit tree: nodes are given (e.g. loaded or hand-edited); the
  /// generator parameters are kept for provenance only.
  static CoveringTree with_nodes(ContinuedFraction cf, HSConstants constants, std::size_t depth, std::uint64_t seed,
                                 LayoutOptions layout, std::map<Word, Segment> nodes) {
    CoveringTree t(std::move(cf), constants, depth, seed, layout);
    t.nodes_ = std::move(nodes);
    t.index();
    return t;
  }

  const ContinuedFraction& cf() const { return cf_; }
  const HSConstants& constants() const { return k_; }
  std::size_t depth() const { return depth_; }
  std::uint64_t seed() const { return seed_; }
  const LayoutOptions& layout() const { return layout_; }
  bool is_explicit() const { return nodes_.has_value(); }

  /// a_{m+k}, 1 <= k <= depth.
  double a(std::size_t k) const {
    if (k == 0 || k > depth_) throw Error("quotient index out of range");
    return plans_[k].a;
  }
  const GenerationPlan& plan(std::size_t k) const { return plans_.at(k); }

  /// h = 2 pi (alpha - p_m / q_m).
  double h() const { return h_; }
  std::int64_t root_p() const { return root_p_; }
  std::int64_t root_q() const { return root_q_; }

  /// Generation-0 bands J_1..J_{q_m}, before any edits.
  const std::vector<Segment>& generated_roots() const { return roots_; }

  std::vector<Segment> roots() const {
    std::vector<Segment> out;
    for (std::size_t j = 1; j <= roots_.size(); ++j) out.push_back(segment({static_cast<int>(j)}));
    return out;
  }

  /// Children of w (whose band is s) in left-to-right order: -m..-1, 0, 1..n.
  /// With a side, only that side; with a limit, only the `limit` children
  /// nearest the mid-band on that side.
  std::vector<Child> children(const Word& w, const Segment& s, std::optional<Side> side = std::nullopt,
                              std::size_t limit = std::numeric_limits<std::size_t>::max()) const {
    if (w.empty() || w.size() > depth_ || (w.size() > 1 && w.back() == 0)) return {};
    if (nodes_) return explicit_children(w, side, limit);
    return generate(w, s, side, limit);
  }

  std::vector<Child> children(const Word& w) const { return children(w, segment(w)); }

  bool has_node(const Word& w) const {
    if (nodes_) return nodes_->count(w) > 0;
    try {
      (void)segment(w);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  Segment segment(const Word& w) const {
    if (w.empty()) throw Error("empty coding word");
    if (nodes_) {
      auto it = nodes_->find(w);
      if (it == nodes_->end()) throw Error("no node " + to_string(w));
      return it->second;
    }
    if (w[0] < 1 || static_cast<std::size_t>(w[0]) > roots_.size()) throw Error("no node " + to_string(w));
    Segment s = roots_[w[0] - 1];
    Word prefix{w[0]};
    for (std::size_t i = 1; i < w.size(); ++i) {
      bool found = false;
      for (const auto& c : children(prefix, s)) {
        if (c.letter == w[i]) {
          s = c.segment;
          found = true;
          break;
        }
      }
      if (!found) throw Error("no node " + to_string(w));
      prefix.push_back(w[i]);
    }
    return s;
  }

  /// All nodes; fails when there are more than max_nodes.
  std::map<Word, Segment> materialize(std::size_t max_nodes = 2'000'000) const {
    if (nodes_) return *nodes_;
    std::map<Word, Segment> out;
    std::vector<std::pair<Word, Segment>> stack;
    for (std::size_t j = roots_.size(); j-- > 0;) stack.push_back({{static_cast<int>(j + 1)}, roots_[j]});
    while (!stack.empty()) {
      auto [w, s] = std::move(stack.back());
      stack.pop_back();
      if (out.size() >= max_nodes)
        throw Error("tree has more than " + std::to_string(max_nodes) + " nodes; materialize a shallower tree");
      for (auto& c : children(w, s)) {
        Word cw = w;
        cw.push_back(c.letter);
        stack.push_back({std::move(cw), c.segment});
      }
      out.emplace(std::move(w), s);
    }
    return out;
  }

  CoveringTree to_explicit(std::size_t max_nodes = 2'000'000) const {
    return with_nodes(cf_, k_, depth_, seed_, layout_, materialize(max_nodes));
  }

  /// Fault injection and loading: replace the band of an existing node.
  void set_segment(const Word& w, const Segment& s) {
    if (!nodes_) throw Error("set_segment requires an explicit tree (see to_explicit)");
    auto it = nodes_->find(w);
    if (it == nodes_->end()) throw Error("no node " + to_string(w));
    it->second = s;
  }

 private:
  void init() {
    k_.validate();
    if (depth_ > 64) throw Error("build_tree: depth must be <= 64");
    const std::size_t needed = k_.m + depth_;
    if (!cf_.infinite() && cf_.available() < std::max<std::size_t>(needed, 1))
      throw Error("insufficient quotients: need a_1..a_" + std::to_string(needed));
    for (std::size_t i = 1; i <= std::min(needed, cf_.infinite() ? needed : cf_.available()); ++i) {
      const double a = cf_.quotient(i).convert_to<double>();
      const bool ok = i <= k_.m ? a <= k_.M : a >= k_.C1;
      if (!ok)
        throw Error("build_tree: a_" + std::to_string(i) + " = " + cf_.quotient(i).str() +
                    (i <= k_.m ? " exceeds M = " + format_double(k_.M) : " is below C1 = " + format_double(k_.C1)));
    }
    if (cf_.infinite()) {
      const auto cls = large_quotient_class(cf_, k_.M, k_.m, k_.C1);
      if (!cls.member) throw Error("build_tree: quotients violate the class condition for (M, m, C1)");
    }

    plans_.assign(depth_ + 1, {});
    double shrink_digits = 0;
    for (std::size_t k = 1; k <= depth_; ++k) {
      GenerationPlan& g = plans_[k];
      g.a = cf_.quotient(k_.m + k).convert_to<double>();
      g.ratio_lo = std::exp(-k_.d2 * g.a);
      g.ratio_hi = std::exp(-k_.d1 * g.a);
      g.gap_floor = k_.c1 / g.a;
      // ceil keeps b1 a <= m_theta; floor(b1 a) would undershoot it.
      g.min_count = std::max(1, static_cast<int>(std::ceil(k_.b1 * g.a - 1e-9)));
      const int hi = static_cast<int>(std::floor(k_.b2 * g.a + 1e-9));
      if (g.min_count > hi)
        throw Error("infeasible layout: no integer child count in [b1 a, b2 a] = [" + format_double(k_.b1 * g.a) +
                    ", " + format_double(k_.b2 * g.a) + "] at generation " + std::to_string(k));
      const double need = layout_.fixed_ratio ? *layout_.fixed_ratio : g.ratio_lo;
      if (layout_.fixed_ratio && (need < g.ratio_lo * (1 - 1e-12) || need > g.ratio_hi * (1 + 1e-12)))
        throw Error("infeasible layout: fixed ratio " + format_double(need) + " outside [e^{-d2 a}, e^{-d1 a}] at generation " +
                    std::to_string(k));
      g.max_count = g.min_count - 1;
      for (int n = g.min_count; n <= hi; ++n)
        if (g.cap(n, k_.eps0) >= need) g.max_count = n;
      if (g.max_count < g.min_count)
        throw Error("infeasible layout: " + std::to_string(g.min_count) + " children of ratio " + format_double(need) +
                    " plus gaps c1/a = " + format_double(g.gap_floor) + " exceed the side budget (1-eps0)/2 = " +
                    format_double((1 - k_.eps0) / 2) + " at generation " + std::to_string(k));
      if (!layout_.spread || layout_.fixed_ratio) g.max_count = g.min_count;
      shrink_digits += k_.d2 * g.a / std::numbers::ln10;
    }
    if (shrink_digits > 60)
      throw Error("build_tree: depth exceeds coordinate precision (bands shrink by 1e-" +
                  std::to_string(static_cast<int>(shrink_digits)) + ", limit 1e-60)");

    const Convergent c = convergent(cf_, k_.m);
    if (c.q > 2000) throw Error("build_tree: q_m too large for the root band computation");
    root_q_ = c.q.convert_to<std::int64_t>();
    root_p_ = c.p.convert_to<std::int64_t>() % root_q_;
    h_ = 2 * std::numbers::pi *
         (value<HighReal>(cf_) - BigRational(c.p, c.q).convert_to<HighReal>()).convert_to<double>();
    const auto bs = harper::band_set(root_p_, root_q_);
    roots_.clear();
    for (const auto& b : bs.bands) roots_.push_back({Coord(b.lower), Coord(b.upper)});
    // Touching central pair: separate by sqrt|h| so generation 0 is disjoint.
    for (int l : harper::touching_bands(bs, 1e-9)) {
      Segment& left = roots_[l - 1];
      Segment& right = roots_[l];
      const Coord centre = (left.hi + right.lo) / 2;
      const Coord half = Coord(std::sqrt(std::abs(h_))) / 2;
      left.hi = centre - half;
      right.lo = centre + half;
      if (!(left.hi > left.lo && right.hi > right.lo))
        throw Error("build_tree: separation sqrt|h| exceeds a touching band");
    }
  }

  void index() {
    kids_.clear();
    for (const auto& [w, s] : *nodes_)
      if (w.size() > 1) kids_[Word(w.begin(), w.end() - 1)].push_back(w.back());
  }

  std::vector<Child> explicit_children(const Word& w, std::optional<Side> side, std::size_t limit) const {
    std::vector<Child> out;
    auto it = kids_.find(w);
    if (it == kids_.end()) return out;
    for (int l : it->second) {  // map order keeps letters sorted
      if (side && (l == 0 || (*side == Side::Right) != (l > 0))) continue;
      if (side && static_cast<std::size_t>(std::abs(l)) > limit) continue;
      Word cw = w;
      cw.push_back(l);
      out.push_back({l, nodes_->at(cw)});
    }
    return out;
  }

  std::vector<double> ratios(const Word& w, const GenerationPlan& g, int n, Side side) const {
    std::vector<double> r(n);
    if (layout_.fixed_ratio) {
      std::fill(r.begin(), r.end(), *layout_.fixed_ratio);
      return r;
    }
    detail::SplitMix64 rng(detail::word_key(seed_, w, side == Side::Right ? 1 : 2));
    const double lo = std::log(g.ratio_lo);
    const double hi = std::log(std::min(g.ratio_hi, g.cap(n, k_.eps0)));
    for (auto& x : r) x = std::exp(lo + rng.uniform() * (hi - lo));
    return r;
  }

  /// One side laid out from the outer endpoint inwards, so the outermost
  /// child is flush with the parent.
  std::vector<Child> side_children(const Word& w, const Segment& s, const Segment& midband, const GenerationPlan& g,
                                   int n, Side side) const {
    const auto r = ratios(w, g, n, side);
    const Coord len = s.length();
    const Coord span = side == Side::Right ? s.hi - midband.hi : midband.lo - s.lo;
    std::vector<Coord> lengths(n);
    Coord used = 0;
    for (int i = 0; i < n; ++i) {
      lengths[i] = Coord(r[i]) * len;
      used += lengths[i];
    }
    Coord between;
    if (layout_.packed)
      between = Coord(g.gap_floor) * len * Coord(1 + 1e-12);
    else
      between = (span - used) / n;
    std::vector<Child> out(n);
    if (side == Side::Right) {
      Coord pos = s.hi;
      for (int i = n; i >= 1; --i) {
        out[i - 1] = {i, {pos - lengths[i - 1], pos}};
        pos = pos - lengths[i - 1] - between;
      }
    } else {
      Coord pos = s.lo;
      for (int i = n; i >= 1; --i) {
        out[n - i] = {-i, {pos, pos + lengths[i - 1]}};
        pos = pos + lengths[i - 1] + between;
      }
    }
    return out;
  }

  std::vector<Child> generate(const Word& w, const Segment& s, std::optional<Side> side, std::size_t limit) const {
    const GenerationPlan& g = plans_[w.size()];
    int n = g.min_count;
    if (g.max_count > g.min_count) {
      detail::SplitMix64 rng(detail::word_key(seed_, w, 0));
      n += static_cast<int>(rng.below(static_cast<std::uint64_t>(g.max_count - g.min_count + 1)));
    }
    const Coord c = s.mid();
    const Coord half_mid = Coord(k_.eps0) * s.length() / 2;
    const Segment midband{c - half_mid, c + half_mid};
    std::vector<Child> out;
    if (!side || *side == Side::Left) {
      auto left = side_children(w, s, midband, g, n, Side::Left);
      const std::size_t skip = left.size() > limit ? left.size() - limit : 0;
      out.insert(out.end(), left.begin() + static_cast<std::ptrdiff_t>(skip), left.end());
    }
    if (!side) out.push_back({0, midband});
    if (!side || *side == Side::Right) {
      auto right = side_children(w, s, midband, g, n, Side::Right);
      if (right.size() > limit) right.resize(limit);
      out.insert(out.end(), right.begin(), right.end());
    }
    return out;
  }

  ContinuedFraction cf_;
  HSConstants k_;
  std::size_t depth_ = 0;
  std::uint64_t seed_ = 0;
  LayoutOptions layout_;
  std::vector<GenerationPlan> plans_;
  std::vector<Segment> roots_;
  double h_ = 0;
  std::int64_t root_p_ = 0;
  std::int64_t root_q_ = 1;
  std::optional<std::map<Word, Segment>> nodes_;
  std::map<Word, std::vector<int>> kids_;
};

/// Builds the (lazy) covering tree of cf under the given constants.
/// Within each parent: centred mid-band of relative length eps0, the same
/// number of children on both sides, log-uniform child ratios and equal
/// gaps, outermost children flush with the parent.
inline CoveringTree build_tree(const ContinuedFraction& cf, const HSConstants& constants, std::size_t depth,
                               std::uint64_t seed, const LayoutOptions& layout = {}) {
  return CoveringTree(cf, constants, depth, seed, layout);
}

}  // namespace harperdim::cantor
