#pragma once

#include "harperdim/cantor/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace harperdim::cantor {

/// Outcome of one constraint over all visited nodes. margin is the smallest
/// normalized slack seen (negative = violated); witness is the parent word
/// where it occurred.
struct ConstraintCheck {
  std::string name;
  bool pass = true;
  bool skipped = false;
  double margin = std::numeric_limits<double>::infinity();
  std::optional<Word> witness;
  std::string detail;
  std::size_t checked = 0;

  void observe(double m, const Word& w, double tol, const std::string& what) {
    ++checked;
    if (m < margin) {
      margin = m;
      witness = w;
      detail = what;
    }
    if (m < -tol) pass = false;
  }
};

struct ValidationReport {
  std::vector<ConstraintCheck> checks;
  std::size_t nodes_visited = 0;
  /// Node budget exhausted; only part of the tree was inspected.
  bool truncated = false;
  std::vector<std::string> notes;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const ConstraintCheck& get(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw Error("no check named " + name);
  }
};

struct ValidateOptions {
  std::size_t max_nodes = 2'000'000;
  /// Relative slack absorbing coordinate rounding.
  double tolerance = 1e-12;
};

namespace detail {

/// Depth-first walk over parents (nodes with children), left to right.
/// Returns false when the node budget ran out.
inline bool for_each_parent(const CoveringTree& t, std::size_t max_nodes,
                            const std::function<void(const Word&, const Segment&, const std::vector<Child>&)>& visit,
                            std::size_t& visited) {
  std::vector<std::pair<Word, Segment>> stack;
  const auto roots = t.roots();
  for (std::size_t j = roots.size(); j-- > 0;) stack.push_back({{static_cast<int>(j + 1)}, roots[j]});
  while (!stack.empty()) {
    if (visited >= max_nodes) return false;
    auto [w, s] = std::move(stack.back());
    stack.pop_back();
    ++visited;
    const auto kids = t.children(w, s);
    if (!kids.empty()) visit(w, s, kids);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
      Word cw = w;
      cw.push_back(it->letter);
      stack.push_back({std::move(cw), it->segment});
    }
  }
  return true;
}

inline double to_d(const Coord& c) { return c.convert_to<double>(); }
inline double log_d(const Coord& c) { return boost::multiprecision::log(c).convert_to<double>(); }

}  // namespace detail

/// Checks the covering constraints on every parent J_theta:
///   nesting     children (incl. mid-band) inside J_theta
///   order       each child strictly right of the previous one
///   counts      b1 a <= m_theta, n_theta <= b2 a
///   gaps        d(J_{theta i}, J_{theta (i+1)}) / |J_theta| >= c1 / a
///   mid-band    |J_{theta 0}| / |J_theta| <= eps0
///   lengths     e^{-d2 a} <= |J_{theta i}| / |J_theta| <= e^{-d1 a}, i != 0
inline ValidationReport validate_tree(const CoveringTree& t, const ValidateOptions& opt = {}) {
  const HSConstants& k = t.constants();
  ValidationReport rep;
  ConstraintCheck nesting{"nesting"}, order{"order"}, counts{"counts"}, gaps{"gaps"}, mid{"mid-band"},
      lengths{"lengths"};
  const double tol = opt.tolerance;
  auto visit = [&](const Word& w, const Segment& s, const std::vector<Child>& kids) {
    const double a = t.a(w.size());
    const Coord len = s.length();
    int left = 0, right = 0;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const Child& c = kids[i];
      const Coord clen = c.segment.length();
      Word cw = w;
      cw.push_back(c.letter);
      const double in = detail::to_d(std::min(c.segment.lo - s.lo, s.hi - c.segment.hi) / len);
      nesting.observe(in, cw, tol, "child " + to_string(cw) + " sticks out by " + format_double(-in) + " |J|");
      const double pos_len = detail::to_d(clen / len);
      if (!(clen > 0)) order.observe(-1, cw, tol, "band " + to_string(cw) + " has non-positive length");
      if (i > 0) {
        const Child& p = kids[i - 1];
        const double gap = detail::to_d((c.segment.lo - p.segment.hi) / len);
        order.observe(gap, cw, 0.0, "band " + to_string(cw) + " not strictly right of its left neighbour");
        if (c.letter != p.letter + 1) order.observe(-1, cw, 0.0, "letters not consecutive at " + to_string(cw));
        gaps.observe(gap * a / k.c1 - 1, cw, tol,
                     "gap left of " + to_string(cw) + " is " + format_double(gap) + " |J|, floor " +
                         format_double(k.c1 / a));
      }
      if (c.letter == 0) {
        mid.observe(k.eps0 - pos_len, cw, tol, "mid-band ratio " + format_double(pos_len));
      } else {
        (c.letter < 0 ? left : right)++;
        const double lg = detail::log_d(clen / len);
        const double m = std::min(lg + k.d2 * a, -k.d1 * a - lg) / a;
        lengths.observe(m, cw, tol, "ratio " + format_double(pos_len) + " vs [" + format_double(std::exp(-k.d2 * a)) +
                                        ", " + format_double(std::exp(-k.d1 * a)) + "]");
      }
    }
    for (int n : {left, right}) {
      const double m = std::min(n - k.b1 * a, k.b2 * a - n) / a;
      counts.observe(m, w, 1e-9, std::to_string(n) + " children vs [" + format_double(k.b1 * a) + ", " +
                                     format_double(k.b2 * a) + "]");
    }
  };
  rep.truncated = !detail::for_each_parent(t, opt.max_nodes, visit, rep.nodes_visited);
  if (rep.truncated) rep.notes.push_back("node budget exhausted; checks cover the visited part only");
  rep.checks = {nesting, order, counts, gaps, mid, lengths};
  return rep;
}

struct ProfileOptions {
  /// Window for the unspecified O(1) constants of the profile.
  double K = 25;
  std::size_t max_nodes = 2'000'000;
};

/// Checks the finer profile of the semiclassical covering statement:
///   edge-shift   generation-0 edges move by at most C|h| from the rational
///                bands, and by at least sqrt|h|/C away from a touching pair
///   root-gaps    d(I_l, I_{l+1}) >= 1/C, or >= sqrt|h|/C for a touching pair
///   gap-upper    gaps scaled to a parent of length 4 are <= K / sqrt(a)
///   length-profile  -log(|J_{theta i}|/|J_theta|) / a in [1/K, K]
/// The first two are skipped when h = 0.
inline ValidationReport validate_profile(const CoveringTree& t, double h, double C,
                                                  const ProfileOptions& opt = {}) {
  if (t.depth() < 1) throw Error("validate_profile: tree depth must be >= 1");
  if (!(C > 0) || !(opt.K >= 1)) throw Error("validate_profile: need C > 0 and K >= 1");
  ValidationReport rep;
  ConstraintCheck shift{"edge-shift"}, rgap{"root-gaps"}, upper{"gap-upper"}, profile{"length-profile"};
  const auto bs = harper::band_set(t.root_p(), t.root_q());
  const auto touching = harper::touching_bands(bs, 1e-9);
  auto is_touching = [&](int l) { return std::find(touching.begin(), touching.end(), l) != touching.end(); };
  const auto roots = t.roots();
  if (h == 0) {
    shift.skipped = rgap.skipped = true;
    rep.notes.push_back("h = 0: edge-shift and root-gap checks skipped");
  } else {
    const double sh = std::sqrt(std::abs(h));
    for (std::size_t l = 0; l < roots.size(); ++l) {
      const Word w{static_cast<int>(l + 1)};
      const double lo = detail::to_d(roots[l].lo), hi = detail::to_d(roots[l].hi);
      const double g = bs.bands[l].lower, d = bs.bands[l].upper;
      shift.observe((lo - (g - C * std::abs(h))) / std::abs(h), w, 1e-9, "lower edge " + format_double(lo));
      shift.observe(((d + C * std::abs(h)) - hi) / std::abs(h), w, 1e-9, "upper edge " + format_double(hi));
      if (l > 0 && is_touching(static_cast<int>(l)))
        shift.observe((lo - g) / (sh / C) - 1, w, 1e-9, "touching edge moved by " + format_double(lo - g));
      if (l + 1 < roots.size()) {
        const double dist = detail::to_d(roots[l + 1].lo - roots[l].hi);
        const double need = is_touching(static_cast<int>(l + 1)) ? sh / C : 1 / C;
        rgap.observe(dist / need - 1, w, 1e-9, "distance to next root " + format_double(dist));
      }
    }
  }
  auto visit = [&](const Word& w, const Segment& s, const std::vector<Child>& kids) {
    const double a = t.a(w.size());
    const Coord len = s.length();
    for (std::size_t i = 0; i < kids.size(); ++i) {
      Word cw = w;
      cw.push_back(kids[i].letter);
      if (i > 0) {
        const double scaled = 4 * detail::to_d((kids[i].segment.lo - kids[i - 1].segment.hi) / len);
        upper.observe(1 - scaled * std::sqrt(a) / opt.K, cw, 1e-12,
                      "scaled gap " + format_double(scaled) + " vs K/sqrt(a) = " + format_double(opt.K / std::sqrt(a)));
      }
      if (kids[i].letter != 0) {
        const double c = -detail::log_d(kids[i].segment.length() / len) / a;
        profile.observe(std::min(c * opt.K - 1, opt.K - c), cw, 1e-12, "-log ratio / a = " + format_double(c));
      }
    }
  };
  rep.truncated = !detail::for_each_parent(t, opt.max_nodes, visit, rep.nodes_visited);
  if (rep.truncated) rep.notes.push_back("node budget exhausted; checks cover the visited part only");
  rep.checks = {shift, rgap, upper, profile};
  return rep;
}

}  // namespace harperdim::cantor
