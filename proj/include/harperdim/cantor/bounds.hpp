#pragma once

// Hausdorff-dimension lower bounds from the quotient statistics, and an
// empirical cross-check of them on a simulated tree.

#include "harperdim/cantor/measure.hpp"
#include "harperdim/contfrac.hpp"
#include "harperdim/specapprox.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace harperdim::cantor {

inline constexpr std::size_t kDefaultStatsDepth = 64;

namespace detail {

inline std::size_t inspect_limit(const ContinuedFraction& cf, std::size_t m, std::size_t depth) {
  if (cf.infinite()) return std::max(cf.prefix().size(), m) + cf.period();
  return std::min(cf.available(), std::max(depth, m));
}

}  // namespace detail

/// (log(b1/2) + log G*) / (d2 A*), no hypothesis check.
inline double cantor_bound_formula(const FrequencyStats& s, const HSConstants& k) {
  return (std::log(k.b1 / 2) + std::log(s.g_star_estimate)) / (k.d2 * s.a_star_estimate);
}

/// cantor_bound_formula with A*, G* the depth-n estimates. Requires 1 <= a_i <= M for i <= m and a_i >= max(C1, C~) beyond.
inline double cantor_bound(const ContinuedFraction& cf, const HSConstants& k,
                           std::size_t depth = kDefaultStatsDepth) {
  k.validate();
  const double thr = quotient_threshold(k);
  const std::size_t limit = detail::inspect_limit(cf, k.m, depth);
  for (std::size_t i = 1; i <= limit; ++i) {
    const double a = cf.quotient(i).convert_to<double>();
    if (i <= k.m && a > k.M)
      throw Error("cantor_bound: a_" + std::to_string(i) + " = " + cf.quotient(i).str() + " > M = " + format_double(k.M));
    if (i > k.m && a < thr)
      throw Error("cantor_bound: a_" + std::to_string(i) + " = " + cf.quotient(i).str() + " < max(C1, C~) = " +
                  format_double(thr));
  }
  return cantor_bound_formula(stats(cf, depth), k);
}

struct SpectrumBoundConstants {
  double M = 2;
  std::size_t m_hat = 2;
  double C = 0;
  double C_prime = 0;
};

/// C = max(C1, C~, 2/b1, (2/b1)^2), C' = 2 d2.
inline SpectrumBoundConstants spectrum_bound_constants(const HSConstants& k) {
  k.validate();
  const double t = 2 / k.b1;
  return {k.M, k.m_hat, std::max({k.C1, tilde_c(k), t, t * t}), 2 * k.d2};
}

/// (1/C') log G* / A*, no class check.
inline double spectrum_bound_formula(const FrequencyStats& s, double C_prime) {
  return std::log(s.g_star_estimate) / (C_prime * s.a_star_estimate);
}

/// spectrum_bound_formula for frequencies with 1 <= a_i <= M (i <= m) and
/// a_i >= C beyond, for some m <= m_hat.
inline double spectrum_bound(const ContinuedFraction& cf, const SpectrumBoundConstants& c,
                             std::size_t depth = kDefaultStatsDepth) {
  if (!(c.C_prime > 0)) throw Error("spectrum_bound: C' must be positive");
  bool member = false;
  for (std::size_t m = 0; m <= c.m_hat && !member; ++m) {
    if (!cf.infinite() && cf.available() < std::max(depth, m)) throw Error("insufficient quotients");
    member = large_quotient_class(cf, c.M, m, c.C).member;
  }
  if (!member)
    throw Error("spectrum_bound: frequency outside the class (a_i <= " + format_double(c.M) + " for i <= m, a_i >= " +
                format_double(c.C) + " beyond, m <= " + std::to_string(c.m_hat) + ")");
  return spectrum_bound_formula(stats(cf, depth), c.C_prime);
}

/// Both bounds side by side. With log G* >= -2 log(b1/2) (automatic from
/// G* >= C >= (2/b1)^2 when b1 < 2) the spectrum bound never exceeds the
/// Cantor bound.
struct BoundChain {
  double cantor_value = 0;
  double spectrum_value = 0;
  double a_star = 0;
  double g_star = 0;
  bool b1_below_2 = false;
  bool chain_holds = false;
};

inline BoundChain bound_chain(const ContinuedFraction& cf, const HSConstants& k,
                              std::size_t depth = kDefaultStatsDepth) {
  BoundChain b;
  b.cantor_value = cantor_bound(cf, k, depth);
  b.spectrum_value = spectrum_bound(cf, spectrum_bound_constants(k), depth);
  const FrequencyStats s = stats(cf, depth);
  b.a_star = s.a_star_estimate;
  b.g_star = s.g_star_estimate;
  b.b1_below_2 = k.b1 < 2;
  b.chain_holds = b.spectrum_value <= b.cantor_value + 1e-12;
  return b;
}

/// Box count of the depth-D cover (union of Theta^_D bands) at scale delta.
/// A subtree whose band lies in one grid cell contributes that cell whole.
inline std::int64_t cover_box_count(const CoveringTree& t, const MassMeasure& mm, const Coord& delta) {
  const std::size_t D = resolved_depth(t, mm);
  specapprox::BoxCounter<Coord> counter(delta);
  std::vector<std::pair<Word, Segment>> stack{{{1}, t.segment({1})}};
  while (!stack.empty()) {
    auto [w, s] = std::move(stack.back());
    stack.pop_back();
    if (w.size() - 1 == D || counter.single_cell(s.lo, s.hi)) {
      if (w.size() - 1 == D)
        counter.add(s.lo, s.hi);
      else
        counter.add(s.lo, s.lo);
      continue;
    }
    const auto kids = cantor_children(t, mm, w, s);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
      Word cw = w;
      cw.push_back(it->letter);
      stack.push_back({std::move(cw), it->segment});
    }
  }
  return counter.count();
}

/// Box-counting fit of the depth-D cover over scales from |J_{omega|1}| to
/// |J_{omega|D}| along a reference path.
inline specapprox::DimensionFit cover_dimension(const CoveringTree& t, const MassMeasure& mm, const CantorPoint& ref,
                                                std::size_t per_generation = 4) {
  const auto radii = radius_ladder(ref, 1, per_generation);
  std::vector<double> scales;
  std::vector<std::int64_t> counts;
  for (const Coord& d : radii) {
    scales.push_back(d.convert_to<double>());
    counts.push_back(cover_box_count(t, mm, d));
  }
  return specapprox::fit_counts(scales, counts);
}

/// log kappa / log(1/rho) for a self-similar tree (constant a, fixed ratio).
inline std::optional<double> self_similar_dimension(const CoveringTree& t, const MassMeasure& mm) {
  if (!t.layout().fixed_ratio || t.depth() == 0) return std::nullopt;
  for (std::size_t i = 1; i <= resolved_depth(t, mm); ++i)
    if (t.a(i) != t.a(1) || mm.kappa(i) != mm.kappa(1)) return std::nullopt;
  return std::log(static_cast<double>(mm.kappa(1))) / -std::log(*t.layout().fixed_ratio);
}

struct ConsistencyOptions {
  std::size_t samples = 64;
  std::uint64_t seed = 1;
  /// Ladder radii per generation for local dimensions and box counts.
  std::size_t per_generation = 4;
  /// First generation of the local-dimension ladder; default depth / 2.
  std::optional<std::size_t> first_generation;
  double tolerance = 0.05;
  std::size_t stats_depth = kDefaultStatsDepth;
};

struct ConsistencyReport {
  std::size_t depth = 0;
  double local_dimension_min = 0;
  double cantor_value = 0;
  double box_slope = 0;
  std::optional<double> closed_form;
  double tolerance = 0.05;
  bool local_ok = false;
  bool box_ok = false;
  /// Every sampled (x, r): log r >= log|J_1| - log 2 - d2 sum_{k<=n_r} a_{m+k}.
  std::size_t log_r_checked = 0;
  std::size_t log_r_violations = 0;
  std::vector<std::string> flags;
};

/// Mass-distribution cross-check: sampled lower local dimensions and the
/// cover's box-counting slope against the Cantor lower bound.
inline ConsistencyReport dimension_consistency(const CoveringTree& t, const ContinuedFraction& cf,
                                               const HSConstants& k, const ConsistencyOptions& opt = {}) {
  ConsistencyReport rep;
  const MassMeasure mm = MassMeasure::from_tree(t);
  const std::size_t D = resolved_depth(t, mm);
  rep.depth = D;
  rep.tolerance = opt.tolerance;
  if (D < 5) {
    rep.tolerance = 2 * opt.tolerance;
    rep.flags.push_back("depth < 5: tolerance widened to " + format_double(rep.tolerance));
  }
  if (D < 2) throw Error("dimension_consistency: tree depth must be >= 2");
  rep.cantor_value = cantor_bound(cf, k, opt.stats_depth);
  rep.closed_form = self_similar_dimension(t, mm);

  const double log_root = boost::multiprecision::log(t.segment({1}).length()).convert_to<double>();
  std::vector<double> prefix_a(D + 1, 0);
  for (std::size_t i = 1; i <= D; ++i) prefix_a[i] = prefix_a[i - 1] + t.a(i);

  detail::SplitMix64 rng(opt.seed);
  const std::size_t first = opt.first_generation.value_or(std::max<std::size_t>(1, D / 2));
  rep.local_dimension_min = std::numeric_limits<double>::infinity();
  std::optional<CantorPoint> ref;
  for (std::size_t i = 0; i < opt.samples; ++i) {
    CantorPoint p = sample_point(t, mm, rng);
    const auto ld = local_dimension(t, mm, p, radius_ladder(p, first, opt.per_generation));
    rep.local_dimension_min = std::min(rep.local_dimension_min, ld.running_min);
    for (const auto& s : ld.samples) {
      if (!s.n_r) continue;
      ++rep.log_r_checked;
      const double rhs = log_root - std::log(2.0) - k.d2 * prefix_a[*s.n_r];
      if (s.log_r < rhs - 1e-9) ++rep.log_r_violations;
    }
    if (!ref) ref = std::move(p);
  }
  rep.box_slope = cover_dimension(t, mm, *ref, opt.per_generation).slope;
  rep.local_ok = rep.local_dimension_min >= rep.cantor_value - rep.tolerance;
  rep.box_ok = rep.box_slope >= rep.cantor_value - rep.tolerance;
  return rep;
}

}  // namespace harperdim::cantor
