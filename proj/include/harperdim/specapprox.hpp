#pragma once

// Periodic approximation of the spectrum along continued-fraction
// convergents and box-counting dimension estimates of unions of intervals.

#include "harperdim/common.hpp"
#include "harperdim/contfrac.hpp"
#include "harperdim/harper.hpp"
#include "harperdim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace harperdim::specapprox {

template <class Real>
struct Interval {
  Real lo;
  Real hi;
};

struct ApproxSpectrum {
  ContinuedFraction cf;
  std::size_t depth = 0;
  Convergent convergent;
  harper::BandSet bands;
};

inline constexpr std::int64_t kDefaultQCap = 5000;

/// Exact band set at the n-th convergent p_n/q_n (p taken mod q, since the
/// operator only depends on the frequency mod 1).
inline ApproxSpectrum approx_spectrum(const ContinuedFraction& cf, std::size_t n,
                                      std::int64_t q_cap = kDefaultQCap) {
  const Convergent c = convergent(cf, n);
  if (c.q > q_cap)
    throw Error("approx_spectrum: q_" + std::to_string(n) + " = " + c.q.str() + " exceeds the eigensolver cap " +
                std::to_string(q_cap));
  const auto q = c.q.convert_to<std::int64_t>();
  const auto p = c.p.convert_to<std::int64_t>() % q;
  return {cf, n, c, harper::band_set(p, q)};
}

/// Deepest n <= max_depth with q_n <= q_cap.
inline std::size_t deepest_affordable(const ContinuedFraction& cf, std::size_t max_depth, std::int64_t q_cap) {
  std::size_t n = std::min(max_depth, cf.available());
  if (n == 0) throw Error("deepest_affordable: depth must be >= 1");
  const auto conv = convergents(cf, n);
  std::size_t best = 0;
  for (const auto& c : conv)
    if (c.q <= q_cap) best = c.index;
  if (best == 0) throw Error("deepest_affordable: q_1 already exceeds the cap " + std::to_string(q_cap));
  return best;
}

namespace detail {

template <class Real>
std::int64_t to_int64(const Real& v) {
  if constexpr (std::is_floating_point_v<Real>)
    return static_cast<std::int64_t>(v);
  else
    return v.template convert_to<std::int64_t>();
}

}  // namespace detail

/// Streaming box counter on the grid {[k d, (k+1) d)}: counts cells that
/// contain a point of the union. Intervals must arrive sorted by lower end.
template <class Real>
class BoxCounter {
 public:
  explicit BoxCounter(Real delta) : delta_(std::move(delta)) {
    if (!(delta_ > 0)) throw Error("box_count: delta must be positive");
  }

  void add(const Real& lo, const Real& hi) {
    using std::floor;
    Real first = floor(lo / delta_);
    const Real last = floor(hi / delta_);
    if (started_ && first <= last_) first = last_ + 1;
    if (last >= first) count_ += detail::to_int64(Real(last - first)) + 1;
    if (!started_ || last > last_) last_ = last;
    started_ = true;
  }

  /// Whether [lo, hi] falls into a single grid cell.
  bool single_cell(const Real& lo, const Real& hi) const {
    using std::floor;
    return floor(lo / delta_) == floor(hi / delta_);
  }

  std::int64_t count() const { return count_; }
  const Real& delta() const { return delta_; }

 private:
  Real delta_;
  Real last_{};
  bool started_ = false;
  std::int64_t count_ = 0;
};

/// Number of grid cells [k d, (k+1) d) meeting the union of the intervals,
/// computed in O(#intervals) by interval arithmetic.
template <class Real>
std::int64_t box_count(std::vector<Interval<Real>> intervals, const Real& delta) {
  std::sort(intervals.begin(), intervals.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
  BoxCounter<Real> counter(delta);
  for (const auto& iv : intervals) counter.add(iv.lo, iv.hi);
  return counter.count();
}

inline std::vector<Interval<double>> intervals_of(const harper::BandSet& bs) {
  std::vector<Interval<double>> out;
  out.reserve(bs.bands.size());
  for (const auto& b : bs.bands) out.push_back({b.lower, b.upper});
  return out;
}

inline std::int64_t box_count(const harper::BandSet& bs, double delta) { return box_count(intervals_of(bs), delta); }

/// Scale ladder for box-counting fits: geometric with the given ratio from
/// delta_max down to delta_min.
///
/// Defaults: delta_max is the largest gap (the hull length when there are
/// no gaps). delta_min stops at the largest band length: below it, the
/// widest bands are resolved and contribute like intervals, pushing the
/// slope towards 1. SmallestBand floors at the smallest band length instead.
struct ScalePolicy {
  enum class Floor { LargestBand, SmallestBand };
  Floor floor = Floor::LargestBand;
  std::optional<double> delta_max;
  std::optional<double> delta_min;
  double ratio = 2.0;
  double min_scale = 1e-12;
};

struct DimensionFit {
  std::vector<double> scales;
  std::vector<std::int64_t> counts;
  double slope = 0;
  double intercept = 0;
  /// RMS of the log-log regression residuals.
  double residual = 0;
  double window_min = 0;
  double window_max = 0;
  /// Fit noise pushed the slope outside [0, 1]; reported, not an error.
  bool out_of_range = false;
  /// Denominator of the convergent the fit was made at (0 for synthetic sets).
  std::int64_t q = 0;
  std::size_t depth = 0;
};

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double rms = 0;
};

/// Ordinary least squares y = slope x + intercept.
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error("least_squares: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw Error("least_squares: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / static_cast<double>(n));
  return f;
}

/// Geometric ladder delta_max, delta_max / ratio, ... >= delta_min.
inline std::vector<double> scale_ladder(double delta_max, double delta_min, double ratio) {
  if (!(ratio > 1)) throw Error("scale ladder ratio must exceed 1");
  if (!(delta_min > 0) || !(delta_max > 0)) throw Error("scale window must be positive");
  std::vector<double> out;
  for (double d = delta_max; d >= delta_min * (1 - 1e-12); d /= ratio) out.push_back(d);
  return out;
}

/// Log-log fit of N(delta) against 1/delta for explicit scales.
inline DimensionFit fit_counts(const std::vector<double>& scales, const std::vector<std::int64_t>& counts) {
  if (scales.size() < 4) throw Error("scale window too narrow: fewer than 4 usable scales");
  DimensionFit fit;
  fit.scales = scales;
  fit.counts = counts;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    x.push_back(std::log(1.0 / scales[i]));
    y.push_back(std::log(static_cast<double>(counts[i])));
  }
  const LineFit lf = least_squares(x, y);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.residual = lf.rms;
  fit.window_max = *std::max_element(scales.begin(), scales.end());
  fit.window_min = *std::min_element(scales.begin(), scales.end());
  fit.out_of_range = fit.slope < 0 || fit.slope > 1;
  return fit;
}

/// Box-counting fit for a finite union of intervals.
inline DimensionFit fit_dimension(std::vector<Interval<double>> intervals, const ScalePolicy& policy = {}) {
  if (intervals.empty()) throw Error("fit_dimension: empty set");
  std::sort(intervals.begin(), intervals.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
  double largest_gap = 0, largest_len = 0, smallest_len = std::numeric_limits<double>::infinity();
  double reach = intervals.front().hi;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const double len = intervals[i].hi - intervals[i].lo;
    largest_len = std::max(largest_len, len);
    if (len > 0) smallest_len = std::min(smallest_len, len);
    if (i > 0) largest_gap = std::max(largest_gap, intervals[i].lo - reach);
    reach = std::max(reach, intervals[i].hi);
  }
  const double hull = reach - intervals.front().lo;
  const double dmax = policy.delta_max.value_or(largest_gap > 0 ? largest_gap : hull);
  double dmin;
  if (policy.delta_min) {
    dmin = *policy.delta_min;
  } else if (policy.floor == ScalePolicy::Floor::LargestBand) {
    dmin = std::max(largest_len, policy.min_scale);
  } else {
    dmin = std::max(std::isfinite(smallest_len) ? smallest_len : 0.0, policy.min_scale);
  }
  if (!(dmin < dmax)) throw Error("scale window too narrow: delta_min >= delta_max");
  const auto scales = scale_ladder(dmax, dmin, policy.ratio);
  if (scales.size() < 4) throw Error("scale window too narrow: fewer than 4 usable scales");
  std::vector<std::int64_t> counts;
  counts.reserve(scales.size());
  for (double d : scales) counts.push_back(box_count(intervals, d));
  return fit_counts(scales, counts);
}

/// Box dimension of the spectrum approximant at the deepest convergent
/// n <= depth with q_n <= q_cap.
inline DimensionFit box_dimension(const ContinuedFraction& cf, std::size_t depth, const ScalePolicy& policy = {},
                                  std::int64_t q_cap = kDefaultQCap) {
  const std::size_t n = deepest_affordable(cf, depth, q_cap);
  const ApproxSpectrum spec = approx_spectrum(cf, n, q_cap);
  DimensionFit fit = fit_dimension(intervals_of(spec.bands), policy);
  fit.q = spec.bands.q;
  fit.depth = n;
  return fit;
}

struct CurvePoint {
  std::int64_t n = 0;
  DimensionFit fit;
  /// log 2 / log n
  double conjectured = 0;
};

/// Dimension estimates for alpha_n = [n, n, ...] next to log 2 / log n.
inline std::vector<CurvePoint> wilkinson_austin_curve(const std::vector<std::int64_t>& n_list, std::size_t depth,
                                                      const ScalePolicy& policy = {},
                                                      std::int64_t q_cap = kDefaultQCap, unsigned threads = 1) {
  std::vector<CurvePoint> out(n_list.size());
  parallel_for(n_list.size(), threads, [&](std::size_t i) {
    const std::int64_t n = n_list[i];
    if (n < 2) throw Error("wilkinson_austin_curve: n must be >= 2");
    out[i].n = n;
    out[i].fit = box_dimension(ContinuedFraction::constant(n), depth, policy, q_cap);
    out[i].conjectured = std::log(2.0) / std::log(static_cast<double>(n));
  });
  return out;
}

struct GapReport {
  std::size_t n = 0;
  /// Max over band endpoints at level n+1 of the distance to the level-n
  /// band union.
  double distance = 0;
  /// |h| = 2 pi |alpha - p_n/q_n|
  double h = 0;
  double ratio = 0;
};

inline double distance_to_union(double x, const harper::BandSet& bs) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : bs.bands) {
    if (x >= b.lower && x <= b.upper) return 0.0;
    best = std::min(best, std::min(std::abs(x - b.lower), std::abs(x - b.upper)));
  }
  return best;
}

inline GapReport hausdorff_gap_report(const ContinuedFraction& cf, std::size_t n, std::int64_t q_cap = kDefaultQCap) {
  if (n < 2) throw Error("hausdorff_gap_report: n must be >= 2");
  const ApproxSpectrum coarse = approx_spectrum(cf, n, q_cap);
  const ApproxSpectrum fine = approx_spectrum(cf, n + 1, q_cap);
  GapReport r;
  r.n = n;
  for (const auto& b : fine.bands.bands) {
    r.distance = std::max(r.distance, distance_to_union(b.lower, coarse.bands));
    r.distance = std::max(r.distance, distance_to_union(b.upper, coarse.bands));
  }
  const HighReal alpha = value<HighReal>(cf);
  const HighReal approx = HighReal(coarse.convergent.p.convert_to<HighReal>()) /
                          HighReal(coarse.convergent.q.convert_to<HighReal>());
  using boost::multiprecision::abs;
  r.h = (2 * boost::math::constants::pi<HighReal>() * abs(alpha - approx)).convert_to<double>();
  r.ratio = r.h > 0 ? r.distance / r.h : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace harperdim::specapprox
