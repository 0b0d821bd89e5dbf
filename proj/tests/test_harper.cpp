#include "harperdim/harper.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace harperdim;
using namespace harperdim::harper;

namespace {

// Trace of the one-period transfer matrix with potential 2 cos(2 pi p j / q + theta).
long double transfer_trace(std::int64_t p, std::int64_t q, long double theta, long double e) {
  long double a = 1, b = 0, c = 0, d = 1;
  for (std::int64_t j = 0; j < q; ++j) {
    const long double v = 2 * std::cos(2 * std::numbers::pi_v<long double> * static_cast<long double>(j * p % q) /
                                           static_cast<long double>(q) +
                                       theta);
    // [[e - v, -1], [1, 0]] * [[a, b], [c, d]]
    const long double na = (e - v) * a - c, nb = (e - v) * b - d;
    c = a;
    d = b;
    a = na;
    b = nb;
  }
  return a + d;
}

// The trace is D(E) + c cos(q theta); E is in the spectrum iff
// |D(E)| <= 2 + |c| for some theta. Returns |D| - 2 - |c|.
long double spectral_margin(std::int64_t p, std::int64_t q, long double e) {
  const long double shift = std::numbers::pi_v<long double> / static_cast<long double>(q);
  const long double t0 = transfer_trace(p, q, 0, e), t1 = transfer_trace(p, q, shift, e);
  return std::abs((t0 + t1) / 2) - 2 - std::abs((t0 - t1) / 2);
}

// Spectrum as disjoint closed intervals by grid scan plus bisection.
std::vector<std::pair<double, double>> oracle_spectrum(std::int64_t p, std::int64_t q) {
  auto bisect = [&](long double lo, long double hi) {
    const bool lo_in = spectral_margin(p, q, lo) <= 0;
    for (int it = 0; it < 200; ++it) {
      const long double mid = (lo + hi) / 2;
      if ((spectral_margin(p, q, mid) <= 0) == lo_in)
        lo = mid;
      else
        hi = mid;
    }
    return static_cast<double>((lo + hi) / 2);
  };
  std::vector<std::pair<double, double>> out;
  const int n = 400000;
  const long double lo = -4.5L, step = 9.0L / n;
  bool inside = false;
  double start = 0;
  long double prev = lo;
  for (int i = 1; i <= n; ++i) {
    const long double x = lo + step * i;
    const bool in = spectral_margin(p, q, x) <= 0;
    if (in != inside) {
      const double edge = bisect(prev, x);
      if (in)
        start = edge;
      else
        out.emplace_back(start, edge);
      inside = in;
    }
    prev = x;
  }
  return out;
}

}  // namespace

TEST(Harper, MatrixIsHermitian) {
  const auto m = build_matrix(3, 7, 0.3, 0.2);
  EXPECT_LT((m.entries - m.entries.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
  const auto e = eigenvalues(m);
  EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
}

TEST(Harper, GaugeReductionPreservesEigenvalues) {
  for (auto [p, q] : std::vector<std::pair<int, int>>{{1, 5}, {2, 7}, {3, 8}}) {
    for (double t2 : {0.0, std::numbers::pi / q}) {
      const auto full = eigenvalues(build_matrix(p, q, 0.4, t2));
      const auto red = eigenvalues(gauge_reduce(p, q, 0.4, t2));
      ASSERT_EQ(full.size(), red.size());
      for (std::size_t i = 0; i < full.size(); ++i) EXPECT_NEAR(full[i], red[i], 1e-12);
    }
  }
}

TEST(Harper, RejectsInvalidFrequency) {
  EXPECT_THROW(band_set(2, 4), Error);
  EXPECT_THROW(band_set(5, 5), Error);
  EXPECT_THROW(band_set(-1, 3), Error);
  EXPECT_THROW(band_set(1, 0), Error);
  EXPECT_NO_THROW(band_set(0, 1));
}

TEST(Harper, ChambersRelationHolds) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi), energy(-4, 4);
  for (int q = 1; q <= 30; ++q)
    for (int p = 0; p < q; ++p) {
      if (gcd64(p, q) != 1) continue;
      const double r = chambers_residual(p, q, angle(rng), angle(rng), energy(rng));
      EXPECT_LT(r, 1e-8 * q) << p << "/" << q;
    }
}

TEST(Harper, ChambersPolynomialMatchesTransferTrace) {
  // f(E) at cos q t = 0 is the theta-independent part of the trace up to sign.
  for (auto [p, q] : std::vector<std::pair<int, int>>{{1, 3}, {2, 5}, {3, 7}}) {
    const ChambersPolynomial f(p, q);
    for (double e : {-3.1, -0.7, 0.2, 2.9}) {
      const long double s = std::numbers::pi_v<long double> / q;
      const double d = static_cast<double>((transfer_trace(p, q, 0, e) + transfer_trace(p, q, s, e)) / 2);
      EXPECT_NEAR(std::abs(f(e)), std::abs(d), 1e-9 * std::max(1.0, std::abs(d)));
    }
  }
}

TEST(Harper, TrivialFrequencyIsOneBand) {
  const auto bs = band_set(0, 1);
  ASSERT_EQ(bs.bands.size(), 1u);
  EXPECT_NEAR(bs.bands[0].lower, -4, 1e-12);
  EXPECT_NEAR(bs.bands[0].upper, 4, 1e-12);
  EXPECT_NEAR(total_measure(bs), 8, 1e-12);
}

TEST(Harper, HalfFrequencyBands) {
  // q = 2: E^2 = 4 cos^2 t1 + 4 cos^2 t2.
  const auto bs = band_set(1, 2);
  ASSERT_EQ(bs.bands.size(), 2u);
  EXPECT_NEAR(bs.bands[0].lower, -2 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(bs.bands[0].upper, 0, 1e-12);
  EXPECT_NEAR(bs.bands[1].lower, 0, 1e-12);
  EXPECT_NEAR(bs.bands[1].upper, 2 * std::sqrt(2.0), 1e-12);
}

TEST(Harper, ThirdFrequencyBands) {
  const double r3 = std::sqrt(3.0);
  const auto bs = band_set(1, 3);
  ASSERT_EQ(bs.bands.size(), 3u);
  EXPECT_NEAR(bs.bands[0].lower, -1 - r3, 1e-12);
  EXPECT_NEAR(bs.bands[0].upper, -2, 1e-12);
  EXPECT_NEAR(bs.bands[1].lower, 1 - r3, 1e-12);
  EXPECT_NEAR(bs.bands[1].upper, r3 - 1, 1e-12);
  EXPECT_NEAR(bs.bands[2].lower, 2, 1e-12);
  EXPECT_NEAR(bs.bands[2].upper, 1 + r3, 1e-12);
}

TEST(Harper, OddDenominatorBandsMatchTransferMatrixOracle) {
  for (int q : {3, 5, 7, 9, 11})
    for (int p = 1; p < q; ++p) {
      if (gcd64(p, q) != 1) continue;
      const auto bs = band_set(p, q);
      const auto oracle = oracle_spectrum(p, q);
      ASSERT_EQ(oracle.size(), static_cast<std::size_t>(q)) << p << "/" << q;
      for (int l = 0; l < q; ++l) {
        EXPECT_NEAR(bs.bands[l].lower, oracle[l].first, 1e-10) << p << "/" << q << " band " << l + 1;
        EXPECT_NEAR(bs.bands[l].upper, oracle[l].second, 1e-10) << p << "/" << q << " band " << l + 1;
      }
    }
}

TEST(Harper, EvenDenominatorCentralBandsTouch) {
  for (int q : {2, 4, 6, 8, 10, 20, 40}) {
    const int p = 1;
    const auto bs = band_set(p, q);
    const auto t = touching_bands(bs, 1e-9);
    EXPECT_EQ(t, std::vector<int>{q / 2}) << q;
    EXPECT_NEAR(bs.bands[q / 2 - 1].upper, 0, 1e-9);
    // the oracle sees the two central bands as one interval
    if (q <= 10) EXPECT_EQ(oracle_spectrum(p, q).size(), static_cast<std::size_t>(q - 1));
  }
  for (int q : {3, 5, 21, 41}) EXPECT_TRUE(touching_bands(band_set(1, q), 1e-9).empty()) << q;
}

TEST(Harper, BandEdgesAreChambersLevelCrossings) {
  for (auto [p, q] : std::vector<std::pair<int, int>>{{1, 4}, {2, 5}, {3, 8}, {4, 9}}) {
    const ChambersPolynomial f(p, q);
    for (const auto& b : band_set(p, q).bands)
      for (double e : {b.lower, b.upper}) EXPECT_NEAR(std::abs(f(e)), 4.0, 1e-7);
  }
}

TEST(Harper, SpectrumIsSymmetricAndInvariantUnderReflection) {
  for (int q = 2; q <= 40; ++q)
    for (int p = 1; p < q; ++p) {
      if (gcd64(p, q) != 1) continue;
      const auto a = band_set(p, q), b = band_set(q - p, q);
      for (int l = 0; l < q; ++l) {
        EXPECT_NEAR(a.bands[l].lower, -a.bands[q - 1 - l].upper, 1e-10);
        EXPECT_NEAR(a.bands[l].lower, b.bands[l].lower, 1e-10);
        EXPECT_NEAR(a.bands[l].upper, b.bands[l].upper, 1e-10);
      }
    }
}

TEST(Harper, BandsAreOrderedAndDisjoint) {
  const auto bs = band_set(13, 34);
  for (std::size_t l = 0; l < bs.bands.size(); ++l) {
    EXPECT_EQ(bs.bands[l].index, static_cast<int>(l + 1));
    EXPECT_LE(bs.bands[l].lower, bs.bands[l].upper);
    if (l + 1 < bs.bands.size()) EXPECT_LE(bs.bands[l].upper, bs.bands[l + 1].lower + 1e-9);
  }
  EXPECT_GT(total_measure(bs), 0);
  EXPECT_LT(total_measure(bs), 8);
}

TEST(Harper, OffCriticalCouplingIsFlaggedApproximate) {
  const auto bs = band_set(1, 3, 0.5);
  EXPECT_TRUE(bs.approximate);
  EXPECT_FALSE(band_set(1, 3).approximate);
  // lambda = 0 at any p/q is the free Laplacian [-2, 2]
  const auto free = band_set(1, 3, 0.0);
  EXPECT_NEAR(free.bands.front().lower, -2, 1e-9);
  EXPECT_NEAR(free.bands.back().upper, 2, 1e-9);
}

TEST(Harper, CoprimePairsAndButterfly) {
  const auto pairs = coprime_pairs(5);
  EXPECT_EQ(pairs.size(), 10u);  // 1 + 1 + 2 + 2 + 4
  const auto one = butterfly(12, 1.0, 1), many = butterfly(12, 1.0, 4);
  ASSERT_EQ(one.size(), many.size());
  for (std::size_t i = 0; i < one.size(); ++i)
    for (std::size_t l = 0; l < one[i].bands.size(); ++l) {
      EXPECT_EQ(one[i].bands[l].lower, many[i].bands[l].lower);
      EXPECT_EQ(one[i].bands[l].upper, many[i].bands[l].upper);
    }
  EXPECT_THROW(butterfly(0), Error);
}
