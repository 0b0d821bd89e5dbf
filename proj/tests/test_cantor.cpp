#include "harperdim/cantor.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace harperdim;
using namespace harperdim::cantor;

namespace {

const ContinuedFraction kA50 = ContinuedFraction::constant(50);
const ContinuedFraction kA125 = ContinuedFraction::constant(125);

Coord random_radius(const CantorPoint& p, detail::SplitMix64& rng) {
  const Coord lo = p.path.back().length(), hi = p.path[1].length();
  return lo * boost::multiprecision::pow(hi / lo, Coord(rng.uniform()));
}

}  // namespace

TEST(Constants, DefaultsAndThreshold) {
  const HSConstants k;
  EXPECT_NO_THROW(k.validate());
  const double t = tilde_c(k);
  EXPECT_GT(t, 1 / k.d1);
  EXPECT_NEAR(k.c1 * std::exp(k.d1 * t) / t, 2.0, 1e-6);
  EXPECT_DOUBLE_EQ(quotient_threshold(k), std::max(k.C1, t));
}

TEST(Constants, ParseAndRoundTrip) {
  const auto k = parse_constants("# comment\n[hs]\nC1 = 60 ; trailing\nb1=0.05\nm = 1\n");
  EXPECT_EQ(k.C1, 60);
  EXPECT_EQ(k.b1, 0.05);
  EXPECT_EQ(k.m, 1u);
  EXPECT_EQ(k.d2, HSConstants{}.d2);
  const auto back = parse_constants(to_config(k));
  EXPECT_EQ(back.C1, k.C1);
  EXPECT_EQ(back.b1, k.b1);
  EXPECT_EQ(back.m, k.m);
  EXPECT_THROW(parse_constants("c1 = 0.5\nfoo = 1\n"), Error);
  EXPECT_THROW(parse_constants("C1 = x\n"), Error);
  EXPECT_THROW(parse_constants("c1 = 3\n"), Error);   // gap budget exceeds 1
  EXPECT_THROW(parse_constants("b1 = 0.3\n"), Error);  // b1 >= b2
  EXPECT_THROW(parse_constants("m = 1.5\n"), Error);
  EXPECT_THROW(load_constants("/nonexistent/hs.ini"), Error);
}

TEST(Tree, WordsRoundTrip) {
  const Word w{1, 3, -2};
  EXPECT_EQ(parse_word(to_string(w)), w);
  EXPECT_THROW(parse_word(""), Error);
}

TEST(Tree, DepthZeroTree) {
  const auto t = build_tree(kA50, HSConstants{}, 0, 1);
  EXPECT_TRUE(t.has_node({1}));
  EXPECT_TRUE(t.children({1}).empty());
  EXPECT_TRUE(validate_tree(t).all_pass());
}

TEST(Tree, InfeasibleConstantsAreRejected) {
  HSConstants k;
  k.c1 = 3;
  EXPECT_THROW(build_tree(kA50, k, 1, 1), Error);
}

TEST(Tree, OutOfClassFrequencyIsRejected) {
  EXPECT_THROW(build_tree(ContinuedFraction::golden(), HSConstants{}, 1, 1), Error);
  EXPECT_THROW(build_tree(ContinuedFraction({50, 50}), HSConstants{}, 3, 1), Error);
}

TEST(Tree, GeneratedTreeSatisfiesConstraints) {
  const auto t = build_tree(kA50, HSConstants{}, 2, 7);
  const auto rep = validate_tree(t);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
  EXPECT_FALSE(rep.truncated);
  EXPECT_GT(rep.nodes_visited, 10u);
}

TEST(Tree, GenerationIsDeterministic) {
  const auto a = build_tree(kA50, HSConstants{}, 2, 9).materialize();
  const auto b = build_tree(kA50, HSConstants{}, 2, 9).materialize();
  const auto c = build_tree(kA50, HSConstants{}, 2, 10).materialize();
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [w, s] : a) {
    EXPECT_EQ(s.lo, b.at(w).lo);
    EXPECT_EQ(s.hi, b.at(w).hi);
  }
  bool differs = a.size() != c.size();
  for (const auto& [w, s] : a)
    if (!differs && (!c.count(w) || c.at(w).lo != s.lo)) differs = true;
  EXPECT_TRUE(differs);
}

TEST(Tree, LengthFaultIsDetected) {
  auto t = build_tree(kA50, HSConstants{}, 1, 3).to_explicit();
  const Segment root = t.segment({1});
  Segment s = t.segment({1, 1});
  s.hi = s.lo + root.length() * Coord(std::exp(-HSConstants{}.d1 * 50) * 1.5);
  t.set_segment({1, 1}, s);
  const auto rep = validate_tree(t);
  EXPECT_FALSE(rep.get("lengths").pass);
  ASSERT_TRUE(rep.get("lengths").witness);
  EXPECT_EQ(*rep.get("lengths").witness, (Word{1, 1}));
}

TEST(Tree, GapFaultIsDetected) {
  auto t = build_tree(kA50, HSConstants{}, 1, 3).to_explicit();
  const Segment left = t.segment({1, 1});
  Segment s = t.segment({1, 2});
  const Coord len = s.length();
  s.lo = left.hi + left.length() * Coord(1e-6);
  s.hi = s.lo + len;
  t.set_segment({1, 2}, s);
  EXPECT_FALSE(validate_tree(t).get("gaps").pass);
  auto gen = build_tree(kA50, HSConstants{}, 1, 3);
  EXPECT_THROW(gen.set_segment({1, 1}, s), Error);
}

TEST(Tree, ProfileChecks) {
  const auto t = build_tree(kA50, HSConstants{}, 2, 7);
  const auto rep = validate_profile(t, t.h(), 100, {10});
  EXPECT_TRUE(rep.get("gap-upper").pass) << rep.get("gap-upper").detail;
  const auto zero = validate_profile(t, 0.0, 100);
  EXPECT_TRUE(zero.get("edge-shift").skipped);
  EXPECT_TRUE(zero.get("root-gaps").skipped);
  EXPECT_TRUE(zero.get("length-profile").pass);

  // K = 1 demands scaled gaps below 1 / sqrt(a), which evenly spread children violate
  EXPECT_FALSE(validate_profile(t, t.h(), 100, {1}).get("gap-upper").pass);
}

TEST(Measure, CantorWordCounts) {
  const MassMeasure mm({2, 3});
  EXPECT_EQ(cantor_words(mm, 2).size(), 6u);
  const auto root = cantor_words(mm, 0);
  ASSERT_EQ(root.size(), 1u);
  EXPECT_EQ(to_string(root[0]), "1");
  EXPECT_THROW(cantor_words(mm, 3), Error);
  EXPECT_THROW(MassMeasure({2, 0}), Error);

  const auto t = build_tree(kA50, HSConstants{}, 1, 1);
  EXPECT_EQ(MassMeasure::from_tree(t).kappa(1), 5);
  EXPECT_EQ(cantor_words(t, 1).size(), 5u);
}

TEST(Measure, ExactAdditivity) {
  const MassMeasure mm({3, 5, 2, 4});
  for (std::size_t n = 0; n < 4; ++n)
    for (const auto& w : cantor_words(mm, n)) {
      BigRational sum = 0;
      for (std::int64_t j = 1; j <= mm.kappa(n + 1); ++j) {
        Word c = w;
        c.push_back(mm.letter(j));
        sum += mm.measure(c);
      }
      EXPECT_EQ(sum, mm.measure(w));
    }
  EXPECT_EQ(mm.measure({1}), 1);
  EXPECT_EQ(mm.measure({1, 1, 0}), 0);
  EXPECT_EQ(mm.measure({1, 4}), 0);
  EXPECT_EQ(mm.measure({2}), 0);
  const MassMeasure left({3}, Side::Left);
  EXPECT_EQ(left.measure({1, -2}), BigRational(1, 3));
  EXPECT_EQ(left.measure({1, 2}), 0);
}

TEST(Measure, BallMeasure) {
  const auto t = build_tree(kA125, HSConstants{}, 2, 4);
  const auto mm = MassMeasure::from_tree(t);
  const Segment root = t.segment({1});
  EXPECT_EQ(measure_of_ball(t, mm, root.mid(), root.length()), 1);
  EXPECT_EQ(measure_of_ball(t, mm, root.hi + root.length(), root.length() / 4), 0);
  EXPECT_THROW(measure_of_ball(t, mm, root.mid(), Coord(0)), Error);

  // mu(J_n) <= mu(B(x, |J_n|)) <= mu(J_{n-1}) for x in J_n
  detail::SplitMix64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto p = sample_point(t, mm, rng);
    for (std::size_t n = 1; n < p.path.size(); ++n) {
      const BigRational m = measure_of_ball(t, mm, p.x, p.path[n].length());
      const Word wn(p.coding.begin(), p.coding.begin() + static_cast<std::ptrdiff_t>(n + 1));
      const Word wp(p.coding.begin(), p.coding.begin() + static_cast<std::ptrdiff_t>(n));
      EXPECT_GE(m, mm.measure(wn));
      EXPECT_LE(m, mm.measure(wp));
    }
  }
}

TEST(Measure, BandLengthsDecayGeometrically) {
  const HSConstants k;
  const auto t = build_tree(kA125, k, 2, 5);
  const Coord root = t.segment({1}).length();
  for (std::size_t n = 1; n <= 2; ++n)
    for (const auto& w : cantor_words(t, n)) {
      const Coord bound = root * boost::multiprecision::exp(Coord(-k.d1 * k.C1 * static_cast<double>(n)));
      EXPECT_LE(t.segment(w).length(), bound) << to_string(w);
    }
}

TEST(Measure, PointsLieInTheirBands) {
  const auto t = build_tree(kA125, HSConstants{}, 3, 5);
  const auto mm = MassMeasure::from_tree(t);
  detail::SplitMix64 rng(8);
  for (int i = 0; i < 10; ++i) {
    const auto p = sample_point(t, mm, rng);
    ASSERT_EQ(p.path.size(), 4u);
    for (std::size_t n = 0; n < p.path.size(); ++n) {
      EXPECT_TRUE(p.path[n].lo <= p.x && p.x <= p.path[n].hi);
      if (n > 0) EXPECT_TRUE(p.path[n - 1].contains(p.path[n]));
    }
  }
  EXPECT_THROW(cantor_point(t, mm, {1, 0}), Error);
}

TEST(Claim, HoldsUnderHypotheses) {
  const auto t = build_tree(kA125, HSConstants{}, 3, 11);
  const auto mm = MassMeasure::from_tree(t);
  EXPECT_TRUE(claim_hypothesis(t, mm));
  detail::SplitMix64 rng(3);
  int resolved = 0;
  for (int i = 0; i < 200; ++i) {
    const auto p = sample_point(t, mm, rng);
    const auto c = claim_check(t, mm, p, random_radius(p, rng));
    if (!c.n_r || *c.n_r == 0) continue;
    ++resolved;
    EXPECT_TRUE(c.holds) << "intersecting " << c.intersecting;
    EXPECT_TRUE(c.flags.empty());
  }
  EXPECT_GT(resolved, 150);
}

TEST(Claim, CounterexampleBelowThreshold) {
  HSConstants k;
  k.C1 = 10;
  LayoutOptions lay;
  lay.packed = true;
  const auto t = build_tree(ContinuedFraction::constant(20), k, 3, 5, lay);
  EXPECT_TRUE(validate_tree(t).all_pass());
  const auto mm = MassMeasure::from_tree(t);
  EXPECT_FALSE(claim_hypothesis(t, mm));
  detail::SplitMix64 rng(3);
  int failures = 0;
  for (int i = 0; i < 300; ++i) {
    const auto p = sample_point(t, mm, rng);
    const auto c = claim_check(t, mm, p, random_radius(p, rng));
    if (!c.n_r) continue;
    EXPECT_FALSE(c.hypothesis_ok);
    EXPECT_EQ(c.flags.front(), "hypothesis violated");
    failures += !c.holds && *c.n_r > 0;
  }
  EXPECT_GT(failures, 0);
}

TEST(Claim, OversizedRadiusIsFlagged) {
  const auto t = build_tree(kA125, HSConstants{}, 2, 11);
  const auto mm = MassMeasure::from_tree(t);
  detail::SplitMix64 rng(1);
  const auto p = sample_point(t, mm, rng);
  const auto big = claim_check(t, mm, p, t.segment({1}).length() * 4);
  EXPECT_EQ(big.n_r, std::optional<std::size_t>(0));
  EXPECT_FALSE(big.holds);
  const auto tiny = claim_check(t, mm, p, p.path.back().length() / 8);
  EXPECT_FALSE(tiny.n_r);
}

TEST(Gaps, OrdersOfAdjacentGaps) {
  const auto t = build_tree(kA125, HSConstants{}, 3, 2);
  const auto mm = MassMeasure::from_tree(t);
  const auto g1 = adjacent_gaps(t, mm, {1, 1});
  EXPECT_FALSE(g1.left);
  ASSERT_TRUE(g1.right);
  EXPECT_EQ(gap_order(t, mm, *g1.right), 0u);
  const auto g2 = adjacent_gaps(t, mm, {1, 2, 1});
  ASSERT_TRUE(g2.left && g2.right);
  EXPECT_EQ(gap_order(t, mm, *g2.left), 0u);
  EXPECT_EQ(gap_order(t, mm, *g2.right), 1u);
  const auto g3 = adjacent_gaps(t, mm, {1, 2, 3, 2});
  EXPECT_EQ(gap_order(t, mm, *g3.left), 2u);

  const Segment band = t.segment({1, 1, 1});
  EXPECT_THROW(gap_order(t, mm, Segment{band.lo, band.mid()}), Error);
  EXPECT_THROW(gap_order(t, mm, Segment{band.hi, band.lo}), Error);
}

TEST(Gaps, OrderBoundedByWordLength) {
  const auto t = build_tree(kA125, HSConstants{}, 3, 6);
  const auto mm = MassMeasure::from_tree(t);
  detail::SplitMix64 rng(4);
  for (int i = 0; i < 30; ++i) {
    const auto p = sample_point(t, mm, rng);
    const auto g = adjacent_gaps(t, mm, p.coding);
    for (const auto& s : {g.left, g.right})
      if (s) EXPECT_LE(gap_order(t, mm, *s), p.coding.size() - 2);
  }
}

TEST(LocalDim, DepthZeroTreeIsFlagged) {
  const auto t = build_tree(kA125, HSConstants{}, 0, 1);
  const auto mm = MassMeasure::from_tree(t);
  const auto p = cantor_point(t, mm, {1});
  const auto ld = local_dimension(t, mm, p, radius_ladder(p, 0, 4));
  ASSERT_FALSE(ld.flags.empty());
  EXPECT_EQ(ld.flags.front(), "empty ladder");
  EXPECT_TRUE(ld.samples.empty());
}

TEST(LocalDim, LadderQuotients) {
  const auto t = build_tree(kA125, HSConstants{}, 3, 6);
  const auto mm = MassMeasure::from_tree(t);
  detail::SplitMix64 rng(5);
  const auto p = sample_point(t, mm, rng);
  const auto ladder = radius_ladder(p, 1, 3);
  EXPECT_EQ(ladder.size(), 2u * 3 + 1);
  EXPECT_EQ(ladder.back(), p.path.back().length());
  const auto ld = local_dimension(t, mm, p, ladder);
  ASSERT_EQ(ld.samples.size(), ladder.size());
  for (const auto& s : ld.samples) {
    EXPECT_NEAR(s.quotient, s.log_mu / s.log_r, 1e-15);
    EXPECT_LE(ld.running_min, s.quotient);
    EXPECT_GT(s.quotient, 0);
  }
  // at r = |J_D| the ball measure sits between mu(J_D) and mu(J_{D-1})
  const auto& last = ld.samples.back();
  const double lo = -std::log(mm.cylinders(3).convert_to<double>());
  const double hi = -std::log(mm.cylinders(2).convert_to<double>());
  EXPECT_GE(last.log_mu, lo - 1e-12);
  EXPECT_LE(last.log_mu, hi + 1e-12);
}

TEST(Bounds, ClosedForms) {
  const HSConstants k;
  for (double a : {125.0, 500.0, 5000.0}) {
    const FrequencyStats s{64, 0.0, a, a};
    EXPECT_NEAR(cantor_bound_formula(s, k), (std::log(k.b1 / 2) + std::log(a)) / (k.d2 * a), 1e-12);
    EXPECT_NEAR(spectrum_bound_formula(s, 2 * k.d2), std::log(a) / (2 * k.d2 * a), 1e-12);
  }
  HSConstants k2 = k;
  k2.b1 = 2;
  k2.b2 = 3;
  const FrequencyStats s{64, 0.0, 300, 200};
  // b1 = 2 drops the log(b1 / 2) term
  EXPECT_NEAR(cantor_bound_formula(s, k2), std::log(200.0) / (k.d2 * 300), 1e-12);

  const auto c = spectrum_bound_constants(k);
  EXPECT_EQ(c.C, 400);  // (2 / b1)^2 dominates
  EXPECT_EQ(c.C_prime, 2 * k.d2);
}

TEST(Bounds, HypothesesAreEnforced) {
  const HSConstants k;
  EXPECT_NEAR(cantor_bound(kA125, k), (std::log(0.05) + std::log(125.0)) / (0.1 * 125), 1e-12);
  EXPECT_THROW(cantor_bound(kA50, k), Error);
  EXPECT_THROW(spectrum_bound(ContinuedFraction::golden(), spectrum_bound_constants(k)), Error);
  EXPECT_THROW(spectrum_bound(kA125, spectrum_bound_constants(k)), Error);  // 125 < C = 400
  EXPECT_NO_THROW(spectrum_bound(ContinuedFraction::parse("[1,2;500]"), spectrum_bound_constants(k)));
}

TEST(Bounds, SpectrumBoundBelowCantorBound) {
  const HSConstants k;
  for (const char* s : {"[;500]", "[;400,900]"}) {
    const auto b = bound_chain(ContinuedFraction::parse(s), k);
    EXPECT_TRUE(b.b1_below_2);
    EXPECT_TRUE(b.chain_holds) << s << " " << b.spectrum_value << " " << b.cantor_value;
  }
  HSConstants with_prefix = k;
  with_prefix.m = 2;
  EXPECT_TRUE(bound_chain(ContinuedFraction::parse("[2,1;1000,450]"), with_prefix).chain_holds);
}

TEST(Bounds, SelfSimilarConsistency) {
  HSConstants k;
  k.b1 = 0.04;
  k.b2 = 0.08;
  LayoutOptions lay;
  lay.spread = false;
  lay.fixed_ratio = std::exp(-10.0);
  const auto t = build_tree(kA125, k, 4, 1, lay);
  const auto mm = MassMeasure::from_tree(t);
  const auto closed = self_similar_dimension(t, mm);
  ASSERT_TRUE(closed);
  EXPECT_NEAR(*closed, std::log(5.0) / 10.0, 1e-12);
  ConsistencyOptions opt;
  opt.samples = 8;
  const auto rep = dimension_consistency(t, kA125, k, opt);
  EXPECT_EQ(rep.log_r_violations, 0u);
  EXPECT_GT(rep.log_r_checked, 0u);
  EXPECT_TRUE(rep.local_ok);
  EXPECT_TRUE(rep.box_ok);
  EXPECT_NEAR(rep.box_slope, *closed, 0.05 * *closed + 0.01);
  const auto spread = build_tree(kA125, HSConstants{}, 2, 1);
  EXPECT_FALSE(self_similar_dimension(spread, MassMeasure::from_tree(spread)));
}
