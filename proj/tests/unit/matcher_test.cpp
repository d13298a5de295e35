#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "cte/errors.hpp"
#include "cte/matcher.hpp"
#include "oracles.hpp"

using cte::Pruning;

namespace {

cte::DescriptorSequence seq1(std::vector<float> v) {
  return cte::DescriptorSequence("s", 15.0f, 1, std::move(v));
}

std::vector<std::vector<double>> frames_padded(const cte::DescriptorSequence& s,
                                               std::size_t length) {
  return oracle::frames_repeated(s, length, length);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(ScoreDirect, UnitImpulseCorrelation) {
  const auto sv = cte::score_direct(seq1({1, 0, 0, 0}), seq1({0, 1, 0, 0}), 4);
  EXPECT_EQ(sv.values, (std::vector<double>{0, 0, 0, 1}));
  EXPECT_EQ(sv.stride, 1u);
  const auto peak = cte::find_peak(sv);
  EXPECT_EQ(peak.delta, -1);
}

TEST(ScoreDirect, ZeroShiftSelfCorrelation) {
  std::mt19937_64 rng(1);
  const auto q = oracle::random_sequence(rng, 13, 4);
  double energy = 0.0;
  for (float v : q.data()) energy += double(v) * v;
  EXPECT_NEAR(cte::score_direct(q, q, 16).values[0], energy, 1e-9);
}

TEST(ScoreDirect, MatchesIndependentCorrelation) {
  std::mt19937_64 rng(2);
  const auto q = oracle::random_sequence(rng, 5, 3);
  const auto b = oracle::random_sequence(rng, 7, 3);
  const auto sv = cte::score_direct(q, b, 8);
  EXPECT_LT(max_abs_diff(sv.values, oracle::circular_correlation(frames_padded(q, 8),
                                                                   frames_padded(b, 8))),
            1e-9);
  EXPECT_THROW(cte::score_direct(q, b, 6), cte::ValidationError);
  EXPECT_THROW(cte::score_direct(q, b, 4), cte::ValidationError);
}

TEST(ScoreDirect, EqualsIndexReversedInverseOfCrossSpectrum) {
  // The inverse DFT of sum_j conj(Q_j) B_j is the correlation at -delta.
  std::mt19937_64 rng(3);
  const auto q = oracle::random_sequence(rng, 8, 4);
  const auto b = oracle::random_sequence(rng, 8, 4);
  std::vector<oracle::cd> cross(8, 0.0);
  for (std::size_t j = 0; j < 4; ++j) {
    const auto Q = oracle::naive_dft(oracle::dimension_row(q, j, 8));
    const auto B = oracle::naive_dft(oracle::dimension_row(b, j, 8));
    for (std::size_t k = 0; k < 8; ++k) cross[k] += std::conj(Q[k]) * B[k];
  }
  const auto inv = oracle::naive_dft(cross, true);
  const auto sv = cte::score_direct(q, b, 8);
  for (std::size_t d = 0; d < 8; ++d) {
    EXPECT_NEAR(sv.values[d], inv[(8 - d) % 8].real(), 1e-9);
    EXPECT_NEAR(inv[d].imag(), 0.0, 1e-9);
  }
}

TEST(Score, UnregularizedFullModeEqualsDirect) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 1 + rng() % 8;
    const auto q = oracle::random_sequence(rng, 1 + rng() % 64, d);
    const auto b = oracle::random_sequence(rng, 1 + rng() % 64, d);
    const std::size_t N = cte::next_power_of_two(std::max(q.size(), b.size()));
    const auto qs = cte::encode_padded(q, N, Pruning::full(), false);
    const auto bs = cte::encode_padded(b, N, Pruning::full(), false);
    const auto sv = cte::score(qs, bs, 0.0, false);
    ASSERT_EQ(sv.values.size(), N);
    EXPECT_LT(max_abs_diff(sv.values, cte::score_direct(q, b, N).values), 1e-5);
  }
}

TEST(Score, DiracSelfMatch) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto q = oracle::random_sequence(rng, 2 + rng() % 100, 1 + rng() % 16);
    const auto s = cte::encode(q, Pruning::full(), false);
    const auto sv = cte::score(s, s, 0.0, true);
    EXPECT_NEAR(sv.values[0], 1.0, 1e-5);
    for (std::size_t i = 1; i < sv.values.size(); ++i) EXPECT_NEAR(sv.values[i], 0.0, 1e-5);
  }
}

TEST(Score, ZeroDenominatorNamesFrequency) {
  // Constant signal: no energy at frequency 1.
  const auto s = cte::encode(seq1({0.5f, 0.5f, 0.5f, 0.5f}), Pruning::full(), false);
  try {
    cte::score(s, s, 0.0, true);
    FAIL() << "expected DivisionByZeroError";
  } catch (const cte::DivisionByZeroError& e) {
    EXPECT_EQ(e.frequency(), 1u);
  }
  EXPECT_NO_THROW(cte::score(s, s, 0.1, true));
}

TEST(Score, MismatchedGeometryThrows) {
  std::mt19937_64 rng(6);
  const auto q = cte::encode(oracle::random_sequence(rng, 16, 2), Pruning::full(), false);
  const auto b = cte::encode(oracle::random_sequence(rng, 32, 2), Pruning::full(), false);
  const auto p = cte::encode(oracle::random_sequence(rng, 16, 2), Pruning::fraction(4), false);
  const auto e = cte::encode(oracle::random_sequence(rng, 16, 3), Pruning::full(), false);
  EXPECT_THROW(cte::score(q, b, 0.1, true), cte::ValidationError);
  EXPECT_THROW(cte::score(q, p, 0.1, true), cte::ValidationError);
  EXPECT_THROW(cte::score(q, e, 0.1, true), cte::ValidationError);
  EXPECT_THROW(cte::score(q, q, -1.0, true), cte::ValidationError);
}

TEST(Score, PrunedStride) {
  std::mt19937_64 rng(7);
  const auto q = cte::encode(oracle::random_sequence(rng, 64, 2), Pruning::fraction(4), false);
  const auto sv = cte::score(q, q, 0.1, true);
  EXPECT_EQ(sv.values.size(), 32u);
  EXPECT_EQ(sv.stride, 2u);
  EXPECT_EQ(sv.padded, 64u);
  const auto sv8 = cte::score(cte::encode(oracle::random_sequence(rng, 64, 2),
                                           Pruning::fraction(8), false),
                              cte::encode(oracle::random_sequence(rng, 64, 2),
                                          Pruning::fraction(8), false),
                              0.1, true);
  EXPECT_EQ(sv8.stride, 4u);
}

TEST(Score, PrunedEqualsLowPassOfDirect) {
  // Pruned scores are the direct correlation low-passed to the kept band
  // and sampled every stride frames.
  std::mt19937_64 rng(8);
  const auto q = oracle::random_sequence(rng, 60, 3);
  const auto b = oracle::random_sequence(rng, 50, 3);
  const auto qs = cte::encode(q, Pruning::fraction(4), false);
  const auto bs = cte::encode(b, Pruning::fraction(4), false);
  const auto sv = cte::score(qs, bs, 0.0, false);
  const auto direct = cte::score_direct(q, b, 64).values;
  std::vector<oracle::cd> c(direct.begin(), direct.end());
  auto C = oracle::naive_dft(c);
  for (std::size_t k = 16; k <= 48; ++k) C[k] = 0.0;
  const auto low = oracle::naive_dft(C, true);
  for (std::size_t i = 0; i < sv.values.size(); ++i) {
    EXPECT_NEAR(sv.values[i], low[i * sv.stride].real() * double(sv.stride), 1e-6);
  }
}

TEST(Score, PrunedAndFullPeaksAgreeOnSmoothSequences) {
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto master = cte::smooth_random_sequence("m", 256, 32, 0.8, 15.0f, 1000 + trial);
    const std::size_t shift = 10 + static_cast<std::size_t>(trial) % 50;
    const auto q = cte::noisy_excerpt(master, 0, 128, 0.1, 2 * trial, "q");
    const auto b = cte::noisy_excerpt(master, shift, 128, 0.1, 2 * trial + 1, "b");
    const auto full = cte::find_peak(cte::score(cte::encode(q, Pruning::full(), false),
                                                cte::encode(b, Pruning::full(), false), 0.1,
                                                true));
    const auto pr = cte::find_peak(cte::score(cte::encode(q, Pruning::fraction(4), false),
                                              cte::encode(b, Pruning::fraction(4), false),
                                              0.1, true));
    if (std::llabs(full.delta - pr.delta) <= 2) ++agree;
  }
  EXPECT_GE(agree, 95);
}

TEST(Score, ShiftCovariance) {
  std::mt19937_64 rng(9);
  for (std::size_t k : {0u, 1u, 5u, 17u, 31u}) {
    const auto q = oracle::random_sequence(rng, 32, 4);
    std::vector<float> v(32 * 4);
    for (std::size_t t = 0; t < 32; ++t) {
      for (std::size_t j = 0; j < 4; ++j) v[((t + k) % 32) * 4 + j] = q.at(t, j);
    }
    const cte::DescriptorSequence b("b", 15.0f, 4, v);
    // b_t = q_{t-k}: b's frame 0 lines up with q's frame -k.
    const auto peak = cte::find_peak(cte::score(cte::encode(q, Pruning::full(), false),
                                                cte::encode(b, Pruning::full(), false), 0.0,
                                                false));
    EXPECT_EQ(((peak.delta + static_cast<std::int64_t>(k)) % 32 + 32) % 32, 0) << k;
  }
}

TEST(Score, LambdaMonotoneAtSelfMatch) {
  std::mt19937_64 rng(10);
  const auto s = cte::encode(oracle::random_sequence(rng, 40, 6), Pruning::full(), false);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.001, 0.01, 0.1, 1.0, 10.0}) {
    const double v = cte::score(s, s, lambda, true).values[0];
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(FindPeak, Examples) {
  cte::ScoreVector sv{{0.1, 0.9, 0.2, 0.0}, 1, 4};
  auto p = cte::find_peak(sv);
  EXPECT_EQ(p.delta, 1);
  EXPECT_DOUBLE_EQ(p.score, 0.9);

  cte::ScoreVector strided{std::vector<double>(8, 0.0), 4, 32};
  strided.values[3] = 1.0;
  EXPECT_EQ(cte::find_peak(strided).delta, 12);

  cte::ScoreVector wrap{std::vector<double>(16, 0.0), 1, 16};
  wrap.values[15] = 2.0;
  EXPECT_EQ(cte::find_peak(wrap).delta, -1);
  wrap.values[8] = 3.0;  // N/2 stays positive
  EXPECT_EQ(cte::find_peak(wrap).delta, 8);

  cte::ScoreVector ties{{0.5, 1.0, 1.0}, 1, 4};
  EXPECT_EQ(cte::find_peak(ties).delta, 1);
  EXPECT_THROW(cte::find_peak(cte::ScoreVector{}), cte::ValidationError);
}

TEST(FindPeak, InvariantUnderPositiveScaling) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    cte::ScoreVector sv{std::vector<double>(32), 1 + rng() % 4, 0};
    sv.padded = 32 * sv.stride;
    for (auto& v : sv.values) v = g(rng);
    auto scaled = sv;
    const double c = std::exp(g(rng));
    for (auto& v : scaled.values) v *= c;
    EXPECT_EQ(cte::find_peak(sv).delta, cte::find_peak(scaled).delta);
  }
}

TEST(Refine, IdenticalUnitFrames) {
  std::vector<float> v(10 * 2);
  for (std::size_t t = 0; t < 10; ++t) v[t * 2] = 1.0f;
  const cte::DescriptorSequence q("q", 15.0f, 2, v);
  const auto r = cte::refine_boundaries(q, q, 0);
  EXPECT_EQ(r.t_start, 0);
  EXPECT_EQ(r.t_end, 9);
  EXPECT_DOUBLE_EQ(r.refined_score, 10.0);
  EXPECT_EQ(r.delta, 0);
}

TEST(Refine, HalfPeakRun) {
  const auto q = seq1({0, 0, 1, 1, 1, 0});
  const auto b = seq1({1, 1, 1, 1, 1, 1});
  const auto r = cte::refine_boundaries(q, b, 0);
  EXPECT_EQ(r.t_start, 2);
  EXPECT_EQ(r.t_end, 4);
  EXPECT_DOUBLE_EQ(r.refined_score, 3.0);
}

TEST(Refine, NoOverlap) {
  const auto q = seq1({1, 1, 1});
  EXPECT_THROW(cte::refine_boundaries(q, q, 5), cte::NoOverlapError);
  EXPECT_THROW(cte::refine_boundaries(q, q, -3), cte::NoOverlapError);
  EXPECT_NO_THROW(cte::refine_boundaries(q, q, 2));
}

TEST(Refine, PlantedOverlapBoundaries) {
  // q covers master frames [0, 50), b covers [20, 120): overlap is q's 20..49.
  const auto master = cte::smooth_random_sequence("m", 200, 32, 0.0, 15.0f, 3);
  const auto q = cte::noisy_excerpt(master, 0, 50, 0.0, 1, "q");
  const auto b = cte::noisy_excerpt(master, 20, 100, 0.0, 2, "b");
  const auto r = cte::refine_boundaries(q, b, 20);
  EXPECT_EQ(r.delta, 20);
  EXPECT_NEAR(r.t_start, 20, 1);
  EXPECT_NEAR(r.t_end, 49, 1);
}

TEST(Refine, ResolvesPeriodAmbiguityAndStride) {
  const auto master = cte::smooth_random_sequence("m", 400, 16, 0.5, 15.0f, 4);
  const auto q = cte::noisy_excerpt(master, 0, 300, 0.05, 1, "q");
  const auto b = cte::noisy_excerpt(master, 170, 60, 0.05, 2, "b");
  // b padded to 64; a coarse estimate off by one period and one frame.
  const auto r = cte::refine_boundaries(q, b, 170 - 64 + 1, 64, 2);
  EXPECT_EQ(r.delta, 170);
  EXPECT_NEAR(r.t_start, 170, 1);
  EXPECT_NEAR(r.t_end, 229, 1);
}

TEST(MatchJson, RoundTripWithAndWithoutRefinement) {
  cte::MatchCandidate m{"q", "b", -7, 0.25, std::nullopt};
  auto j = cte::to_json(m);
  EXPECT_EQ(j["delta_frames"], -7);
  EXPECT_TRUE(j["t_start"].is_null());
  auto back = cte::match_from_json(j);
  EXPECT_EQ(back.delta, -7);
  EXPECT_FALSE(back.refined);
  m.refined = cte::Refinement{-7, 0, 12, 9.5};
  back = cte::match_from_json(cte::to_json(m));
  ASSERT_TRUE(back.refined);
  EXPECT_EQ(back.refined->t_end, 12);
  EXPECT_DOUBLE_EQ(back.refined->refined_score, 9.5);
}
