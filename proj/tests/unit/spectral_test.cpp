#include <gtest/gtest.h>

#include <random>

#include "cte/errors.hpp"
#include "cte/spectral.hpp"
#include "oracles.hpp"

using cte::Complex;
using cte::Pruning;
using cte::SpectralDescriptor;

namespace {

cte::DescriptorSequence seq1(std::vector<float> v) {
  return cte::DescriptorSequence("s", 15.0f, 1, std::move(v));
}

void expect_coeffs(const SpectralDescriptor& s, const std::vector<Complex>& want,
                   double tol) {
  ASSERT_EQ(s.coeffs.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(s.coeffs[i].real(), want[i].real(), tol) << i;
    EXPECT_NEAR(s.coeffs[i].imag(), want[i].imag(), tol) << i;
  }
}

// Repeats the padded sequence `factor` times (zeros included).
cte::DescriptorSequence repeat_padded(const cte::DescriptorSequence& s, std::size_t factor) {
  const std::size_t N = cte::next_power_of_two(s.size());
  std::vector<float> v(N * factor * s.dim(), 0.0f);
  for (std::size_t r = 0; r < factor; ++r) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      for (std::size_t j = 0; j < s.dim(); ++j) v[((r * N) + t) * s.dim() + j] = s.at(t, j);
    }
  }
  return cte::DescriptorSequence(s.video_id(), s.fps(), s.dim(), std::move(v));
}

}  // namespace

TEST(Pruning, ParseAndKept) {
  EXPECT_TRUE(Pruning::parse("full").is_full());
  EXPECT_EQ(Pruning::parse("1/4").denominator(), 4u);
  EXPECT_EQ(Pruning::parse("1/1024").kept(4096), 4u);
  EXPECT_EQ(Pruning::full().kept(64), 33u);
  EXPECT_EQ(Pruning::fraction(4).kept(64), 16u);
  EXPECT_THROW(Pruning::parse("1/2"), cte::ValidationError);
  EXPECT_THROW(Pruning::parse("1/3"), cte::ValidationError);
  EXPECT_THROW(Pruning::parse("0.25"), cte::ValidationError);
  EXPECT_THROW(Pruning::fraction(4).kept(2), cte::ValidationError);
  EXPECT_EQ(Pruning::fraction(8).to_string(), "1/8");
}

TEST(Encode, ImpulseHalfSpectrum) {
  const auto s = cte::encode(seq1({1, 0, 0, 0}), Pruning::full(), false);
  EXPECT_EQ(s.padded, 4u);
  EXPECT_EQ(s.n_kept, 3u);
  expect_coeffs(s, {1, 1, 1}, 1e-12);
}

TEST(Encode, PadsToPowerOfTwo) {
  const auto s = cte::encode(seq1({0.5f, 1.0f, 1.5f}), Pruning::full(), false);
  EXPECT_EQ(s.n, 3u);
  EXPECT_EQ(s.padded, 4u);
  const auto want = oracle::naive_dft({0.5, 1.0, 1.5, 0});
  expect_coeffs(s, {want[0], want[1], want[2]}, 1e-6);
  expect_coeffs(s, {3, {-1, -1}, 1}, 1e-6);
}

TEST(Encode, PrunedIsPrefixOfFull) {
  std::mt19937_64 rng(1);
  const auto seq = oracle::random_sequence(rng, 64, 3);
  const auto full = cte::encode(seq, Pruning::full(), false);
  const auto pruned = cte::encode(seq, Pruning::fraction(4), false);
  EXPECT_EQ(pruned.n_kept, 16u);
  EXPECT_EQ(pruned.mode, cte::SpectrumMode::kPruned);
  for (std::size_t i = 0; i < 16 * 3; ++i) EXPECT_EQ(pruned.coeffs[i], full.coeffs[i]);
}

TEST(Encode, MatchesDirectDftPerDimension) {
  std::mt19937_64 rng(2);
  const auto seq = oracle::random_sequence(rng, 27, 5);
  const auto full = cte::encode(seq, Pruning::full(), false);
  ASSERT_EQ(full.padded, 32u);
  for (std::size_t j = 0; j < 5; ++j) {
    const auto want = oracle::naive_dft(oracle::dimension_row(seq, j, 32));
    for (std::size_t k = 0; k < full.n_kept; ++k) {
      EXPECT_NEAR(std::abs(full.column(k)[j] - want[k]), 0.0, 1e-9);
    }
  }
}

TEST(Encode, DcAndNyquistAreReal) {
  std::mt19937_64 rng(3);
  const auto full = cte::encode(oracle::random_sequence(rng, 16, 4), Pruning::full(), false);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(full.column(0)[j].imag(), 0.0);
    EXPECT_EQ(full.column(8)[j].imag(), 0.0);
  }
}

TEST(Encode, ParsevalFullMode) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto seq = oracle::random_sequence(rng, 1 + rng() % 200, 1 + rng() % 8);
    const auto s = cte::encode(seq, Pruning::full(), false);
    const std::size_t N = s.padded;
    for (std::size_t j = 0; j < s.dim; ++j) {
      double time = 0.0;
      for (std::size_t t = 0; t < seq.size(); ++t) time += double(seq.at(t, j)) * seq.at(t, j);
      double freq = std::norm(s.column(0)[j]) + std::norm(s.column(N / 2)[j]);
      for (std::size_t k = 1; k < N / 2; ++k) freq += 2.0 * std::norm(s.column(k)[j]);
      if (N == 1) freq = std::norm(s.column(0)[j]);
      EXPECT_NEAR(freq / double(N), time, 1e-5 * std::max(time, 1e-12));
    }
  }
}

TEST(Encode, NormalizationKeepsNorms) {
  std::mt19937_64 rng(5);
  const auto seq = oracle::random_sequence(rng, 32, 6);
  const auto raw = cte::encode(seq, Pruning::fraction(4), false);
  const auto norm = cte::encode(seq, Pruning::fraction(4), true);
  ASSERT_TRUE(norm.normalized());
  for (std::size_t i = 0; i < norm.n_kept; ++i) {
    double n2 = 0.0, r2 = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      n2 += std::norm(norm.column(i)[j]);
      r2 += std::norm(raw.column(i)[j]);
    }
    EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-12);
    EXPECT_NEAR(norm.freq_norms[i], std::sqrt(r2), 1e-9);
  }
}

TEST(Encode, ZeroColumnsStayZero) {
  // Constant signal: every non-DC coefficient is zero.
  const auto s = cte::encode(seq1({0.5f, 0.5f, 0.5f, 0.5f, 0.5f, 0.5f, 0.5f, 0.5f}),
                             Pruning::full(), true);
  EXPECT_NEAR(s.column(0)[0].real(), 1.0, 1e-12);
  for (std::size_t k = 1; k < s.n_kept; ++k) {
    EXPECT_EQ(s.column(k)[0], Complex(0.0, 0.0));
    EXPECT_EQ(s.freq_norms[k], 0.0);
  }
}

TEST(Encode, TooShortToPrune) {
  EXPECT_THROW(cte::encode(seq1({1, 0}), Pruning::fraction(4), false), cte::ValidationError);
  EXPECT_NO_THROW(cte::encode(seq1({1, 0, 0, 0}), Pruning::fraction(4), false));
}

TEST(Multisize, OneDescriptorPerSize) {
  const auto seq = seq1({0.1f, 0.2f, 0.3f});
  const std::vector<std::size_t> sizes{4, 8};
  const auto out = cte::encode_query_multisize(seq, sizes, Pruning::full(), false);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].padded, 4u);
  EXPECT_EQ(out[1].padded, 8u);
  EXPECT_TRUE(cte::encode_query_multisize(seq, {}, Pruning::full(), false).empty());
  const std::vector<std::size_t> too_small{2};
  EXPECT_THROW(cte::encode_query_multisize(seq, too_small, Pruning::full(), false),
               cte::ValidationError);
}

TEST(Multisize, InverseReproducesPaddedSequence) {
  std::mt19937_64 rng(6);
  const auto seq = oracle::random_sequence(rng, 20, 3);
  const std::vector<std::size_t> sizes{32, 64, 128};
  for (const auto& s : cte::encode_query_multisize(seq, sizes, Pruning::full(), false)) {
    for (std::size_t j = 0; j < 3; ++j) {
      // Hermitian completion of the half spectrum, then the direct inverse.
      std::vector<Complex> spec(s.padded);
      for (std::size_t k = 0; k < s.n_kept; ++k) spec[k] = s.column(k)[j];
      for (std::size_t k = s.n_kept; k < s.padded; ++k) spec[k] = std::conj(spec[s.padded - k]);
      const auto x = oracle::naive_dft(spec, true);
      for (std::size_t t = 0; t < s.padded; ++t) {
        const double want = t < seq.size() ? seq.at(t, j) : 0.0;
        EXPECT_NEAR(x[t].real(), want, 1e-9);
        EXPECT_NEAR(x[t].imag(), 0.0, 1e-9);
      }
    }
  }
}

TEST(Expand, InterleavesZerosOnNormalizedColumns) {
  SpectralDescriptor s;
  s.video_id = "x";
  s.n = 12;
  s.padded = 16;
  s.dim = 1;
  s.mode = cte::SpectrumMode::kPruned;
  s.n_kept = 3;
  const Complex a{1, 0}, b{0, 1}, c{-1, 0};
  s.coeffs = {a, b, c};
  s.freq_norms = {2.0, 3.0, 4.0};
  const auto e = cte::expand(s, 2);
  EXPECT_EQ(e.padded, 32u);
  EXPECT_EQ(e.n_kept, 6u);
  expect_coeffs(e, {a, 0, b, 0, c, 0}, 0.0);
  EXPECT_EQ(e.mode, cte::SpectrumMode::kPruned);
}

TEST(Expand, ImpulseMatchesEncodeOfRepetition) {
  const auto seq = seq1({1, 0, 0, 0});
  const auto expanded = cte::expand(cte::encode(seq, Pruning::full(), false), 2);
  const auto direct = cte::encode(seq1({1, 0, 0, 0, 1, 0, 0, 0}), Pruning::full(), false);
  EXPECT_EQ(expanded.padded, direct.padded);
  EXPECT_EQ(expanded.n_kept, direct.n_kept);
  expect_coeffs(expanded, direct.coeffs, 1e-12);
}

TEST(Expand, EqualsEncodeOfRepetitionOnRandomSequences) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto seq = oracle::random_sequence(rng, 4 + rng() % 60, 1 + rng() % 6);
    const std::size_t factor = std::size_t{1} << (rng() % 3);
    for (Pruning pr : {Pruning::full(), Pruning::fraction(4)}) {
      for (bool norm : {false, true}) {
        const auto expanded = cte::expand(cte::encode(seq, pr, norm), factor);
        const auto direct = cte::encode(repeat_padded(seq, factor), pr, norm);
        ASSERT_EQ(expanded.n_kept, direct.n_kept);
        ASSERT_EQ(expanded.padded, direct.padded);
        for (std::size_t i = 0; i < direct.coeffs.size(); ++i) {
          ASSERT_NEAR(std::abs(expanded.coeffs[i] - direct.coeffs[i]), 0.0, 1e-6)
              << "factor " << factor << " norm " << norm << " index " << i;
        }
      }
    }
  }
}

TEST(Expand, FactorOneIsIdentityAndBadFactorThrows) {
  std::mt19937_64 rng(8);
  const auto s = cte::encode(oracle::random_sequence(rng, 16, 2), Pruning::fraction(4), false);
  const auto e = cte::expand(s, 1);
  EXPECT_EQ(e.coeffs, s.coeffs);
  EXPECT_EQ(e.n_kept, s.n_kept);
  EXPECT_THROW(cte::expand(s, 3), cte::ValidationError);
  EXPECT_THROW(cte::expand(s, 0), cte::ValidationError);
}

TEST(SpectralFormat, RoundTrip) {
  std::mt19937_64 rng(9);
  const auto seq = oracle::random_sequence(rng, 40, 4, "rt");
  for (bool norm : {false, true}) {
    const auto s = cte::encode(seq, Pruning::fraction(4), norm);
    const auto bytes = cte::encode_spectral_bytes(s);
    std::size_t used = 0;
    const auto back = cte::decode_spectral_bytes(bytes, &used);
    EXPECT_EQ(used, bytes.size());
    EXPECT_EQ(back.video_id, "rt");
    EXPECT_EQ(back.padded, 64u);
    EXPECT_EQ(back.n_kept, 16u);
    EXPECT_EQ(back.normalized(), norm);
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
      EXPECT_NEAR(std::abs(back.coeffs[i] - s.coeffs[i]), 0.0, 1e-5);
    }
    auto bad = bytes;
    bad[0] = 'Q';
    EXPECT_THROW(cte::decode_spectral_bytes(bad), cte::FormatError);
  }
}
