#pragma once

// Complex product quantization of frequency columns. A column of d complex
// values is viewed as 2d interleaved reals (re_0, im_0, re_1, im_1, ...) and
// split into p contiguous subvectors, each quantized to one of k <= 256
// centroids. Scoring uses per-query lookup tables that already include the
// regularization filter.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cte/matcher.hpp"
#include "cte/spectral.hpp"

namespace cte {

struct TrainOptions {
  std::size_t k = 256;
  std::size_t samples = 100000;
  std::size_t iters = 25;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // parallelism across subquantizers
};

class PQCodebook {
 public:
  PQCodebook(std::size_t dim, std::size_t p, std::size_t k, std::uint64_t seed,
             std::vector<float> centroids);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t subquantizers() const noexcept { return p_; }
  std::size_t centroids_per_subquantizer() const noexcept { return k_; }
  std::size_t sub_dim() const noexcept { return 2 * dim_ / p_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Centroid c of subquantizer j, sub_dim() reals.
  std::span<const float> centroid(std::size_t j, std::size_t c) const {
    return {centroids_.data() + (j * k_ + c) * sub_dim(), sub_dim()};
  }
  std::span<const float> data() const noexcept { return centroids_; }

  // Nearest centroid by squared distance, lowest index on ties.
  std::uint8_t assign(std::size_t j, std::span<const double> subvector) const;

  friend bool operator==(const PQCodebook&, const PQCodebook&) = default;

 private:
  std::size_t dim_;
  std::size_t p_;
  std::size_t k_;
  std::uint64_t seed_;
  std::vector<float> centroids_;
};

struct PQCode {
  std::string video_id;
  std::size_t n_kept = 0;
  std::size_t p = 0;
  std::vector<std::uint8_t> codes;  // n_kept x p, frequency-major

  std::span<const std::uint8_t> row(std::size_t i) const { return {codes.data() + i * p, p}; }
};

struct LookupTable {
  std::string query_id;
  std::size_t padded = 0;
  SpectrumMode mode = SpectrumMode::kPruned;
  std::size_t n_kept = 0;
  std::size_t p = 0;
  std::size_t k = 0;
  std::vector<Complex> entries;  // n_kept x p x k

  const Complex& at(std::size_t i, std::size_t j, std::size_t c) const {
    return entries[(i * p + j) * k + c];
  }
};

/// Training samples for one subquantizer: i.i.d. N(0, 1) scaled by
/// 1 / sqrt(2d), sub_dim reals per sample. Deterministic in (seed, j).
std::vector<double> training_samples(std::size_t dim, std::size_t p, std::size_t j,
                                     std::size_t samples, std::uint64_t seed);

/// k-means (k-means++ seeding, then Lloyd iterations) per subquantizer on
/// Gaussian samples. Empty clusters are re-seeded by splitting the largest.
PQCodebook train(std::size_t dim, std::size_t p, const TrainOptions& options);

/// Plain k-means on `data` (rows of `row_dim` reals); exposed for testing.
std::vector<double> kmeans(std::span<const double> data, std::size_t row_dim,
                           std::size_t k, std::size_t iters, std::uint64_t seed);

PQCode encode_pq(const SpectralDescriptor& spec, const PQCodebook& cb);

/// Reconstruction: every column replaced by its centroids. Carries the
/// geometry of `like` (n, N, mode) when given.
SpectralDescriptor decode_pq(const PQCode& code, const PQCodebook& cb,
                             const SpectralDescriptor& like);

/// entries[i][j][c] = sum over the complex dims of subvector j of
/// conj(Q_dim,i) / (sum_d |Q_d,i|^2 + lambda) * centroid_dim(c).
LookupTable build_table(const SpectralDescriptor& q, double lambda, const PQCodebook& cb);

/// Compressed-domain score. `expansion` > 1 scores a database code that is
/// shorter than the table: code column k lands on table frequency
/// expansion * k, the rest contribute zero.
ScoreVector score_pq(const LookupTable& table, const PQCode& code, std::size_t expansion = 1);

// CTEQ: "CTEQ", u8 version, u32 d, u32 p, u32 k, u64 seed, p*k*sub_dim f32.
// CTEC: "CTEC", u8 version, id, u32 n_kept, u32 p, n_kept*p bytes.
inline constexpr std::uint8_t kCteqVersion = 1;
inline constexpr std::uint8_t kCtecVersion = 1;

std::string encode_codebook_bytes(const PQCodebook& cb);
PQCodebook decode_codebook_bytes(std::span<const char> bytes, std::size_t* consumed = nullptr);
std::string encode_code_bytes(const PQCode& code);
PQCode decode_code_bytes(std::span<const char> bytes, std::size_t* consumed = nullptr);
void write_codebook(const PQCodebook& cb, const std::filesystem::path& path);
PQCodebook read_codebook(const std::filesystem::path& path);

}  // namespace cte
