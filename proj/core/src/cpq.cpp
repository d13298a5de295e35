#include "cte/cpq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "binary_io.hpp"
#include "cte/errors.hpp"

namespace cte {
namespace {

constexpr double kSplitEps = 1.0 / 1024.0;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

std::size_t nearest(std::span<const double> centroids, std::size_t k, std::size_t dim,
                    std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double dist = squared_distance(centroids.subspan(c * dim, dim), x);
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  return best;
}

void validate_geometry(std::size_t dim, std::size_t p, std::size_t k) {
  if (dim == 0 || p == 0 || (2 * dim) % p != 0) {
    throw ValidationError("2d = " + std::to_string(2 * dim) +
                          " must be divisible by p = " + std::to_string(p));
  }
  if (k == 0 || k > 256) throw ValidationError("k must lie in [1, 256] for byte codes");
}

// Column i of a spectral descriptor as 2d interleaved reals.
void column_as_reals(const SpectralDescriptor& spec, std::size_t i, std::vector<double>& out) {
  out.resize(2 * spec.dim);
  auto col = spec.column(i);
  for (std::size_t l = 0; l < spec.dim; ++l) {
    out[2 * l] = col[l].real();
    out[2 * l + 1] = col[l].imag();
  }
}

}  // namespace

PQCodebook::PQCodebook(std::size_t dim, std::size_t p, std::size_t k, std::uint64_t seed,
                       std::vector<float> centroids)
    : dim_(dim), p_(p), k_(k), seed_(seed), centroids_(std::move(centroids)) {
  validate_geometry(dim, p, k);
  if (centroids_.size() != p_ * k_ * sub_dim()) {
    throw ValidationError("codebook holds " + std::to_string(centroids_.size()) +
                          " values, expected p * k * sub_dim = " +
                          std::to_string(p_ * k_ * sub_dim()));
  }
}

std::uint8_t PQCodebook::assign(std::size_t j, std::span<const double> subvector) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  const std::size_t sd = sub_dim();
  for (std::size_t c = 0; c < k_; ++c) {
    const float* cent = centroids_.data() + (j * k_ + c) * sd;
    double dist = 0.0;
    for (std::size_t u = 0; u < sd; ++u) {
      const double diff = subvector[u] - cent[u];
      dist += diff * diff;
    }
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  return static_cast<std::uint8_t>(best);
}

std::vector<double> training_samples(std::size_t dim, std::size_t p, std::size_t j,
                                     std::size_t samples, std::uint64_t seed) {
  validate_geometry(dim, p, 1);
  const std::size_t sd = 2 * dim / p;
  std::seed_seq seq{seed, static_cast<std::uint64_t>(j), std::uint64_t{1}};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0 * static_cast<double>(dim)));
  std::vector<double> out(samples * sd);
  for (auto& v : out) v = gauss(rng);
  return out;
}

std::vector<double> kmeans(std::span<const double> data, std::size_t row_dim, std::size_t k,
                           std::size_t iters, std::uint64_t seed) {
  if (row_dim == 0 || data.size() % row_dim != 0) {
    throw ValidationError("k-means data is not a whole number of rows");
  }
  const std::size_t rows = data.size() / row_dim;
  if (rows < k) {
    throw ValidationError("k-means needs at least k = " + std::to_string(k) + " samples");
  }
  std::mt19937_64 rng(seed);
  auto row = [&](std::size_t r) { return data.subspan(r * row_dim, row_dim); };

  // k-means++ seeding.
  std::vector<double> centroids(k * row_dim);
  std::vector<double> best_dist(rows, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, rows - 1)(rng);
  std::copy_n(row(first).begin(), row_dim, centroids.begin());
  for (std::size_t c = 1; c < k; ++c) {
    auto prev = std::span<const double>(centroids).subspan((c - 1) * row_dim, row_dim);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      best_dist[r] = std::min(best_dist[r], squared_distance(row(r), prev));
      total += best_dist[r];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      pick = rows - 1;
      for (std::size_t r = 0; r < rows; ++r) {
        target -= best_dist[r];
        if (target < 0.0 && best_dist[r] > 0.0) {
          pick = r;
          break;
        }
      }
      while (best_dist[pick] == 0.0 && pick > 0) --pick;
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, rows - 1)(rng);
    }
    std::copy_n(row(pick).begin(), row_dim, centroids.begin() + c * row_dim);
  }

  std::vector<std::size_t> assignment(rows);
  std::vector<std::size_t> counts(k);
  std::vector<double> sums(k * row_dim);
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t r = 0; r < rows; ++r) {
      assignment[r] = nearest(centroids, k, row_dim, row(r));
    }
    std::fill(counts.begin(), counts.end(), 0);
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t c = assignment[r];
      ++counts[c];
      auto x = row(r);
      for (std::size_t u = 0; u < row_dim; ++u) sums[c * row_dim + u] += x[u];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t u = 0; u < row_dim; ++u) {
        centroids[c * row_dim + u] = sums[c * row_dim + u] / static_cast<double>(counts[c]);
      }
    }
    // Split the largest cluster into every empty one. Not after the last
    // update, so returned centroids are always cluster means.
    if (it + 1 == iters) break;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      const std::size_t big = static_cast<std::size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      for (std::size_t u = 0; u < row_dim; ++u) {
        const double v = centroids[big * row_dim + u];
        const double up = u % 2 == 0 ? 1.0 + kSplitEps : 1.0 - kSplitEps;
        const double down = u % 2 == 0 ? 1.0 - kSplitEps : 1.0 + kSplitEps;
        centroids[c * row_dim + u] = v * up;
        centroids[big * row_dim + u] = v * down;
      }
      counts[c] = counts[big] / 2;
      counts[big] -= counts[c];
    }
  }
  return centroids;
}

PQCodebook train(std::size_t dim, std::size_t p, const TrainOptions& options) {
  validate_geometry(dim, p, options.k);
  if (options.samples < options.k) {
    throw ValidationError("training needs samples >= k");
  }
  const std::size_t sd = 2 * dim / p;
  std::vector<float> centroids(p * options.k * sd);

  auto train_one = [&](std::size_t j) {
    const auto samples = training_samples(dim, p, j, options.samples, options.seed);
    std::seed_seq seq{options.seed, static_cast<std::uint64_t>(j), std::uint64_t{2}};
    std::mt19937_64 seeder(seq);
    const auto cents = kmeans(samples, sd, options.k, options.iters, seeder());
    std::transform(cents.begin(), cents.end(),
                   centroids.begin() + static_cast<std::ptrdiff_t>(j * options.k * sd),
                   [](double v) { return static_cast<float>(v); });
  };

  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, p);
  if (workers == 1) {
    for (std::size_t j = 0; j < p; ++j) train_one(j);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t j = w; j < p; j += workers) train_one(j);
      });
    }
  }
  return PQCodebook(dim, p, options.k, options.seed, std::move(centroids));
}

PQCode encode_pq(const SpectralDescriptor& spec, const PQCodebook& cb) {
  if (spec.dim != cb.dim()) {
    throw ValidationError("descriptor d = " + std::to_string(spec.dim) +
                          " does not match codebook d = " + std::to_string(cb.dim()));
  }
  const std::size_t p = cb.subquantizers();
  const std::size_t sd = cb.sub_dim();
  PQCode code{spec.video_id, spec.n_kept, p, std::vector<std::uint8_t>(spec.n_kept * p)};
  std::vector<double> reals;
  for (std::size_t i = 0; i < spec.n_kept; ++i) {
    column_as_reals(spec, i, reals);
    for (std::size_t j = 0; j < p; ++j) {
      code.codes[i * p + j] = cb.assign(j, std::span<const double>(reals).subspan(j * sd, sd));
    }
  }
  return code;
}

SpectralDescriptor decode_pq(const PQCode& code, const PQCodebook& cb,
                             const SpectralDescriptor& like) {
  if (code.p != cb.subquantizers() || like.dim != cb.dim() || like.n_kept != code.n_kept) {
    throw ValidationError("code, codebook and template descriptor disagree");
  }
  SpectralDescriptor out = like;
  out.freq_norms.clear();
  const std::size_t sd = cb.sub_dim();
  std::vector<double> reals(2 * cb.dim());
  for (std::size_t i = 0; i < code.n_kept; ++i) {
    for (std::size_t j = 0; j < code.p; ++j) {
      const std::uint8_t c = code.codes[i * code.p + j];
      if (c >= cb.centroids_per_subquantizer()) {
        throw CorruptionError("code byte " + std::to_string(c) + " >= k");
      }
      auto cent = cb.centroid(j, c);
      std::copy(cent.begin(), cent.end(), reals.begin() + static_cast<std::ptrdiff_t>(j * sd));
    }
    auto col = out.column(i);
    for (std::size_t l = 0; l < cb.dim(); ++l) col[l] = Complex(reals[2 * l], reals[2 * l + 1]);
  }
  return out;
}

LookupTable build_table(const SpectralDescriptor& q, double lambda, const PQCodebook& cb) {
  if (q.dim != cb.dim()) {
    throw ValidationError("query d = " + std::to_string(q.dim) +
                          " does not match codebook d = " + std::to_string(cb.dim()));
  }
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  const std::size_t p = cb.subquantizers();
  const std::size_t k = cb.centroids_per_subquantizer();
  const std::size_t sd = cb.sub_dim();
  LookupTable table{q.video_id, q.padded, q.mode, q.n_kept, p, k,
                    std::vector<Complex>(q.n_kept * p * k)};

  std::vector<Complex> qreg(q.dim);
  for (std::size_t i = 0; i < q.n_kept; ++i) {
    auto col = q.column(i);
    double den = lambda;
    for (const auto& c : col) den += std::norm(c);
    if (den == 0.0) throw DivisionByZeroError(i);
    for (std::size_t l = 0; l < q.dim; ++l) qreg[l] = std::conj(col[l]) / den;

    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t c = 0; c < k; ++c) {
        auto cent = cb.centroid(j, c);
        Complex acc{};
        for (std::size_t u = 0; u < sd; ++u) {
          const std::size_t coord = j * sd + u;
          const Complex w = qreg[coord / 2];
          // Even coordinates are real parts, odd ones imaginary parts.
          acc += coord % 2 == 0 ? w * static_cast<double>(cent[u])
                                : w * Complex(0.0, cent[u]);
        }
        table.entries[(i * p + j) * k + c] = acc;
      }
    }
  }
  return table;
}

ScoreVector score_pq(const LookupTable& table, const PQCode& code, std::size_t expansion) {
  if (code.p != table.p) throw ValidationError("code and table disagree on p");
  if (!is_power_of_two(expansion)) throw ValidationError("expansion must be a power of two");
  const bool shape_ok = table.mode == SpectrumMode::kFull
                            ? (code.n_kept - 1) * expansion == table.n_kept - 1
                            : code.n_kept * expansion == table.n_kept;
  if (code.n_kept == 0 || !shape_ok) {
    throw ValidationError("code with " + std::to_string(code.n_kept) +
                          " columns cannot be scored against a table of " +
                          std::to_string(table.n_kept) + " columns at expansion " +
                          std::to_string(expansion));
  }
  std::vector<Complex> cross(table.n_kept, Complex{});
  const std::size_t p = table.p;
  const std::size_t k = table.k;
  for (std::size_t col = 0; col < code.n_kept; ++col) {
    const std::size_t i = col * expansion;
    const std::uint8_t* row = code.codes.data() + col * p;
    const Complex* base = table.entries.data() + i * p * k;
    Complex acc{};
    for (std::size_t j = 0; j < p; ++j) {
      if (row[j] >= k) throw CorruptionError("code byte " + std::to_string(row[j]) + " >= k");
      acc += base[j * k + row[j]];
    }
    cross[i] = acc;
  }
  return spectrum_to_scores(cross, table.mode, table.padded);
}

std::string encode_codebook_bytes(const PQCodebook& cb) {
  detail::ByteWriter w;
  w.bytes("CTEQ");
  w.u8(kCteqVersion);
  w.u32(static_cast<std::uint32_t>(cb.dim()));
  w.u32(static_cast<std::uint32_t>(cb.subquantizers()));
  w.u32(static_cast<std::uint32_t>(cb.centroids_per_subquantizer()));
  w.u64(cb.seed());
  for (float v : cb.data()) w.f32(v);
  return w.take();
}

PQCodebook decode_codebook_bytes(std::span<const char> bytes, std::size_t* consumed) {
  detail::ByteReader r(bytes);
  r.expect_magic("CTEQ");
  const auto version = r.u8();
  if (version != kCteqVersion) {
    throw FormatError("unsupported CTEQ version " + std::to_string(version));
  }
  const std::size_t d = r.u32();
  const std::size_t p = r.u32();
  const std::size_t k = r.u32();
  const std::uint64_t seed = r.u64();
  if (d == 0 || p == 0 || (2 * d) % p != 0 || k == 0 || k > 256) {
    throw FormatError("inconsistent CTEQ header");
  }
  std::vector<float> cents(p * k * (2 * d / p));
  if (cents.size() * 4 > r.remaining()) throw IoError("truncated codebook payload");
  for (auto& v : cents) v = r.f32();
  if (consumed) *consumed = r.position();
  return PQCodebook(d, p, k, seed, std::move(cents));
}

std::string encode_code_bytes(const PQCode& code) {
  detail::ByteWriter w;
  w.bytes("CTEC");
  w.u8(kCtecVersion);
  w.str(code.video_id);
  w.u32(static_cast<std::uint32_t>(code.n_kept));
  w.u32(static_cast<std::uint32_t>(code.p));
  w.bytes(std::string_view(reinterpret_cast<const char*>(code.codes.data()), code.codes.size()));
  return w.take();
}

PQCode decode_code_bytes(std::span<const char> bytes, std::size_t* consumed) {
  detail::ByteReader r(bytes);
  r.expect_magic("CTEC");
  const auto version = r.u8();
  if (version != kCtecVersion) {
    throw FormatError("unsupported CTEC version " + std::to_string(version));
  }
  PQCode code;
  code.video_id = r.str();
  code.n_kept = r.u32();
  code.p = r.u32();
  auto raw = r.bytes(code.n_kept * code.p);
  code.codes.assign(raw.begin(), raw.end());
  if (consumed) *consumed = r.position();
  return code;
}

void write_codebook(const PQCodebook& cb, const std::filesystem::path& path) {
  detail::write_file(path, encode_codebook_bytes(cb));
}

PQCodebook read_codebook(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_codebook_bytes(bytes);
}

}  // namespace cte
