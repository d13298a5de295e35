#include <cmath>
#include <random>

#include "cte/errors.hpp"
#include "cte/seqdesc.hpp"

namespace cte {
namespace {

void normalize_in_place(std::span<float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  if (sq <= 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) x = static_cast<float>(x * inv);
}

}  // namespace

DescriptorSequence smooth_random_sequence(std::string video_id, std::size_t length,
                                          std::size_t dim, double smoothness, float fps,
                                          std::uint64_t seed, std::span<const float> bias) {
  if (length == 0 || dim == 0) throw ValidationError("length and dim must be >= 1");
  if (!(smoothness >= 0.0 && smoothness < 1.0)) {
    throw ValidationError("smoothness must lie in [0, 1)");
  }
  if (!bias.empty() && bias.size() != dim) {
    throw ValidationError("bias dimension does not match d");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));

  std::vector<double> state(dim, 0.0);
  std::vector<float> frames(length * dim);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t j = 0; j < dim; ++j) {
      double g = gauss(rng);
      if (!bias.empty()) g += bias[j];
      state[j] = t == 0 ? g : smoothness * state[j] + (1.0 - smoothness) * g;
      frames[t * dim + j] = static_cast<float>(state[j]);
    }
    normalize_in_place(std::span<float>(frames.data() + t * dim, dim));
  }
  return DescriptorSequence(std::move(video_id), fps, dim, std::move(frames));
}

DescriptorSequence noisy_excerpt(const DescriptorSequence& source, std::size_t start,
                                 std::size_t length, double sigma, std::uint64_t seed,
                                 std::string video_id) {
  if (sigma < 0.0) throw ValidationError("noise sigma must be >= 0");
  if (length == 0 || start + length > source.size()) {
    throw ValidationError("excerpt out of range");
  }
  const std::size_t dim = source.dim();
  std::vector<float> frames(source.data().begin() + static_cast<std::ptrdiff_t>(start * dim),
                            source.data().begin() +
                                static_cast<std::ptrdiff_t>((start + length) * dim));
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma / std::sqrt(static_cast<double>(dim)));
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t j = 0; j < dim; ++j) {
        frames[t * dim + j] = static_cast<float>(frames[t * dim + j] + gauss(rng));
      }
      normalize_in_place(std::span<float>(frames.data() + t * dim, dim));
    }
  }
  return DescriptorSequence(std::move(video_id), source.fps(), dim, std::move(frames));
}

SynthEvent synth_event(const SynthParams& params) {
  if (params.n_clips == 0) throw ValidationError("n_clips must be >= 1");
  if (params.clip_len_min == 0 || params.clip_len_min > params.clip_len_max) {
    throw ValidationError("clip length range must satisfy 1 <= min <= max");
  }
  if (params.master_len < params.clip_len_max) {
    throw ValidationError("master_len must be >= the maximum clip length");
  }
  if (params.noise < 0.0) throw ValidationError("noise sigma must be >= 0");

  // Independent streams: master content, clip placement, per-clip noise.
  std::seed_seq seq{params.seed, std::uint64_t{0x5eed}};
  std::mt19937_64 meta(seq);
  const std::uint64_t master_seed = meta();
  std::mt19937_64 placement(meta());

  SynthEvent ev{smooth_random_sequence("master", params.master_len, params.dim,
                                       params.smoothness, params.fps, master_seed),
                {}, {}, {}};
  std::uniform_int_distribution<std::size_t> len_dist(params.clip_len_min,
                                                      params.clip_len_max);
  for (std::size_t c = 0; c < params.n_clips; ++c) {
    const std::size_t len = len_dist(placement);
    std::uniform_int_distribution<std::size_t> start_dist(0, params.master_len - len);
    const std::size_t start = start_dist(placement);
    const std::uint64_t noise_seed = placement();

    char id[32];
    std::snprintf(id, sizeof id, "clip_%03zu", c);
    ev.clips.push_back(noisy_excerpt(ev.master, start, len, params.noise, noise_seed, id));
    ev.clip_starts.push_back(start);
    ev.truth.entries.push_back({id, 0, static_cast<std::int64_t>(len),
                                static_cast<double>(start) / params.fps});
  }
  return ev;
}

}  // namespace cte
