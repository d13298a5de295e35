#pragma once

// Per-frame descriptor sequences, the CTED file format, ground-truth
// timelines and the synthetic event generator used for desk-scale testing.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cte {

// Slack allowed on the frame-norm bound of 2 (two concatenated unit
// descriptors).
inline constexpr double kMaxFrameNorm = 2.0 + 1e-6;

/// An n x d matrix of frame descriptors, frame-major, plus a frame rate.
///
/// Immutable after construction; the constructor enforces n >= 1, d >= 1,
/// finite values, fps > 0 and per-frame L2 norm <= 2 (+1e-6). Frames are
/// stored as given and never re-normalized.
class DescriptorSequence {
 public:
  DescriptorSequence(std::string video_id, float fps, std::size_t dim,
                     std::vector<float> frames);

  const std::string& video_id() const noexcept { return video_id_; }
  float fps() const noexcept { return fps_; }
  std::size_t size() const noexcept { return frames_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  double duration_sec() const noexcept { return static_cast<double>(size()) / fps_; }

  std::span<const float> frame(std::size_t t) const {
    return {frames_.data() + t * dim_, dim_};
  }
  float at(std::size_t t, std::size_t j) const { return frames_[t * dim_ + j]; }
  std::span<const float> data() const noexcept { return frames_; }

  // Frames [start, start + count) as a new sequence with the given id.
  DescriptorSequence slice(std::size_t start, std::size_t count,
                           std::string video_id) const;

  friend bool operator==(const DescriptorSequence&, const DescriptorSequence&) = default;

 private:
  std::string video_id_;
  float fps_;
  std::size_t dim_;
  std::vector<float> frames_;
};

// CTED: "CTED", u8 version (1), u32 d, u32 n, f32 fps, u32 id length, id
// bytes, then n*d f32 frame-major. All little-endian.
inline constexpr std::uint8_t kCtedVersion = 1;

DescriptorSequence read_sequence(const std::filesystem::path& path);
void write_sequence(const DescriptorSequence& seq, const std::filesystem::path& path);

std::string encode_sequence_bytes(const DescriptorSequence& seq);
DescriptorSequence decode_sequence_bytes(std::span<const char> bytes);

// Every *.cted file in `dir`, sorted by file name.
std::vector<DescriptorSequence> read_sequence_dir(const std::filesystem::path& dir);

/// One annotated segment: frames [start_frame, end_frame) of `video_id`
/// start at `global_start_sec` on the master timeline.
struct GroundTruthEntry {
  std::string video_id;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;
  double global_start_sec = 0.0;

  friend bool operator==(const GroundTruthEntry&, const GroundTruthEntry&) = default;
};

struct GroundTruthTimeline {
  std::vector<GroundTruthEntry> entries;
  double tolerance = 0.5;

  // Throws ValidationError if a segment is empty or negative, references an
  // unknown video, or runs past the end of its video.
  void validate(const std::map<std::string, std::size_t>& video_lengths) const;
};

// JSON array of {video_id, start_frame, end_frame, global_start_sec}.
nlohmann::json ground_truth_to_json(const GroundTruthTimeline& gt);
GroundTruthTimeline ground_truth_from_json(const nlohmann::json& j);
GroundTruthTimeline read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const GroundTruthTimeline& gt, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic events

struct SynthParams {
  std::size_t master_len = 1350;
  std::size_t dim = 32;
  std::size_t n_clips = 10;
  std::size_t clip_len_min = 150;
  std::size_t clip_len_max = 600;
  double smoothness = 0.8;  // AR(1) coefficient, in [0, 1)
  double noise = 0.1;       // noise vector norm relative to a unit frame
  float fps = 15.0f;
  std::uint64_t seed = 0;
};

struct SynthEvent {
  DescriptorSequence master;
  std::vector<DescriptorSequence> clips;
  GroundTruthTimeline truth;
  std::vector<std::size_t> clip_starts;  // master frame of each clip's frame 0
};

/// Unit-norm frames from x_t = rho * x_{t-1} + (1 - rho) * g_t with
/// g_t ~ N(bias, I / d); each output frame is x_t / |x_t|.
DescriptorSequence smooth_random_sequence(std::string video_id, std::size_t length,
                                          std::size_t dim, double smoothness, float fps,
                                          std::uint64_t seed,
                                          std::span<const float> bias = {});

/// Frames [start, start + length) of `source` plus N(0, sigma^2 / d) noise
/// per coordinate, each frame re-normalized.
DescriptorSequence noisy_excerpt(const DescriptorSequence& source, std::size_t start,
                                 std::size_t length, double sigma, std::uint64_t seed,
                                 std::string video_id);

/// Master sequence plus `n_clips` noisy excerpts of it with their true
/// placement. Deterministic given params.seed.
SynthEvent synth_event(const SynthParams& params);

}  // namespace cte
