#include "cte/seqdesc.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "cte/errors.hpp"

namespace cte {

DescriptorSequence::DescriptorSequence(std::string video_id, float fps, std::size_t dim,
                                       std::vector<float> frames)
    : video_id_(std::move(video_id)), fps_(fps), dim_(dim), frames_(std::move(frames)) {
  if (dim_ == 0) throw ValidationError("descriptor dimension must be >= 1");
  if (!std::isfinite(fps_) || fps_ <= 0.0f) {
    throw ValidationError("fps must be finite and > 0");
  }
  if (frames_.empty()) throw ValidationError("sequence must contain at least one frame");
  if (frames_.size() % dim_ != 0) {
    throw ValidationError("frame buffer size " + std::to_string(frames_.size()) +
                          " is not a multiple of d = " + std::to_string(dim_));
  }
  const std::size_t n = size();
  for (std::size_t t = 0; t < n; ++t) {
    double sq = 0.0;
    for (float v : frame(t)) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite value in frame " + std::to_string(t));
      }
      sq += static_cast<double>(v) * v;
    }
    if (std::sqrt(sq) > kMaxFrameNorm) {
      throw ValidationError("frame " + std::to_string(t) + " has L2 norm " +
                            std::to_string(std::sqrt(sq)) + " > 2");
    }
  }
}

DescriptorSequence DescriptorSequence::slice(std::size_t start, std::size_t count,
                                             std::string video_id) const {
  if (count == 0 || start + count > size()) {
    throw ValidationError("slice [" + std::to_string(start) + ", " +
                          std::to_string(start + count) + ") out of range");
  }
  std::vector<float> out(frames_.begin() + static_cast<std::ptrdiff_t>(start * dim_),
                         frames_.begin() + static_cast<std::ptrdiff_t>((start + count) * dim_));
  return DescriptorSequence(std::move(video_id), fps_, dim_, std::move(out));
}

std::string encode_sequence_bytes(const DescriptorSequence& seq) {
  detail::ByteWriter w;
  w.bytes("CTED");
  w.u8(kCtedVersion);
  w.u32(static_cast<std::uint32_t>(seq.dim()));
  w.u32(static_cast<std::uint32_t>(seq.size()));
  w.f32(seq.fps());
  w.str(seq.video_id());
  for (float v : seq.data()) w.f32(v);
  return w.take();
}

DescriptorSequence decode_sequence_bytes(std::span<const char> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("CTED");
  const auto version = r.u8();
  if (version != kCtedVersion) {
    throw FormatError("unsupported CTED version " + std::to_string(version));
  }
  const std::uint32_t d = r.u32();
  const std::uint32_t n = r.u32();
  const float fps = r.f32();
  std::string id = r.str();
  const std::uint64_t count = static_cast<std::uint64_t>(n) * d;
  if (count * 4 > r.remaining()) {
    throw IoError("truncated payload: header declares " + std::to_string(n) +
                  " frames of d = " + std::to_string(d) + " but only " +
                  std::to_string(r.remaining()) + " bytes follow");
  }
  std::vector<float> frames(count);
  for (auto& v : frames) v = r.f32();
  return DescriptorSequence(std::move(id), fps, d, std::move(frames));
}

DescriptorSequence read_sequence(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_sequence_bytes(bytes);
}

void write_sequence(const DescriptorSequence& seq, const std::filesystem::path& path) {
  detail::write_file(path, encode_sequence_bytes(seq));
}

std::vector<DescriptorSequence> read_sequence_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cted") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<DescriptorSequence> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_sequence(f));
  return out;
}

// ---------------------------------------------------------------------------

void GroundTruthTimeline::validate(
    const std::map<std::string, std::size_t>& video_lengths) const {
  if (!(tolerance > 0.0)) throw ValidationError("ground-truth tolerance must be > 0");
  for (const auto& e : entries) {
    auto it = video_lengths.find(e.video_id);
    if (it == video_lengths.end()) {
      throw ValidationError("ground truth references unknown video " + e.video_id);
    }
    if (e.start_frame < 0 || e.end_frame <= e.start_frame ||
        static_cast<std::size_t>(e.end_frame) > it->second) {
      throw ValidationError("invalid ground-truth segment [" +
                            std::to_string(e.start_frame) + ", " +
                            std::to_string(e.end_frame) + ") for " + e.video_id);
    }
  }
}

nlohmann::json ground_truth_to_json(const GroundTruthTimeline& gt) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : gt.entries) {
    arr.push_back({{"video_id", e.video_id},
                   {"start_frame", e.start_frame},
                   {"end_frame", e.end_frame},
                   {"global_start_sec", e.global_start_sec}});
  }
  return arr;
}

GroundTruthTimeline ground_truth_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("ground truth must be a JSON array");
  GroundTruthTimeline gt;
  try {
    for (const auto& item : j) {
      gt.entries.push_back({item.at("video_id").get<std::string>(),
                            item.at("start_frame").get<std::int64_t>(),
                            item.at("end_frame").get<std::int64_t>(),
                            item.at("global_start_sec").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed ground-truth entry: ") + e.what());
  }
  return gt;
}

GroundTruthTimeline read_ground_truth(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return ground_truth_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_ground_truth(const GroundTruthTimeline& gt, const std::filesystem::path& path) {
  detail::write_file(path, ground_truth_to_json(gt).dump(2) + "\n");
}

}  // namespace cte
