#include <algorithm>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "cte/engine.hpp"
#include "cte/errors.hpp"

namespace cte {

nlohmann::json to_json(const IndexConfig& c) {
  return {{"pruning", c.pruning.to_string()},
          {"lambda", c.lambda},
          {"regularize", c.regularize},
          {"pq_subquantizers", c.pq_subquantizers},
          {"pq_centroids", c.pq_centroids},
          {"train_samples", c.train_samples},
          {"train_iters", c.train_iters},
          {"normalize_freqs", c.normalize()},
          {"min_score", c.min_score},
          {"tau", c.tau},
          {"seed", c.seed}};
}

IndexConfig index_config_from_json(const nlohmann::json& j) {
  try {
    IndexConfig c;
    c.pruning = Pruning::parse(j.at("pruning").get<std::string>());
    c.lambda = j.at("lambda").get<double>();
    c.regularize = j.at("regularize").get<bool>();
    c.pq_subquantizers = j.at("pq_subquantizers").get<std::size_t>();
    c.pq_centroids = j.at("pq_centroids").get<std::size_t>();
    c.train_samples = j.at("train_samples").get<std::size_t>();
    c.train_iters = j.at("train_iters").get<std::size_t>();
    c.normalize_freqs = j.at("normalize_freqs").get<bool>();
    c.min_score = j.at("min_score").get<double>();
    c.tau = j.at("tau").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed index config: ") + e.what());
  }
}

Index Index::build(std::vector<DescriptorSequence> sequences, const IndexConfig& config,
                   std::filesystem::path raw_dir) {
  if (config.lambda < 0.0) throw ValidationError("lambda must be >= 0");
  Index index;
  index.config_ = config;
  index.config_.normalize_freqs = config.normalize();
  index.raw_dir_ = std::move(raw_dir);

  if (!sequences.empty()) {
    index.dim_ = sequences.front().dim();
    index.fps_ = sequences.front().fps();
  }
  auto raw = std::make_shared<std::map<std::string, DescriptorSequence>>();
  for (const auto& s : sequences) {
    if (s.dim() != index.dim_) {
      throw ValidationError("mixed descriptor dimensions: " + s.video_id() + " has d = " +
                            std::to_string(s.dim()) + ", expected " +
                            std::to_string(index.dim_));
    }
    if (s.fps() != index.fps_) {
      throw ValidationError("mixed frame rates: " + s.video_id());
    }
    if (raw->count(s.video_id())) throw ValidationError("duplicate video id " + s.video_id());
    raw->emplace(s.video_id(), s);
  }

  if (config.compressed() && index.dim_ > 0) {
    TrainOptions train;
    train.k = config.pq_centroids;
    train.samples = config.train_samples;
    train.iters = config.train_iters;
    train.seed = config.seed;
    train.threads = config.threads;
    index.codebook_ = cte::train(index.dim_, config.pq_subquantizers, train);
  }

  for (const auto& s : sequences) {
    IndexEntry entry;
    entry.video_id = s.video_id();
    entry.n = s.size();
    auto spec = encode(s, config.pruning, index.config_.normalize());
    entry.padded = spec.padded;
    if (index.codebook_) {
      entry.code = encode_pq(spec, *index.codebook_);
    } else {
      // Stored as f32 on disk; round now so built and loaded indexes agree.
      for (auto& c : spec.coeffs) {
        c = Complex(static_cast<float>(c.real()), static_cast<float>(c.imag()));
      }
      for (auto& v : spec.freq_norms) v = static_cast<float>(v);
      entry.spectral = std::move(spec);
    }
    index.n_max_ = std::max(index.n_max_, entry.n);
    index.entries_.push_back(std::move(entry));
  }
  index.raw_ = std::move(raw);
  return index;
}

std::string Index::serialize() const {
  detail::ByteWriter w;
  w.bytes("CTEI");
  w.u8(kCteiVersion);
  w.str(to_json(config_).dump());
  w.str(raw_dir_.string());
  w.u32(static_cast<std::uint32_t>(dim_));
  w.f32(fps_);
  w.u8(codebook_ ? 1 : 0);
  if (codebook_) w.bytes(encode_codebook_bytes(*codebook_));
  w.u32(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    w.u32(static_cast<std::uint32_t>(e.n));
    w.u32(static_cast<std::uint32_t>(e.padded));
    w.bytes(e.code ? encode_code_bytes(*e.code) : encode_spectral_bytes(*e.spectral));
  }
  return w.take();
}

void Index::save(const std::filesystem::path& path) const {
  detail::write_file(path, serialize());
}

Index Index::load(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader r(bytes);
  r.expect_magic("CTEI");
  const auto version = r.u8();
  if (version != kCteiVersion) {
    throw FormatError("unsupported index version " + std::to_string(version));
  }
  Index index;
  try {
    index.config_ = index_config_from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("index config is not JSON: ") + e.what());
  }
  index.raw_dir_ = r.str();
  index.dim_ = r.u32();
  index.fps_ = r.f32();
  const std::span<const char> all(bytes);
  if (r.u8() != 0) {
    std::size_t used = 0;
    index.codebook_ = decode_codebook_bytes(all.subspan(r.position()), &used);
    r.bytes(used);
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    IndexEntry e;
    e.n = r.u32();
    e.padded = r.u32();
    std::size_t used = 0;
    if (index.codebook_) {
      e.code = decode_code_bytes(all.subspan(r.position()), &used);
      e.video_id = e.code->video_id;
    } else {
      e.spectral = decode_spectral_bytes(all.subspan(r.position()), &used);
      e.video_id = e.spectral->video_id;
    }
    r.bytes(used);
    index.n_max_ = std::max(index.n_max_, e.n);
    index.entries_.push_back(std::move(e));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after index entries");

  std::error_code ec;
  if (!index.raw_dir_.empty() && std::filesystem::is_directory(index.raw_dir_, ec)) {
    auto raw = std::make_shared<std::map<std::string, DescriptorSequence>>();
    for (auto& s : read_sequence_dir(index.raw_dir_)) {
      std::string id = s.video_id();
      raw->emplace(std::move(id), std::move(s));
    }
    index.raw_ = std::move(raw);
  }
  return index;
}

const DescriptorSequence& Index::raw(const std::string& video_id) const {
  if (!raw_) {
    throw IoError("raw descriptor store unavailable (directory '" + raw_dir_.string() + "')");
  }
  auto it = raw_->find(video_id);
  if (it == raw_->end()) throw IoError("raw descriptors missing for " + video_id);
  return it->second;
}

std::ptrdiff_t Index::find(const std::string& video_id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].video_id == video_id) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

std::size_t Index::payload_bytes() const {
  std::size_t total = 0;
  for (const auto& e : entries_) {
    if (e.code) total += e.code->codes.size();
  }
  return total;
}

Index build_index(const std::filesystem::path& descriptor_dir, const IndexConfig& config,
                  const std::filesystem::path& out) {
  auto index = Index::build(read_sequence_dir(descriptor_dir), config, descriptor_dir);
  if (!out.empty()) index.save(out);
  return index;
}

}  // namespace cte
