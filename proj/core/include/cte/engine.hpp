#pragma once

// Index lifecycle (build, persist, load) and the query pipeline: encode the
// query at every padded size the database needs, expand shorter database
// entries on the fly, score every entry (exact spectra or PQ codes), take
// the peak per entry, rank, and optionally refine boundaries on the
// shortlist against the raw descriptors.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cte/cpq.hpp"
#include "cte/matcher.hpp"
#include "cte/seqdesc.hpp"
#include "cte/spectral.hpp"

namespace cte {

struct IndexConfig {
  Pruning pruning = Pruning::fraction(4);
  double lambda = kLambdaNearDuplicate;
  bool regularize = true;
  // 0 keeps uncompressed spectra (exact path); otherwise PQ subquantizers.
  std::size_t pq_subquantizers = 0;
  std::size_t pq_centroids = 256;
  std::size_t train_samples = 100000;
  std::size_t train_iters = 25;
  // Per-frequency normalization; unset means "on iff compressed".
  std::optional<bool> normalize_freqs;
  double min_score = 0.0;
  double tau = 0.5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  bool compressed() const noexcept { return pq_subquantizers > 0; }
  bool normalize() const noexcept { return normalize_freqs.value_or(compressed()); }
};

nlohmann::json to_json(const IndexConfig& config);
IndexConfig index_config_from_json(const nlohmann::json& j);

struct IndexEntry {
  std::string video_id;
  std::size_t n = 0;
  std::size_t padded = 0;
  std::optional<SpectralDescriptor> spectral;  // exact path
  std::optional<PQCode> code;                  // compressed path
};

class Index {
 public:
  /// Encodes every sequence (pad, transform, prune, normalize, optional PQ).
  /// Sequences must share d and fps and have distinct ids. The sequences
  /// are retained as the raw store for boundary refinement.
  static Index build(std::vector<DescriptorSequence> sequences, const IndexConfig& config,
                     std::filesystem::path raw_dir = {});

  /// Loads the index and, when its raw directory exists, the raw store.
  static Index load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;

  const IndexConfig& config() const noexcept { return config_; }
  std::size_t dim() const noexcept { return dim_; }
  float fps() const noexcept { return fps_; }
  std::size_t n_max() const noexcept { return n_max_; }
  const std::optional<PQCodebook>& codebook() const noexcept { return codebook_; }
  std::span<const IndexEntry> entries() const noexcept { return entries_; }
  const std::filesystem::path& raw_dir() const noexcept { return raw_dir_; }

  bool has_raw() const noexcept { return raw_ != nullptr; }
  const DescriptorSequence& raw(const std::string& video_id) const;
  // Index of `video_id` in entries(), or -1.
  std::ptrdiff_t find(const std::string& video_id) const;

  /// Bytes of PQ codes (sum of p * n_kept) or 0 for the exact path.
  std::size_t payload_bytes() const;

 private:
  IndexConfig config_;
  std::size_t dim_ = 0;
  float fps_ = 15.0f;
  std::size_t n_max_ = 0;
  std::optional<PQCodebook> codebook_;
  std::vector<IndexEntry> entries_;
  std::filesystem::path raw_dir_;
  std::shared_ptr<const std::map<std::string, DescriptorSequence>> raw_;
};

// CTEI: "CTEI", u8 version, config JSON string, raw dir string, u32 d,
// f32 fps, u8 has_codebook, [CTEQ], u32 entries, per entry u32 n, u32 N and
// a CTEC (compressed) or CTES (exact) record.
inline constexpr std::uint8_t kCteiVersion = 1;

/// Builds from every *.cted file in `descriptor_dir` and, when `out` is
/// non-empty, persists the index there.
Index build_index(const std::filesystem::path& descriptor_dir, const IndexConfig& config,
                  const std::filesystem::path& out = {});

struct QueryOptions {
  std::size_t top_k = 100;
  bool refine = false;
  std::size_t threads = 1;
};

std::vector<MatchCandidate> query(const Index& index, const DescriptorSequence& q,
                                  const QueryOptions& options = {});

/// Scores `q` against the listed entries only (indices into entries()).
std::vector<MatchCandidate> query_entries(const Index& index, const DescriptorSequence& q,
                                          std::span<const std::size_t> entries,
                                          const QueryOptions& options);

/// Each entry i queried against every entry j > i: N(N-1)/2 candidates.
/// Needs the raw store.
std::vector<MatchCandidate> all_pairs_match(const Index& index, bool refine,
                                            std::size_t threads = 1);

}  // namespace cte
