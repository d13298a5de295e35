#pragma once

// Circulant matching of spectral descriptors: regularized cross-correlation
// over every temporal shift with one inverse FFT, peak extraction, boundary
// refinement, and the direct time-domain correlation used as an oracle.
//
// Offset convention: a shift `delta` means frame 0 of the database sequence
// b sits at frame `delta` of the query q, i.e. q_t is compared with
// b_{t - delta}.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cte/seqdesc.hpp"
#include "cte/spectral.hpp"

namespace cte {

inline constexpr double kLambdaNearDuplicate = 0.1;
inline constexpr double kLambdaCopyDetection = 0.001;

/// values[k] is the score at shift k * stride (mod padded).
struct ScoreVector {
  std::vector<double> values;
  std::size_t stride = 1;
  std::size_t padded = 0;
};

struct Peak {
  std::int64_t delta = 0;  // in (-padded/2, padded/2]
  double score = 0.0;
};

struct Refinement {
  std::int64_t delta = 0;  // resolved shift, frames
  std::int64_t t_start = 0;  // inclusive query frame
  std::int64_t t_end = 0;    // inclusive query frame
  double refined_score = 0.0;
};

struct MatchCandidate {
  std::string query_id;
  std::string db_id;
  std::int64_t delta = 0;
  double score = 0.0;
  std::optional<Refinement> refined;
};

/// values[delta] = sum_t <q_t, b_{(t - delta) mod N}>, frames outside the
/// sequences being zero. O(N^2 d); test oracle and reference.
ScoreVector score_direct(const DescriptorSequence& q, const DescriptorSequence& b,
                         std::size_t circular_length);

/// Turns per-frequency cross-spectrum terms sum_j conj(Q_j) B_j (optionally
/// already divided by the regularization denominator) into a score vector.
/// Full mode inverts the Hermitian spectrum of length N; pruned mode inverts
/// a Hermitian spectrum of length 2 * n_kept with a zero Nyquist bin.
ScoreVector spectrum_to_scores(std::span<const Complex> cross, SpectrumMode mode,
                               std::size_t padded);

/// Circulant score between two descriptors of equal padded length and mode.
/// With `regularize`, every frequency is divided by
/// sum_j |Q_j|^2 + lambda.
ScoreVector score(const SpectralDescriptor& q, const SpectralDescriptor& b, double lambda,
                  bool regularize);

/// Argmax (lowest index on ties), scaled by the stride and wrapped into
/// (-N/2, N/2].
Peak find_peak(const ScoreVector& sv);

/// Frame-level similarity S_t = <q_t, b_{t - delta}> around a coarse shift.
///
/// Candidate shifts are delta + k * period (every k giving a non-empty
/// overlap; only delta itself when period is 0), each widened by
/// +-search_radius frames. The candidate with the largest sum of S_t wins.
/// The matching run is the maximal contiguous stretch containing argmax S_t
/// with S_t >= max S_t / 2; refined_score is its sum.
Refinement refine_boundaries(const DescriptorSequence& q, const DescriptorSequence& b,
                             std::int64_t delta, std::size_t period = 0,
                             std::size_t search_radius = 0);

/// Per-frame similarity profile at a fixed shift (zero where b is absent).
std::vector<double> frame_similarities(const DescriptorSequence& q,
                                       const DescriptorSequence& b, std::int64_t delta);

// {query_id, db_id, delta_frames, score, t_start, t_end, refined_score};
// the last three are null without refinement.
nlohmann::json to_json(const MatchCandidate& m);
MatchCandidate match_from_json(const nlohmann::json& j);

}  // namespace cte
