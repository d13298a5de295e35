#pragma once

// Retrieval and alignment quality measures: pairwise alignment score (whole
// videos and fractional over anchor-resolved frames), match precision /
// recall, mean average precision, and the mean-descriptor baseline.

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cte/align.hpp"
#include "cte/matcher.hpp"
#include "cte/seqdesc.hpp"

namespace cte {

struct PasReport {
  double pas = 0.0;
  std::size_t gt_pairs = 0;
  double tolerance = 0.5;
};

/// Where an alignment puts a video: its component and the global time of
/// its frame 0.
struct VideoPlacement {
  int component = -1;
  double origin_sec = 0.0;
};

/// One placement per video from the lowest-id anchor of that video.
std::map<std::string, VideoPlacement> video_placements(const GlobalAlignment& alignment,
                                                       std::span<const AnchorSegment> anchors,
                                                       double fps);

/// Counts ground-truth pairs (segments of different videos that overlap on
/// the master timeline) whose recovered relative offset is within
/// `tolerance` seconds. Videos must share a component to count.
PasReport pas_unedited(const GroundTruthTimeline& gt,
                       const std::map<std::string, VideoPlacement>& placements, double fps,
                       double tolerance);

/// Fractional variant: each overlapping ground-truth pair contributes the
/// fraction of its overlap frames whose recovered relative offset is within
/// tolerance. Unmapped frames count as wrong.
PasReport pas_fractional(const GroundTruthTimeline& gt, const FrameOffsets& offsets,
                         double fps, double tolerance);

struct LabeledScore {
  double score = 0.0;
  bool correct = false;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// A match is correct when some pair of ground-truth segments of its two
/// videos overlaps and implies the matched offset within tolerance.
std::vector<LabeledScore> label_matches(std::span<const MatchCandidate> matches,
                                        const GroundTruthTimeline& gt, double fps,
                                        double tolerance);

/// PR sweep over matches sorted by descending score (stable). Recall is
/// relative to `total_positives`, or to the number of correct matches when
/// it is 0.
std::vector<PrPoint> match_pr(std::span<const LabeledScore> matches,
                              std::size_t total_positives = 0);

/// Area under a PR curve as sum of precision * recall increment.
double pr_area(std::span<const PrPoint> curve);

struct MapReport {
  double map = 0.0;
  std::size_t evaluated = 0;
  std::vector<std::string> excluded;  // queries without relevant items
};

/// Mean over queries of AP = (1 / |relevant|) * sum of precision at each
/// relevant hit. Queries with an empty relevant set are excluded.
MapReport mean_average_precision(const std::map<std::string, std::vector<std::string>>& rankings,
                                 const std::map<std::string, std::set<std::string>>& relevance);

/// Mean of the frames, L2-normalized (zero stays zero).
std::vector<double> mmv_descriptor(const DescriptorSequence& seq);
double mmv_similarity(std::span<const double> a, std::span<const double> b);

nlohmann::json to_json(const PasReport& report);
nlohmann::json to_json(const MapReport& report);

}  // namespace cte
