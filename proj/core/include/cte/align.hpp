#pragma once

// Global timeline alignment from pairwise matches.
//
// Sign convention used throughout: an edge (i, j, delta_ij) asserts
// t_j ~= t_i + delta_ij, where t_x is the global time (seconds) of the first
// frame of anchor x. Residuals are r_ij = t_j - t_i - delta_ij.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cte/matcher.hpp"

namespace cte {

using AnchorId = std::int32_t;

/// Frames [start, end) of one video, the unit placed on the timeline.
struct AnchorSegment {
  AnchorId anchor_id = 0;
  std::string video_id;
  std::int64_t start = 0;
  std::int64_t end = 0;

  friend bool operator==(const AnchorSegment&, const AnchorSegment&) = default;
};

enum class LinkKind : std::uint8_t { kMatch, kOverlap };

struct MatchEdge {
  AnchorId i = 0;
  AnchorId j = 0;
  double delta_sec = 0.0;
  double score = 0.0;
  LinkKind kind = LinkKind::kMatch;

  friend bool operator==(const MatchEdge&, const MatchEdge&) = default;
};

struct SolveOptions {
  double tolerance = 0.5;  // tau, seconds
  // Edge indices placed in the consistent set before the spanning tree.
  std::vector<std::size_t> forced_edges;
  // Anchor -> time. The lowest pinned anchor of a component becomes its
  // gauge at the pinned time instead of the lowest anchor at t = 0.
  std::map<AnchorId, double> pinned;
};

struct GlobalAlignment {
  std::map<AnchorId, double> start_times;
  std::vector<std::vector<AnchorId>> components;  // each sorted, ordered by first id
  std::vector<std::size_t> retained;               // sorted edge indices (the set C)
  std::size_t iterations = 0;                      // least-squares rounds, all components
  // Retained edges whose final |residual| >= tolerance (growth never removes).
  std::vector<std::size_t> violations;
  double max_retained_residual = 0.0;

  // Index into `components`, or -1 for unknown anchors.
  int component_of(AnchorId id) const;
};

/// Maximum spanning tree per component, then alternating exact least squares
/// over the consistent set and growth by every edge with residual < tau,
/// until no edge is added.
GlobalAlignment solve_alignment(std::span<const AnchorSegment> anchors,
                                std::span<const MatchEdge> edges,
                                const SolveOptions& options = {});

double residual(const GlobalAlignment& alignment, const MatchEdge& edge);

struct AnchorGraph {
  std::vector<AnchorSegment> anchors;
  std::vector<MatchEdge> edges;
};

/// One anchor per side of every refined match with score >= min_score, an
/// m-link between them weighted by the refined score, and an o-link between
/// every pair of temporally overlapping anchors of one video weighted by
/// overlap seconds plus the largest m-link score.
AnchorGraph build_anchor_graph(std::span<const MatchCandidate> matches, double fps,
                               double min_score);

struct VideoInfo {
  std::string video_id;
  std::size_t frames = 0;
};

/// Whole videos as anchors (ids follow `videos` order), m-links with
/// delta = delta_frames / fps and the peak score, for matches with
/// score >= min_score.
AnchorGraph unedited_graph(std::span<const VideoInfo> videos,
                           std::span<const MatchCandidate> matches, double fps,
                           double min_score);

struct UneditedAlignment {
  AnchorGraph graph;
  GlobalAlignment alignment;
};

UneditedAlignment solve_unedited(std::span<const VideoInfo> videos,
                                 std::span<const MatchCandidate> matches, double fps,
                                 double tolerance,
                                 double min_score = -std::numeric_limits<double>::infinity());

struct FramePlacement {
  double time_sec = 0.0;
  int component = -1;
  AnchorId anchor = 0;
};

// video_id -> one slot per frame up to the last anchored frame.
using FrameOffsets = std::map<std::string, std::vector<std::optional<FramePlacement>>>;

/// Every frame covered by an anchor gets t_anchor + (f - start) / fps from
/// the covering anchor with the highest retained m-link score (lowest id on
/// ties). Uncovered frames stay empty.
FrameOffsets resolve_frame_offsets(const GlobalAlignment& alignment,
                                   std::span<const AnchorSegment> anchors,
                                   std::span<const MatchEdge> edges, double fps);

// {components: [{anchors: [{anchor_id, video_id, start_frame, end_frame,
// t_sec}], retained_edges: [{edge, i, j, delta_sec, score, kind}]}]}
nlohmann::json alignment_to_json(const GlobalAlignment& alignment,
                                 std::span<const AnchorSegment> anchors,
                                 std::span<const MatchEdge> edges);

nlohmann::json to_json(const MatchEdge& edge);

}  // namespace cte
