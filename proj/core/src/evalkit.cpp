#include "cte/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "cte/errors.hpp"

namespace cte {
namespace {

struct Interval {
  double begin;
  double end;
};

Interval global_interval(const GroundTruthEntry& e, double fps) {
  return {e.global_start_sec,
          e.global_start_sec + static_cast<double>(e.end_frame - e.start_frame) / fps};
}

double overlap_seconds(const GroundTruthEntry& a, const GroundTruthEntry& b, double fps) {
  const auto x = global_interval(a, fps);
  const auto y = global_interval(b, fps);
  return std::min(x.end, y.end) - std::max(x.begin, y.begin);
}

// Master-timeline time of the video's frame 0 implied by segment e.
double true_origin(const GroundTruthEntry& e, double fps) {
  return e.global_start_sec - static_cast<double>(e.start_frame) / fps;
}

template <typename F>
void for_each_gt_pair(const GroundTruthTimeline& gt, double fps, F&& fn) {
  for (std::size_t a = 0; a < gt.entries.size(); ++a) {
    for (std::size_t b = a + 1; b < gt.entries.size(); ++b) {
      const auto& x = gt.entries[a];
      const auto& y = gt.entries[b];
      if (x.video_id == y.video_id) continue;
      if (overlap_seconds(x, y, fps) <= 0.0) continue;
      fn(x, y);
    }
  }
}

}  // namespace

std::map<std::string, VideoPlacement> video_placements(const GlobalAlignment& alignment,
                                                       std::span<const AnchorSegment> anchors,
                                                       double fps) {
  std::vector<const AnchorSegment*> ordered;
  for (const auto& a : anchors) ordered.push_back(&a);
  std::sort(ordered.begin(), ordered.end(),
            [](auto* x, auto* y) { return x->anchor_id < y->anchor_id; });
  std::map<std::string, VideoPlacement> out;
  for (const auto* a : ordered) {
    auto t = alignment.start_times.find(a->anchor_id);
    if (t == alignment.start_times.end()) continue;
    out.try_emplace(a->video_id,
                    VideoPlacement{alignment.component_of(a->anchor_id),
                                   t->second - static_cast<double>(a->start) / fps});
  }
  return out;
}

PasReport pas_unedited(const GroundTruthTimeline& gt,
                       const std::map<std::string, VideoPlacement>& placements, double fps,
                       double tolerance) {
  PasReport report{0.0, 0, tolerance};
  for_each_gt_pair(gt, fps, [&](const GroundTruthEntry& x, const GroundTruthEntry& y) {
    ++report.gt_pairs;
    auto px = placements.find(x.video_id);
    auto py = placements.find(y.video_id);
    if (px == placements.end() || py == placements.end()) return;
    if (px->second.component < 0 || px->second.component != py->second.component) return;
    const double recovered = py->second.origin_sec - px->second.origin_sec;
    const double truth = true_origin(y, fps) - true_origin(x, fps);
    if (std::abs(recovered - truth) < tolerance) report.pas += 1.0;
  });
  return report;
}

PasReport pas_fractional(const GroundTruthTimeline& gt, const FrameOffsets& offsets,
                         double fps, double tolerance) {
  PasReport report{0.0, 0, tolerance};
  auto placement = [&](const std::string& video,
                       std::int64_t frame) -> const std::optional<FramePlacement>* {
    auto it = offsets.find(video);
    if (it == offsets.end() || frame < 0 ||
        static_cast<std::size_t>(frame) >= it->second.size()) {
      return nullptr;
    }
    return &it->second[static_cast<std::size_t>(frame)];
  };

  for_each_gt_pair(gt, fps, [&](const GroundTruthEntry& x, const GroundTruthEntry& y) {
    ++report.gt_pairs;
    std::size_t total = 0;
    std::size_t correct = 0;
    for (std::int64_t fx = x.start_frame; fx < x.end_frame; ++fx) {
      const double g = x.global_start_sec + static_cast<double>(fx - x.start_frame) / fps;
      const auto fy = y.start_frame +
                      static_cast<std::int64_t>(std::llround((g - y.global_start_sec) * fps));
      if (fy < y.start_frame || fy >= y.end_frame) continue;
      ++total;
      const auto* px = placement(x.video_id, fx);
      const auto* py = placement(y.video_id, fy);
      if (!px || !py || !px->has_value() || !py->has_value()) continue;
      if ((*px)->component < 0 || (*px)->component != (*py)->component) continue;
      const double truth = (y.global_start_sec + static_cast<double>(fy - y.start_frame) / fps) - g;
      const double recovered = (*py)->time_sec - (*px)->time_sec;
      if (std::abs(recovered - truth) < tolerance) ++correct;
    }
    if (total > 0) report.pas += static_cast<double>(correct) / static_cast<double>(total);
  });
  return report;
}

std::vector<LabeledScore> label_matches(std::span<const MatchCandidate> matches,
                                        const GroundTruthTimeline& gt, double fps,
                                        double tolerance) {
  std::map<std::string, std::vector<const GroundTruthEntry*>> by_video;
  for (const auto& e : gt.entries) by_video[e.video_id].push_back(&e);

  std::vector<LabeledScore> out;
  out.reserve(matches.size());
  for (const auto& m : matches) {
    const std::int64_t delta = m.refined ? m.refined->delta : m.delta;
    const double offset = static_cast<double>(delta) / fps;
    bool correct = false;
    auto qi = by_video.find(m.query_id);
    auto bi = by_video.find(m.db_id);
    if (qi != by_video.end() && bi != by_video.end()) {
      for (const auto* sq : qi->second) {
        for (const auto* sb : bi->second) {
          if (overlap_seconds(*sq, *sb, fps) <= 0.0) continue;
          const double truth = true_origin(*sb, fps) - true_origin(*sq, fps);
          if (std::abs(offset - truth) < tolerance) correct = true;
        }
      }
    }
    out.push_back({m.refined ? m.refined->refined_score : m.score, correct});
  }
  return out;
}

std::vector<PrPoint> match_pr(std::span<const LabeledScore> matches,
                              std::size_t total_positives) {
  std::vector<std::size_t> order(matches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return matches[a].score > matches[b].score;
  });
  std::size_t positives = total_positives;
  if (positives == 0) {
    for (const auto& m : matches) positives += m.correct ? 1 : 0;
  }
  std::vector<PrPoint> curve;
  curve.reserve(matches.size());
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (matches[order[rank]].correct) ++tp;
    curve.push_back({positives ? static_cast<double>(tp) / static_cast<double>(positives) : 0.0,
                     static_cast<double>(tp) / static_cast<double>(rank + 1)});
  }
  return curve;
}

double pr_area(std::span<const PrPoint> curve) {
  double area = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : curve) {
    area += p.precision * (p.recall - prev_recall);
    prev_recall = p.recall;
  }
  return area;
}

MapReport mean_average_precision(
    const std::map<std::string, std::vector<std::string>>& rankings,
    const std::map<std::string, std::set<std::string>>& relevance) {
  MapReport report;
  double total = 0.0;
  for (const auto& [query, ranked] : rankings) {
    auto rel = relevance.find(query);
    if (rel == relevance.end() || rel->second.empty()) {
      report.excluded.push_back(query);
      continue;
    }
    std::set<std::string> seen;
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (!seen.insert(ranked[r]).second) {
        throw ValidationError("ranking for " + query + " lists " + ranked[r] + " twice");
      }
      if (rel->second.count(ranked[r])) {
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    }
    total += sum / static_cast<double>(rel->second.size());
    ++report.evaluated;
  }
  report.map = report.evaluated ? total / static_cast<double>(report.evaluated) : 0.0;
  return report;
}

std::vector<double> mmv_descriptor(const DescriptorSequence& seq) {
  std::vector<double> mean(seq.dim(), 0.0);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    auto f = seq.frame(t);
    for (std::size_t j = 0; j < seq.dim(); ++j) mean[j] += f[j];
  }
  double sq = 0.0;
  for (double v : mean) sq += v * v;
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : mean) v *= inv;
  }
  return mean;
}

double mmv_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("descriptor dimensions differ");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

nlohmann::json to_json(const PasReport& report) {
  return {{"pas", report.pas}, {"gt_pairs", report.gt_pairs}, {"tolerance", report.tolerance}};
}

nlohmann::json to_json(const MapReport& report) {
  return {{"map", report.map}, {"evaluated", report.evaluated}, {"excluded", report.excluded}};
}

}  // namespace cte
