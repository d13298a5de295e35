#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include "binary_io.hpp"
#include "cte/errors.hpp"
#include "cte/service.hpp"

namespace cte {
namespace {

std::vector<VideoInfo> video_infos(const Index& index) {
  std::vector<VideoInfo> out;
  for (const auto& e : index.entries()) out.push_back({e.video_id, e.n});
  return out;
}

AnchorGraph graph_from_index(const Index& index, const SessionOptions& options) {
  const auto matches = all_pairs_match(index, true, options.threads);
  if (options.edited) return build_anchor_graph(matches, index.fps(), options.min_score);
  return unedited_graph(video_infos(index), matches, index.fps(), options.min_score);
}

}  // namespace

Session::Session(const Index& index, SessionOptions options)
    : Session(graph_from_index(index, options), video_infos(index), index.fps(),
              std::move(options), &index) {}

Session::Session(AnchorGraph graph, std::vector<VideoInfo> videos, double fps,
                 SessionOptions options, const Index* index)
    : graph_(std::move(graph)),
      videos_(std::move(videos)),
      fps_(fps),
      options_(std::move(options)),
      index_(index) {
  if (!(options_.tolerance > 0.0)) throw ValidationError("tolerance must be > 0");
  std::unique_lock lock(mutex_);
  resolve_locked();
}

void Session::resolve_locked() {
  std::vector<MatchEdge> kept;
  std::vector<std::size_t> original;
  for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
    if (rejected_.count(e)) continue;
    original.push_back(e);
    kept.push_back(graph_.edges[e]);
  }
  SolveOptions opts;
  opts.tolerance = options_.tolerance;
  opts.pinned = pinned_;
  for (std::size_t k = 0; k < original.size(); ++k) {
    if (accepted_.count(original[k])) opts.forced_edges.push_back(k);
  }
  auto result = solve_alignment(graph_.anchors, kept, opts);
  for (auto& e : result.retained) e = original[e];
  for (auto& e : result.violations) e = original[e];
  std::sort(result.retained.begin(), result.retained.end());
  std::sort(result.violations.begin(), result.violations.end());
  alignment_ = std::move(result);
}

const AnchorSegment& Session::anchor_locked(AnchorId id) const {
  for (const auto& a : graph_.anchors) {
    if (a.anchor_id == id) return a;
  }
  throw NotFoundError("unknown anchor " + std::to_string(id));
}

nlohmann::json Session::state() const {
  std::shared_lock lock(mutex_);
  nlohmann::json pins = nlohmann::json::array();
  for (const auto& [id, t] : pinned_) pins.push_back({{"anchor_id", id}, {"t_sec", t}});
  return {{"accepted", accepted_}, {"rejected", rejected_}, {"pinned", pins}, {"log", log_}};
}

void Session::restore(const nlohmann::json& state) {
  std::unique_lock lock(mutex_);
  try {
    accepted_ = state.at("accepted").get<std::set<std::size_t>>();
    rejected_ = state.at("rejected").get<std::set<std::size_t>>();
    pinned_.clear();
    for (const auto& p : state.at("pinned")) {
      pinned_[p.at("anchor_id").get<AnchorId>()] = p.at("t_sec").get<double>();
    }
    log_ = state.value("log", std::vector<nlohmann::json>{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed session state: ") + e.what());
  }
  for (std::size_t e : accepted_) {
    if (e >= graph_.edges.size()) throw FormatError("session references unknown edge");
  }
  for (std::size_t e : rejected_) {
    if (e >= graph_.edges.size()) throw FormatError("session references unknown edge");
  }
  resolve_locked();
}

void Session::snapshot_locked() const {
  if (options_.session_file.empty()) return;
  nlohmann::json pins = nlohmann::json::array();
  for (const auto& [id, t] : pinned_) pins.push_back({{"anchor_id", id}, {"t_sec", t}});
  nlohmann::json s = {
      {"accepted", accepted_}, {"rejected", rejected_}, {"pinned", pins}, {"log", log_}};
  auto tmp = options_.session_file;
  tmp += ".tmp";
  detail::write_file(tmp, s.dump(2));
  std::error_code ec;
  std::filesystem::rename(tmp, options_.session_file, ec);
  if (ec) throw IoError("cannot write session file: " + ec.message());
}

nlohmann::json Session::videos() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : videos_) {
    out.push_back({{"video_id", v.video_id},
                   {"frames", v.frames},
                   {"duration_sec", static_cast<double>(v.frames) / fps_}});
  }
  return out;
}

nlohmann::json Session::anchors() const {
  std::shared_lock lock(mutex_);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : graph_.anchors) {
    nlohmann::json j = {{"anchor_id", a.anchor_id},
                        {"video_id", a.video_id},
                        {"start_frame", a.start},
                        {"end_frame", a.end},
                        {"component", alignment_.component_of(a.anchor_id)}};
    auto it = alignment_.start_times.find(a.anchor_id);
    j["t_sec"] = it == alignment_.start_times.end() ? nlohmann::json()
                                                    : nlohmann::json(it->second);
    out.push_back(std::move(j));
  }
  return out;
}

nlohmann::json Session::hypotheses(AnchorId anchor, std::size_t top_k) const {
  std::shared_lock lock(mutex_);
  anchor_locked(anchor);
  std::vector<std::size_t> incident;
  for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
    const auto& edge = graph_.edges[e];
    if (edge.kind != LinkKind::kMatch || rejected_.count(e)) continue;
    if (edge.i == anchor || edge.j == anchor) incident.push_back(e);
  }
  std::stable_sort(incident.begin(), incident.end(), [&](std::size_t a, std::size_t b) {
    return graph_.edges[a].score > graph_.edges[b].score;
  });
  if (top_k > 0 && incident.size() > top_k) incident.resize(top_k);

  nlohmann::json out = nlohmann::json::array();
  for (std::size_t e : incident) {
    const auto& edge = graph_.edges[e];
    const AnchorId other = edge.i == anchor ? edge.j : edge.i;
    // Where this edge would put `anchor`, given the other end's current time.
    const double t_other = alignment_.start_times.at(other);
    const double proposed = edge.j == anchor ? t_other + edge.delta_sec : t_other - edge.delta_sec;
    auto j = to_json(edge);
    j["edge"] = e;
    j["other_anchor"] = other;
    j["proposed_t_sec"] = proposed;
    j["accepted"] = accepted_.count(e) > 0;
    j["retained"] = std::binary_search(alignment_.retained.begin(), alignment_.retained.end(), e);
    out.push_back(std::move(j));
  }
  return out;
}

nlohmann::json Session::timeline_locked() const {
  auto j = alignment_to_json(alignment_, graph_.anchors, graph_.edges);
  j["iterations"] = alignment_.iterations;
  j["violations"] = alignment_.violations;
  j["max_retained_residual"] = alignment_.max_retained_residual;
  j["accepted"] = accepted_;
  j["rejected"] = rejected_;
  nlohmann::json pins = nlohmann::json::array();
  for (const auto& [id, t] : pinned_) pins.push_back({{"anchor_id", id}, {"t_sec", t}});
  j["pinned"] = pins;
  return j;
}

nlohmann::json Session::timeline() const {
  std::shared_lock lock(mutex_);
  return timeline_locked();
}

nlohmann::json Session::strip(const std::string& video_id) const {
  if (index_ == nullptr || !index_->has_raw()) {
    throw IoError("raw descriptors unavailable for strips");
  }
  const auto& seq = index_->raw(video_id);
  std::vector<double> values;
  for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
    const auto a = seq.frame(t);
    const auto b = seq.frame(t + 1);
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += static_cast<double>(a[k]) * b[k];
    values.push_back(dot);
  }
  return {{"video_id", video_id}, {"values", values}};
}

nlohmann::json Session::accept(std::size_t edge) {
  std::unique_lock lock(mutex_);
  if (edge >= graph_.edges.size()) throw NotFoundError("unknown edge " + std::to_string(edge));
  rejected_.erase(edge);
  accepted_.insert(edge);
  log_.push_back({{"op", "accept"}, {"edge", edge}});
  resolve_locked();
  snapshot_locked();
  return timeline_locked();
}

nlohmann::json Session::reject(std::size_t edge) {
  std::unique_lock lock(mutex_);
  if (edge >= graph_.edges.size()) throw NotFoundError("unknown edge " + std::to_string(edge));
  accepted_.erase(edge);
  rejected_.insert(edge);
  log_.push_back({{"op", "reject"}, {"edge", edge}});
  resolve_locked();
  snapshot_locked();
  return timeline_locked();
}

nlohmann::json Session::manual(AnchorId anchor, double t_sec) {
  if (!std::isfinite(t_sec)) throw ValidationError("t_sec must be finite");
  std::unique_lock lock(mutex_);
  anchor_locked(anchor);
  pinned_[anchor] = t_sec;
  log_.push_back({{"op", "manual"}, {"anchor_id", anchor}, {"t_sec", t_sec}});
  resolve_locked();
  snapshot_locked();
  return timeline_locked();
}

nlohmann::json Session::solve() {
  std::unique_lock lock(mutex_);
  resolve_locked();
  snapshot_locked();
  return timeline_locked();
}

}  // namespace cte
