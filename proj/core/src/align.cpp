#include "cte/align.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "cte/errors.hpp"

namespace cte {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct ComponentProblem {
  std::vector<std::size_t> nodes;  // local -> global node index
  std::vector<std::size_t> edges;  // edge indices inside the component
};

// Exact minimizer of sum over `active` edges of (t_j - t_i - delta)^2 with
// the gauge node fixed.
void solve_least_squares(const ComponentProblem& comp, std::span<const MatchEdge> edges,
                         const std::vector<bool>& active,
                         const std::vector<std::size_t>& edge_u,
                         const std::vector<std::size_t>& edge_v,
                         const std::unordered_map<std::size_t, std::size_t>& local,
                         std::size_t gauge_local, double gauge_value,
                         std::vector<double>& times_local) {
  const std::size_t n = comp.nodes.size();
  // Unknown index of each local node (gauge excluded).
  std::vector<std::ptrdiff_t> unknown(n, -1);
  std::ptrdiff_t next = 0;
  for (std::size_t u = 0; u < n; ++u) {
    if (u != gauge_local) unknown[u] = next++;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(next);
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t e : comp.edges) {
    if (!active[e]) continue;
    const std::size_t a = local.at(edge_u[e]);  // i
    const std::size_t b = local.at(edge_v[e]);  // j
    const double delta = edges[e].delta_sec;
    const auto ua = unknown[a];
    const auto ub = unknown[b];
    if (ua >= 0) {
      triplets.emplace_back(ua, ua, 1.0);
      rhs[ua] -= delta;
    }
    if (ub >= 0) {
      triplets.emplace_back(ub, ub, 1.0);
      rhs[ub] += delta;
    }
    if (ua >= 0 && ub >= 0) {
      triplets.emplace_back(ua, ub, -1.0);
      triplets.emplace_back(ub, ua, -1.0);
    } else if (ua >= 0) {
      rhs[ua] += gauge_value;
    } else if (ub >= 0) {
      rhs[ub] += gauge_value;
    }
  }
  times_local.assign(n, gauge_value);
  if (next == 0) return;
  Eigen::SparseMatrix<double> lap(next, next);
  lap.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lap);
  if (solver.info() != Eigen::Success) {
    throw ValidationError("alignment system is singular (disconnected consistent set)");
  }
  const Eigen::VectorXd x = solver.solve(rhs);
  for (std::size_t u = 0; u < n; ++u) {
    if (unknown[u] >= 0) times_local[u] = x[unknown[u]];
  }
}

}  // namespace

int GlobalAlignment::component_of(AnchorId id) const {
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (std::binary_search(components[c].begin(), components[c].end(), id)) {
      return static_cast<int>(c);
    }
  }
  return -1;
}

double residual(const GlobalAlignment& alignment, const MatchEdge& edge) {
  return alignment.start_times.at(edge.j) - alignment.start_times.at(edge.i) - edge.delta_sec;
}

GlobalAlignment solve_alignment(std::span<const AnchorSegment> anchors,
                                std::span<const MatchEdge> edges,
                                const SolveOptions& options) {
  if (!(options.tolerance > 0.0)) throw ValidationError("tolerance tau must be > 0");

  std::vector<AnchorId> ids;
  ids.reserve(anchors.size());
  for (const auto& a : anchors) ids.push_back(a.anchor_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ValidationError("duplicate anchor id");
  }
  auto node_of = [&](AnchorId id) -> std::size_t {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) {
      throw ValidationError("edge references unknown anchor " + std::to_string(id));
    }
    return static_cast<std::size_t>(it - ids.begin());
  };

  const std::size_t num_edges = edges.size();
  std::vector<std::size_t> edge_u(num_edges), edge_v(num_edges);
  std::vector<bool> usable(num_edges);
  DisjointSets components(ids.size());
  for (std::size_t e = 0; e < num_edges; ++e) {
    edge_u[e] = node_of(edges[e].i);
    edge_v[e] = node_of(edges[e].j);
    usable[e] = edge_u[e] != edge_v[e] && std::isfinite(edges[e].delta_sec);
    if (usable[e]) components.unite(edge_u[e], edge_v[e]);
  }

  // Spanning tree: forced edges first, then by descending score, lower index
  // on ties.
  std::vector<bool> in_c(num_edges, false);
  DisjointSets tree(ids.size());
  for (std::size_t e : options.forced_edges) {
    if (e >= num_edges) throw ValidationError("forced edge index out of range");
    if (!usable[e]) continue;
    in_c[e] = true;
    tree.unite(edge_u[e], edge_v[e]);
  }
  std::vector<std::size_t> order(num_edges);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return edges[a].score > edges[b].score;
  });
  for (std::size_t e : order) {
    if (!usable[e] || in_c[e]) continue;
    if (tree.unite(edge_u[e], edge_v[e])) in_c[e] = true;
  }

  // Group nodes and edges per component; roots are the smallest node.
  std::map<std::size_t, ComponentProblem> problems;
  for (std::size_t u = 0; u < ids.size(); ++u) problems[components.find(u)].nodes.push_back(u);
  for (std::size_t e = 0; e < num_edges; ++e) {
    if (usable[e]) problems[components.find(edge_u[e])].edges.push_back(e);
  }

  GlobalAlignment out;
  for (auto& [root, comp] : problems) {
    std::vector<AnchorId> members;
    for (std::size_t u : comp.nodes) members.push_back(ids[u]);
    out.components.push_back(members);

    std::size_t gauge_local = 0;
    double gauge_value = 0.0;
    for (std::size_t u = 0; u < comp.nodes.size(); ++u) {
      auto pin = options.pinned.find(ids[comp.nodes[u]]);
      if (pin != options.pinned.end()) {
        gauge_local = u;
        gauge_value = pin->second;
        break;
      }
    }

    std::vector<double> times;
    if (comp.nodes.size() > 1) {
      std::unordered_map<std::size_t, std::size_t> local;
      for (std::size_t u = 0; u < comp.nodes.size(); ++u) local[comp.nodes[u]] = u;
      for (;;) {
        solve_least_squares(comp, edges, in_c, edge_u, edge_v, local, gauge_local,
                            gauge_value, times);
        ++out.iterations;
        bool added = false;
        for (std::size_t e : comp.edges) {
          if (in_c[e]) continue;
          const double r = times[local[edge_v[e]]] - times[local[edge_u[e]]] - edges[e].delta_sec;
          if (std::abs(r) < options.tolerance) {
            in_c[e] = true;
            added = true;
          }
        }
        if (!added) break;
      }
    } else {
      times.assign(1, gauge_value);
    }
    for (std::size_t u = 0; u < comp.nodes.size(); ++u) {
      out.start_times[ids[comp.nodes[u]]] = times[u];
    }
  }

  for (std::size_t e = 0; e < num_edges; ++e) {
    if (!in_c[e]) continue;
    out.retained.push_back(e);
    const double r = std::abs(residual(out, edges[e]));
    out.max_retained_residual = std::max(out.max_retained_residual, r);
    if (r >= options.tolerance) out.violations.push_back(e);
  }
  return out;
}

AnchorGraph build_anchor_graph(std::span<const MatchCandidate> matches, double fps,
                               double min_score) {
  if (!(fps > 0.0)) throw ValidationError("fps must be > 0");
  AnchorGraph graph;
  double max_m_score = 0.0;
  for (const auto& m : matches) {
    if (m.score < min_score) continue;
    if (!m.refined) {
      throw ValidationError("match " + m.query_id + " -> " + m.db_id +
                            " lacks refined boundaries");
    }
    const auto& r = *m.refined;
    const auto qa = static_cast<AnchorId>(graph.anchors.size());
    graph.anchors.push_back({qa, m.query_id, r.t_start, r.t_end + 1});
    const auto ba = static_cast<AnchorId>(graph.anchors.size());
    graph.anchors.push_back({ba, m.db_id, r.t_start - r.delta, r.t_end - r.delta + 1});
    // Query frame f shows the same instant as database frame f - delta.
    const double delta =
        static_cast<double>(graph.anchors[ba].start + r.delta - graph.anchors[qa].start) / fps;
    graph.edges.push_back({qa, ba, delta, r.refined_score, LinkKind::kMatch});
    max_m_score = std::max(max_m_score, r.refined_score);
  }

  const std::size_t count = graph.anchors.size();
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = a + 1; b < count; ++b) {
      const auto& x = graph.anchors[a];
      const auto& y = graph.anchors[b];
      if (x.video_id != y.video_id) continue;
      const std::int64_t overlap = std::min(x.end, y.end) - std::max(x.start, y.start);
      if (overlap <= 0) continue;
      graph.edges.push_back({x.anchor_id, y.anchor_id,
                             static_cast<double>(y.start - x.start) / fps,
                             static_cast<double>(overlap) / fps + max_m_score,
                             LinkKind::kOverlap});
    }
  }
  return graph;
}

AnchorGraph unedited_graph(std::span<const VideoInfo> videos,
                           std::span<const MatchCandidate> matches, double fps,
                           double min_score) {
  if (!(fps > 0.0)) throw ValidationError("fps must be > 0");
  AnchorGraph graph;
  std::map<std::string, AnchorId> by_video;
  for (const auto& v : videos) {
    const auto id = static_cast<AnchorId>(graph.anchors.size());
    if (!by_video.emplace(v.video_id, id).second) {
      throw ValidationError("duplicate video " + v.video_id);
    }
    graph.anchors.push_back({id, v.video_id, 0, static_cast<std::int64_t>(v.frames)});
  }
  for (const auto& m : matches) {
    if (m.score < min_score || m.query_id == m.db_id) continue;
    auto qi = by_video.find(m.query_id);
    auto bi = by_video.find(m.db_id);
    if (qi == by_video.end() || bi == by_video.end()) {
      throw ValidationError("match references unknown video");
    }
    const std::int64_t delta = m.refined ? m.refined->delta : m.delta;
    graph.edges.push_back({qi->second, bi->second, static_cast<double>(delta) / fps, m.score,
                           LinkKind::kMatch});
  }
  return graph;
}

UneditedAlignment solve_unedited(std::span<const VideoInfo> videos,
                                 std::span<const MatchCandidate> matches, double fps,
                                 double tolerance, double min_score) {
  UneditedAlignment out{unedited_graph(videos, matches, fps, min_score), {}};
  SolveOptions options;
  options.tolerance = tolerance;
  out.alignment = solve_alignment(out.graph.anchors, out.graph.edges, options);
  return out;
}

FrameOffsets resolve_frame_offsets(const GlobalAlignment& alignment,
                                   std::span<const AnchorSegment> anchors,
                                   std::span<const MatchEdge> edges, double fps) {
  if (!(fps > 0.0)) throw ValidationError("fps must be > 0");
  std::map<AnchorId, double> support;
  for (std::size_t e : alignment.retained) {
    const auto& edge = edges[e];
    if (edge.kind != LinkKind::kMatch) continue;
    for (AnchorId a : {edge.i, edge.j}) {
      auto [it, inserted] = support.try_emplace(a, edge.score);
      if (!inserted) it->second = std::max(it->second, edge.score);
    }
  }
  auto support_of = [&](AnchorId a) {
    auto it = support.find(a);
    return it == support.end() ? 0.0 : it->second;
  };

  std::vector<const AnchorSegment*> ordered;
  for (const auto& a : anchors) ordered.push_back(&a);
  std::sort(ordered.begin(), ordered.end(),
            [](auto* x, auto* y) { return x->anchor_id < y->anchor_id; });

  FrameOffsets out;
  std::map<std::string, std::vector<double>> best_support;
  for (const auto* a : ordered) {
    auto t = alignment.start_times.find(a->anchor_id);
    if (t == alignment.start_times.end() || a->end <= a->start || a->start < 0) continue;
    auto& slots = out[a->video_id];
    auto& best = best_support[a->video_id];
    if (slots.size() < static_cast<std::size_t>(a->end)) {
      slots.resize(static_cast<std::size_t>(a->end));
      best.resize(static_cast<std::size_t>(a->end), -std::numeric_limits<double>::infinity());
    }
    const double s = support_of(a->anchor_id);
    const int comp = alignment.component_of(a->anchor_id);
    for (std::int64_t f = a->start; f < a->end; ++f) {
      const auto idx = static_cast<std::size_t>(f);
      // Strictly greater keeps the lower id on ties (ids visited in order).
      if (slots[idx] && s <= best[idx]) continue;
      slots[idx] = FramePlacement{t->second + static_cast<double>(f - a->start) / fps, comp,
                                  a->anchor_id};
      best[idx] = s;
    }
  }
  return out;
}

nlohmann::json to_json(const MatchEdge& edge) {
  return {{"i", edge.i},
          {"j", edge.j},
          {"delta_sec", edge.delta_sec},
          {"score", edge.score},
          {"kind", edge.kind == LinkKind::kMatch ? "m-link" : "o-link"}};
}

nlohmann::json alignment_to_json(const GlobalAlignment& alignment,
                                 std::span<const AnchorSegment> anchors,
                                 std::span<const MatchEdge> edges) {
  std::map<AnchorId, const AnchorSegment*> by_id;
  for (const auto& a : anchors) by_id[a.anchor_id] = &a;

  nlohmann::json comps = nlohmann::json::array();
  std::vector<nlohmann::json> retained(alignment.components.size(), nlohmann::json::array());
  for (std::size_t e : alignment.retained) {
    const int c = alignment.component_of(edges[e].i);
    auto j = to_json(edges[e]);
    j["edge"] = e;
    retained[static_cast<std::size_t>(c)].push_back(std::move(j));
  }
  for (std::size_t c = 0; c < alignment.components.size(); ++c) {
    nlohmann::json list = nlohmann::json::array();
    for (AnchorId id : alignment.components[c]) {
      const auto* a = by_id.at(id);
      list.push_back({{"anchor_id", id},
                      {"video_id", a->video_id},
                      {"start_frame", a->start},
                      {"end_frame", a->end},
                      {"t_sec", alignment.start_times.at(id)}});
    }
    comps.push_back({{"anchors", std::move(list)}, {"retained_edges", std::move(retained[c])}});
  }
  return {{"components", std::move(comps)}};
}

}  // namespace cte
