// cte: build / query / align / eval / synth / serve.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cte/align.hpp"
#include "cte/engine.hpp"
#include "cte/errors.hpp"
#include "cte/evalkit.hpp"
#include "cte/seqdesc.hpp"
#include "cte/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw cte::IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw cte::FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw cte::IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<cte::MatchCandidate> matches_from(const json& j) {
  const json& list = j.is_object() ? j.at("matches") : j;
  std::vector<cte::MatchCandidate> out;
  for (const auto& m : list) out.push_back(cte::match_from_json(m));
  return out;
}

cte::MatchEdge edge_from_json(const json& j) {
  cte::MatchEdge e;
  e.i = j.at("i").get<cte::AnchorId>();
  e.j = j.at("j").get<cte::AnchorId>();
  e.delta_sec = j.at("delta_sec").get<double>();
  e.score = j.at("score").get<double>();
  e.kind = j.at("kind").get<std::string>() == "o-link" ? cte::LinkKind::kOverlap
                                                      : cte::LinkKind::kMatch;
  return e;
}

// Inverse of what `align` writes: graph plus solved alignment.
struct LoadedAlignment {
  double fps = 15.0;
  std::vector<cte::AnchorSegment> anchors;
  std::vector<cte::MatchEdge> edges;
  cte::GlobalAlignment alignment;
};

LoadedAlignment load_alignment(const fs::path& path) {
  const json j = read_json(path);
  LoadedAlignment a;
  try {
    a.fps = j.at("fps").get<double>();
    for (const auto& s : j.at("graph").at("anchors")) {
      a.anchors.push_back({s.at("anchor_id").get<cte::AnchorId>(),
                           s.at("video_id").get<std::string>(),
                           s.at("start_frame").get<std::int64_t>(),
                           s.at("end_frame").get<std::int64_t>()});
    }
    for (const auto& e : j.at("graph").at("edges")) a.edges.push_back(edge_from_json(e));
    for (const auto& c : j.at("alignment").at("components")) {
      std::vector<cte::AnchorId> ids;
      for (const auto& s : c.at("anchors")) {
        ids.push_back(s.at("anchor_id").get<cte::AnchorId>());
        a.alignment.start_times[ids.back()] = s.at("t_sec").get<double>();
      }
      for (const auto& e : c.at("retained_edges")) {
        a.alignment.retained.push_back(e.at("edge").get<std::size_t>());
      }
      a.alignment.components.push_back(std::move(ids));
    }
  } catch (const json::exception& e) {
    throw cte::FormatError(path.string() + ": " + e.what());
  }
  std::sort(a.alignment.retained.begin(), a.alignment.retained.end());
  return a;
}

void print_matches(const std::vector<cte::MatchCandidate>& ranked, float fps) {
  std::printf("%-5s %-24s %10s %9s %12s %8s %8s %12s\n", "rank", "db_id", "delta", "sec",
              "score", "t_start", "t_end", "refined");
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& m = ranked[r];
    std::printf("%-5zu %-24s %10lld %9.3f %12.6f", r + 1, m.db_id.c_str(),
                static_cast<long long>(m.delta), static_cast<double>(m.delta) / fps, m.score);
    if (m.refined) {
      std::printf(" %8lld %8lld %12.6f\n", static_cast<long long>(m.refined->t_start),
                  static_cast<long long>(m.refined->t_end), m.refined->refined_score);
    } else {
      std::printf(" %8s %8s %12s\n", "-", "-", "-");
    }
  }
}

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) {
  g_stop = 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"circulant temporal encoding: index, query and align descriptor sequences"};
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "Encode a directory of .cted files into an index");
  fs::path build_dir, build_out;
  std::string beta = "1/4";
  std::size_t pq = 0, pq_k = 256, train_samples = 100000, train_iters = 25, build_threads = 1;
  double lambda = cte::kLambdaNearDuplicate;
  std::uint64_t seed = 0;
  bool no_regularize = false;
  build->add_option("dir", build_dir, "Descriptor directory")->required();
  build->add_option("--out", build_out, "Index file")->required();
  build->add_option("--beta", beta, "Pruning: full or 1/<power of two>")->capture_default_str();
  build->add_option("--pq", pq, "PQ subquantizers (0 = exact spectra)")->capture_default_str();
  build->add_option("--pq-k", pq_k, "Centroids per subquantizer")->capture_default_str();
  build->add_option("--train-samples", train_samples)->capture_default_str();
  build->add_option("--train-iters", train_iters)->capture_default_str();
  build->add_option("--lambda", lambda, "Regularization")->capture_default_str();
  build->add_flag("--no-regularize", no_regularize, "Plain cross-correlation (exact path)");
  build->add_option("--seed", seed)->capture_default_str();
  build->add_option("--threads", build_threads)->capture_default_str();

  // query
  auto* query = app.add_subcommand("query", "Rank index entries against one sequence");
  fs::path query_index, query_file;
  std::size_t top_k = 100, query_threads = 1;
  bool refine = false, query_json = false;
  query->add_option("index", query_index)->required();
  query->add_option("sequence", query_file, ".cted query")->required();
  query->add_option("--topk", top_k)->capture_default_str();
  query->add_flag("--refine", refine, "Refine boundaries against raw descriptors");
  query->add_flag("--json", query_json, "JSON output");
  query->add_option("--threads", query_threads)->capture_default_str();

  // align
  auto* align = app.add_subcommand("align", "All-pairs matching and global timeline");
  fs::path align_index, align_out;
  double tau = 0.5, min_score = 0.0;
  bool edited = false;
  std::size_t align_threads = 1;
  align->add_option("index", align_index)->required();
  align->add_option("--tau", tau, "Consistency tolerance, seconds")->capture_default_str();
  align->add_option("--min-score", min_score)->capture_default_str();
  align->add_flag("--edited", edited, "Anchor segments instead of whole videos");
  align->add_option("--out", align_out)->required();
  align->add_option("--threads", align_threads)->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluation measures");
  eval->require_subcommand(1);
  double eval_tol = 0.5;
  auto* eval_pas = eval->add_subcommand("pas", "Pairwise alignment score");
  fs::path pas_alignment, pas_gt;
  bool fractional = false;
  eval_pas->add_option("alignment", pas_alignment, "Output of align")->required();
  eval_pas->add_option("truth", pas_gt, "Ground truth JSON")->required();
  eval_pas->add_option("--tol", eval_tol)->capture_default_str();
  eval_pas->add_flag("--fractional", fractional, "Per-frame fractional score");
  auto* eval_pr = eval->add_subcommand("pr", "Precision/recall of pairwise matches");
  fs::path pr_matches, pr_gt;
  double pr_fps = 15.0;
  eval_pr->add_option("matches", pr_matches, "Output of align or query --json")->required();
  eval_pr->add_option("truth", pr_gt)->required();
  eval_pr->add_option("--tol", eval_tol)->capture_default_str();
  eval_pr->add_option("--fps", pr_fps)->capture_default_str();
  auto* eval_map = eval->add_subcommand("map", "Mean average precision");
  fs::path map_rankings, map_relevance;
  eval_map->add_option("rankings", map_rankings, "{query: [ranked ids]}")->required();
  eval_map->add_option("relevance", map_relevance, "{query: [relevant ids]}")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic multi-camera event");
  cte::SynthParams sp;
  fs::path synth_out;
  bool with_master = false;
  synth->add_option("--clips", sp.n_clips)->capture_default_str();
  synth->add_option("--seed", sp.seed)->capture_default_str();
  synth->add_option("--dim", sp.dim)->capture_default_str();
  synth->add_option("--master-len", sp.master_len)->capture_default_str();
  synth->add_option("--min-len", sp.clip_len_min)->capture_default_str();
  synth->add_option("--max-len", sp.clip_len_max)->capture_default_str();
  synth->add_option("--smoothness", sp.smoothness)->capture_default_str();
  synth->add_option("--noise", sp.noise)->capture_default_str();
  synth->add_option("--fps", sp.fps)->capture_default_str();
  synth->add_flag("--with-master", with_master, "Also write master.cted");
  synth->add_option("--out", synth_out)->required();

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP alignment service");
  fs::path serve_index, session_file;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t serve_threads = 1;
  double serve_tau = 0.5, serve_min_score = 0.0;
  serve->add_option("index", serve_index)->required();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--session", session_file, "Session snapshot file");
  serve->add_option("--tau", serve_tau)->capture_default_str();
  serve->add_option("--min-score", serve_min_score)->capture_default_str();
  serve->add_option("--threads", serve_threads)->capture_default_str();
  bool serve_edited = false;
  serve->add_flag("--edited", serve_edited, "Anchor segments instead of whole videos");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) {
      cte::IndexConfig cfg;
      cfg.pruning = cte::Pruning::parse(beta);
      cfg.lambda = lambda;
      cfg.regularize = !no_regularize;
      cfg.pq_subquantizers = pq;
      cfg.pq_centroids = pq_k;
      cfg.train_samples = train_samples;
      cfg.train_iters = train_iters;
      cfg.seed = seed;
      cfg.threads = build_threads;
      const auto index = cte::build_index(build_dir, cfg, build_out);
      std::printf("%zu entries, d = %zu, n_max = %zu, %s, payload %zu bytes -> %s\n",
                  index.entries().size(), index.dim(), index.n_max(),
                  cfg.compressed() ? "pq" : "exact", index.payload_bytes(),
                  build_out.string().c_str());
    } else if (*query) {
      const auto index = cte::Index::load(query_index);
      const auto q = cte::read_sequence(query_file);
      cte::QueryOptions opts;
      opts.top_k = top_k;
      opts.refine = refine;
      opts.threads = query_threads;
      const auto ranked = cte::query(index, q, opts);
      if (query_json) {
        json out = json::array();
        for (const auto& m : ranked) out.push_back(cte::to_json(m));
        std::cout << out.dump(2) << '\n';
      } else {
        print_matches(ranked, index.fps());
      }
    } else if (*align) {
      const auto index = cte::Index::load(align_index);
      const auto matches = cte::all_pairs_match(index, true, align_threads);
      cte::AnchorGraph graph;
      cte::GlobalAlignment alignment;
      if (edited) {
        graph = cte::build_anchor_graph(matches, index.fps(), min_score);
        cte::SolveOptions so;
        so.tolerance = tau;
        alignment = cte::solve_alignment(graph.anchors, graph.edges, so);
      } else {
        std::vector<cte::VideoInfo> videos;
        for (const auto& e : index.entries()) videos.push_back({e.video_id, e.n});
        auto solved = cte::solve_unedited(videos, matches, index.fps(), tau, min_score);
        graph = std::move(solved.graph);
        alignment = std::move(solved.alignment);
      }
      json jm = json::array();
      for (const auto& m : matches) jm.push_back(cte::to_json(m));
      json ja = json::array();
      for (const auto& a : graph.anchors) {
        ja.push_back({{"anchor_id", a.anchor_id},
                      {"video_id", a.video_id},
                      {"start_frame", a.start},
                      {"end_frame", a.end}});
      }
      json je = json::array();
      for (const auto& e : graph.edges) je.push_back(cte::to_json(e));
      json out = {{"fps", index.fps()},
                  {"mode", edited ? "edited" : "unedited"},
                  {"tau", tau},
                  {"matches", jm},
                  {"graph", {{"anchors", ja}, {"edges", je}}},
                  {"alignment", cte::alignment_to_json(alignment, graph.anchors, graph.edges)},
                  {"iterations", alignment.iterations},
                  {"violations", alignment.violations}};
      write_json(align_out, out);
      std::printf("%zu matches, %zu anchors, %zu edges, %zu retained, %zu components -> %s\n",
                  matches.size(), graph.anchors.size(), graph.edges.size(),
                  alignment.retained.size(), alignment.components.size(),
                  align_out.string().c_str());
    } else if (*eval_pas) {
      const auto a = load_alignment(pas_alignment);
      const auto gt = cte::read_ground_truth(pas_gt);
      cte::PasReport r;
      if (fractional) {
        const auto offsets = cte::resolve_frame_offsets(a.alignment, a.anchors, a.edges, a.fps);
        r = cte::pas_fractional(gt, offsets, a.fps, eval_tol);
      } else {
        const auto placements = cte::video_placements(a.alignment, a.anchors, a.fps);
        r = cte::pas_unedited(gt, placements, a.fps, eval_tol);
      }
      std::printf("%-12s %10s %10s\n", "measure", "value", "gt_pairs");
      std::printf("%-12s %10.4f %10zu\n", fractional ? "pas_frac" : "pas", r.pas, r.gt_pairs);
    } else if (*eval_pr) {
      const auto matches = matches_from(read_json(pr_matches));
      const auto gt = cte::read_ground_truth(pr_gt);
      const auto labels = cte::label_matches(matches, gt, pr_fps, eval_tol);
      const auto curve = cte::match_pr(labels);
      std::printf("%-8s %10s %10s\n", "rank", "recall", "precision");
      for (std::size_t i = 0; i < curve.size(); ++i) {
        std::printf("%-8zu %10.4f %10.4f\n", i + 1, curve[i].recall, curve[i].precision);
      }
      std::printf("area %.4f\n", cte::pr_area(curve));
    } else if (*eval_map) {
      const auto rankings =
          read_json(map_rankings).get<std::map<std::string, std::vector<std::string>>>();
      const auto rel = read_json(map_relevance).get<std::map<std::string, std::set<std::string>>>();
      const auto r = cte::mean_average_precision(rankings, rel);
      std::printf("%-10s %10s %10s\n", "measure", "value", "queries");
      std::printf("%-10s %10.4f %10zu\n", "map", r.map, r.evaluated);
      for (const auto& q : r.excluded) std::printf("excluded %s (no relevant items)\n", q.c_str());
    } else if (*synth) {
      const auto ev = cte::synth_event(sp);
      fs::create_directories(synth_out);
      for (const auto& c : ev.clips) cte::write_sequence(c, synth_out / (c.video_id() + ".cted"));
      if (with_master) cte::write_sequence(ev.master, synth_out / "master.cted");
      cte::write_ground_truth(ev.truth, synth_out / "gt.json");
      std::printf("%zu clips, d = %zu, %.1f fps -> %s\n", ev.clips.size(), sp.dim,
                  static_cast<double>(sp.fps), synth_out.string().c_str());
    } else if (*serve) {
      const auto index = cte::Index::load(serve_index);
      cte::SessionOptions so;
      so.tolerance = serve_tau;
      so.min_score = serve_min_score;
      so.threads = serve_threads;
      so.session_file = session_file;
      so.edited = serve_edited;
      cte::Session session(index, so);
      if (!session_file.empty() && fs::exists(session_file)) {
        session.restore(read_json(session_file));
      }
      cte::Server server(session, host, port);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.start();
      std::printf("serving %zu videos, %zu anchors on http://%s:%d\n", index.entries().size(),
                  session.graph().anchors.size(), host.c_str(), server.port());
      std::fflush(stdout);
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
    }
  } catch (const cte::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
