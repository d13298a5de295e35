#pragma once

// Interactive alignment session behind the HTTP API: the anchor graph from
// all-pairs matching, user decisions (accepted edges forced into the
// consistent set, rejected edges dropped, manual pins used as gauge), and
// the current solved timeline. Mutations are serialized and snapshot the
// session to disk; reads run concurrently.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cte/align.hpp"
#include "cte/engine.hpp"

namespace cte {

struct SessionOptions {
  double tolerance = 0.5;
  double min_score = 0.0;
  std::size_t threads = 1;
  // Anchor segments from refined matches instead of one anchor per video.
  bool edited = false;
  // Empty disables snapshots.
  std::filesystem::path session_file;
};

class Session {
 public:
  /// Runs all-pairs matching with refinement on `index` (kept by
  /// reference; it must outlive the session).
  Session(const Index& index, SessionOptions options);
  /// Session over a prebuilt graph; strips need `index`, may be null.
  Session(AnchorGraph graph, std::vector<VideoInfo> videos, double fps,
          SessionOptions options, const Index* index = nullptr);

  nlohmann::json videos() const;
  nlohmann::json anchors() const;
  nlohmann::json hypotheses(AnchorId anchor, std::size_t top_k) const;
  nlohmann::json timeline() const;
  nlohmann::json strip(const std::string& video_id) const;

  nlohmann::json accept(std::size_t edge);
  nlohmann::json reject(std::size_t edge);
  nlohmann::json manual(AnchorId anchor, double t_sec);
  nlohmann::json solve();

  nlohmann::json state() const;
  // Replaces decisions with a previously snapshotted state and re-solves.
  void restore(const nlohmann::json& state);

  const AnchorGraph& graph() const noexcept { return graph_; }

 private:
  void resolve_locked();
  void snapshot_locked() const;
  nlohmann::json timeline_locked() const;
  const AnchorSegment& anchor_locked(AnchorId id) const;

  AnchorGraph graph_;
  std::vector<VideoInfo> videos_;
  double fps_;
  SessionOptions options_;
  const Index* index_ = nullptr;

  mutable std::shared_mutex mutex_;
  std::set<std::size_t> accepted_;
  std::set<std::size_t> rejected_;
  std::map<AnchorId, double> pinned_;
  GlobalAlignment alignment_;
  std::vector<nlohmann::json> log_;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Routes one API request; the HTTP server and in-process tests share it.
ApiResponse handle_request(Session& session, const std::string& method,
                           const std::string& path, const std::string& body);

/// HTTP front end. Binding happens in the constructor, so a busy port
/// raises IoError before any request is served.
class Server {
 public:
  Server(Session& session, const std::string& host, int port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const noexcept { return port_; }
  void start();  // serve on a background thread
  void run();    // serve on the calling thread until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace cte
