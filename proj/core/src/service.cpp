#include <httplib.h>

#include "cte/errors.hpp"
#include "cte/service.hpp"

namespace cte {
namespace {

constexpr std::string_view kStripPrefix = "/api/strip/";

nlohmann::json error_body(const std::string& message) { return {{"error", message}}; }

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("request body must be a JSON object");
  return j;
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("bad field '") + key + "'");
  }
}

ApiResponse route(Session& s, const std::string& method, const std::string& path,
                  const std::string& body) {
  if (method == "GET") {
    if (path == "/api/videos") return {200, s.videos()};
    if (path == "/api/anchors") return {200, s.anchors()};
    if (path == "/api/timeline") return {200, s.timeline()};
    if (path.starts_with(kStripPrefix)) {
      return {200, s.strip(path.substr(kStripPrefix.size()))};
    }
  } else if (method == "POST") {
    if (path == "/api/hypotheses") {
      const auto j = parse_body(body);
      const auto top_k = j.contains("top_k") ? field<std::size_t>(j, "top_k") : 0;
      return {200, s.hypotheses(field<AnchorId>(j, "anchor_id"), top_k)};
    }
    if (path == "/api/accept") return {200, s.accept(field<std::size_t>(parse_body(body), "edge"))};
    if (path == "/api/reject") return {200, s.reject(field<std::size_t>(parse_body(body), "edge"))};
    if (path == "/api/manual") {
      const auto j = parse_body(body);
      return {200, s.manual(field<AnchorId>(j, "anchor_id"), field<double>(j, "t_sec"))};
    }
    if (path == "/api/solve") return {200, s.solve()};
  }
  return {404, error_body("no route for " + method + " " + path)};
}

}  // namespace

ApiResponse handle_request(Session& session, const std::string& method,
                           const std::string& path, const std::string& body) {
  try {
    return route(session, method, path, body);
  } catch (const ValidationError& e) {
    return {400, error_body(e.what())};
  } catch (const NotFoundError& e) {
    return {404, error_body(e.what())};
  } catch (const IoError& e) {
    return {404, error_body(e.what())};
  } catch (const std::exception& e) {
    return {500, error_body(e.what())};
  }
}

struct Server::Impl {
  httplib::Server http;
};

Server::Server(Session& session, const std::string& host, int port)
    : impl_(std::make_unique<Impl>()) {
  auto handler = [&session](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle_request(session, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  // httplib defaults to SO_REUSEPORT, which would let a second server share
  // the port silently.
  impl_->http.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  impl_->http.Get(R"(/api/.*)", handler);
  impl_->http.Post(R"(/api/.*)", handler);
  if (port == 0) {
    port_ = impl_->http.bind_to_any_port(host);
    if (port_ <= 0) throw IoError("cannot bind " + host);
  } else {
    if (!impl_->http.bind_to_port(host, port)) {
      throw IoError("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
    }
    port_ = port;
  }
}

Server::~Server() { stop(); }

void Server::start() {
  thread_ = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
}

void Server::run() { impl_->http.listen_after_bind(); }

void Server::stop() {
  impl_->http.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cte
