#pragma once

// HTTP front end over one immutable compiled network. Routing lives in
// ApiServer::handle, which is a pure function of (network, request) so it can
// be exercised without sockets; listen() only adapts it to cpp-httplib.

#include "qualinet/network.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace qualinet {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class ApiServer {
 public:
  explicit ApiServer(CompiledNetwork net, std::optional<std::filesystem::path> static_dir = std::nullopt);

  const CompiledNetwork& network() const { return net_; }

  /// GET /api/network, POST /api/infer, POST /api/mpe, GET /api/sensitivity,
  /// GET / (UI placeholder when no static directory is mounted).
  ApiResponse handle(const ApiRequest& request) const;

  /// Blocks until stop() is called or the socket fails. Returns false when
  /// the port could not be bound.
  bool listen(const std::string& host, int port);

  /// Two-step form of listen(). bind() returns the bound port (an ephemeral
  /// one when `port` is 0) or -1; listen_after_bind() then blocks.
  int bind(const std::string& host, int port);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  bool configure();

  struct Impl;
  CompiledNetwork net_;
  std::optional<std::filesystem::path> static_dir_;
  std::shared_ptr<Impl> impl_;
};

}  // namespace qualinet
