#include "qualinet/api_server.hpp"

#include "qualinet/analysis.hpp"
#include "qualinet/inference.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace qualinet {

using nlohmann::json;

namespace {

constexpr std::string_view kPlaceholder =
    "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>qualinet</title></head>\n"
    "<body><p>No UI bundle mounted. Start the server with --static DIR, or use the JSON API under /api/.</p>"
    "</body></html>\n";

ApiResponse json_response(int status, const json& body) { return {status, body.dump() + "\n", "application/json"}; }

ApiResponse error_response(int status, std::string_view message, std::optional<std::string> node = std::nullopt) {
  json body = {{"error", message}};
  if (node) body["node"] = *node;
  return json_response(status, body);
}

json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  return json::parse(body);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

json infer(const CompiledNetwork& net, const ApiRequest& req) {
  const Scenario scenario = scenario_from_json(parse_body(req.body));
  const json report = to_json(run_scenario(net, scenario));
  return {{"posteriors", report["posteriors"]},
          {"moments", report["moments"]},
          {"evidenceProbability", report["evidenceProbability"]},
          {"warnings", report["warnings"]}};
}

json most_probable(const CompiledNetwork& net, const ApiRequest& req) {
  const json doc = parse_body(req.body);
  const ResolvedEvidence resolved = resolve_evidence(net, scenario_from_json(doc));
  std::optional<std::vector<std::string>> restrict_to;
  if (doc.is_object() && doc.contains("restrictTo")) {
    const json& r = doc["restrictTo"];
    if (!r.is_array() || !std::all_of(r.begin(), r.end(), [](const json& v) { return v.is_string(); }))
      throw InvalidEvidenceError("restrictTo must be an array of node ids");
    restrict_to = r.get<std::vector<std::string>>();
    for (const auto& id : *restrict_to) net.index_of(id);
  }
  const MpeResult best = mpe(net, resolved.evidence);
  json assignment = json::object();
  for (const auto& [id, state] : best.assignment)
    if (!restrict_to || std::find(restrict_to->begin(), restrict_to->end(), id) != restrict_to->end())
      assignment[id] = net.node(id).states[state];
  return {{"assignment", std::move(assignment)}, {"probability", best.probability}};
}

json swings(const CompiledNetwork& net, const ApiRequest& req) {
  const auto target = req.query.find("target");
  if (target == req.query.end() || target->second.empty()) throw InvalidEvidenceError("query parameter 'target' is required");
  const Node& t = net.node(target->second);
  std::optional<int> state;
  if (const auto s = req.query.find("state"); s != req.query.end()) state = net.state_index(t.id, s->second);

  std::vector<std::string> candidates;
  if (const auto c = req.query.find("candidates"); c != req.query.end()) {
    candidates = split_list(c->second);
  } else {
    for (const auto& id : net.fact_indicators())
      if (id != t.id) candidates.push_back(id);
  }
  const std::vector<Swing> result = sensitivity(net, t.id, candidates, {}, state);
  return {{"target", t.id}, {"swings", to_json(std::span<const Swing>(result))}};
}

}  // namespace

struct ApiServer::Impl {
  httplib::Server server;
};

ApiServer::ApiServer(CompiledNetwork net, std::optional<std::filesystem::path> static_dir)
    : net_(std::move(net)), static_dir_(std::move(static_dir)), impl_(std::make_shared<Impl>()) {}

ApiResponse ApiServer::handle(const ApiRequest& req) const {
  try {
    if (req.method == "OPTIONS") return {204, "", "text/plain"};
    if (req.path == "/api/network") {
      if (req.method != "GET") return error_response(405, "use GET");
      return {200, net_.to_json(), "application/json"};
    }
    if (req.path == "/api/infer") {
      if (req.method != "POST") return error_response(405, "use POST");
      return json_response(200, infer(net_, req));
    }
    if (req.path == "/api/mpe") {
      if (req.method != "POST") return error_response(405, "use POST");
      return json_response(200, most_probable(net_, req));
    }
    if (req.path == "/api/sensitivity") {
      if (req.method != "GET") return error_response(405, "use GET");
      return json_response(200, swings(net_, req));
    }
    if (req.method == "GET" && (req.path == "/" || req.path == "/index.html"))
      return {200, std::string(kPlaceholder), "text/html; charset=utf-8"};
    return error_response(404, fmt::format("no route for {} {}", req.method, req.path));
  } catch (const json::exception& e) {
    return error_response(400, fmt::format("malformed JSON: {}", e.what()));
  } catch (const UnknownNodeError& e) {
    return error_response(404, e.what(), e.node());
  } catch (const InvalidEvidenceError& e) {
    return error_response(400, e.what());
  } catch (const ImpossibleEvidenceError& e) {
    return error_response(409, e.what());
  } catch (const Error& e) {
    return error_response(400, e.what());
  }
}

bool ApiServer::configure() {
  auto& srv = impl_->server;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  if (static_dir_ && !srv.set_mount_point("/", static_dir_->string())) return false;

  const auto adapt = [this](const httplib::Request& in, httplib::Response& out) {
    ApiRequest req{in.method, in.path, {}, in.body};
    for (const auto& [k, v] : in.params) req.query.emplace(k, v);
    const ApiResponse res = handle(req);
    out.status = res.status;
    out.set_content(res.body, res.content_type);
  };
  srv.Get("/api/.*", adapt);
  srv.Post("/api/.*", adapt);
  srv.Options("/api/.*", adapt);
  if (!static_dir_) srv.Get("/", adapt);
  return true;
}

bool ApiServer::listen(const std::string& host, int port) {
  const int bound = bind(host, port);
  return bound > 0 && listen_after_bind();
}

int ApiServer::bind(const std::string& host, int port) {
  if (!configure()) return -1;
  auto& srv = impl_->server;
  if (port == 0) return srv.bind_to_any_port(host);
  return srv.bind_to_port(host, port) ? port : -1;
}

bool ApiServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void ApiServer::stop() { impl_->server.stop(); }

}  // namespace qualinet
