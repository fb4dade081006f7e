#include "qualinet/network.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qualinet {

namespace {

constexpr double kColumnTolerance = 1e-9;

[[noreturn]] void invalid(const std::string& message) { throw CompileError("invalid network: " + message); }

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Activity:
      return "activity";
    case NodeKind::Fact:
      return "fact";
    case NodeKind::Indicator:
      return "indicator";
    case NodeKind::Variable:
      return "variable";
  }
  return "variable";
}

NodeKind node_kind_from_string(std::string_view text) {
  if (text == "activity") return NodeKind::Activity;
  if (text == "fact") return NodeKind::Fact;
  if (text == "indicator") return NodeKind::Indicator;
  if (text == "variable") return NodeKind::Variable;
  invalid(fmt::format("unknown node kind '{}'", text));
}

IntervalLookup interval_of(const Node& node, double value) {
  if (!node.has_bounds()) throw InvalidEvidenceError(fmt::format("node '{}' has no interval states", node.id));
  if (!std::isfinite(value)) throw InvalidEvidenceError(fmt::format("non-finite value for '{}'", node.id));
  const auto& b = node.bounds;
  const int last = static_cast<int>(b.size()) - 2;
  if (value < b.front()) return {0, true};
  if (value > b.back()) return {last, true};
  const auto it = std::upper_bound(b.begin(), b.end(), value);
  return {std::min(static_cast<int>(it - b.begin()) - 1, last), false};
}

CompiledNetwork::CompiledNetwork(std::string name, std::vector<Node> nodes)
    : name_(std::move(name)), nodes_(std::move(nodes)) {
  const int n = size();
  for (int i = 0; i < n; ++i)
    if (!index_.emplace(nodes_[i].id, i).second) invalid(fmt::format("duplicate node '{}'", nodes_[i].id));

  parents_.resize(n);
  for (int i = 0; i < n; ++i) {
    const Node& node = nodes_[i];
    if (node.cardinality() < 1) invalid(fmt::format("node '{}' has no states", node.id));
    Eigen::Index columns = 1;
    for (const auto& p : node.parents) {
      const auto it = index_.find(p);
      if (it == index_.end()) invalid(fmt::format("node '{}' has unknown parent '{}'", node.id, p));
      if (std::find(parents_[i].begin(), parents_[i].end(), it->second) != parents_[i].end())
        invalid(fmt::format("node '{}' lists parent '{}' twice", node.id, p));
      parents_[i].push_back(it->second);
      columns *= nodes_[it->second].cardinality();
    }
    if (node.cpt.rows() != node.cardinality() || node.cpt.cols() != columns)
      invalid(fmt::format("NPT of '{}' is {}x{}, expected {}x{}", node.id, node.cpt.rows(), node.cpt.cols(),
                          node.cardinality(), columns));
    if (!node.cpt.allFinite() || (node.cpt.array() < 0.0).any())
      invalid(fmt::format("NPT of '{}' has negative or non-finite entries", node.id));
    const Eigen::RowVectorXd sums = node.cpt.colwise().sum();
    if (((sums.array() - 1.0).abs() > kColumnTolerance).any())
      invalid(fmt::format("NPT column of '{}' does not sum to 1", node.id));
    if (node.has_bounds()) {
      if (static_cast<int>(node.bounds.size()) != node.cardinality() + 1)
        invalid(fmt::format("indicator '{}' needs {} bounds", node.id, node.cardinality() + 1));
      if (!std::is_sorted(node.bounds.begin(), node.bounds.end(), std::less_equal<>()))
        invalid(fmt::format("bounds of '{}' must be strictly increasing", node.id));
    }
  }

  // Kahn's algorithm; any leftover node sits on a cycle.
  std::vector<int> indegree(n);
  std::vector<std::vector<int>> children(n);
  for (int i = 0; i < n; ++i)
    for (int p : parents_[i]) {
      ++indegree[i];
      children[p].push_back(i);
    }
  std::vector<int> ready;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  int visited = 0;
  while (!ready.empty()) {
    const int cur = ready.back();
    ready.pop_back();
    ++visited;
    for (int c : children[cur])
      if (--indegree[c] == 0) ready.push_back(c);
  }
  if (visited != n) invalid("graph contains a cycle");

  by_id_.resize(n);
  std::iota(by_id_.begin(), by_id_.end(), 0);
  std::sort(by_id_.begin(), by_id_.end(), [&](int a, int b) { return nodes_[a].id < nodes_[b].id; });
}

std::optional<int> CompiledNetwork::find(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int CompiledNetwork::index_of(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw UnknownNodeError(std::string(id));
  return it->second;
}

int CompiledNetwork::state_index(std::string_view id, std::string_view label) const {
  const Node& n = node(id);
  const auto it = std::find(n.states.begin(), n.states.end(), label);
  if (it == n.states.end()) throw InvalidEvidenceError(fmt::format("node '{}' has no state '{}'", id, label));
  return static_cast<int>(it - n.states.begin());
}

double CompiledNetwork::conditional(int index, std::span<const int> assignment) const {
  Eigen::Index column = 0;
  for (int p : parents_[index]) column = column * nodes_[p].cardinality() + assignment[p];
  return nodes_[index].cpt(assignment[index], column);
}

std::vector<std::string> CompiledNetwork::fact_indicators() const {
  std::vector<std::string> out;
  for (int i = 0; i < size(); ++i)
    if (nodes_[i].kind == NodeKind::Indicator && parents_[i].size() == 1 &&
        nodes_[parents_[i].front()].kind == NodeKind::Fact)
      out.push_back(nodes_[i].id);
  return out;
}

std::string CompiledNetwork::to_json() const {
  const auto str = [](const std::string& s) { return nlohmann::json(s).dump(); };
  const auto strings = [&](const std::vector<std::string>& v) {
    std::vector<std::string> q;
    for (const auto& s : v) q.push_back(str(s));
    return fmt::format("[{}]", fmt::join(q, ", "));
  };
  const auto reals = [](const double* data, std::size_t n) {
    std::vector<std::string> q;
    for (std::size_t i = 0; i < n; ++i) q.push_back(fmt::format("{:.17g}", data[i]));
    return fmt::format("[{}]", fmt::join(q, ", "));
  };

  std::string out = fmt::format("{{\n  \"name\": {},\n  \"nodes\": [", str(name_));
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    out += i == 0 ? "\n" : ",\n";
    out += fmt::format("    {{\"id\": {}, \"kind\": {}, \"states\": {}", str(n.id), str(std::string(to_string(n.kind))),
                       strings(n.states));
    if (n.has_bounds()) out += fmt::format(", \"bounds\": {}", reals(n.bounds.data(), n.bounds.size()));
    // Column-major storage of the (states x configurations) matrix is the
    // row-major table over (parents..., node).
    out += fmt::format(", \"parents\": {}, \"cpt\": {}}}", strings(n.parents),
                       reals(n.cpt.data(), static_cast<std::size_t>(n.cpt.size())));
  }
  out += "\n  ]\n}\n";
  return out;
}

CompiledNetwork CompiledNetwork::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    invalid(std::string("malformed JSON: ") + e.what());
  }
  try {
    std::vector<Node> nodes;
    for (const auto& jn : doc.at("nodes")) {
      Node n;
      n.id = jn.at("id").get<std::string>();
      n.kind = node_kind_from_string(jn.at("kind").get<std::string>());
      n.states = jn.at("states").get<std::vector<std::string>>();
      if (jn.contains("bounds")) n.bounds = jn.at("bounds").get<std::vector<double>>();
      n.parents = jn.at("parents").get<std::vector<std::string>>();
      const auto flat = jn.at("cpt").get<std::vector<double>>();
      const auto k = static_cast<Eigen::Index>(n.states.size());
      if (k == 0 || flat.size() % static_cast<std::size_t>(k) != 0)
        invalid(fmt::format("cpt of '{}' has {} entries for {} states", n.id, flat.size(), k));
      n.cpt = Eigen::Map<const Eigen::MatrixXd>(flat.data(), k, static_cast<Eigen::Index>(flat.size()) / k);
      nodes.push_back(std::move(n));
    }
    return CompiledNetwork(doc.at("name").get<std::string>(), std::move(nodes));
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("bad network document: ") + e.what());
  }
}

}  // namespace qualinet
