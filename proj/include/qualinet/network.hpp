#pragma once

#include "qualinet/errors.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qualinet {

enum class NodeKind { Activity, Fact, Indicator, Variable };

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view text);

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Variable;
  std::vector<std::string> states;
  /// Interval boundaries of an indicator (states + 1 entries); empty otherwise.
  std::vector<double> bounds;
  std::vector<std::string> parents;
  /// (own states x parent configurations); configurations are row-major over
  /// `parents` with the last parent varying fastest.
  Eigen::MatrixXd cpt;

  int cardinality() const { return static_cast<int>(states.size()); }
  bool has_bounds() const { return !bounds.empty(); }
};

struct IntervalLookup {
  int state = 0;
  bool clamped = false;
};

/// Interval containing `value` ([a,b), last interval closed); values outside
/// the support map to the nearest boundary interval with `clamped` set.
IntervalLookup interval_of(const Node& node, double value);

/// Immutable discrete Bayesian network. Construction validates structure and
/// every NPT; afterwards the network is safe to share between threads.
class CompiledNetwork {
 public:
  CompiledNetwork() = default;
  CompiledNetwork(std::string name, std::vector<Node> nodes);

  const std::string& name() const { return name_; }
  std::span<const Node> nodes() const { return nodes_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  const Node& node(int index) const { return nodes_[index]; }
  const Node& node(std::string_view id) const { return nodes_[index_of(id)]; }
  std::optional<int> find(std::string_view id) const;
  /// Throws UnknownNodeError.
  int index_of(std::string_view id) const;
  std::span<const int> parent_indices(int index) const { return parents_[index]; }
  /// Throws InvalidEvidenceError for a label the node does not have.
  int state_index(std::string_view id, std::string_view label) const;
  /// Probability of `state` of node `index` given a full assignment.
  double conditional(int index, std::span<const int> assignment) const;
  /// Nodes sorted by id, as indices.
  std::span<const int> lexicographic_order() const { return by_id_; }
  /// Indicators whose single parent is a fact node.
  std::vector<std::string> fact_indicators() const;

  /// Normative JSON form; floats use 17 significant digits.
  std::string to_json() const;
  static CompiledNetwork from_json(std::string_view text);

 private:
  std::string name_;
  std::vector<Node> nodes_;
  std::map<std::string, int, std::less<>> index_;
  std::vector<std::vector<int>> parents_;
  std::vector<int> by_id_;
};

}  // namespace qualinet
