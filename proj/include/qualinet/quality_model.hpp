#pragma once

// Activity-based quality model: entity tree, facts, activity tree, signed
// impacts and the quantitative annotations needed to build a network.

#include "qualinet/errors.hpp"
#include "qualinet/npt.hpp"

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qualinet {

struct Entity {
  std::string id;
  std::optional<std::string> part_of;
  std::optional<std::string> is_a;

  bool operator==(const Entity&) const = default;
};

/// [Entity | Attribute], written `Entity.Attribute`.
struct FactRef {
  std::string entity;
  std::string attribute;

  std::string str() const { return entity + "." + attribute; }
  auto operator<=>(const FactRef&) const = default;
};

struct Fact {
  FactRef ref;
  /// Set on facts materialized by inheritance expansion.
  std::optional<std::string> inherited_from;

  bool operator==(const Fact&) const = default;
};

struct Activity {
  std::string id;
  std::optional<std::string> parent;
  std::vector<std::string> children;

  bool operator==(const Activity&) const = default;
};

struct Impact {
  FactRef fact;
  std::string activity;
  Sign sign = Sign::Positive;

  bool operator==(const Impact&) const = default;
};

/// Reference to a ranked node: an activity id or a fact.
struct NodeRef {
  std::string name;
  std::optional<std::string> attribute;

  bool is_fact() const { return attribute.has_value(); }
  FactRef fact() const { return {name, attribute.value_or("")}; }
  std::string str() const { return attribute ? name + "." + *attribute : name; }

  static NodeRef activity(std::string id) { return {std::move(id), std::nullopt}; }
  static NodeRef of(const FactRef& f) { return {f.entity, f.attribute}; }

  auto operator<=>(const NodeRef&) const = default;
};

struct QuantAnnotation {
  NodeRef node;
  std::optional<int> states;
  std::optional<double> variance;
  std::vector<std::pair<NodeRef, double>> weights;
  std::optional<std::vector<double>> prior;

  bool operator==(const QuantAnnotation&) const = default;
};

struct IndicatorSpec {
  std::string id;
  NodeRef subject;
  std::vector<double> boundaries;
  IndicatorExpression expression;

  bool operator==(const IndicatorSpec&) const = default;
};

struct GoalSpec {
  std::string name;
  std::string question;
  std::string target_indicator;
  std::string target_activity;

  bool operator==(const GoalSpec&) const = default;
};

inline constexpr int kDefaultStates = 3;
inline constexpr double kDefaultVariance = 0.05;

struct QualityModel {
  std::string name;
  std::vector<Entity> entities;
  std::vector<Fact> facts;
  /// Pre-order; the first activity is the root.
  std::vector<Activity> activities;
  std::vector<Impact> impacts;
  std::vector<QuantAnnotation> annotations;
  std::vector<IndicatorSpec> indicators;
  std::vector<GoalSpec> goals;

  const Entity* find_entity(std::string_view id) const;
  const Activity* find_activity(std::string_view id) const;
  const Fact* find_fact(const FactRef& ref) const;
  const IndicatorSpec* find_indicator(std::string_view id) const;
  const QuantAnnotation* find_annotation(const NodeRef& node) const;
  bool has_node(const NodeRef& node) const;

  /// State count of a ranked node (annotation or the default of 3).
  int state_count(const NodeRef& node) const;
  std::vector<std::string> state_labels(const NodeRef& node) const;

  bool operator==(const QualityModel&) const = default;
};

/// Parses and validates model source. Throws ModelError with one diagnostic per
/// problem, each carrying the line/column of the offending token.
QualityModel parse_model(std::string_view text);

/// Canonical source form; parse_model(print_model(m)) == m.
std::string print_model(const QualityModel& model);

/// Materializes every fact (and its impacts) on all is-a descendants of its
/// entity. Idempotent.
QualityModel expand_inheritance(const QualityModel& model);

enum class Cell { Blank, Positive, Negative };

struct MatrixView {
  std::vector<FactRef> rows;
  std::vector<std::string> columns;
  /// cells[row][column]
  std::vector<std::vector<Cell>> cells;

  std::size_t non_blank() const;
  std::string to_text() const;
};

/// Facts in entity-tree order against activities in leaf-to-root (post) order.
MatrixView export_matrix(const QualityModel& model);

/// Activities in post-order: every activity after all of its sub-activities.
std::vector<std::string> activities_leaf_to_root(const QualityModel& model);

}  // namespace qualinet
