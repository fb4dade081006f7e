#pragma once

// Quality model -> Bayesian network. A goal selects the target activity; its
// sub-activity tree and every fact impacting it become ranked nodes, each
// with its indicators attached; NPTs are synthesized from the model's
// quantitative annotations.

#include "qualinet/network.hpp"
#include "qualinet/quality_model.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qualinet {

enum class EdgeTag { Subactivity, PositiveImpact, NegativeImpact, Indicates };

std::string_view to_string(EdgeTag tag);

struct SkeletonNode {
  std::string id;
  NodeKind kind = NodeKind::Activity;
  std::vector<std::string> states;
  std::vector<double> bounds;
};

struct SkeletonEdge {
  std::string from;
  std::string to;
  EdgeTag tag = EdgeTag::Subactivity;
};

struct NetworkSkeleton {
  std::string name;
  std::vector<SkeletonNode> nodes;
  std::vector<SkeletonEdge> edges;

  const SkeletonNode* find(std::string_view id) const;
  /// Edges into `id`, in edge order (sub-activities before impacting facts).
  std::vector<SkeletonEdge> incoming(std::string_view id) const;
};

/// Picks a goal by exact name, or case-insensitively by name, target activity
/// or metric. An empty selector is accepted when the model has one goal.
const GoalSpec& resolve_goal(const QualityModel& model, std::string_view selector);

/// The goal activity and its sub-activities in breadth-first order, without
/// the subtrees that no fact impacts. The goal activity always survives.
std::vector<std::string> derive_activities(const QualityModel& model, const GoalSpec& goal);

struct ImpactedFacts {
  std::vector<FactRef> facts;
  std::vector<Impact> impacts;
};

/// Facts (after inheritance expansion) with an impact on one of `activities`.
ImpactedFacts collect_impacted_facts(const QualityModel& model, std::span<const std::string> activities);

/// Throws CompileError when a fact in scope has no indicator.
NetworkSkeleton build_skeleton(const QualityModel& model, const GoalSpec& goal);

/// Throws CompileError for weights on non-parents, priors on non-root nodes
/// and priors of the wrong arity.
CompiledNetwork synthesize_network(const NetworkSkeleton& skeleton, const QualityModel& model);

/// Whole pipeline: resolve the goal, build the skeleton, synthesize NPTs.
CompiledNetwork compile_model(const QualityModel& model, std::string_view goal_selector);

/// Labels of interval states, "[a, b)" with the last interval closed.
std::vector<std::string> interval_labels(std::span<const double> boundaries);

}  // namespace qualinet
