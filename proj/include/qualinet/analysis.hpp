#pragma once

// Scenario analysis on a compiled network: named evidence sets, indicator
// moments, scenario comparison, backward target explanation and one-way
// sensitivity sweeps.

#include "qualinet/inference.hpp"
#include "qualinet/network.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qualinet {

/// A state label, or a raw measurement for an indicator.
using EvidenceValue = std::variant<std::string, double>;

struct Scenario {
  std::string name;
  std::map<std::string, EvidenceValue, std::less<>> evidence;
};

struct ResolvedEvidence {
  Evidence evidence;
  std::vector<std::string> warnings;
};

/// Maps labels and raw values to state indices. Raw values are accepted on
/// indicators only and are clamped (with a warning) outside the support.
/// Throws UnknownNodeError and InvalidEvidenceError.
ResolvedEvidence resolve_evidence(const CompiledNetwork& net, const Scenario& scenario);

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

/// Mean and standard deviation of an interval distribution at the interval midpoints.
Moments indicator_moments(const Eigen::Ref<const Eigen::VectorXd>& marginal, std::span<const double> bounds);

struct ScenarioReport {
  std::string name;
  Posterior posteriors;
  std::map<std::string, Moments, std::less<>> moments;
  double evidence_probability = 1.0;
  std::vector<std::string> warnings;
};

ScenarioReport run_scenario(const CompiledNetwork& net, const Scenario& scenario);

struct ComparisonRow {
  std::string node;
  /// One posterior per scenario, in input order.
  std::vector<Eigen::VectorXd> posteriors;
  /// Per scenario; present only for nodes with interval bounds.
  std::vector<Moments> moments;
  /// Mean of each scenario minus the first scenario's mean.
  std::vector<double> mean_deltas;
  /// Largest absolute probability change against the first scenario.
  std::vector<double> max_probability_deltas;
};

struct Comparison {
  std::vector<std::string> scenarios;
  std::vector<ComparisonRow> rows;
};

/// Requires at least two scenarios; the first is the reference for deltas.
Comparison compare_scenarios(const CompiledNetwork& net, std::span<const Scenario> scenarios);

struct Explanation {
  std::string target;
  int target_state = 0;
  /// Fact indicator -> state index of the most probable explanation.
  std::map<std::string, int, std::less<>> assignment;
  double probability = 0.0;
};

/// Sets target = desired state (on top of `base`), runs MPE and keeps the
/// fact-indicator part of the assignment, or all of it when the network has
/// no fact indicators.
Explanation explain_target(const CompiledNetwork& net, std::string_view target, int desired_state,
                           const Evidence& base = {});

struct Swing {
  std::string node;
  double swing = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// One-way sweep of each candidate over its states with the remaining
/// evidence fixed. The response is the target mean for nodes with interval
/// bounds, otherwise P(target = target_state). Sorted by swing descending,
/// ties by node id. States that make the evidence impossible are skipped.
std::vector<Swing> sensitivity(const CompiledNetwork& net, std::string_view target,
                               std::span<const std::string> candidates, const Evidence& base = {},
                               std::optional<int> target_state = std::nullopt);

// JSON surfaces shared by the CLI and the HTTP API.

/// {"name": string, "evidence": {node: number | string}}; a missing name or
/// evidence object is allowed. Throws InvalidEvidenceError on malformed input.
Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ScenarioReport& report);
nlohmann::json to_json(const Comparison& comparison);
nlohmann::json to_json(const CompiledNetwork& net, const Explanation& explanation);
nlohmann::json to_json(std::span<const Swing> swings);

std::string to_csv(const Comparison& comparison);
std::string to_text(const ScenarioReport& report);
std::string to_text(const Comparison& comparison);

}  // namespace qualinet
