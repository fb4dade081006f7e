#include "qualinet/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace qualinet {

using nlohmann::json;

ResolvedEvidence resolve_evidence(const CompiledNetwork& net, const Scenario& scenario) {
  ResolvedEvidence out;
  for (const auto& [id, value] : scenario.evidence) {
    const Node& node = net.node(id);
    if (const auto* label = std::get_if<std::string>(&value)) {
      out.evidence[id] = net.state_index(id, *label);
      continue;
    }
    const double raw = std::get<double>(value);
    if (!node.has_bounds())
      throw InvalidEvidenceError(fmt::format("node '{}' is ranked; give a state label instead of {}", id, raw));
    const IntervalLookup hit = interval_of(node, raw);
    if (hit.clamped)
      out.warnings.push_back(fmt::format("value {} for '{}' lies outside [{}, {}]; clamped to {}", raw, id,
                                         node.bounds.front(), node.bounds.back(), node.states[hit.state]));
    out.evidence[id] = hit.state;
  }
  return out;
}

Moments indicator_moments(const Eigen::Ref<const Eigen::VectorXd>& marginal, std::span<const double> bounds) {
  if (static_cast<std::size_t>(marginal.size()) + 1 != bounds.size())
    throw std::invalid_argument("one probability per interval required");
  const Eigen::Map<const Eigen::VectorXd> b(bounds.data(), static_cast<Eigen::Index>(bounds.size()));
  const Eigen::VectorXd mid = 0.5 * (b.head(marginal.size()) + b.tail(marginal.size()));
  const double mean = marginal.dot(mid);
  const double var = marginal.dot((mid.array() - mean).square().matrix());
  return {mean, std::sqrt(std::max(var, 0.0))};
}

ScenarioReport run_scenario(const CompiledNetwork& net, const Scenario& scenario) {
  ResolvedEvidence resolved = resolve_evidence(net, scenario);
  ScenarioReport report;
  report.name = scenario.name;
  report.warnings = std::move(resolved.warnings);
  report.evidence_probability = evidence_probability(net, resolved.evidence);
  if (!(report.evidence_probability > 0.0)) throw ImpossibleEvidenceError();
  report.posteriors = posterior_marginals(net, resolved.evidence);
  for (const auto& node : net.nodes())
    if (node.has_bounds()) report.moments.emplace(node.id, indicator_moments(report.posteriors.at(node.id), node.bounds));
  return report;
}

Comparison compare_scenarios(const CompiledNetwork& net, std::span<const Scenario> scenarios) {
  if (scenarios.size() < 2) throw Error("comparison needs at least two scenarios");
  std::vector<ScenarioReport> reports;
  for (const auto& s : scenarios) reports.push_back(run_scenario(net, s));

  Comparison out;
  for (const auto& s : scenarios) out.scenarios.push_back(s.name);
  for (const auto& node : net.nodes()) {
    ComparisonRow row;
    row.node = node.id;
    for (const auto& r : reports) {
      row.posteriors.push_back(r.posteriors.at(node.id));
      row.max_probability_deltas.push_back((row.posteriors.back() - row.posteriors.front()).cwiseAbs().maxCoeff());
      if (node.has_bounds()) {
        row.moments.push_back(r.moments.at(node.id));
        row.mean_deltas.push_back(row.moments.back().mean - row.moments.front().mean);
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

Explanation explain_target(const CompiledNetwork& net, std::string_view target, int desired_state,
                           const Evidence& base) {
  const Node& node = net.node(target);
  if (desired_state < 0 || desired_state >= node.cardinality())
    throw InvalidEvidenceError(fmt::format("state {} out of range for '{}'", desired_state, target));
  Evidence evidence = base;
  evidence.insert_or_assign(std::string(target), desired_state);
  const MpeResult best = mpe(net, evidence);

  Explanation out;
  out.target = node.id;
  out.target_state = desired_state;
  out.probability = best.probability;
  const std::vector<std::string> keep = net.fact_indicators();
  if (keep.empty()) {
    // Networks without fact indicators explain through every free node.
    out.assignment = best.assignment;
    return out;
  }
  for (const auto& id : keep) {
    const auto it = best.assignment.find(id);
    if (it != best.assignment.end()) out.assignment.emplace(id, it->second);
  }
  return out;
}

std::vector<Swing> sensitivity(const CompiledNetwork& net, std::string_view target,
                               std::span<const std::string> candidates, const Evidence& base,
                               std::optional<int> target_state) {
  const Node& t = net.node(target);
  if (!t.has_bounds()) {
    if (!target_state)
      throw InvalidEvidenceError(fmt::format("target '{}' has no interval bounds; choose a target state", target));
    if (*target_state < 0 || *target_state >= t.cardinality())
      throw InvalidEvidenceError(fmt::format("state {} out of range for '{}'", *target_state, target));
  }
  const auto response = [&](const Evidence& ev) {
    const Eigen::VectorXd p = posterior_marginal(net, ev, target);
    return t.has_bounds() ? indicator_moments(p, t.bounds).mean : p(*target_state);
  };

  std::set<std::string> seen;
  std::vector<Swing> out;
  for (const auto& c : candidates) {
    if (c == t.id) throw Error(fmt::format("candidate '{}' is the sensitivity target", c));
    const Node& node = net.node(c);
    if (!seen.insert(c).second) continue;
    Swing s{c, 0.0, 0.0, 0.0};
    bool any = false;
    for (int state = 0; state < node.cardinality(); ++state) {
      Evidence ev = base;
      ev.insert_or_assign(c, state);
      if (!(evidence_probability(net, ev) > 0.0)) continue;
      const double v = response(ev);
      s.low = any ? std::min(s.low, v) : v;
      s.high = any ? std::max(s.high, v) : v;
      any = true;
    }
    if (!any) throw ImpossibleEvidenceError();
    s.swing = s.high - s.low;
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const Swing& a, const Swing& b) {
    return a.swing != b.swing ? a.swing > b.swing : a.node < b.node;
  });
  return out;
}

// ---------------------------------------------------------------------------
// JSON

Scenario scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidEvidenceError("scenario must be a JSON object");
  Scenario s;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw InvalidEvidenceError("scenario name must be a string");
    s.name = doc["name"].get<std::string>();
  }
  if (!doc.contains("evidence")) return s;
  const json& ev = doc["evidence"];
  if (!ev.is_object()) throw InvalidEvidenceError("evidence must be an object of node -> value");
  for (const auto& [id, value] : ev.items()) {
    if (value.is_string())
      s.evidence.emplace(id, value.get<std::string>());
    else if (value.is_number())
      s.evidence.emplace(id, value.get<double>());
    else
      throw InvalidEvidenceError(fmt::format("evidence for '{}' must be a number or a state label", id));
  }
  return s;
}

namespace {

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json moments_json(const Moments& m) { return {{"mean", m.mean}, {"sd", m.sd}}; }

}  // namespace

json to_json(const ScenarioReport& report) {
  json posteriors = json::object();
  for (const auto& [id, p] : report.posteriors) posteriors[id] = vector_json(p);
  json moments = json::object();
  for (const auto& [id, m] : report.moments) moments[id] = moments_json(m);
  return {{"scenario", report.name},
          {"evidenceProbability", report.evidence_probability},
          {"posteriors", std::move(posteriors)},
          {"moments", std::move(moments)},
          {"warnings", report.warnings}};
}

json to_json(const Comparison& c) {
  json rows = json::array();
  for (const auto& r : c.rows) {
    json row = {{"node", r.node}};
    json posts = json::array();
    for (const auto& p : r.posteriors) posts.push_back(vector_json(p));
    row["posteriors"] = std::move(posts);
    row["maxProbabilityDeltas"] = r.max_probability_deltas;
    if (!r.moments.empty()) {
      json ms = json::array();
      for (const auto& m : r.moments) ms.push_back(moments_json(m));
      row["moments"] = std::move(ms);
      row["meanDeltas"] = r.mean_deltas;
    }
    rows.push_back(std::move(row));
  }
  return {{"scenarios", c.scenarios}, {"rows", std::move(rows)}};
}

json to_json(const CompiledNetwork& net, const Explanation& e) {
  json assignment = json::object();
  for (const auto& [id, state] : e.assignment) assignment[id] = net.node(id).states[state];
  return {{"target", e.target},
          {"targetState", net.node(e.target).states[e.target_state]},
          {"assignment", std::move(assignment)},
          {"probability", e.probability}};
}

json to_json(std::span<const Swing> swings) {
  json out = json::array();
  for (const auto& s : swings) out.push_back({{"node", s.node}, {"swing", s.swing}, {"low", s.low}, {"high", s.high}});
  return out;
}

std::string to_csv(const Comparison& c) {
  const auto num = [](double v) { return fmt::format("{:.17g}", v); };
  const auto csv_field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  std::string out = "node,quantity";
  for (const auto& s : c.scenarios) out += "," + csv_field(s);
  out += '\n';
  for (const auto& r : c.rows) {
    for (Eigen::Index k = 0; k < r.posteriors.front().size(); ++k) {
      out += csv_field(r.node) + "," + fmt::format("p{}", k);
      for (const auto& p : r.posteriors) out += "," + num(p(k));
      out += '\n';
    }
    if (!r.moments.empty()) {
      out += csv_field(r.node) + ",mean";
      for (const auto& m : r.moments) out += "," + num(m.mean);
      out += '\n' + csv_field(r.node) + ",sd";
      for (const auto& m : r.moments) out += "," + num(m.sd);
      out += '\n' + csv_field(r.node) + ",mean_delta";
      for (double d : r.mean_deltas) out += "," + num(d);
      out += '\n';
    }
  }
  return out;
}

namespace {

std::string distribution(const Eigen::VectorXd& p) {
  std::vector<std::string> parts;
  for (Eigen::Index i = 0; i < p.size(); ++i) parts.push_back(fmt::format("{:.3f}", p(i)));
  return fmt::format("{}", fmt::join(parts, " "));
}

}  // namespace

std::string to_text(const ScenarioReport& r) {
  std::size_t width = 4;
  for (const auto& [id, p] : r.posteriors) width = std::max(width, id.size());
  std::string out = fmt::format("scenario: {}\nP(evidence) = {:.6g}\n", r.name.empty() ? "(unnamed)" : r.name,
                                r.evidence_probability);
  for (const auto& w : r.warnings) out += "warning: " + w + "\n";
  for (const auto& [id, p] : r.posteriors) {
    out += fmt::format("{:<{}}  {}", id, width, distribution(p));
    if (const auto it = r.moments.find(id); it != r.moments.end())
      out += fmt::format("  mean {:.2f} sd {:.2f}", it->second.mean, it->second.sd);
    out += '\n';
  }
  return out;
}

std::string to_text(const Comparison& c) {
  std::size_t width = 4;
  for (const auto& r : c.rows) width = std::max(width, r.node.size());
  std::size_t col = 12;
  for (const auto& s : c.scenarios) col = std::max(col, s.size());
  std::string out = fmt::format("{:<{}}", "node", width);
  for (const auto& s : c.scenarios) out += fmt::format("  {:>{}}", s, col);
  out += '\n';
  for (const auto& r : c.rows) {
    if (r.moments.empty()) {
      out += fmt::format("{:<{}}", r.node, width);
      for (double d : r.max_probability_deltas) out += fmt::format("  {:>{}}", fmt::format("max|dp| {:.3f}", d), col);
    } else {
      out += fmt::format("{:<{}}", r.node, width);
      for (std::size_t i = 0; i < r.moments.size(); ++i)
        out += fmt::format("  {:>{}}", fmt::format("{:.2f} ({:+.2f})", r.moments[i].mean, r.mean_deltas[i]), col);
    }
    out += '\n';
  }
  return out;
}

}  // namespace qualinet
