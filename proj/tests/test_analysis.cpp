#include "fixtures.hpp"
#include "oracle.hpp"
#include "qualinet/analysis.hpp"

#include <doctest.h>

using namespace qualinet;

namespace {

double midpoint_mean(const std::vector<double>& p, const std::vector<double>& bounds) {
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) m += p[i] * (bounds[i] + bounds[i + 1]) / 2;
  return m;
}

Scenario measured() {
  return {"measured", {{"CommentRatio", 0.2517}, {"AvgCyclomaticComplexity", 5.18}, {"AvgModuleSize", 33.47}}};
}

}  // namespace

TEST_CASE("indicator moments") {
  const std::vector<double> b{0, 10, 20, 30};
  const Moments m = indicator_moments(Eigen::Vector3d(0.2, 0.5, 0.3), b);
  CHECK(m.mean == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(m.sd == doctest::Approx(7.0).epsilon(1e-14));

  const Moments point = indicator_moments(Eigen::Vector3d(0, 0, 1), b);
  CHECK(point.mean == 25.0);
  CHECK(point.sd == 0.0);

  const std::vector<double> sym{-3, -1, 1, 3};
  CHECK(indicator_moments(Eigen::Vector3d::Constant(1.0 / 3), sym).mean == doctest::Approx(0.0));
  CHECK_THROWS_AS(indicator_moments(Eigen::Vector2d(0.5, 0.5), b), std::invalid_argument);
}

TEST_CASE("evidence resolution") {
  const CompiledNetwork net = fixtures::cm1();
  const ResolvedEvidence r = resolve_evidence(net, measured());
  CHECK(r.warnings.empty());
  CHECK(r.evidence.at("CommentRatio") == 2);
  CHECK(r.evidence.at("AvgCyclomaticComplexity") == 1);
  CHECK(r.evidence.at("AvgModuleSize") == 0);

  // Interval edges: [a, b) except the last, which is closed.
  CHECK(resolve_evidence(net, {"", {{"ChangeEffort", 10.0}}}).evidence.at("ChangeEffort") == 1);
  CHECK(resolve_evidence(net, {"", {{"ChangeEffort", 66.6}}}).evidence.at("ChangeEffort") == 4);

  const ResolvedEvidence clamped = resolve_evidence(net, {"", {{"AvgModuleSize", -5.0}}});
  CHECK(clamped.evidence.at("AvgModuleSize") == 0);
  REQUIRE(clamped.warnings.size() == 1);
  CHECK(clamped.warnings[0].find("AvgModuleSize") != std::string::npos);

  CHECK(resolve_evidence(net, {"", {{"Maintenance", std::string("high")}}}).evidence.at("Maintenance") == 2);
  CHECK_THROWS_AS(resolve_evidence(net, {"", {{"Maintenance", 0.5}}}), InvalidEvidenceError);
  CHECK_THROWS_AS(resolve_evidence(net, {"", {{"Maintenance", std::string("superb")}}}), InvalidEvidenceError);
  CHECK_THROWS_AS(resolve_evidence(net, {"", {{"Nope", 1.0}}}), UnknownNodeError);
}

TEST_CASE("scenario file format") {
  const Scenario s = scenario_from_json(nlohmann::json::parse(R"({"name": "x", "evidence": {"A": 1.5, "B": "high"}})"));
  CHECK(s.name == "x");
  CHECK(std::get<double>(s.evidence.at("A")) == 1.5);
  CHECK(std::get<std::string>(s.evidence.at("B")) == "high");
  CHECK(scenario_from_json(nlohmann::json::object()).evidence.empty());
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"evidence": {"A": true}})")), InvalidEvidenceError);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"evidence": [1]})")), InvalidEvidenceError);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse("[]")), InvalidEvidenceError);
}

TEST_CASE("scenarios on CM1") {
  const CompiledNetwork net = fixtures::cm1();
  const oracle::LeafIndicatorOracle joint(net);
  const int effort = net.index_of("ChangeEffort");
  const std::vector<double>& bounds = net.node(effort).bounds;

  SUBCASE("empty evidence reproduces the prior") {
    const ScenarioReport r = run_scenario(net, {"baseline", {}});
    CHECK(r.evidence_probability == 1.0);
    const Posterior bf = brute_force_oracle(net, {});
    for (const auto& [id, p] : bf) CHECK((p - r.posteriors.at(id)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(r.posteriors.at("Comment.Appropriateness")(0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(r.moments.size() == 4);
    CHECK(r.moments.at("ChangeEffort").mean ==
          doctest::Approx(midpoint_mean(joint.indicator_posterior(effort, {}), bounds)).epsilon(1e-12));
  }
  SUBCASE("measured values lower the expected effort") {
    const ScenarioReport base = run_scenario(net, {"baseline", {}});
    const ScenarioReport r = run_scenario(net, measured());
    CHECK(r.moments.at("ChangeEffort").mean < base.moments.at("ChangeEffort").mean);
    const std::map<int, int> ev{{net.index_of("CommentRatio"), 2},
                                {net.index_of("AvgCyclomaticComplexity"), 1},
                                {net.index_of("AvgModuleSize"), 0}};
    CHECK(r.moments.at("ChangeEffort").mean ==
          doctest::Approx(midpoint_mean(joint.indicator_posterior(effort, ev), bounds)).epsilon(1e-12));
    CHECK(r.evidence_probability > 0.0);
    CHECK(r.evidence_probability < 1.0);
  }
  SUBCASE("impossible evidence") {
    const CompiledNetwork chain = fixtures::identity_chain();
    CHECK_THROWS_AS(run_scenario(chain, {"x", {{"R", std::string("s0")}, {"L", std::string("s2")}}}),
                    ImpossibleEvidenceError);
  }
}

TEST_CASE("scenario comparison") {
  const CompiledNetwork net = fixtures::cm1();
  const std::vector<Scenario> pair{{"baseline", {}}, measured()};
  const Comparison c = compare_scenarios(net, pair);
  CHECK(c.scenarios == std::vector<std::string>{"baseline", "measured"});
  CHECK(c.rows.size() == 15);
  const auto& effort = *std::find_if(c.rows.begin(), c.rows.end(), [](const auto& r) { return r.node == "ChangeEffort"; });
  CHECK(effort.mean_deltas[0] == 0.0);
  CHECK(effort.mean_deltas[1] < 0.0);

  const std::vector<Scenario> same{measured(), measured()};
  for (const auto& row : compare_scenarios(net, same).rows) {
    for (double d : row.mean_deltas) CHECK(d == 0.0);
    for (double d : row.max_probability_deltas) CHECK(d == 0.0);
  }

  const std::vector<Scenario> three{{"c", {}}, {"a", {{"Maintenance", std::string("low")}}}, measured()};
  const Comparison t = compare_scenarios(net, three);
  CHECK(t.scenarios == std::vector<std::string>{"c", "a", "measured"});
  CHECK(t.rows.front().posteriors.size() == 3);

  CHECK_THROWS_AS(compare_scenarios(net, std::span<const Scenario>(pair.data(), 1)), Error);

  const std::string csv = to_csv(c);
  CHECK(csv.rfind("node,quantity,baseline,measured\n", 0) == 0);
  CHECK(csv.find("ChangeEffort,mean_delta,0,") != std::string::npos);
}

TEST_CASE("target explanation") {
  SUBCASE("CM1 lowest effort interval") {
    const CompiledNetwork net = fixtures::cm1();
    const Explanation e = explain_target(net, "ChangeEffort", 0);
    CHECK(e.assignment.size() == 3);
    const oracle::LeafIndicatorOracle joint(net);
    std::vector<int> free;
    for (const auto& id : net.fact_indicators()) free.push_back(net.index_of(id));
    double p = 0.0;
    const auto want = joint.explain({{net.index_of("ChangeEffort"), 0}}, free, &p);
    for (const auto& [ind, s] : want) CHECK(e.assignment.at(net.node(ind).id) == s);
    CHECK(e.probability == doctest::Approx(p).epsilon(1e-10));
  }
  SUBCASE("identity table forces the root") {
    const CompiledNetwork chain = fixtures::identity_chain();
    const Explanation e = explain_target(chain, "L", 1);
    CHECK(e.assignment.at("R") == 1);
    CHECK(e.assignment.at("M") == 1);
    CHECK(e.probability == doctest::Approx(0.3));
  }
  SUBCASE("disconnected target leaves the prior argmax") {
    const CompiledNetwork two = fixtures::two_node();
    std::vector<Node> nodes(two.nodes().begin(), two.nodes().end());
    nodes.push_back(Node{"Z", NodeKind::Variable, {"0", "1"}, {}, {}, Eigen::Vector2d(0.3, 0.7)});
    const CompiledNetwork island("island", nodes);
    const Explanation e = explain_target(island, "Z", 0);
    CHECK(e.assignment.at("A") == 0);
    CHECK(e.assignment.at("B") == 0);
  }
  SUBCASE("unreachable target") {
    Eigen::Matrix3d stuck = Eigen::Matrix3d::Zero();
    stuck.row(0).setOnes();
    const CompiledNetwork net("stuck", {Node{"R", NodeKind::Variable, {"a", "b", "c"}, {}, {}, Eigen::Vector3d::Constant(1.0 / 3)},
                                        Node{"T", NodeKind::Variable, {"a", "b", "c"}, {}, {"R"}, stuck}});
    CHECK_THROWS_AS(explain_target(net, "T", 2), ImpossibleEvidenceError);
  }
}

TEST_CASE("sensitivity") {
  const CompiledNetwork net = fixtures::cm1();
  const std::vector<std::string> candidates = net.fact_indicators();

  SUBCASE("CM1 fact indicators against change effort") {
    const std::vector<Swing> s = sensitivity(net, "ChangeEffort", candidates);
    REQUIRE(s.size() == 3);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) CHECK(s[i].swing >= s[i + 1].swing);

    const oracle::LeafIndicatorOracle joint(net);
    const int effort = net.index_of("ChangeEffort");
    for (const auto& sw : s) {
      CHECK(sw.swing > 0.0);
      double lo = 1e300;
      double hi = -1e300;
      const int c = net.index_of(sw.node);
      for (int st = 0; st < net.node(c).cardinality(); ++st) {
        const double m = midpoint_mean(joint.indicator_posterior(effort, {{c, st}}), net.node(effort).bounds);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
      }
      CHECK(sw.low == doctest::Approx(lo).epsilon(1e-10));
      CHECK(sw.high == doctest::Approx(hi).epsilon(1e-10));
      CHECK(sw.swing == doctest::Approx(hi - lo).epsilon(1e-9));
    }

    std::vector<std::string> reversed(candidates.rbegin(), candidates.rend());
    const std::vector<Swing> r = sensitivity(net, "ChangeEffort", reversed);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(r[i].node == s[i].node);
      CHECK(r[i].swing == s[i].swing);
    }
  }
  SUBCASE("probability swing on a ranked target") {
    const std::vector<Swing> s = sensitivity(net, "Maintenance", candidates, {}, 2);
    for (const auto& sw : s) {
      CHECK(sw.swing >= 0.0);
      CHECK(sw.high <= 1.0);
    }
    CHECK_THROWS_AS(sensitivity(net, "Maintenance", candidates), InvalidEvidenceError);
  }
  SUBCASE("edge cases") {
    CHECK(sensitivity(net, "ChangeEffort", std::vector<std::string>{"CommentRatio"}).size() == 1);
    CHECK_THROWS_AS(sensitivity(net, "ChangeEffort", std::vector<std::string>{"ChangeEffort"}), Error);

    const CompiledNetwork two = fixtures::two_node();
    std::vector<Node> nodes(two.nodes().begin(), two.nodes().end());
    nodes.push_back(Node{"Z", NodeKind::Variable, {"0", "1"}, {}, {}, Eigen::Vector2d(0.3, 0.7)});
    const CompiledNetwork island("island", nodes);
    const std::vector<Swing> s = sensitivity(island, "B", std::vector<std::string>{"Z", "A"}, {}, 0);
    REQUIRE(s.size() == 2);
    CHECK(s[0].node == "A");
    CHECK(s[1].node == "Z");
    CHECK(s[1].swing == 0.0);
  }
}

TEST_CASE("single-indicator sweeps move effort monotonically") {
  const CompiledNetwork net = fixtures::cm1();
  const QualityModel model = parse_model(fixtures::slurp(fixtures::model_path("cm1.qm")));
  for (const auto& id : net.fact_indicators()) {
    // Orientation from the model: does a higher indicator value mean a more
    // strongly expressed fact, and does that fact help or hinder?
    const IndicatorSpec& spec = *model.find_indicator(id);
    const auto& levels = std::get<PartitionedSpec>(spec.expression).levels;
    const auto mean_of = [&](std::string_view label) {
      return std::find_if(levels.begin(), levels.end(), [&](const auto& l) { return l.first == label; })->second.mean;
    };
    const bool rises_with_fact = mean_of("high") > mean_of("low");
    const Impact& impact =
        *std::find_if(model.impacts.begin(), model.impacts.end(), [&](const Impact& i) { return i.fact == spec.subject.fact(); });
    const bool higher_is_better = rises_with_fact == (impact.sign == Sign::Positive);

    std::vector<double> means;
    for (int s = 0; s < net.node(id).cardinality(); ++s)
      means.push_back(run_scenario(net, {"", {{id, net.node(id).states[s]}}}).moments.at("ChangeEffort").mean);
    for (std::size_t s = 0; s + 1 < means.size(); ++s) {
      if (higher_is_better)
        CHECK(means[s + 1] <= means[s] + 1e-12);
      else
        CHECK(means[s + 1] >= means[s] - 1e-12);
    }
  }
}

TEST_CASE("report rendering") {
  const CompiledNetwork net = fixtures::cm1();
  const ScenarioReport r = run_scenario(net, measured());
  const nlohmann::json j = to_json(r);
  CHECK(j["scenario"] == "measured");
  CHECK(j["posteriors"].size() == 15);
  CHECK(j["moments"]["ChangeEffort"]["mean"].get<double>() == r.moments.at("ChangeEffort").mean);
  const std::string text = to_text(r);
  CHECK(text.find("ChangeEffort") != std::string::npos);
  CHECK(text.find("mean") != std::string::npos);
}
