#include "qualinet/compiler.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace qualinet;

namespace {

QualityModel cm1() {
  std::ifstream in(std::string(QUALINET_MODELS) + "/cm1.qm");
  std::stringstream s;
  s << in.rdbuf();
  return parse_model(s.str());
}

constexpr std::string_view kToy = R"(
model "toy" {
  activity Use {
    activity Read
    activity Change
    activity Idle { activity Sleep }
  }
  entity Code
  fact Code.Clarity
  impact Code.Clarity -> Read +
  impact Code.Clarity -> Change +
  indicator Clarity for Code.Clarity {
    intervals [0, 1, 2, 3]
    partitioned { low: tnormal(0.5, 1) medium: tnormal(1.5, 1) high: tnormal(2.5, 1) }
  }
  indicator Effort for Use {
    intervals [0, 10, 20]
    arithmetic mean = 15 - 10 * level variance 9
  }
  indicator Naps for Idle {
    intervals [0, 5, 10]
    arithmetic mean = 5 + 0 * level variance 4
  }
  goal "effort" { question "How costly is use?" metric Effort activity Use }
  goal "rest" { question "How much idle?" metric Naps activity Idle }
}
)";

std::size_t count_kind(const NetworkSkeleton& sk, NodeKind kind) {
  return static_cast<std::size_t>(
      std::count_if(sk.nodes.begin(), sk.nodes.end(), [&](const SkeletonNode& n) { return n.kind == kind; }));
}

}  // namespace

TEST_CASE("goal resolution") {
  const QualityModel m = parse_model(kToy);
  CHECK(resolve_goal(m, "effort").name == "effort");
  CHECK(resolve_goal(m, "IDLE").name == "rest");
  CHECK(resolve_goal(m, "naps").name == "rest");
  CHECK_THROWS_AS(resolve_goal(m, ""), CompileError);
  CHECK_THROWS_AS(resolve_goal(m, "nothing"), CompileError);
  CHECK(resolve_goal(cm1(), "maintenance").target_indicator == "ChangeEffort");
  CHECK(resolve_goal(cm1(), "").target_activity == "Maintenance");
}

TEST_CASE("derive activities") {
  const QualityModel m = cm1();
  CHECK(derive_activities(m, m.goals[0]) ==
        std::vector<std::string>{"Maintenance", "QualityAssurance", "Implementation", "Analysis", "Testing",
                                 "Modification", "Comprehension", "CodeReading"});

  const QualityModel toy = parse_model(kToy);
  // Idle has no impacted descendant and is pruned under Use.
  CHECK(derive_activities(toy, toy.goals[0]) == std::vector<std::string>{"Use", "Read", "Change"});
  // The goal activity survives even without impacts below it.
  CHECK(derive_activities(toy, toy.goals[1]) == std::vector<std::string>{"Idle"});

  GoalSpec leaf{"leaf", "", "Effort", "Read"};
  CHECK(derive_activities(toy, leaf) == std::vector<std::string>{"Read"});
  GoalSpec unknown{"x", "", "Effort", "Nope"};
  CHECK_THROWS_AS(derive_activities(toy, unknown), CompileError);
}

TEST_CASE("collect impacted facts") {
  const QualityModel m = cm1();
  const auto acts = derive_activities(m, m.goals[0]);
  const ImpactedFacts f = collect_impacted_facts(m, acts);
  CHECK(f.facts.size() == 3);
  CHECK(f.impacts.size() == 3);

  CHECK(collect_impacted_facts(m, {}).facts.empty());

  const QualityModel toy = parse_model(kToy);
  const ImpactedFacts t = collect_impacted_facts(toy, derive_activities(toy, toy.goals[0]));
  CHECK(t.facts.size() == 1);
  CHECK(t.impacts.size() == 2);
}

TEST_CASE("skeleton") {
  SUBCASE("CM1 structure") {
    const QualityModel m = cm1();
    const NetworkSkeleton sk = build_skeleton(m, m.goals[0]);
    CHECK(count_kind(sk, NodeKind::Activity) == 8);
    CHECK(count_kind(sk, NodeKind::Fact) == 3);
    CHECK(count_kind(sk, NodeKind::Indicator) == 4);
    CHECK(sk.edges.size() == 14);
    CHECK(sk.find("ChangeEffort"));
    for (const auto& e : sk.edges) {
      if (e.tag == EdgeTag::Subactivity) CHECK(sk.find(e.from)->kind == NodeKind::Activity);
      if (e.tag == EdgeTag::NegativeImpact || e.tag == EdgeTag::PositiveImpact) {
        CHECK(sk.find(e.from)->kind == NodeKind::Fact);
        CHECK(sk.find(e.to)->kind == NodeKind::Activity);
      }
      if (e.tag == EdgeTag::Indicates) CHECK(sk.incoming(e.to).size() == 1);
    }
    const auto in = sk.incoming("CodeReading");
    REQUIRE(in.size() == 1);
    CHECK(in[0].tag == EdgeTag::NegativeImpact);
    CHECK(sk.find("ChangeEffort")->states.front() == "[3.9, 10)");
    CHECK(sk.find("ChangeEffort")->states.back() == "[45, 66.6]");
  }
  SUBCASE("single activity with its indicator") {
    const QualityModel m = parse_model(
        "model \"m\" { activity A indicator I for A { intervals [0, 1, 2] arithmetic mean = 1 + 0 * level variance 1 }"
        " goal \"g\" { question \"q\" metric I activity A } }");
    const NetworkSkeleton sk = build_skeleton(m, m.goals[0]);
    CHECK(sk.nodes.size() == 2);
    CHECK(sk.edges.size() == 1);
  }
  SUBCASE("fact without an indicator") {
    const QualityModel m = parse_model(
        "model \"m\" { activity A entity E fact E.X fact E.Y impact E.X -> A + impact E.Y -> A -"
        " indicator I for A { intervals [0, 1, 2] arithmetic mean = 1 + 0 * level variance 1 }"
        " indicator J for E.Y { intervals [0, 1] arithmetic mean = 1 + 0 * level variance 1 }"
        " goal \"g\" { question \"q\" metric I activity A } }");
    try {
      build_skeleton(m, m.goals[0]);
      FAIL("expected a compile error");
    } catch (const CompileError& e) {
      CHECK(std::string(e.what()).find("E.X") != std::string::npos);
      CHECK(std::string(e.what()).find("E.Y") == std::string::npos);
    }
  }
}

TEST_CASE("synthesize") {
  SUBCASE("CM1 NPTs") {
    const CompiledNetwork net = compile_model(cm1(), "");
    CHECK(net.size() == 15);
    for (const auto& node : net.nodes()) {
      long cols = 1;
      for (const auto& p : node.parents) cols *= net.node(p).cardinality();
      CHECK(node.cpt.rows() == node.cardinality());
      CHECK(node.cpt.cols() == cols);
      for (Eigen::Index c = 0; c < node.cpt.cols(); ++c) CHECK(std::abs(node.cpt.col(c).sum() - 1.0) <= 1e-9);
    }
    // Small modules make code reading easier.
    const Node& reading = net.node("CodeReading");
    CHECK(reading.cpt(2, 0) > reading.cpt(0, 0));
    CHECK(reading.cpt(0, 2) > reading.cpt(2, 2));
    // Uniform default prior on root facts.
    const Node& extent = net.node("Module.Extent");
    CHECK(extent.parents.empty());
    for (int s = 0; s < 3; ++s) CHECK(extent.cpt(s, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    // Maintenance parents in declaration order.
    CHECK(net.node("Maintenance").parents ==
          std::vector<std::string>{"QualityAssurance", "Implementation", "Analysis"});
  }
  SUBCASE("explicit prior is stored verbatim") {
    QualityModel m = parse_model(kToy);
    m.annotations.push_back({NodeRef::of({"Code", "Clarity"}), std::nullopt, std::nullopt, {}, std::vector{0.2, 0.3, 0.5}});
    const CompiledNetwork net = compile_model(m, "effort");
    const Node& f = net.node("Code.Clarity");
    CHECK(f.cpt(0, 0) == 0.2);
    CHECK(f.cpt(1, 0) == 0.3);
    CHECK(f.cpt(2, 0) == 0.5);
  }
  SUBCASE("weights shift the mean") {
    QualityModel m = parse_model(kToy);
    m.annotations.push_back({NodeRef::activity("Use"), std::nullopt, 0.01, {{NodeRef::activity("Read"), 3.0}}, std::nullopt});
    const CompiledNetwork net = compile_model(m, "effort");
    const Node& use = net.node("Use");
    REQUIRE(use.parents == std::vector<std::string>{"Read", "Change"});
    // Read high and Change low (column 2*3+0) leans high with weight 3:1.
    CHECK(use.cpt(2, 6) > use.cpt(0, 6));
  }
  SUBCASE("errors") {
    QualityModel weight_on_stranger = parse_model(kToy);
    weight_on_stranger.annotations.push_back(
        {NodeRef::activity("Read"), std::nullopt, std::nullopt, {{NodeRef::activity("Change"), 2.0}}, std::nullopt});
    CHECK_THROWS_AS(compile_model(weight_on_stranger, "effort"), CompileError);

    QualityModel prior_on_child = parse_model(kToy);
    prior_on_child.annotations.push_back(
        {NodeRef::activity("Read"), std::nullopt, std::nullopt, {}, std::vector{0.2, 0.3, 0.5}});
    CHECK_THROWS_AS(compile_model(prior_on_child, "effort"), CompileError);

    QualityModel short_prior = parse_model(kToy);
    short_prior.annotations.push_back({NodeRef::of({"Code", "Clarity"}), std::nullopt, std::nullopt, {}, std::vector{0.5, 0.5}});
    CHECK_THROWS_AS(compile_model(short_prior, "effort"), CompileError);
  }
}

TEST_CASE("serialized network") {
  const std::string a = compile_model(cm1(), "maintenance").to_json();
  const std::string b = compile_model(cm1(), "Planning of future maintenance efforts").to_json();
  CHECK(a == b);

  const CompiledNetwork back = CompiledNetwork::from_json(a);
  CHECK(back.to_json() == a);

  // The flat cpt is the table over (parents..., node), last variable fastest.
  const auto doc = nlohmann::json::parse(a);
  const CompiledNetwork net = compile_model(cm1(), "");
  for (const auto& n : doc["nodes"]) {
    const Node& node = net.node(n["id"].get<std::string>());
    const auto flat = n["cpt"].get<std::vector<double>>();
    REQUIRE(flat.size() == static_cast<std::size_t>(node.cpt.size()));
    const int k = node.cardinality();
    for (std::size_t i = 0; i < flat.size(); ++i)
      CHECK(flat[i] == node.cpt(static_cast<Eigen::Index>(i % k), static_cast<Eigen::Index>(i / k)));
  }
  CHECK(doc["nodes"].size() == 15);
  CHECK(doc["nodes"][0].contains("bounds") == false);

  CHECK_THROWS_AS(CompiledNetwork::from_json("{\"name\": \"x\", \"nodes\": [{\"id\": \"a\"}]}"), CompileError);
}

TEST_CASE("networks reject cycles and bad tables") {
  Node a{"a", NodeKind::Variable, {"0", "1"}, {}, {"b"}, Eigen::MatrixXd::Constant(2, 2, 0.5)};
  Node b{"b", NodeKind::Variable, {"0", "1"}, {}, {"a"}, Eigen::MatrixXd::Constant(2, 2, 0.5)};
  CHECK_THROWS_AS(CompiledNetwork("cyclic", {a, b}), CompileError);

  Node c{"c", NodeKind::Variable, {"0", "1"}, {}, {}, Eigen::MatrixXd::Constant(2, 1, 0.6)};
  CHECK_THROWS_AS(CompiledNetwork("unnormalized", {c}), CompileError);
}
