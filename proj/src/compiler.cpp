#include "qualinet/compiler.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <set>

namespace qualinet {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

bool has_impact(const QualityModel& model, std::string_view activity) {
  return std::any_of(model.impacts.begin(), model.impacts.end(),
                     [&](const Impact& i) { return i.activity == activity; });
}

bool subtree_impacted(const QualityModel& model, const Activity& a) {
  if (has_impact(model, a.id)) return true;
  return std::any_of(a.children.begin(), a.children.end(),
                     [&](const std::string& c) { return subtree_impacted(model, *model.find_activity(c)); });
}

const QuantAnnotation* annotation_for(const QualityModel& model, std::string_view id) {
  const auto it = std::find_if(model.annotations.begin(), model.annotations.end(),
                               [&](const QuantAnnotation& q) { return q.node.str() == id; });
  return it == model.annotations.end() ? nullptr : &*it;
}

}  // namespace

std::string_view to_string(EdgeTag tag) {
  switch (tag) {
    case EdgeTag::Subactivity:
      return "subactivity";
    case EdgeTag::PositiveImpact:
      return "impact(+)";
    case EdgeTag::NegativeImpact:
      return "impact(-)";
    case EdgeTag::Indicates:
      return "indicates";
  }
  return "";
}

const SkeletonNode* NetworkSkeleton::find(std::string_view id) const {
  const auto it = std::find_if(nodes.begin(), nodes.end(), [&](const SkeletonNode& n) { return n.id == id; });
  return it == nodes.end() ? nullptr : &*it;
}

std::vector<SkeletonEdge> NetworkSkeleton::incoming(std::string_view id) const {
  std::vector<SkeletonEdge> out;
  std::copy_if(edges.begin(), edges.end(), std::back_inserter(out), [&](const SkeletonEdge& e) { return e.to == id; });
  return out;
}

std::vector<std::string> interval_labels(std::span<const double> b) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i + 1 < b.size(); ++i)
    labels.push_back(fmt::format("[{}, {}{}", b[i], b[i + 1], i + 2 == b.size() ? "]" : ")"));
  return labels;
}

const GoalSpec& resolve_goal(const QualityModel& model, std::string_view selector) {
  if (selector.empty()) {
    if (model.goals.size() == 1) return model.goals.front();
    throw CompileError(model.goals.empty() ? "model declares no goal" : "model declares several goals; choose one");
  }
  for (const auto& g : model.goals)
    if (g.name == selector) return g;
  const GoalSpec* found = nullptr;
  for (const auto& g : model.goals) {
    if (iequals(g.name, selector) || iequals(g.target_activity, selector) || iequals(g.target_indicator, selector)) {
      if (found && found != &g) throw CompileError(fmt::format("goal selector '{}' is ambiguous", selector));
      found = &g;
    }
  }
  if (!found) throw CompileError(fmt::format("no goal matches '{}'", selector));
  return *found;
}

std::vector<std::string> derive_activities(const QualityModel& input, const GoalSpec& goal) {
  const QualityModel model = expand_inheritance(input);
  const Activity* root = model.find_activity(goal.target_activity);
  if (!root) throw CompileError(fmt::format("unknown activity '{}'", goal.target_activity));

  std::vector<std::string> out{root->id};
  std::deque<const Activity*> queue{root};
  while (!queue.empty()) {
    const Activity* cur = queue.front();
    queue.pop_front();
    for (const auto& c : cur->children) {
      const Activity* child = model.find_activity(c);
      if (!subtree_impacted(model, *child)) continue;
      out.push_back(child->id);
      queue.push_back(child);
    }
  }
  return out;
}

ImpactedFacts collect_impacted_facts(const QualityModel& input, std::span<const std::string> activities) {
  const QualityModel model = expand_inheritance(input);
  ImpactedFacts out;
  for (const auto& imp : model.impacts) {
    if (std::find(activities.begin(), activities.end(), imp.activity) == activities.end()) continue;
    out.impacts.push_back(imp);
    if (std::find(out.facts.begin(), out.facts.end(), imp.fact) == out.facts.end()) out.facts.push_back(imp.fact);
  }
  // Declaration order of the facts, not of their first impact.
  std::vector<FactRef> ordered;
  for (const auto& f : model.facts)
    if (std::find(out.facts.begin(), out.facts.end(), f.ref) != out.facts.end()) ordered.push_back(f.ref);
  out.facts = std::move(ordered);
  return out;
}

NetworkSkeleton build_skeleton(const QualityModel& input, const GoalSpec& goal) {
  const QualityModel model = expand_inheritance(input);
  const std::vector<std::string> activities = derive_activities(model, goal);
  const ImpactedFacts impacted = collect_impacted_facts(model, activities);

  NetworkSkeleton sk;
  sk.name = model.name;
  std::vector<NodeRef> ranked;
  for (const auto& a : activities) ranked.push_back(NodeRef::activity(a));
  for (const auto& f : impacted.facts) ranked.push_back(NodeRef::of(f));
  for (const auto& r : ranked)
    sk.nodes.push_back(SkeletonNode{r.str(), r.is_fact() ? NodeKind::Fact : NodeKind::Activity, model.state_labels(r), {}});

  for (const auto& a : activities)
    for (const auto& c : model.find_activity(a)->children)
      if (std::find(activities.begin(), activities.end(), c) != activities.end())
        sk.edges.push_back({c, a, EdgeTag::Subactivity});
  for (const auto& imp : impacted.impacts)
    sk.edges.push_back({imp.fact.str(), imp.activity,
                        imp.sign == Sign::Positive ? EdgeTag::PositiveImpact : EdgeTag::NegativeImpact});

  std::vector<std::string> unmeasured;
  for (const auto& f : impacted.facts) {
    const bool measured = std::any_of(model.indicators.begin(), model.indicators.end(),
                                      [&](const IndicatorSpec& i) { return i.subject == NodeRef::of(f); });
    if (!measured) unmeasured.push_back(f.str());
  }
  if (!unmeasured.empty())
    throw CompileError(fmt::format("every fact needs at least one indicator; missing for: {}", fmt::join(unmeasured, ", ")));

  for (const auto& ind : model.indicators) {
    if (std::find(ranked.begin(), ranked.end(), ind.subject) == ranked.end()) continue;
    sk.nodes.push_back(SkeletonNode{ind.id, NodeKind::Indicator, interval_labels(ind.boundaries), ind.boundaries});
    sk.edges.push_back({ind.subject.str(), ind.id, EdgeTag::Indicates});
  }
  if (!sk.find(goal.target_indicator))
    throw CompileError(fmt::format("goal metric '{}' is not attached to the network", goal.target_indicator));
  return sk;
}

CompiledNetwork synthesize_network(const NetworkSkeleton& sk, const QualityModel& input) {
  const QualityModel model = expand_inheritance(input);
  std::vector<Node> nodes;
  for (const auto& sn : sk.nodes) {
    Node node{sn.id, sn.kind, sn.states, sn.bounds, {}, {}};
    const std::vector<SkeletonEdge> in = sk.incoming(sn.id);
    for (const auto& e : in) node.parents.push_back(e.from);
    const int k = static_cast<int>(sn.states.size());

    if (sn.kind == NodeKind::Indicator) {
      const IndicatorSpec* spec = model.find_indicator(sn.id);
      if (!spec || in.size() != 1) throw CompileError(fmt::format("indicator '{}' must have exactly one parent", sn.id));
      const SkeletonNode* subject = sk.find(in.front().from);
      try {
        node.cpt = build_indicator_npt(Eigen::Map<const Eigen::VectorXd>(spec->boundaries.data(),
                                                                          static_cast<Eigen::Index>(spec->boundaries.size())),
                                       spec->expression, subject->states);
      } catch (const std::invalid_argument& e) {
        throw CompileError(fmt::format("indicator '{}': {}", sn.id, e.what()));
      }
      nodes.push_back(std::move(node));
      continue;
    }

    const QuantAnnotation* q = annotation_for(model, sn.id);
    if (q) {
      for (const auto& [parent, weight] : q->weights)
        if (std::find(node.parents.begin(), node.parents.end(), parent.str()) == node.parents.end())
          throw CompileError(fmt::format("weight on '{}' for '{}': not a parent in the network", parent.str(), sn.id));
      if (q->prior && !in.empty())
        throw CompileError(fmt::format("prior given for '{}', which has parents in the network", sn.id));
      if (q->prior && static_cast<int>(q->prior->size()) != k)
        throw CompileError(fmt::format("prior of '{}' has {} entries, expected {}", sn.id, q->prior->size(), k));
    }

    if (in.empty()) {
      node.cpt = q && q->prior ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(q->prior->data(), k))
                               : Eigen::VectorXd(Eigen::VectorXd::Constant(k, 1.0 / k));
      nodes.push_back(std::move(node));
      continue;
    }

    WeightedMeanSpec wm;
    for (const auto& e : in) {
      ParentInfluence p;
      p.sign = e.tag == EdgeTag::NegativeImpact ? Sign::Negative : Sign::Positive;
      p.states = static_cast<int>(sk.find(e.from)->states.size());
      if (q)
        for (const auto& [parent, weight] : q->weights)
          if (parent.str() == e.from) p.weight = weight;
      wm.parents.push_back(p);
    }
    const double variance = q && q->variance ? *q->variance : kDefaultVariance;
    try {
      node.cpt = build_ranked_npt(wm, variance, k);
    } catch (const std::invalid_argument& e) {
      throw CompileError(fmt::format("node '{}': {}", sn.id, e.what()));
    }
    nodes.push_back(std::move(node));
  }
  return CompiledNetwork(sk.name, std::move(nodes));
}

CompiledNetwork compile_model(const QualityModel& model, std::string_view goal_selector) {
  const GoalSpec& goal = resolve_goal(model, goal_selector);
  return synthesize_network(build_skeleton(model, goal), model);
}

}  // namespace qualinet
