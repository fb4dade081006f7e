#include "qualinet/inference.hpp"

#include "qualinet/factor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace qualinet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Observed state per node index, -1 when free.
std::vector<int> observed_states(const CompiledNetwork& net, const Evidence& evidence) {
  std::vector<int> observed(net.size(), -1);
  for (const auto& [id, state] : evidence) {
    const int i = net.index_of(id);
    if (state < 0 || state >= net.node(i).cardinality())
      throw InvalidEvidenceError(fmt::format("state {} out of range for '{}'", state, id));
    observed[i] = state;
  }
  return observed;
}

std::vector<bool> ancestral_closure(const CompiledNetwork& net, std::vector<int> seeds) {
  std::vector<bool> in(net.size(), false);
  while (!seeds.empty()) {
    const int cur = seeds.back();
    seeds.pop_back();
    if (in[cur]) continue;
    in[cur] = true;
    for (int p : net.parent_indices(cur)) seeds.push_back(p);
  }
  return in;
}

Factor cpt_factor(const CompiledNetwork& net, int index) {
  const Node& node = net.node(index);
  std::vector<int> vars(net.parent_indices(index).begin(), net.parent_indices(index).end());
  std::vector<int> cards;
  for (int p : vars) cards.push_back(net.node(p).cardinality());
  vars.push_back(index);
  cards.push_back(node.cardinality());
  return Factor(std::move(vars), std::move(cards), Eigen::Map<const Eigen::ArrayXd>(node.cpt.data(), node.cpt.size()));
}

/// Greedy min-fill ordering of `eliminate` over the interaction graph of
/// `factors`; ties go to the lexicographically smallest node id.
std::vector<int> min_fill_order(const CompiledNetwork& net, const std::vector<Factor>& factors,
                                std::vector<int> eliminate) {
  std::map<int, std::set<int>> adjacent;
  for (const auto& f : factors)
    for (int a : f.vars())
      for (int b : f.vars())
        if (a != b) adjacent[a].insert(b);

  std::vector<int> order;
  while (!eliminate.empty()) {
    std::size_t best = 0;
    long best_fill = std::numeric_limits<long>::max();
    for (std::size_t c = 0; c < eliminate.size(); ++c) {
      const auto& nb = adjacent[eliminate[c]];
      long fill = 0;
      for (auto a = nb.begin(); a != nb.end(); ++a)
        for (auto b = std::next(a); b != nb.end(); ++b)
          if (!adjacent[*a].count(*b)) ++fill;
      if (fill < best_fill || (fill == best_fill && net.node(eliminate[c]).id < net.node(eliminate[best]).id)) {
        best = c;
        best_fill = fill;
      }
    }
    const int v = eliminate[best];
    const std::set<int> nb = adjacent[v];
    for (int a : nb) {
      for (int b : nb)
        if (a != b) adjacent[a].insert(b);
      adjacent[a].erase(v);
    }
    adjacent.erase(v);
    order.push_back(v);
    eliminate.erase(eliminate.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return order;
}

/// Result of eliminating everything but the kept variables. The true table is
/// `factor * exp(log_scale)`; log_scale = -inf means the evidence is impossible.
struct Reduced {
  Factor factor;
  double log_scale = 0.0;
};

/// Sum-product elimination over the ancestral set of `keep` and the evidence,
/// rescaling every intermediate factor by its maximum.
Reduced sum_product(const CompiledNetwork& net, const std::vector<int>& observed, const std::vector<int>& keep) {
  std::vector<int> seeds = keep;
  for (int i = 0; i < net.size(); ++i)
    if (observed[i] >= 0) seeds.push_back(i);
  const std::vector<bool> relevant = ancestral_closure(net, seeds);

  std::vector<Factor> factors;
  std::vector<int> eliminate;
  for (int i = 0; i < net.size(); ++i) {
    if (!relevant[i]) continue;
    Factor f = cpt_factor(net, i);
    for (int v : std::vector<int>(f.vars()))
      if (observed[v] >= 0) f = f.reduce(v, observed[v]);
    factors.push_back(std::move(f));
    if (observed[i] < 0 && std::find(keep.begin(), keep.end(), i) == keep.end()) eliminate.push_back(i);
  }

  Reduced out;
  for (int v : min_fill_order(net, factors, eliminate)) {
    Factor joint;
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (f.contains(v))
        joint = joint * f;
      else
        rest.push_back(std::move(f));
    }
    Factor summed = joint.sum_out(v);
    const double peak = summed.table().maxCoeff();
    if (!(peak > 0.0)) {
      out.log_scale = kNegInf;
      return out;
    }
    summed.table() /= peak;
    out.log_scale += std::log(peak);
    rest.push_back(std::move(summed));
    factors = std::move(rest);
  }
  for (const auto& f : factors) out.factor = out.factor * f;
  return out;
}

/// log of max over free variables of the joint with the evidence fixed.
double max_log_joint(const CompiledNetwork& net, const std::vector<int>& observed) {
  std::vector<Factor> factors;
  std::vector<int> eliminate;
  for (int i = 0; i < net.size(); ++i) {
    Factor f = cpt_factor(net, i);
    f.table() = f.table().log();
    for (int v : std::vector<int>(f.vars()))
      if (observed[v] >= 0) f = f.reduce(v, observed[v]);
    factors.push_back(std::move(f));
    if (observed[i] < 0) eliminate.push_back(i);
  }
  const auto add = [](double a, double b) { return a + b; };
  for (int v : min_fill_order(net, factors, eliminate)) {
    Factor joint = Factor::constant(0.0);
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (f.contains(v))
        joint = joint.combine(f, add);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(joint.max_out(v));
    factors = std::move(rest);
  }
  double total = 0.0;
  for (const auto& f : factors) total += f.table()(0);
  return total;
}

}  // namespace

double joint_probability(const CompiledNetwork& net, std::span<const int> assignment) {
  double p = 1.0;
  for (int i = 0; i < net.size(); ++i) p *= net.conditional(i, assignment);
  return p;
}

Eigen::VectorXd posterior_marginal(const CompiledNetwork& net, const Evidence& evidence, std::string_view node) {
  const std::vector<int> observed = observed_states(net, evidence);
  const int q = net.index_of(node);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(net.node(q).cardinality());
  if (observed[q] >= 0) {
    if (!(evidence_probability(net, evidence) > 0.0)) throw ImpossibleEvidenceError();
    p(observed[q]) = 1.0;
    return p;
  }
  const Reduced r = sum_product(net, observed, {q});
  if (r.log_scale == kNegInf) throw ImpossibleEvidenceError();
  p = r.factor.table().matrix();
  const double total = p.sum();
  if (!(total > 0.0)) throw ImpossibleEvidenceError();
  return p / total;
}

Posterior posterior_marginals(const CompiledNetwork& net, const Evidence& evidence) {
  if (!(evidence_probability(net, evidence) > 0.0)) throw ImpossibleEvidenceError();
  Posterior out;
  for (const auto& node : net.nodes()) out.emplace(node.id, posterior_marginal(net, evidence, node.id));
  return out;
}

double evidence_probability(const CompiledNetwork& net, const Evidence& evidence) {
  const std::vector<int> observed = observed_states(net, evidence);
  if (evidence.empty()) return 1.0;
  const Reduced r = sum_product(net, observed, {});
  if (r.log_scale == kNegInf) return 0.0;
  return r.factor.table()(0) * std::exp(r.log_scale);
}

MpeResult mpe(const CompiledNetwork& net, const Evidence& evidence) {
  std::vector<int> observed = observed_states(net, evidence);
  const double best = max_log_joint(net, observed);
  if (best == kNegInf) throw ImpossibleEvidenceError();
  const double tolerance = 1e-10 * std::max(1.0, std::abs(best));

  // Fix free nodes one by one in id order, each to its lowest state that still
  // admits an optimal completion.
  for (int i : net.lexicographic_order()) {
    if (observed[i] >= 0) continue;
    const int k = net.node(i).cardinality();
    for (int s = 0; s < k; ++s) {
      observed[i] = s;
      if (max_log_joint(net, observed) >= best - tolerance) break;
      if (s == k - 1) throw Error("mpe decoding lost the optimum");
    }
  }

  MpeResult out;
  for (int i = 0; i < net.size(); ++i)
    if (!evidence.count(net.node(i).id)) out.assignment.emplace(net.node(i).id, observed[i]);
  out.probability = joint_probability(net, observed);
  return out;
}

Posterior brute_force_oracle(const CompiledNetwork& net, const Evidence& evidence, std::uint64_t max_states) {
  const std::vector<int> observed = observed_states(net, evidence);
  Posterior out;
  for (int q = 0; q < net.size(); ++q) {
    std::vector<int> seeds{q};
    for (int i = 0; i < net.size(); ++i)
      if (observed[i] >= 0) seeds.push_back(i);
    const std::vector<bool> relevant = ancestral_closure(net, seeds);

    std::vector<int> free;
    std::uint64_t space = 1;
    for (int i = 0; i < net.size(); ++i)
      if (relevant[i] && observed[i] < 0) {
        free.push_back(i);
        space *= static_cast<std::uint64_t>(net.node(i).cardinality());
        if (space > max_states)
          throw OracleLimitError(fmt::format("enumeration for '{}' exceeds {} joint states", net.node(q).id, max_states));
      }

    std::vector<int> assignment(observed.begin(), observed.end());
    for (int v : free) assignment[v] = 0;
    Eigen::VectorXd marginal = Eigen::VectorXd::Zero(net.node(q).cardinality());
    for (std::uint64_t k = 0; k < space; ++k) {
      double p = 1.0;
      for (int i = 0; i < net.size(); ++i)
        if (relevant[i]) p *= net.conditional(i, assignment);
      marginal(assignment[q]) += p;
      for (std::size_t d = free.size(); d-- > 0;) {
        if (++assignment[free[d]] < net.node(free[d]).cardinality()) break;
        assignment[free[d]] = 0;
      }
    }
    const double total = marginal.sum();
    if (!(total > 0.0)) throw ImpossibleEvidenceError();
    out.emplace(net.node(q).id, marginal / total);
  }
  return out;
}

}  // namespace qualinet
