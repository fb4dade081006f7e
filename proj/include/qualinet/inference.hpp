#pragma once

// Exact inference on a CompiledNetwork: posterior marginals and P(evidence) by
// sum-product variable elimination, most probable explanation by max-product
// elimination in log space, and a brute-force enumeration oracle.

#include "qualinet/errors.hpp"
#include "qualinet/network.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace qualinet {

/// Hard evidence: node id -> observed state index.
using Evidence = std::map<std::string, int, std::less<>>;

/// Node id -> probability vector over the node's states.
using Posterior = std::map<std::string, Eigen::VectorXd, std::less<>>;

class OracleLimitError : public Error {
 public:
  using Error::Error;
};

/// Marginals of every node given the evidence. Observed nodes get a point mass.
/// Throws ImpossibleEvidenceError when P(evidence) = 0.
Posterior posterior_marginals(const CompiledNetwork& net, const Evidence& evidence);

/// Marginal of a single node given the evidence.
Eigen::VectorXd posterior_marginal(const CompiledNetwork& net, const Evidence& evidence, std::string_view node);

/// P(evidence); 1 for empty evidence, 0 for impossible evidence.
double evidence_probability(const CompiledNetwork& net, const Evidence& evidence);

struct MpeResult {
  /// State index of every unobserved node.
  std::map<std::string, int, std::less<>> assignment;
  /// Joint probability P(assignment, evidence).
  double probability = 0.0;
};

/// Most probable joint assignment of the unobserved nodes. Among tied optima
/// the assignment that is smallest in state index, comparing nodes in
/// lexicographic id order, wins.
MpeResult mpe(const CompiledNetwork& net, const Evidence& evidence);

/// Joint probability of a full assignment (one state per node, by index).
double joint_probability(const CompiledNetwork& net, std::span<const int> assignment);

/// Posterior marginals by explicit enumeration of the joint restricted to the
/// ancestors of the query node and the evidence. Throws OracleLimitError when
/// a query would enumerate more than `max_states` joint states.
Posterior brute_force_oracle(const CompiledNetwork& net, const Evidence& evidence,
                             std::uint64_t max_states = 1'000'000);

}  // namespace qualinet
