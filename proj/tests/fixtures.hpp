#pragma once

// Small hand-specified networks shared by the unit and acceptance tests.

#include "qualinet/compiler.hpp"
#include "qualinet/network.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace fixtures {

/// Two parents X in {low, high} and Y in {low, med, high} with uniform priors,
/// and a binary child C whose table is the classic 2x3 example.
inline qualinet::CompiledNetwork example_npt() {
  using qualinet::Node;
  using qualinet::NodeKind;
  Eigen::MatrixXd c(2, 6);
  c << 0.6, 0.65, 0.3, 0.45, 0.23, 0.05,  //
      0.4, 0.35, 0.7, 0.55, 0.77, 0.95;
  return qualinet::CompiledNetwork(
      "example", {Node{"X", NodeKind::Variable, {"low", "high"}, {}, {}, Eigen::Vector2d(0.5, 0.5)},
                  Node{"Y", NodeKind::Variable, {"low", "med", "high"}, {}, {}, Eigen::Vector3d::Constant(1.0 / 3.0)},
                  Node{"C", NodeKind::Variable, {"true", "false"}, {}, {"X", "Y"}, c}});
}

/// A -> B with P(A=t) = 0.5, P(B=t | A=t) = 0.9, P(B=t | A=f) = 0.2.
inline qualinet::CompiledNetwork two_node() {
  using qualinet::Node;
  using qualinet::NodeKind;
  Eigen::MatrixXd b(2, 2);
  b << 0.9, 0.2,  //
      0.1, 0.8;
  return qualinet::CompiledNetwork("two", {Node{"A", NodeKind::Variable, {"t", "f"}, {}, {}, Eigen::Vector2d(0.5, 0.5)},
                                           Node{"B", NodeKind::Variable, {"t", "f"}, {}, {"A"}, b}});
}

/// Root R -> M -> L with identity tables over three states.
inline qualinet::CompiledNetwork identity_chain() {
  using qualinet::Node;
  using qualinet::NodeKind;
  const std::vector<std::string> s{"s0", "s1", "s2"};
  return qualinet::CompiledNetwork(
      "chain", {Node{"R", NodeKind::Variable, s, {}, {}, Eigen::Vector3d(0.2, 0.3, 0.5)},
                Node{"M", NodeKind::Variable, s, {}, {"R"}, Eigen::Matrix3d::Identity()},
                Node{"L", NodeKind::Variable, s, {}, {"M"}, Eigen::Matrix3d::Identity()}});
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string model_path(const std::string& name) { return std::string(QUALINET_MODELS) + "/" + name; }

inline qualinet::CompiledNetwork cm1() {
  return qualinet::compile_model(qualinet::parse_model(slurp(model_path("cm1.qm"))), "");
}

}  // namespace fixtures
