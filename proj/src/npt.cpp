#include "qualinet/npt.hpp"

#include <algorithm>

namespace qualinet {

RankedScale::RankedScale(int states) : states_(states) {
  if (states < 2) throw std::invalid_argument("a ranked node needs at least two states");
}

Eigen::VectorXd RankedScale::midpoints() const {
  Eigen::VectorXd m(states_);
  for (int i = 0; i < states_; ++i) m(i) = midpoint(i);
  return m;
}

std::vector<std::string> RankedScale::labels() const { return ranked_state_labels(states_); }

std::vector<std::string> ranked_state_labels(int states) {
  switch (states) {
    case 2:
      return {"low", "high"};
    case 3:
      return {"low", "medium", "high"};
    case 4:
      return {"very_low", "low", "high", "very_high"};
    case 5:
      return {"very_low", "low", "medium", "high", "very_high"};
    default: {
      std::vector<std::string> labels;
      for (int i = 0; i < states; ++i) labels.push_back("level" + std::to_string(i));
      return labels;
    }
  }
}

Eigen::MatrixXd build_ranked_npt(const WeightedMeanSpec& wm, double variance, int child_states) {
  if (wm.parents.empty()) throw std::invalid_argument("weighted mean needs at least one parent");
  for (const auto& p : wm.parents) {
    if (!(p.weight > 0.0) || !std::isfinite(p.weight))
      throw std::invalid_argument("parent weights must be positive and finite");
    if (p.states < 2) throw std::invalid_argument("parent must have at least two states");
  }
  const RankedScale child(child_states);
  const Eigen::VectorXd bounds = child.boundaries();

  Eigen::Index columns = 1;
  for (const auto& p : wm.parents) columns *= p.states;

  Eigen::MatrixXd npt(child_states, columns);
  std::vector<int> states(wm.parents.size(), 0);
  for (Eigen::Index col = 0; col < columns; ++col) {
    const TNormalSpec<double> spec{effective_level<double>(states, wm), variance, 0.0, 1.0};
    npt.col(col) = discretize_tnormal(spec, bounds);
    for (std::size_t i = states.size(); i-- > 0;) {
      if (++states[i] < wm.parents[i].states) break;
      states[i] = 0;
    }
  }
  return npt;
}

namespace {

struct IndicatorColumns {
  const Eigen::Ref<const Eigen::VectorXd>& boundaries;
  std::span<const std::string> labels;

  Eigen::MatrixXd operator()(const PartitionedSpec& spec) const {
    Eigen::MatrixXd npt(boundaries.size() - 1, static_cast<Eigen::Index>(labels.size()));
    for (std::size_t s = 0; s < labels.size(); ++s) {
      const auto it = std::find_if(spec.levels.begin(), spec.levels.end(),
                                   [&](const auto& level) { return level.first == labels[s]; });
      if (it == spec.levels.end())
        throw std::invalid_argument("partitioned expression has no entry for state '" + labels[s] + "'");
      const TNormalSpec<double> tn{it->second.mean, it->second.variance, boundaries(0),
                                   boundaries(boundaries.size() - 1)};
      npt.col(static_cast<Eigen::Index>(s)) = discretize_tnormal(tn, boundaries);
    }
    return npt;
  }

  Eigen::MatrixXd operator()(const ArithmeticSpec& spec) const {
    const RankedScale parent(static_cast<int>(labels.size()));
    Eigen::MatrixXd npt(boundaries.size() - 1, parent.size());
    for (int s = 0; s < parent.size(); ++s) {
      const TNormalSpec<double> tn{spec.intercept + spec.slope * parent.midpoint(s), spec.variance,
                                   boundaries(0), boundaries(boundaries.size() - 1)};
      npt.col(s) = discretize_tnormal(tn, boundaries);
    }
    return npt;
  }
};

}  // namespace

Eigen::MatrixXd build_indicator_npt(const Eigen::Ref<const Eigen::VectorXd>& boundaries,
                                    const IndicatorExpression& expression,
                                    std::span<const std::string> parent_labels) {
  if (boundaries.size() < 2) throw std::invalid_argument("indicator needs at least two boundaries");
  return std::visit(IndicatorColumns{boundaries, parent_labels}, expression);
}

}  // namespace qualinet
