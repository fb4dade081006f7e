#pragma once

// Node probability table synthesis for ranked and indicator nodes.
//
// Ranked nodes split [0,1] into k equal intervals. A child's distribution for a
// given parent configuration is a Normal doubly truncated to [0,1], centred on
// a weighted mean of the parents' interval midpoints, then discretized onto
// the child's intervals. Indicator nodes discretize a truncated Normal over
// their own measurement range, either per parent state (partitioned) or with
// a mean that is linear in the parent level (arithmetic).

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qualinet {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Sign { Positive, Negative };

/// Phi(x).
template <typename Scalar>
Scalar std_normal_cdf(Scalar x) {
  using std::erfc;
  return Scalar(0.5) * erfc(-x / Scalar(M_SQRT2));
}

/// Phi(b) - Phi(a) for a <= b, evaluated on whichever tail keeps precision.
template <typename Scalar>
Scalar std_normal_mass(Scalar a, Scalar b) {
  using std::erfc;
  const auto upper_tail = [](Scalar x) { return Scalar(0.5) * erfc(x / Scalar(M_SQRT2)); };
  if (a >= Scalar(0)) return upper_tail(a) - upper_tail(b);
  if (b <= Scalar(0)) return upper_tail(-b) - upper_tail(-a);
  return Scalar(1) - upper_tail(-a) - upper_tail(b);
}

template <typename Scalar = double>
struct TNormalSpec {
  Scalar mean{};
  Scalar variance{};
  Scalar lo{};
  Scalar hi{};
};

/// Probability of each interval [b_i, b_{i+1}) under a Normal truncated to
/// [b_0, b_n]. The support must match `spec.lo`/`spec.hi`. When the truncated
/// mass underflows (mean far outside the support) all mass goes to the
/// nearest interval.
template <typename Scalar, typename Derived>
VectorX<Scalar> discretize_tnormal(const TNormalSpec<Scalar>& spec,
                                   const Eigen::MatrixBase<Derived>& boundaries) {
  using std::abs;
  using std::isfinite;
  using std::sqrt;
  if (!(spec.variance > Scalar(0)) || !isfinite(spec.variance))
    throw std::invalid_argument("tnormal variance must be positive and finite");
  if (!isfinite(spec.mean)) throw std::invalid_argument("tnormal mean must be finite");
  const Eigen::Index n = boundaries.size() - 1;
  if (n < 1) throw std::invalid_argument("need at least two interval boundaries");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(boundaries(i) < boundaries(i + 1)))
      throw std::invalid_argument("interval boundaries must be strictly increasing");
  const Scalar width = spec.hi - spec.lo;
  if (!(width > Scalar(0)) || abs(boundaries(0) - spec.lo) > Scalar(1e-12) * width ||
      abs(boundaries(n) - spec.hi) > Scalar(1e-12) * width)
    throw std::invalid_argument("intervals must partition the tnormal support");

  const Scalar sd = sqrt(spec.variance);
  VectorX<Scalar> p(n);
  for (Eigen::Index i = 0; i < n; ++i)
    p(i) = std_normal_mass((boundaries(i) - spec.mean) / sd, (boundaries(i + 1) - spec.mean) / sd);
  p = p.cwiseMax(Scalar(0));

  const Scalar total = p.sum();
  if (!(total >= std::numeric_limits<Scalar>::min()) || !isfinite(total)) {
    p.setZero();
    p(spec.mean <= spec.lo ? 0 : n - 1) = Scalar(1);
    return p;
  }
  return p / total;
}

/// Equal-width ordinal scale on [0,1].
class RankedScale {
 public:
  explicit RankedScale(int states);

  int size() const { return states_; }
  double midpoint(int state) const { return (2.0 * state + 1.0) / (2.0 * states_); }
  Eigen::VectorXd boundaries() const { return Eigen::VectorXd::LinSpaced(states_ + 1, 0.0, 1.0); }
  Eigen::VectorXd midpoints() const;
  std::vector<std::string> labels() const;

 private:
  int states_;
};

/// Default state labels of a k-state ranked node ("low", "medium", "high" for k = 3).
std::vector<std::string> ranked_state_labels(int states);

struct ParentInfluence {
  double weight = 1.0;
  Sign sign = Sign::Positive;
  int states = 3;
};

struct WeightedMeanSpec {
  std::vector<ParentInfluence> parents;
};

/// sum w_i x_i / sum w_i, with x_i the parent midpoint (1 - midpoint for a
/// negative influence).
template <typename Scalar = double>
Scalar effective_level(std::span<const int> parent_states, const WeightedMeanSpec& wm) {
  if (parent_states.size() != wm.parents.size())
    throw std::invalid_argument("one state per parent required");
  Scalar weighted = 0;
  Scalar total = 0;
  for (std::size_t i = 0; i < parent_states.size(); ++i) {
    const auto& parent = wm.parents[i];
    const Scalar mid = (Scalar(2) * parent_states[i] + Scalar(1)) / (Scalar(2) * parent.states);
    const Scalar x = parent.sign == Sign::Negative ? Scalar(1) - mid : mid;
    weighted += Scalar(parent.weight) * x;
    total += Scalar(parent.weight);
  }
  return weighted / total;
}

/// Ranked child NPT as a (child states x parent configurations) matrix. Parent
/// configurations enumerate row-major with the last parent fastest, so the
/// column-major storage equals the flat table over (parents..., child).
Eigen::MatrixXd build_ranked_npt(const WeightedMeanSpec& wm, double variance, int child_states);

struct TNormalParams {
  double mean = 0.0;
  double variance = 1.0;

  bool operator==(const TNormalParams&) const = default;
};

/// One truncated Normal per parent state, keyed by the parent's state label.
struct PartitionedSpec {
  std::vector<std::pair<std::string, TNormalParams>> levels;

  bool operator==(const PartitionedSpec&) const = default;
};

/// mean = intercept + slope * level, where level is the parent state midpoint.
struct ArithmeticSpec {
  double intercept = 0.0;
  double slope = 0.0;
  double variance = 1.0;

  bool operator==(const ArithmeticSpec&) const = default;
};

using IndicatorExpression = std::variant<PartitionedSpec, ArithmeticSpec>;

/// Indicator NPT as an (intervals x parent states) matrix over the support
/// [boundaries.front(), boundaries.back()].
Eigen::MatrixXd build_indicator_npt(const Eigen::Ref<const Eigen::VectorXd>& boundaries,
                                    const IndicatorExpression& expression,
                                    std::span<const std::string> parent_labels);

}  // namespace qualinet
