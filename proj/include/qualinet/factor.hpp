#pragma once

// Dense table factor over a set of discrete variables.

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace qualinet {

/// Table over `vars()` stored row-major with the last variable fastest.
template <typename Scalar>
class BasicFactor {
 public:
  using Table = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  /// The unit factor (no variables, value 1).
  BasicFactor() : table_(Table::Constant(1, Scalar(1))) {}

  BasicFactor(std::vector<int> vars, std::vector<int> cards, Table table)
      : vars_(std::move(vars)), cards_(std::move(cards)), table_(std::move(table)) {
    if (vars_.size() != cards_.size()) throw std::invalid_argument("one cardinality per variable");
    Eigen::Index n = 1;
    for (int c : cards_) n *= c;
    if (table_.size() != n) throw std::invalid_argument("factor table size does not match cardinalities");
  }

  static BasicFactor constant(Scalar value) {
    BasicFactor f;
    f.table_(0) = value;
    return f;
  }

  const std::vector<int>& vars() const { return vars_; }
  const std::vector<int>& cards() const { return cards_; }
  const Table& table() const { return table_; }
  Table& table() { return table_; }
  Eigen::Index size() const { return table_.size(); }
  bool empty_scope() const { return vars_.empty(); }

  bool contains(int var) const { return position(var) >= 0; }

  int cardinality(int var) const {
    const int p = position(var);
    if (p < 0) throw std::out_of_range("variable not in factor scope");
    return cards_[p];
  }

  /// Pointwise combination over the union of both scopes (this scope first).
  template <typename Op>
  BasicFactor combine(const BasicFactor& other, Op op) const {
    std::vector<int> vars = vars_;
    std::vector<int> cards = cards_;
    for (std::size_t i = 0; i < other.vars_.size(); ++i)
      if (!contains(other.vars_[i])) {
        vars.push_back(other.vars_[i]);
        cards.push_back(other.cards_[i]);
      }
    const std::vector<Eigen::Index> sa = strides_in(vars);
    const std::vector<Eigen::Index> sb = other.strides_in(vars);

    Eigen::Index n = 1;
    for (int c : cards) n *= c;
    Table out(n);
    std::vector<int> state(vars.size(), 0);
    Eigen::Index ia = 0;
    Eigen::Index ib = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      out(k) = op(table_(ia), other.table_(ib));
      for (std::size_t d = vars.size(); d-- > 0;) {
        if (++state[d] < cards[d]) {
          ia += sa[d];
          ib += sb[d];
          break;
        }
        ia -= sa[d] * (cards[d] - 1);
        ib -= sb[d] * (cards[d] - 1);
        state[d] = 0;
      }
    }
    return BasicFactor(std::move(vars), std::move(cards), std::move(out));
  }

  /// Removes `var` by folding its axis with `op`.
  template <typename Op>
  BasicFactor marginalize(int var, Op op) const {
    const int p = position(var);
    if (p < 0) return *this;
    Eigen::Index outer = 1;
    Eigen::Index inner = 1;
    for (int d = 0; d < p; ++d) outer *= cards_[d];
    for (std::size_t d = p + 1; d < cards_.size(); ++d) inner *= cards_[d];
    const int k = cards_[p];

    Table out(outer * inner);
    for (Eigen::Index o = 0; o < outer; ++o)
      for (Eigen::Index i = 0; i < inner; ++i) {
        Scalar acc = table_(o * k * inner + i);
        for (int s = 1; s < k; ++s) acc = op(acc, table_((o * k + s) * inner + i));
        out(o * inner + i) = acc;
      }
    std::vector<int> vars = vars_;
    std::vector<int> cards = cards_;
    vars.erase(vars.begin() + p);
    cards.erase(cards.begin() + p);
    return BasicFactor(std::move(vars), std::move(cards), std::move(out));
  }

  /// Slice at `var = state`; the variable leaves the scope.
  BasicFactor reduce(int var, int state) const {
    const int p = position(var);
    if (p < 0) return *this;
    if (state < 0 || state >= cards_[p]) throw std::out_of_range("state outside variable cardinality");
    Eigen::Index outer = 1;
    Eigen::Index inner = 1;
    for (int d = 0; d < p; ++d) outer *= cards_[d];
    for (std::size_t d = p + 1; d < cards_.size(); ++d) inner *= cards_[d];
    const int k = cards_[p];
    Table out(outer * inner);
    for (Eigen::Index o = 0; o < outer; ++o)
      out.segment(o * inner, inner) = table_.segment((o * k + state) * inner, inner);
    std::vector<int> vars = vars_;
    std::vector<int> cards = cards_;
    vars.erase(vars.begin() + p);
    cards.erase(cards.begin() + p);
    return BasicFactor(std::move(vars), std::move(cards), std::move(out));
  }

  /// Table reordered so that variables appear in `order` (a permutation of vars()).
  BasicFactor permuted(const std::vector<int>& order) const {
    if (order.size() != vars_.size()) throw std::invalid_argument("permutation must cover the scope");
    std::vector<int> cards;
    for (int v : order) cards.push_back(cardinality(v));
    const std::vector<Eigen::Index> src = strides_in(order);
    Table out(table_.size());
    std::vector<int> state(order.size(), 0);
    Eigen::Index from = 0;
    for (Eigen::Index k = 0; k < out.size(); ++k) {
      out(k) = table_(from);
      for (std::size_t d = order.size(); d-- > 0;) {
        if (++state[d] < cards[d]) {
          from += src[d];
          break;
        }
        from -= src[d] * (cards[d] - 1);
        state[d] = 0;
      }
    }
    return BasicFactor(order, std::move(cards), std::move(out));
  }

  BasicFactor sum_out(int var) const { return marginalize(var, std::plus<Scalar>()); }
  BasicFactor max_out(int var) const {
    return marginalize(var, [](Scalar a, Scalar b) { return std::max(a, b); });
  }

 private:
  int position(int var) const {
    const auto it = std::find(vars_.begin(), vars_.end(), var);
    return it == vars_.end() ? -1 : static_cast<int>(it - vars_.begin());
  }

  /// Stride of each variable of `scope` within this table (0 when absent).
  std::vector<Eigen::Index> strides_in(const std::vector<int>& scope) const {
    std::vector<Eigen::Index> own(vars_.size());
    Eigen::Index s = 1;
    for (std::size_t d = vars_.size(); d-- > 0;) {
      own[d] = s;
      s *= cards_[d];
    }
    std::vector<Eigen::Index> out(scope.size(), 0);
    for (std::size_t i = 0; i < scope.size(); ++i) {
      const int p = position(scope[i]);
      if (p >= 0) out[i] = own[p];
    }
    return out;
  }

  std::vector<int> vars_;
  std::vector<int> cards_;
  Table table_;
};

template <typename Scalar>
BasicFactor<Scalar> operator*(const BasicFactor<Scalar>& a, const BasicFactor<Scalar>& b) {
  return a.combine(b, std::multiplies<Scalar>());
}

using Factor = BasicFactor<double>;

}  // namespace qualinet
