#include "qualinet/quality_model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <tuple>

namespace qualinet {

std::string Diagnostic::str() const {
  return fmt::format("{}:{}: {}", location.line, location.column, message);
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += '\n';
    out += d.str();
  }
  return out;
}

}  // namespace

ModelError::ModelError(std::vector<Diagnostic> diagnostics)
    : Error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

// ---------------------------------------------------------------------------
// Lookup

const Entity* QualityModel::find_entity(std::string_view id) const {
  auto it = std::find_if(entities.begin(), entities.end(), [&](const Entity& e) { return e.id == id; });
  return it == entities.end() ? nullptr : &*it;
}

const Activity* QualityModel::find_activity(std::string_view id) const {
  auto it = std::find_if(activities.begin(), activities.end(), [&](const Activity& a) { return a.id == id; });
  return it == activities.end() ? nullptr : &*it;
}

const Fact* QualityModel::find_fact(const FactRef& ref) const {
  auto it = std::find_if(facts.begin(), facts.end(), [&](const Fact& f) { return f.ref == ref; });
  return it == facts.end() ? nullptr : &*it;
}

const IndicatorSpec* QualityModel::find_indicator(std::string_view id) const {
  auto it = std::find_if(indicators.begin(), indicators.end(), [&](const IndicatorSpec& i) { return i.id == id; });
  return it == indicators.end() ? nullptr : &*it;
}

const QuantAnnotation* QualityModel::find_annotation(const NodeRef& node) const {
  auto it = std::find_if(annotations.begin(), annotations.end(),
                         [&](const QuantAnnotation& q) { return q.node == node; });
  return it == annotations.end() ? nullptr : &*it;
}

bool QualityModel::has_node(const NodeRef& node) const {
  return node.is_fact() ? find_fact(node.fact()) != nullptr : find_activity(node.name) != nullptr;
}

int QualityModel::state_count(const NodeRef& node) const {
  const auto* q = find_annotation(node);
  return q && q->states ? *q->states : kDefaultStates;
}

std::vector<std::string> QualityModel::state_labels(const NodeRef& node) const {
  return ranked_state_labels(state_count(node));
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, String, Number, Symbol, End };

struct Token {
  Tok kind;
  std::string text;
  SourceLocation loc;
};

[[noreturn]] void syntax_error(SourceLocation loc, std::string message) {
  throw ModelError({Diagnostic{loc, std::move(message)}});
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> tokens;
  int line = 1;
  int column = 1;
  std::size_t i = 0;
  const auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
  };
  const auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  const auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };

  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    const SourceLocation loc{line, column};
    if (is_alpha(c)) {
      std::size_t j = i;
      while (j < src.size() && (is_alpha(src[j]) || is_digit(src[j]) || src[j] == '_')) ++j;
      tokens.push_back({Tok::Ident, std::string(src.substr(i, j - i)), loc});
      advance(j - i);
      continue;
    }
    if (is_digit(c)) {
      std::size_t j = i;
      while (j < src.size() && is_digit(src[j])) ++j;
      if (j < src.size() && src[j] == '.' && j + 1 < src.size() && is_digit(src[j + 1])) {
        ++j;
        while (j < src.size() && is_digit(src[j])) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && is_digit(src[k])) {
          j = k;
          while (j < src.size() && is_digit(src[j])) ++j;
        }
      }
      tokens.push_back({Tok::Number, std::string(src.substr(i, j - i)), loc});
      advance(j - i);
      continue;
    }
    if (c == '"') {
      std::string text;
      advance();
      while (true) {
        if (i >= src.size() || src[i] == '\n') syntax_error(loc, "unterminated string");
        if (src[i] == '"') break;
        if (src[i] == '\\' && i + 1 < src.size() && (src[i + 1] == '"' || src[i + 1] == '\\')) advance();
        text += src[i];
        advance();
      }
      advance();
      tokens.push_back({Tok::String, std::move(text), loc});
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
      tokens.push_back({Tok::Symbol, "->", loc});
      advance(2);
      continue;
    }
    if (std::string_view("{}[]():,.+-*=").find(c) != std::string_view::npos) {
      tokens.push_back({Tok::Symbol, std::string(1, c), loc});
      advance();
      continue;
    }
    syntax_error(loc, fmt::format("unexpected character '{}'", c));
  }
  tokens.push_back({Tok::End, "", SourceLocation{line, column}});
  return tokens;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  QualityModel parse() {
    expect_keyword("model");
    model_.name = expect(Tok::String, "model name").text;
    expect_symbol("{");
    while (!peek_symbol("}")) {
      const Token& t = peek();
      if (t.kind != Tok::Ident) syntax_error(t.loc, fmt::format("expected a declaration, found '{}'", t.text));
      if (t.text == "activity") {
        parse_activity(std::nullopt);
      } else if (t.text == "entity") {
        parse_entity(std::nullopt);
      } else if (t.text == "fact") {
        parse_fact();
      } else if (t.text == "impact") {
        parse_impact();
      } else if (t.text == "quantify") {
        parse_quantify();
      } else if (t.text == "indicator") {
        parse_indicator();
      } else if (t.text == "goal") {
        parse_goal();
      } else {
        syntax_error(t.loc, fmt::format("unknown declaration '{}'", t.text));
      }
    }
    expect_symbol("}");
    if (peek().kind != Tok::End) syntax_error(peek().loc, "unexpected input after model block");
    validate();
    if (!diagnostics_.empty()) {
      std::stable_sort(diagnostics_.begin(), diagnostics_.end(), [](const Diagnostic& a, const Diagnostic& b) {
        return std::tie(a.location.line, a.location.column) < std::tie(b.location.line, b.location.column);
      });
      throw ModelError(std::move(diagnostics_));
    }
    return std::move(model_);
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  bool peek_symbol(std::string_view s) const { return peek().kind == Tok::Symbol && peek().text == s; }
  bool peek_keyword(std::string_view s) const { return peek().kind == Tok::Ident && peek().text == s; }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::End:
        return "end of input";
      case Tok::String:
        return fmt::format("string \"{}\"", t.text);
      default:
        return fmt::format("'{}'", t.text);
    }
  }

  const Token& expect(Tok kind, std::string_view what) {
    if (peek().kind != kind) syntax_error(peek().loc, fmt::format("expected {}, found {}", what, describe(peek())));
    return next();
  }

  void expect_symbol(std::string_view s) {
    if (!peek_symbol(s)) syntax_error(peek().loc, fmt::format("expected '{}', found {}", s, describe(peek())));
    next();
  }

  void expect_keyword(std::string_view s) {
    if (!peek_keyword(s)) syntax_error(peek().loc, fmt::format("expected '{}', found {}", s, describe(peek())));
    next();
  }

  const Token& expect_ident(std::string_view what) { return expect(Tok::Ident, what); }

  double parse_number(std::string_view what) {
    bool negative = false;
    if (peek_symbol("-")) {
      negative = true;
      next();
    } else if (peek_symbol("+")) {
      next();
    }
    const Token& t = expect(Tok::Number, what);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size())
      syntax_error(t.loc, fmt::format("malformed number '{}'", t.text));
    return negative ? -value : value;
  }

  int parse_int(std::string_view what) {
    const Token& t = expect(Tok::Number, what);
    int value = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size())
      syntax_error(t.loc, fmt::format("expected an integer, found '{}'", t.text));
    return value;
  }

  std::pair<NodeRef, SourceLocation> parse_ref() {
    const Token& head = expect_ident("a node reference");
    NodeRef ref{head.text, std::nullopt};
    if (peek_symbol(".")) {
      next();
      ref.attribute = expect_ident("an attribute name").text;
    }
    return {ref, head.loc};
  }

  std::pair<FactRef, SourceLocation> parse_fact_ref() {
    const Token& entity = expect_ident("an entity name");
    expect_symbol(".");
    const Token& attribute = expect_ident("an attribute name");
    return {FactRef{entity.text, attribute.text}, entity.loc};
  }

  void parse_activity(std::optional<std::string> parent) {
    expect_keyword("activity");
    const Token& id = expect_ident("an activity name");
    const std::size_t index = model_.activities.size();
    model_.activities.push_back(Activity{id.text, parent, {}});
    activity_locs_.push_back(id.loc);
    if (!parent) {
      if (root_seen_) error(id.loc, fmt::format("second root activity '{}': activities must form one tree", id.text));
      root_seen_ = true;
    }
    if (peek_symbol("{")) {
      next();
      while (!peek_symbol("}")) {
        if (!peek_keyword("activity"))
          syntax_error(peek().loc, fmt::format("expected 'activity' or '}}', found {}", describe(peek())));
        const std::string child_id = tokens_[pos_ + 1].text;
        parse_activity(id.text);
        model_.activities[index].children.push_back(child_id);
      }
      next();
    }
  }

  void parse_entity(std::optional<std::string> part_of) {
    expect_keyword("entity");
    const Token& id = expect_ident("an entity name");
    Entity entity{id.text, part_of, std::nullopt};
    SourceLocation is_a_loc = id.loc;
    if (peek_symbol(":")) {
      next();
      const Token& base = expect_ident("a base entity name");
      entity.is_a = base.text;
      is_a_loc = base.loc;
    }
    model_.entities.push_back(entity);
    entity_locs_.push_back({id.loc, is_a_loc});
    if (peek_symbol("{")) {
      next();
      while (!peek_symbol("}")) {
        if (!peek_keyword("entity"))
          syntax_error(peek().loc, fmt::format("expected 'entity' or '}}', found {}", describe(peek())));
        parse_entity(id.text);
      }
      next();
    }
  }

  void parse_fact() {
    expect_keyword("fact");
    auto [ref, loc] = parse_fact_ref();
    model_.facts.push_back(Fact{ref, std::nullopt});
    fact_locs_.push_back(loc);
  }

  void parse_impact() {
    expect_keyword("impact");
    auto [ref, loc] = parse_fact_ref();
    expect_symbol("->");
    const Token& activity = expect_ident("an activity name");
    Sign sign;
    if (peek_symbol("+")) {
      sign = Sign::Positive;
    } else if (peek_symbol("-")) {
      sign = Sign::Negative;
    } else {
      syntax_error(peek().loc, fmt::format("expected impact sign '+' or '-', found {}", describe(peek())));
    }
    next();
    model_.impacts.push_back(Impact{ref, activity.text, sign});
    impact_locs_.push_back({loc, activity.loc});
  }

  void parse_quantify() {
    expect_keyword("quantify");
    auto [node, loc] = parse_ref();
    QuantAnnotation q{node, std::nullopt, std::nullopt, {}, std::nullopt};
    QuantLocs locs{loc, loc, loc, loc, {}};
    expect_symbol("{");
    std::set<std::string> seen;
    while (!peek_symbol("}")) {
      const Token& key = expect_ident("a quantify key");
      if (!seen.insert(key.text).second) error(key.loc, fmt::format("duplicate key '{}' in quantify block", key.text));
      if (key.text == "states") {
        locs.states = peek().loc;
        q.states = parse_int("a state count");
      } else if (key.text == "variance") {
        locs.variance = peek().loc;
        q.variance = parse_number("a variance");
      } else if (key.text == "weights") {
        expect_symbol("{");
        do {
          auto [parent, ploc] = parse_ref();
          expect_symbol(":");
          q.weights.emplace_back(parent, parse_number("a weight"));
          locs.weights.push_back(ploc);
        } while (!peek_symbol("}"));
        next();
      } else if (key.text == "prior") {
        locs.prior = peek().loc;
        expect_symbol("[");
        std::vector<double> prior{parse_number("a probability")};
        while (peek_symbol(",")) {
          next();
          prior.push_back(parse_number("a probability"));
        }
        expect_symbol("]");
        q.prior = std::move(prior);
      } else {
        syntax_error(key.loc, fmt::format("unknown key '{}' in quantify block (expected states, variance, "
                                          "weights or prior)",
                                          key.text));
      }
    }
    next();
    model_.annotations.push_back(std::move(q));
    quant_locs_.push_back(std::move(locs));
  }

  void parse_indicator() {
    expect_keyword("indicator");
    const Token& id = expect_ident("an indicator name");
    expect_keyword("for");
    auto [subject, subject_loc] = parse_ref();
    expect_symbol("{");
    expect_keyword("intervals");
    const SourceLocation intervals_loc = peek().loc;
    expect_symbol("[");
    std::vector<double> bounds{parse_number("an interval boundary")};
    do {
      expect_symbol(",");
      bounds.push_back(parse_number("an interval boundary"));
    } while (peek_symbol(","));
    expect_symbol("]");

    IndicatorLocs locs{id.loc, subject_loc, intervals_loc, {}, {}};
    IndicatorExpression expression;
    if (peek_keyword("partitioned")) {
      next();
      expect_symbol("{");
      PartitionedSpec spec;
      do {
        const Token& label = expect_ident("a state label");
        expect_symbol(":");
        expect_keyword("tnormal");
        expect_symbol("(");
        const double mean = parse_number("a mean");
        expect_symbol(",");
        locs.variances.push_back(peek().loc);
        const double variance = parse_number("a variance");
        expect_symbol(")");
        spec.levels.push_back({label.text, TNormalParams{mean, variance}});
        locs.labels.push_back(label.loc);
      } while (!peek_symbol("}"));
      next();
      expression = std::move(spec);
    } else if (peek_keyword("arithmetic")) {
      next();
      expect_keyword("mean");
      expect_symbol("=");
      ArithmeticSpec spec;
      spec.intercept = parse_number("an intercept");
      double sign = 1.0;
      if (peek_symbol("-")) {
        sign = -1.0;
      } else if (!peek_symbol("+")) {
        syntax_error(peek().loc, fmt::format("expected '+' or '-', found {}", describe(peek())));
      }
      next();
      spec.slope = sign * parse_number("a slope");
      expect_symbol("*");
      expect_keyword("level");
      expect_keyword("variance");
      locs.variances.push_back(peek().loc);
      spec.variance = parse_number("a variance");
      expression = spec;
    } else {
      syntax_error(peek().loc, fmt::format("expected 'partitioned' or 'arithmetic', found {}", describe(peek())));
    }
    expect_symbol("}");
    model_.indicators.push_back(IndicatorSpec{id.text, subject, std::move(bounds), std::move(expression)});
    indicator_locs_.push_back(std::move(locs));
  }

  void parse_goal() {
    expect_keyword("goal");
    const Token& name = expect(Tok::String, "a goal name");
    expect_symbol("{");
    expect_keyword("question");
    const std::string question = expect(Tok::String, "a question").text;
    expect_keyword("metric");
    const Token& metric = expect_ident("an indicator name");
    expect_keyword("activity");
    const Token& activity = expect_ident("an activity name");
    expect_symbol("}");
    model_.goals.push_back(GoalSpec{name.text, question, metric.text, activity.text});
    goal_locs_.push_back({name.loc, metric.loc, activity.loc});
  }

  void error(SourceLocation loc, std::string message) { diagnostics_.push_back({loc, std::move(message)}); }

  void validate();

  struct EntityLocs {
    SourceLocation id;
    SourceLocation is_a;
  };
  struct ImpactLocs {
    SourceLocation fact;
    SourceLocation activity;
  };
  struct QuantLocs {
    SourceLocation node;
    SourceLocation states;
    SourceLocation variance;
    SourceLocation prior;
    std::vector<SourceLocation> weights;
  };
  struct IndicatorLocs {
    SourceLocation id;
    SourceLocation subject;
    SourceLocation intervals;
    std::vector<SourceLocation> labels;
    std::vector<SourceLocation> variances;
  };
  struct GoalLocs {
    SourceLocation name;
    SourceLocation metric;
    SourceLocation activity;
  };

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  QualityModel model_;
  bool root_seen_ = false;
  std::vector<Diagnostic> diagnostics_;
  std::vector<SourceLocation> activity_locs_;
  std::vector<EntityLocs> entity_locs_;
  std::vector<SourceLocation> fact_locs_;
  std::vector<ImpactLocs> impact_locs_;
  std::vector<QuantLocs> quant_locs_;
  std::vector<IndicatorLocs> indicator_locs_;
  std::vector<GoalLocs> goal_locs_;
};

void Parser::validate() {
  const auto& m = model_;

  std::set<std::string> activity_ids;
  for (std::size_t i = 0; i < m.activities.size(); ++i)
    if (!activity_ids.insert(m.activities[i].id).second)
      error(activity_locs_[i], fmt::format("duplicate activity '{}'", m.activities[i].id));

  std::set<std::string> entity_ids;
  for (std::size_t i = 0; i < m.entities.size(); ++i)
    if (!entity_ids.insert(m.entities[i].id).second)
      error(entity_locs_[i].id, fmt::format("duplicate entity '{}'", m.entities[i].id));

  // is-a edges: known target, acyclic, never into the entity's own part-of subtree.
  for (std::size_t i = 0; i < m.entities.size(); ++i) {
    const Entity& e = m.entities[i];
    if (!e.is_a) continue;
    if (!m.find_entity(*e.is_a)) {
      error(entity_locs_[i].is_a, fmt::format("unknown entity '{}' in is-a of '{}'", *e.is_a, e.id));
      continue;
    }
    std::set<std::string> visited{e.id};
    const Entity* cur = m.find_entity(*e.is_a);
    while (cur) {
      if (!visited.insert(cur->id).second) {
        error(entity_locs_[i].is_a, fmt::format("cyclic is-a chain through entity '{}'", e.id));
        break;
      }
      cur = cur->is_a ? m.find_entity(*cur->is_a) : nullptr;
    }
    for (const Entity* anc = m.find_entity(*e.is_a); anc && anc->part_of;) {
      if (*anc->part_of == e.id) {
        error(entity_locs_[i].is_a, fmt::format("entity '{}' cannot be a kind of its own part '{}'", e.id, *e.is_a));
        break;
      }
      anc = m.find_entity(*anc->part_of);
    }
  }

  std::set<FactRef> fact_refs;
  for (std::size_t i = 0; i < m.facts.size(); ++i) {
    const FactRef& f = m.facts[i].ref;
    if (!m.find_entity(f.entity)) error(fact_locs_[i], fmt::format("fact '{}' names unknown entity '{}'", f.str(), f.entity));
    if (!fact_refs.insert(f).second) error(fact_locs_[i], fmt::format("duplicate fact '{}'", f.str()));
  }

  std::set<std::pair<FactRef, std::string>> impact_keys;
  for (std::size_t i = 0; i < m.impacts.size(); ++i) {
    const Impact& imp = m.impacts[i];
    if (!fact_refs.count(imp.fact)) error(impact_locs_[i].fact, fmt::format("impact names unknown fact '{}'", imp.fact.str()));
    if (!activity_ids.count(imp.activity))
      error(impact_locs_[i].activity, fmt::format("impact names unknown activity '{}'", imp.activity));
    if (!impact_keys.insert({imp.fact, imp.activity}).second)
      error(impact_locs_[i].fact, fmt::format("duplicate impact of '{}' on '{}'", imp.fact.str(), imp.activity));
  }

  const auto node_exists = [&](const NodeRef& r) {
    return r.is_fact() ? fact_refs.count(r.fact()) > 0 : activity_ids.count(r.name) > 0;
  };

  std::set<NodeRef> quantified;
  for (std::size_t i = 0; i < m.annotations.size(); ++i) {
    const QuantAnnotation& q = m.annotations[i];
    const QuantLocs& locs = quant_locs_[i];
    if (!node_exists(q.node)) error(locs.node, fmt::format("quantify names unknown node '{}'", q.node.str()));
    if (!quantified.insert(q.node).second) error(locs.node, fmt::format("duplicate quantify block for '{}'", q.node.str()));
    if (q.states && *q.states < 2) error(locs.states, "a ranked node needs at least 2 states");
    if (q.variance && !(*q.variance > 0.0)) error(locs.variance, "variance must be positive");
    for (std::size_t w = 0; w < q.weights.size(); ++w) {
      const auto& [parent, weight] = q.weights[w];
      if (!node_exists(parent)) error(locs.weights[w], fmt::format("weight names unknown node '{}'", parent.str()));
      if (!(weight > 0.0) || !std::isfinite(weight))
        error(locs.weights[w], fmt::format("weight of '{}' must be positive", parent.str()));
    }
    if (q.prior) {
      const int k = q.states.value_or(kDefaultStates);
      if (static_cast<int>(q.prior->size()) != k)
        error(locs.prior, fmt::format("prior has {} entries but the node has {} states", q.prior->size(), k));
      double sum = 0.0;
      for (double p : *q.prior) {
        if (p < 0.0) error(locs.prior, "prior probabilities must be non-negative");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) error(locs.prior, fmt::format("prior sums to {} instead of 1", sum));
    }
  }

  std::set<std::string> indicator_ids;
  for (std::size_t i = 0; i < m.indicators.size(); ++i) {
    const IndicatorSpec& ind = m.indicators[i];
    const IndicatorLocs& locs = indicator_locs_[i];
    if (!indicator_ids.insert(ind.id).second) error(locs.id, fmt::format("duplicate indicator '{}'", ind.id));
    if (activity_ids.count(ind.id)) error(locs.id, fmt::format("indicator '{}' clashes with an activity name", ind.id));
    if (!node_exists(ind.subject)) {
      error(locs.subject, fmt::format("indicator '{}' measures unknown node '{}'", ind.id, ind.subject.str()));
      continue;
    }
    for (std::size_t b = 1; b < ind.boundaries.size(); ++b)
      if (!(ind.boundaries[b - 1] < ind.boundaries[b])) {
        error(locs.intervals, fmt::format("intervals of '{}' must be strictly increasing", ind.id));
        break;
      }
    if (const auto* part = std::get_if<PartitionedSpec>(&ind.expression)) {
      const auto labels = m.state_labels(ind.subject);
      std::set<std::string> covered;
      for (std::size_t l = 0; l < part->levels.size(); ++l) {
        const auto& [label, tn] = part->levels[l];
        if (std::find(labels.begin(), labels.end(), label) == labels.end())
          error(locs.labels[l], fmt::format("'{}' is not a state of '{}'", label, ind.subject.str()));
        else if (!covered.insert(label).second)
          error(locs.labels[l], fmt::format("state '{}' listed twice", label));
        if (!(tn.variance > 0.0)) error(locs.variances[l], "variance must be positive");
      }
      for (const auto& label : labels)
        if (!covered.count(label))
          error(locs.id, fmt::format("partitioned expression of '{}' misses state '{}'", ind.id, label));
    } else {
      const auto& arith = std::get<ArithmeticSpec>(ind.expression);
      if (!(arith.variance > 0.0)) error(locs.variances.front(), "variance must be positive");
    }
  }

  for (std::size_t i = 0; i < m.goals.size(); ++i) {
    const GoalSpec& g = m.goals[i];
    if (!activity_ids.count(g.target_activity))
      error(goal_locs_[i].activity, fmt::format("goal names unknown activity '{}'", g.target_activity));
    const IndicatorSpec* metric = m.find_indicator(g.target_indicator);
    if (!metric) {
      error(goal_locs_[i].metric, fmt::format("goal names unknown indicator '{}'", g.target_indicator));
    } else if (metric->subject != NodeRef::activity(g.target_activity)) {
      error(goal_locs_[i].metric,
            fmt::format("goal metric '{}' does not measure activity '{}'", g.target_indicator, g.target_activity));
    }
  }
}

// ---------------------------------------------------------------------------
// Printer

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

std::string number(double v) { return fmt::format("{}", v); }

void print_activity(const QualityModel& m, const Activity& a, int depth, std::string& out) {
  const std::string indent(2 * depth, ' ');
  out += indent + "activity " + a.id;
  if (a.children.empty()) {
    out += '\n';
    return;
  }
  out += " {\n";
  for (const auto& c : a.children) print_activity(m, *m.find_activity(c), depth + 1, out);
  out += indent + "}\n";
}

void print_entity(const QualityModel& m, const Entity& e, int depth, std::string& out) {
  const std::string indent(2 * depth, ' ');
  out += indent + "entity " + e.id;
  if (e.is_a) out += " : " + *e.is_a;
  std::vector<const Entity*> parts;
  for (const auto& other : m.entities)
    if (other.part_of == e.id) parts.push_back(&other);
  if (parts.empty()) {
    out += '\n';
    return;
  }
  out += " {\n";
  for (const auto* p : parts) print_entity(m, *p, depth + 1, out);
  out += indent + "}\n";
}

}  // namespace

QualityModel parse_model(std::string_view text) { return Parser(tokenize(text)).parse(); }

std::string print_model(const QualityModel& m) {
  std::string out = "model " + quote(m.name) + " {\n";
  for (const auto& a : m.activities)
    if (!a.parent) print_activity(m, a, 1, out);
  for (const auto& e : m.entities)
    if (!e.part_of) print_entity(m, e, 1, out);
  for (const auto& f : m.facts) out += "  fact " + f.ref.str() + "\n";
  for (const auto& i : m.impacts)
    out += fmt::format("  impact {} -> {} {}\n", i.fact.str(), i.activity, i.sign == Sign::Positive ? '+' : '-');
  for (const auto& q : m.annotations) {
    out += "  quantify " + q.node.str() + " {\n";
    if (q.states) out += fmt::format("    states {}\n", *q.states);
    if (q.variance) out += "    variance " + number(*q.variance) + "\n";
    if (!q.weights.empty()) {
      out += "    weights {\n";
      for (const auto& [parent, w] : q.weights) out += "      " + parent.str() + ": " + number(w) + "\n";
      out += "    }\n";
    }
    if (q.prior) {
      std::vector<std::string> ps;
      for (double p : *q.prior) ps.push_back(number(p));
      out += fmt::format("    prior [{}]\n", fmt::join(ps, ", "));
    }
    out += "  }\n";
  }
  for (const auto& ind : m.indicators) {
    std::vector<std::string> bs;
    for (double b : ind.boundaries) bs.push_back(number(b));
    out += fmt::format("  indicator {} for {} {{\n    intervals [{}]\n", ind.id, ind.subject.str(), fmt::join(bs, ", "));
    if (const auto* part = std::get_if<PartitionedSpec>(&ind.expression)) {
      out += "    partitioned {\n";
      for (const auto& [label, tn] : part->levels)
        out += fmt::format("      {}: tnormal({}, {})\n", label, number(tn.mean), number(tn.variance));
      out += "    }\n";
    } else {
      const auto& a = std::get<ArithmeticSpec>(ind.expression);
      out += fmt::format("    arithmetic mean = {} {} {} * level variance {}\n", number(a.intercept),
                         std::signbit(a.slope) ? '-' : '+', number(std::abs(a.slope)), number(a.variance));
    }
    out += "  }\n";
  }
  for (const auto& g : m.goals)
    out += fmt::format("  goal {} {{\n    question {}\n    metric {}\n    activity {}\n  }}\n", quote(g.name),
                       quote(g.question), g.target_indicator, g.target_activity);
  out += "}\n";
  return out;
}

// ---------------------------------------------------------------------------
// Inheritance

QualityModel expand_inheritance(const QualityModel& model) {
  QualityModel out = model;

  // Direct is-a children per entity, in declaration order.
  std::map<std::string, std::vector<std::string>> kinds;
  for (const auto& e : model.entities)
    if (e.is_a) kinds[*e.is_a].push_back(e.id);

  // Transitive is-a descendants in pre-order.
  const auto descendants = [&](const std::string& root) {
    std::vector<std::string> order;
    std::function<void(const std::string&)> walk = [&](const std::string& id) {
      const auto it = kinds.find(id);
      if (it == kinds.end()) return;
      for (const auto& c : it->second) {
        order.push_back(c);
        walk(c);
      }
    };
    walk(root);
    return order;
  };

  for (const auto& fact : model.facts) {
    const std::string origin = fact.inherited_from.value_or(fact.ref.entity);
    for (const auto& sub : descendants(fact.ref.entity)) {
      const FactRef ref{sub, fact.ref.attribute};
      if (out.find_fact(ref)) continue;
      out.facts.push_back(Fact{ref, origin});
      for (const auto& imp : model.impacts) {
        if (imp.fact != fact.ref) continue;
        const bool present = std::any_of(out.impacts.begin(), out.impacts.end(), [&](const Impact& i) {
          return i.fact == ref && i.activity == imp.activity;
        });
        if (!present) out.impacts.push_back(Impact{ref, imp.activity, imp.sign});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix view

std::vector<std::string> activities_leaf_to_root(const QualityModel& model) {
  std::vector<std::string> order;
  std::function<void(const Activity&)> visit = [&](const Activity& a) {
    for (const auto& c : a.children) visit(*model.find_activity(c));
    order.push_back(a.id);
  };
  for (const auto& a : model.activities)
    if (!a.parent) visit(a);
  return order;
}

std::size_t MatrixView::non_blank() const {
  std::size_t n = 0;
  for (const auto& row : cells) n += std::count_if(row.begin(), row.end(), [](Cell c) { return c != Cell::Blank; });
  return n;
}

std::string MatrixView::to_text() const {
  std::size_t first = 0;
  for (const auto& r : rows) first = std::max(first, r.str().size());
  std::string out = fmt::format("{:<{}}", "", first);
  for (const auto& c : columns) out += " | " + c;
  out += '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += fmt::format("{:<{}}", rows[r].str(), first);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const char mark = cells[r][c] == Cell::Positive ? '+' : cells[r][c] == Cell::Negative ? '-' : ' ';
      out += fmt::format(" | {:^{}}", mark, columns[c].size());
    }
    out += '\n';
  }
  return out;
}

MatrixView export_matrix(const QualityModel& input) {
  const QualityModel model = expand_inheritance(input);

  std::vector<std::string> entity_order;
  std::function<void(const Entity&)> walk = [&](const Entity& e) {
    entity_order.push_back(e.id);
    for (const auto& other : model.entities)
      if (other.part_of == e.id) walk(other);
  };
  for (const auto& e : model.entities)
    if (!e.part_of) walk(e);
  const auto rank = [&](const std::string& entity) {
    return std::find(entity_order.begin(), entity_order.end(), entity) - entity_order.begin();
  };

  MatrixView view;
  for (const auto& f : model.facts) view.rows.push_back(f.ref);
  std::stable_sort(view.rows.begin(), view.rows.end(),
                   [&](const FactRef& a, const FactRef& b) { return rank(a.entity) < rank(b.entity); });
  view.columns = activities_leaf_to_root(model);
  view.cells.assign(view.rows.size(), std::vector<Cell>(view.columns.size(), Cell::Blank));
  for (const auto& imp : model.impacts) {
    const auto r = std::find(view.rows.begin(), view.rows.end(), imp.fact) - view.rows.begin();
    const auto c = std::find(view.columns.begin(), view.columns.end(), imp.activity) - view.columns.begin();
    view.cells[r][c] = imp.sign == Sign::Positive ? Cell::Positive : Cell::Negative;
  }
  return view;
}

}  // namespace qualinet
