#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "piatms/engine.hpp"
#include "piatms/weight.hpp"

namespace piatms::rules {

using Value = std::variant<std::int64_t, std::string>;

inline std::string to_string(const Value& v) {
  if (std::holds_alternative<std::int64_t>(v)) return std::to_string(std::get<std::int64_t>(v));
  return std::get<std::string>(v);
}

using ElementId = std::uint32_t;
using Attrs = std::map<std::string, Value>;

/// A working-memory element backed by exactly one ATMS node.
struct Element {
  ElementId id;
  std::string cls;
  Attrs attrs;
  NodeId node;
};

struct AttrTest {
  enum class Kind { constant, variable };
  std::string attr;
  Kind kind;
  Value expected;   // Kind::constant
  std::string var;  // Kind::variable

  bool operator==(const AttrTest&) const = default;
};

struct Pattern {
  std::string cls;
  std::vector<AttrTest> tests;

  bool operator==(const Pattern&) const = default;
};

inline Pattern match_class(std::string cls) { return {std::move(cls), {}}; }

inline Pattern& eq(Pattern& p, std::string attr, Value v) {
  p.tests.push_back({std::move(attr), AttrTest::Kind::constant, std::move(v), {}});
  return p;
}
inline Pattern& bind(Pattern& p, std::string attr, std::string var) {
  p.tests.push_back({std::move(attr), AttrTest::Kind::variable, {}, std::move(var)});
  return p;
}

struct Match {
  std::vector<const Element*> elements;  // one per condition
  std::map<std::string, Value> bindings;
};

class WorkingMemory;

/// Handed to a rule action; all creations go through here so every firing
/// leaves a justification trail and never mutates existing elements.
class FiringContext {
 public:
  FiringContext(WorkingMemory& wm, Engine& engine, const Match& match, Weight rule_weight)
      : wm_(wm), engine_(engine), match_(match), rule_weight_(rule_weight) {}

  const Match& match() const { return match_; }
  Weight rule_weight() const { return rule_weight_; }
  Engine& engine() { return engine_; }

  /// Derived node justified by the matched elements; also asserted as a new
  /// element. The optional weight overrides the rule weight (computed
  /// certainties).
  ElementId derive_fact(std::string cls, Attrs attrs, std::optional<Weight> weight = std::nullopt);

  /// New assumption node (a hypothesis: a choice point, not a consequence),
  /// asserted as a new element.
  ElementId derive_hypothesis(std::string cls, Attrs attrs, Weight weight);

  /// Weighted justification from the matched elements to an existing node.
  void install_justification(NodeId consequent, std::optional<Weight> weight = std::nullopt);

 private:
  std::vector<NodeId> antecedent_nodes() const {
    std::vector<NodeId> out;
    for (const Element* e : match_.elements) out.push_back(e->node);
    return out;
  }

  WorkingMemory& wm_;
  Engine& engine_;
  const Match& match_;
  Weight rule_weight_;
};

struct Rule {
  std::string name;
  int priority = 0;
  Weight weight = Weight::one();
  std::vector<Pattern> conditions;
  std::function<bool(const Match&)> guard;    // may be empty
  std::function<void(FiringContext&)> action; // required
};

struct Firing {
  std::string rule;
  std::vector<ElementId> tuple;
};

struct FiringReport {
  std::vector<Firing> firings;
};

struct RuleDefinitionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A private working memory with its attached rulebase. Elements are only
/// ever added; rule firings emit ATMS nodes and justifications instead of
/// mutating the memory. Single mutator per instance.
class WorkingMemory {
 public:
  WorkingMemory(std::string id, Engine& engine) : id_(std::move(id)), engine_(engine) {}

  const std::string& id() const { return id_; }
  Engine& engine() { return engine_; }

  void define_rule(Rule rule) {
    if (!rule.action) throw RuleDefinitionError("rule '" + rule.name + "' has no action");
    if (rule.conditions.empty())
      throw RuleDefinitionError("rule '" + rule.name + "' has no conditions");
    for (const Rule& r : rules_)
      if (r.name == rule.name)
        throw RuleDefinitionError("duplicate rule name '" + rule.name + "'");
    rules_.push_back(std::move(rule));
  }

  /// Idempotent on canonical content: re-asserting an identical element
  /// returns the original handle.
  ElementId assert_element(std::string cls, Attrs attrs, NodeId node) {
    if (node >= engine_.node_count())
      throw std::invalid_argument("element backed by unknown node " + std::to_string(node));
    auto key = content_key(cls, attrs);
    if (auto it = by_content_.find(key); it != by_content_.end()) return it->second;
    auto id = static_cast<ElementId>(elements_.size());
    elements_.push_back({id, std::move(cls), std::move(attrs), node});
    by_content_.emplace(std::move(key), id);
    return id;
  }

  const Element& element(ElementId id) const { return elements_.at(id); }
  const std::vector<Element>& elements() const { return elements_; }

  std::vector<const Element*> elements_of(const std::string& cls) const {
    std::vector<const Element*> out;
    for (const Element& e : elements_)
      if (e.cls == cls) out.push_back(&e);
    return out;
  }

  /// Match-select-act to quiescence. Conflict resolution: priority
  /// descending, then rule definition order, then lexicographic binding
  /// tuple. Refractoriness: one firing per (rule, tuple).
  FiringReport run_to_quiescence(std::size_t max_firings = 10000) {
    FiringReport report;
    while (true) {
      auto next = select_next();
      if (!next) break;
      if (report.firings.size() >= max_firings)
        throw std::runtime_error("working memory '" + id_ + "' exceeded the firing cap of " +
                                 std::to_string(max_firings));
      auto [rule_index, match] = *next;
      std::vector<ElementId> tuple;
      for (const Element* e : match.elements) tuple.push_back(e->id);
      fired_.insert({rule_index, tuple});
      const Rule& rule = rules_[rule_index];
      FiringContext ctx(*this, engine_, match, rule.weight);
      rule.action(ctx);
      report.firings.push_back({rule.name, std::move(tuple)});
    }
    return report;
  }

 private:
  friend class FiringContext;

  static std::string content_key(const std::string& cls, const Attrs& attrs) {
    std::ostringstream os;
    os << cls;
    for (const auto& [k, v] : attrs) os << '\x1f' << k << '\x1e' << to_string(v);
    return os.str();
  }

  std::optional<std::pair<std::size_t, Match>> select_next() const {
    for (std::size_t ri : rules_by_priority()) {
      const Rule& rule = rules_[ri];
      Match match;
      match.elements.resize(rule.conditions.size());
      if (auto found = match_condition(rule, 0, match, ri)) return std::make_pair(ri, *found);
    }
    return std::nullopt;
  }

  std::vector<std::size_t> rules_by_priority() const {
    std::vector<std::size_t> order(rules_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
      return rules_[a].priority > rules_[b].priority;
    });
    return order;
  }

  // Depth-first join over conditions in element-id order; the first complete
  // unfired match is the lexicographically smallest tuple.
  std::optional<Match> match_condition(const Rule& rule, std::size_t ci, Match& acc,
                                       std::size_t rule_index) const {
    if (ci == rule.conditions.size()) {
      if (rule.guard && !rule.guard(acc)) return std::nullopt;
      std::vector<ElementId> tuple;
      for (const Element* e : acc.elements) tuple.push_back(e->id);
      if (fired_.count({rule_index, tuple})) return std::nullopt;
      return acc;
    }
    const Pattern& pat = rule.conditions[ci];
    // Symmetry breaking: identical earlier conditions force strictly
    // increasing element ids.
    ElementId lower_bound = 0;
    for (std::size_t j = 0; j < ci; ++j)
      if (rule.conditions[j] == pat) lower_bound = acc.elements[j]->id + 1;
    for (const Element& e : elements_) {
      if (e.id < lower_bound || e.cls != pat.cls) continue;
      auto saved_bindings = acc.bindings;
      if (test_element(pat, e, acc.bindings)) {
        acc.elements[ci] = &e;
        if (auto found = match_condition(rule, ci + 1, acc, rule_index)) return found;
      }
      acc.bindings = std::move(saved_bindings);
    }
    return std::nullopt;
  }

  static bool test_element(const Pattern& pat, const Element& e,
                           std::map<std::string, Value>& bindings) {
    for (const AttrTest& t : pat.tests) {
      auto it = e.attrs.find(t.attr);
      if (it == e.attrs.end()) return false;
      if (t.kind == AttrTest::Kind::constant) {
        if (it->second != t.expected) return false;
      } else {
        auto b = bindings.find(t.var);
        if (b == bindings.end())
          bindings.emplace(t.var, it->second);
        else if (b->second != it->second)
          return false;
      }
    }
    return true;
  }

  std::string id_;
  Engine& engine_;
  std::vector<Element> elements_;
  std::map<std::string, ElementId> by_content_;
  std::vector<Rule> rules_;
  std::set<std::pair<std::size_t, std::vector<ElementId>>> fired_;
};

inline ElementId FiringContext::derive_fact(std::string cls, Attrs attrs,
                                            std::optional<Weight> weight) {
  NodeId node = engine_.add_derived();
  engine_.add_justification(antecedent_nodes(), node, weight.value_or(rule_weight_));
  return wm_.assert_element(std::move(cls), std::move(attrs), node);
}

inline ElementId FiringContext::derive_hypothesis(std::string cls, Attrs attrs, Weight weight) {
  NodeId node = engine_.add_assumption(weight);
  return wm_.assert_element(std::move(cls), std::move(attrs), node);
}

inline void FiringContext::install_justification(NodeId consequent, std::optional<Weight> weight) {
  engine_.add_justification(antecedent_nodes(), consequent, weight.value_or(rule_weight_));
}

/// Span in minutes covered by elements carrying integer `t0`/`t1` attributes.
inline std::int64_t span_of(const std::vector<const Element*>& es) {
  std::int64_t lo = 0, hi = 0;
  bool first = true;
  for (const Element* e : es) {
    std::int64_t t0 = std::get<std::int64_t>(e->attrs.at("t0"));
    std::int64_t t1 = std::get<std::int64_t>(e->attrs.at("t1"));
    if (first || t0 < lo) lo = t0;
    if (first || t1 > hi) hi = t1;
    first = false;
  }
  return first ? 0 : hi - lo;
}

/// Count of distinct axis identifiers over elements carrying a
/// comma-separated `axes` attribute.
inline std::int64_t axes_of(const std::vector<const Element*>& es) {
  std::set<std::string> axes;
  for (const Element* e : es) {
    const std::string& s = std::get<std::string>(e->attrs.at("axes"));
    std::size_t start = 0;
    while (start <= s.size()) {
      std::size_t comma = s.find(',', start);
      std::string axis = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!axis.empty()) axes.insert(axis);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return static_cast<std::int64_t>(axes.size());
}

}  // namespace piatms::rules
