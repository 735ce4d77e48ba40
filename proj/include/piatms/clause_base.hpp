#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "piatms/weight.hpp"

namespace piatms {

using PropId = std::int32_t;

struct Literal {
  PropId prop;
  bool positive;

  auto operator<=>(const Literal&) const = default;
};

inline Literal pos(PropId p) { return {p, true}; }
inline Literal neg(PropId p) { return {p, false}; }

/// A classical clause annotated with a necessity lower bound.
struct WeightedClause {
  std::vector<Literal> literals;  // sorted, duplicate-free; empty means the falsum clause
  Weight weight;

  auto operator<=>(const WeightedClause&) const = default;
};

struct OracleCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A multiset of weighted clauses over a proposition registry, together with
/// the brute-force inconsistency / entailment oracle. Satisfiability is
/// decided by unit-resolution closure on Horn bases and by exhaustive
/// assignment enumeration otherwise; both are independent of the label
/// propagation machinery that this oracle checks.
class ClauseBase {
 public:
  enum class SatMethod { automatic, unit_closure, enumerate };

  explicit ClauseBase(std::size_t prop_cap = 20) : prop_cap_(prop_cap) {}

  /// Forces one satisfiability route; `automatic` picks unit closure on Horn
  /// bases and enumeration otherwise. Used for dual-route cross-checks.
  void set_sat_method(SatMethod m) { sat_method_ = m; }

  PropId add_prop(std::string name = "") {
    if (name.empty()) name = "p" + std::to_string(names_.size());
    names_.push_back(std::move(name));
    return static_cast<PropId>(names_.size() - 1);
  }

  void add_clause(std::vector<Literal> literals, Weight weight) {
    std::sort(literals.begin(), literals.end());
    literals.erase(std::unique(literals.begin(), literals.end()), literals.end());
    for (std::size_t i = 0; i + 1 < literals.size(); ++i)
      if (literals[i].prop == literals[i + 1].prop)
        throw std::invalid_argument("clause contains a proposition with both signs");
    for (const Literal& l : literals)
      if (l.prop < 0 || static_cast<std::size_t>(l.prop) >= names_.size())
        throw std::invalid_argument("clause references an unregistered proposition");
    clauses_.push_back({std::move(literals), weight});
  }

  std::size_t prop_count() const { return names_.size(); }
  const std::string& prop_name(PropId p) const { return names_.at(static_cast<std::size_t>(p)); }
  const std::vector<WeightedClause>& clauses() const { return clauses_; }

  /// Sub-base of clauses with weight >= threshold (inclusive).
  ClauseBase alpha_cut(Weight threshold) const {
    ClauseBase out(prop_cap_);
    out.names_ = names_;
    for (const WeightedClause& c : clauses_)
      if (c.weight >= threshold) out.clauses_.push_back(c);
    return out;
  }

  /// Greatest weight alpha such that the alpha-cut is unsatisfiable;
  /// absent if the whole base is satisfiable.
  std::optional<Weight> inconsistency_degree() const {
    check_cap();
    for (Weight w : distinct_weights_descending()) {
      if (!satisfiable(cut_clauses(w), std::nullopt)) return w;
    }
    return std::nullopt;
  }

  /// Greatest alpha such that the alpha-cut classically entails `goal`;
  /// absent if no cut does.
  std::optional<Weight> entailment_degree(PropId goal) const {
    check_cap();
    for (Weight w : distinct_weights_descending()) {
      if (!satisfiable(cut_clauses(w), goal)) return w;
    }
    return std::nullopt;
  }

 private:
  void check_cap() const {
    if (names_.size() > prop_cap_)
      throw OracleCapExceeded("oracle proposition cap exceeded: " + std::to_string(names_.size()) +
                              " > " + std::to_string(prop_cap_));
  }

  std::vector<Weight> distinct_weights_descending() const {
    std::set<Weight, std::greater<Weight>> ws;
    for (const WeightedClause& c : clauses_) ws.insert(c.weight);
    return {ws.begin(), ws.end()};
  }

  std::vector<const WeightedClause*> cut_clauses(Weight threshold) const {
    std::vector<const WeightedClause*> out;
    for (const WeightedClause& c : clauses_)
      if (c.weight >= threshold) out.push_back(&c);
    return out;
  }

  // Satisfiability of the given clauses, optionally with the extra negative
  // unit {¬refuted} (entailment check).
  bool satisfiable(const std::vector<const WeightedClause*>& cs, std::optional<PropId> refuted) const {
    bool horn = true;
    for (const WeightedClause* c : cs) {
      int positives = 0;
      for (const Literal& l : c->literals) positives += l.positive;
      if (positives > 1) { horn = false; break; }
    }
    switch (sat_method_) {
      case SatMethod::unit_closure:
        if (!horn) throw std::logic_error("unit_closure route requires a Horn base");
        return horn_satisfiable(cs, refuted);
      case SatMethod::enumerate:
        return enumerate_satisfiable(cs, refuted);
      case SatMethod::automatic:
        break;
    }
    if (horn) return horn_satisfiable(cs, refuted);
    return enumerate_satisfiable(cs, refuted);
  }

  bool horn_satisfiable(const std::vector<const WeightedClause*>& cs, std::optional<PropId> refuted) const {
    std::vector<char> truth(names_.size(), 0);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const WeightedClause* c : cs) {
        const Literal* head = nullptr;
        bool body_true = true;
        for (const Literal& l : c->literals) {
          if (l.positive) head = &l;
          else if (!truth[static_cast<std::size_t>(l.prop)]) { body_true = false; break; }
        }
        if (!body_true) continue;
        if (!head) return false;  // all-negative clause violated
        if (head->positive && !truth[static_cast<std::size_t>(head->prop)]) {
          if (refuted && head->prop == *refuted) return false;
          truth[static_cast<std::size_t>(head->prop)] = 1;
          changed = true;
        }
      }
    }
    return true;
  }

  bool enumerate_satisfiable(const std::vector<const WeightedClause*>& cs, std::optional<PropId> refuted) const {
    const std::size_t n = names_.size();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      if (refuted && (mask >> *refuted & 1)) continue;
      bool ok = true;
      for (const WeightedClause* c : cs) {
        bool sat = false;
        for (const Literal& l : c->literals)
          if (((mask >> l.prop) & 1) == static_cast<std::uint64_t>(l.positive)) { sat = true; break; }
        if (!sat) { ok = false; break; }
      }
      if (ok) return true;
    }
    return false;
  }

  std::size_t prop_cap_;
  SatMethod sat_method_ = SatMethod::automatic;
  std::vector<std::string> names_;
  std::vector<WeightedClause> clauses_;
};

}  // namespace piatms
