#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "piatms/weight.hpp"

namespace piatms {

using NodeId = std::uint32_t;
using JustificationId = std::uint32_t;

enum class NodeKind { contradiction, assumption, fact, derived };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::contradiction: return "contradiction";
    case NodeKind::assumption: return "assumption";
    case NodeKind::fact: return "fact";
    case NodeKind::derived: return "derived";
  }
  return "?";
}

/// An assumption set from which a node is deducible with the given degree.
/// Assumption ids are kept sorted.
struct Environment {
  std::vector<NodeId> assumptions;
  Weight degree;

  auto operator<=>(const Environment&) const = default;
};

/// The minimal, sound, complete, weakly consistent set of a node's
/// environments, kept in canonical (sorted) order.
struct Label {
  std::vector<Environment> environments;

  auto operator<=>(const Label&) const = default;
};

struct Nogood {
  std::vector<NodeId> assumptions;
  Weight degree;

  auto operator<=>(const Nogood&) const = default;
};

/// A maximal assumption set embedding no nogood, with its complement.
struct Interpretation {
  std::vector<NodeId> kept;
  std::vector<NodeId> discarded;

  auto operator<=>(const Interpretation&) const = default;
};

struct EnumerationCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The possibilistic ATMS: nodes, weighted Horn justifications, incremental
/// label propagation to quiescence, and a minimized nogood store. Single
/// mutator; reads may interleave freely between mutations.
class Engine {
 public:
  static constexpr NodeId kContradiction = 0;

  Engine() {
    nodes_.push_back(Node{NodeKind::contradiction, std::nullopt, Label{}});
  }

  NodeId add_assumption(Weight weight) {
    NodeId id = new_node(NodeKind::assumption, weight);
    nodes_[id].label.environments.push_back({{id}, weight});
    return id;
  }

  NodeId add_fact(Weight weight) {
    NodeId id = new_node(NodeKind::fact, weight);
    nodes_[id].label.environments.push_back({{}, weight});
    return id;
  }

  NodeId add_derived() { return new_node(NodeKind::derived, std::nullopt); }

  JustificationId add_justification(std::vector<NodeId> antecedents, NodeId consequent, Weight weight) {
    if (antecedents.empty()) throw std::invalid_argument("justification needs antecedents");
    std::sort(antecedents.begin(), antecedents.end());
    antecedents.erase(std::unique(antecedents.begin(), antecedents.end()), antecedents.end());
    for (NodeId a : antecedents) {
      if (a >= nodes_.size()) throw std::invalid_argument("unknown antecedent node");
      if (a == kContradiction) throw std::invalid_argument("contradiction cannot be an antecedent");
    }
    if (consequent >= nodes_.size()) throw std::invalid_argument("unknown consequent node");
    for (NodeId a : antecedents)
      if (a == consequent) throw std::invalid_argument("consequent among antecedents");

    auto jid = static_cast<JustificationId>(justifications_.size());
    justifications_.push_back({std::move(antecedents), consequent, weight});
    for (NodeId a : justifications_.back().antecedents) by_antecedent_[a].push_back(jid);

    std::deque<JustificationId> worklist{jid};
    propagate(worklist);
    return jid;
  }

  /// Asserts a contradictory assumption set directly, bypassing derivation.
  /// Equivalent to a bottom-justification whose premises are fully certain.
  void install_nogood(std::vector<NodeId> assumptions, Weight degree) {
    std::sort(assumptions.begin(), assumptions.end());
    for (NodeId a : assumptions)
      if (a >= nodes_.size() || nodes_[a].kind != NodeKind::assumption)
        throw std::invalid_argument("nogood members must be assumption nodes");
    record_nogood(assumptions, degree);
  }

  std::size_t node_count() const { return nodes_.size(); }
  NodeKind kind(NodeId id) const { return node(id).kind; }
  std::optional<Weight> intrinsic_weight(NodeId id) const { return node(id).intrinsic; }
  const Label& label(NodeId id) const { return node(id).label; }
  const std::vector<Nogood>& nogoods() const { return nogoods_; }

  /// Max degree over stored nogoods contained in E; absent when E embeds none.
  std::optional<Weight> environment_inconsistency_degree(std::vector<NodeId> env) const {
    std::sort(env.begin(), env.end());
    std::optional<Weight> best;
    for (const Nogood& g : nogoods_)
      if (subset(g.assumptions, env)) best = merge_degree(best, g.degree);
    return best;
  }

  /// Max degree with which `id` is deducible under the assumption set H.
  std::optional<Weight> context_degree(NodeId id, std::vector<NodeId> hypotheses) const {
    std::sort(hypotheses.begin(), hypotheses.end());
    std::optional<Weight> best;
    for (const Environment& e : node(id).label.environments)
      if (subset(e.assumptions, hypotheses)) best = merge_degree(best, e.degree);
    return best;
  }

  std::vector<NodeId> assumptions() const {
    std::vector<NodeId> out;
    for (NodeId id = 0; id < nodes_.size(); ++id)
      if (nodes_[id].kind == NodeKind::assumption) out.push_back(id);
    return out;
  }

  /// Orders interpretations: discarded weights sorted descending compare
  /// lexicographically, smaller first (shed the weakest conflicts); then
  /// fewer discarded; then the smaller discarded id sequence.
  bool rank_less(const Interpretation& a, const Interpretation& b) const {
    std::vector<Weight> wa = discarded_weights(a), wb = discarded_weights(b);
    if (wa != wb)
      return std::lexicographical_compare(wa.begin(), wa.end(), wb.begin(), wb.end());
    if (a.discarded.size() != b.discarded.size()) return a.discarded.size() < b.discarded.size();
    return a.discarded < b.discarded;
  }

  /// All maximal assumption sets embedding no nogood, ranked, first `limit`.
  std::vector<Interpretation> interpretations(std::size_t limit) const {
    std::vector<NodeId> all = assumptions();
    if (all.size() > enumeration_cap_)
      throw EnumerationCapExceeded(
          "interpretation enumeration over " + std::to_string(all.size()) +
          " assumptions exceeds the cap of " + std::to_string(enumeration_cap_) +
          "; use best_interpretation for the greedy single-best path");
    std::set<std::vector<NodeId>> seen, consistent;
    enumerate_consistent(all, seen, consistent);
    std::vector<Interpretation> out;
    for (const auto& kept : consistent) {
      if (!is_maximal(kept, all)) continue;
      out.push_back(make_interpretation(kept, all));
    }
    std::sort(out.begin(), out.end(),
              [this](const Interpretation& a, const Interpretation& b) { return rank_less(a, b); });
    if (out.size() > limit) out.resize(limit);
    return out;
  }

  struct GreedyStats {
    std::size_t iterations = 0;
    std::size_t nogood_inspections = 0;     // greedy loop scans
    std::size_t restoration_checks = 0;     // subset tests in the restoration pass
  };

  /// Greedy single-best interpretation: repeatedly resolve the most certain
  /// nogood by discarding its least certain assumption, then restore any
  /// discarded assumption whose return embeds no nogood.
  Interpretation best_interpretation() const {
    GreedyStats stats;
    return best_interpretation(stats);
  }

  Interpretation best_interpretation(GreedyStats& stats) const {
    std::vector<NodeId> all = assumptions();
    std::set<NodeId> kept(all.begin(), all.end());
    std::vector<NodeId> removed_order;

    std::vector<std::size_t> active(nogoods_.size());
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;
    std::stable_sort(active.begin(), active.end(), [this](std::size_t a, std::size_t b) {
      return nogoods_[a].degree > nogoods_[b].degree;
    });

    while (!active.empty()) {
      ++stats.iterations;
      const Nogood& g = nogoods_[active.front()];
      active.erase(active.begin());
      if (g.assumptions.empty()) continue;  // nothing to remove; base itself inconsistent
      NodeId victim = g.assumptions.front();
      for (NodeId a : g.assumptions)
        if (weight_of(a) < weight_of(victim) || (weight_of(a) == weight_of(victim) && a < victim))
          victim = a;
      kept.erase(victim);
      removed_order.push_back(victim);
      std::erase_if(active, [&](std::size_t i) {
        ++stats.nogood_inspections;
        return contains(nogoods_[i].assumptions, victim);
      });
    }

    // Restoration: the literal greedy loop can strand assumptions whose
    // every covering nogood was already broken elsewhere.
    std::vector<NodeId> candidates = removed_order;
    std::sort(candidates.begin(), candidates.end(), [this](NodeId a, NodeId b) {
      if (weight_of(a) != weight_of(b)) return weight_of(a) > weight_of(b);
      return a < b;
    });
    for (NodeId a : candidates) {
      std::vector<NodeId> trial(kept.begin(), kept.end());
      trial.push_back(a);
      std::sort(trial.begin(), trial.end());
      bool blocked = false;
      for (const Nogood& g : nogoods_) {
        ++stats.restoration_checks;
        if (subset(g.assumptions, trial)) { blocked = true; break; }
      }
      if (!blocked) kept.insert(a);
    }

    return make_interpretation({kept.begin(), kept.end()}, all);
  }

  std::size_t enumeration_cap() const { return enumeration_cap_; }
  void set_enumeration_cap(std::size_t cap) { enumeration_cap_ = cap; }

  /// Text dump for golden-file tests: one line per node and per nogood.
  std::string dump() const {
    std::ostringstream os;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
      os << "node " << id << ' ' << to_string(nodes_[id].kind) << " label={";
      const auto& envs = nodes_[id].label.environments;
      for (std::size_t i = 0; i < envs.size(); ++i) {
        if (i) os << ',';
        print_env(os, envs[i].assumptions, envs[i].degree);
      }
      os << "}\n";
    }
    std::vector<Nogood> gs = nogoods_;
    std::sort(gs.begin(), gs.end());
    for (const Nogood& g : gs) {
      os << "nogood ";
      print_env(os, g.assumptions, g.degree);
      os << '\n';
    }
    return os.str();
  }

 private:
  struct Node {
    NodeKind kind;
    std::optional<Weight> intrinsic;
    Label label;
  };
  struct Justification {
    std::vector<NodeId> antecedents;
    NodeId consequent;
    Weight weight;
  };

  NodeId new_node(NodeKind kind, std::optional<Weight> intrinsic) {
    nodes_.push_back(Node{kind, intrinsic, Label{}});
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  const Node& node(NodeId id) const {
    if (id >= nodes_.size()) throw std::invalid_argument("unknown node id " + std::to_string(id));
    return nodes_[id];
  }

  Weight weight_of(NodeId a) const { return *nodes_[a].intrinsic; }

  static bool subset(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  }
  static bool contains(const std::vector<NodeId>& v, NodeId x) {
    return std::binary_search(v.begin(), v.end(), x);
  }

  static void print_env(std::ostream& os, const std::vector<NodeId>& ids, Weight degree) {
    os << "({";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) os << ',';
      os << ids[i];
    }
    os << "}," << degree.str() << ')';
  }

  void propagate(std::deque<JustificationId>& worklist) {
    while (!worklist.empty()) {
      JustificationId jid = worklist.front();
      worklist.pop_front();
      const Justification& j = justifications_[jid];
      std::vector<Environment> candidates;
      cross_product(j, 0, {{}, j.weight}, candidates);
      for (Environment& cand : candidates) {
        if (j.consequent == kContradiction) {
          record_nogood(cand.assumptions, cand.degree);
        } else if (merge_environment(j.consequent, cand)) {
          auto it = by_antecedent_.find(j.consequent);
          if (it != by_antecedent_.end())
            for (JustificationId next : it->second)
              if (std::find(worklist.begin(), worklist.end(), next) == worklist.end())
                worklist.push_back(next);
        }
      }
    }
  }

  void cross_product(const Justification& j, std::size_t index, Environment acc,
                     std::vector<Environment>& out) const {
    if (index == j.antecedents.size()) {
      std::sort(acc.assumptions.begin(), acc.assumptions.end());
      acc.assumptions.erase(std::unique(acc.assumptions.begin(), acc.assumptions.end()),
                            acc.assumptions.end());
      out.push_back(std::move(acc));
      return;
    }
    for (const Environment& e : nodes_[j.antecedents[index]].label.environments) {
      Environment next = acc;
      next.assumptions.insert(next.assumptions.end(), e.assumptions.begin(), e.assumptions.end());
      if (e.degree < next.degree) next.degree = e.degree;
      cross_product(j, index + 1, std::move(next), out);
    }
  }

  // Merge a candidate environment into a node's label under weak consistency
  // and minimality. Returns whether the label changed.
  bool merge_environment(NodeId id, const Environment& cand) {
    auto inc = environment_inconsistency_degree_sorted(cand.assumptions);
    if (inc && *inc >= cand.degree) return false;
    auto& envs = nodes_[id].label.environments;
    for (const Environment& e : envs)
      if (subset(e.assumptions, cand.assumptions) && e.degree >= cand.degree) return false;
    std::erase_if(envs, [&](const Environment& e) {
      return subset(cand.assumptions, e.assumptions) && e.degree <= cand.degree;
    });
    envs.push_back(cand);
    std::sort(envs.begin(), envs.end());
    return true;
  }

  std::optional<Weight> environment_inconsistency_degree_sorted(const std::vector<NodeId>& env) const {
    std::optional<Weight> best;
    for (const Nogood& g : nogoods_)
      if (subset(g.assumptions, env)) best = merge_degree(best, g.degree);
    return best;
  }

  void record_nogood(const std::vector<NodeId>& set, Weight degree) {
    for (const Nogood& g : nogoods_)
      if (subset(g.assumptions, set) && g.degree >= degree) return;
    std::erase_if(nogoods_, [&](const Nogood& g) {
      return subset(set, g.assumptions) && g.degree <= degree;
    });
    nogoods_.push_back({set, degree});
    // Weak-consistency refiltering: drop every label environment the new
    // nogood invalidates. Removals never require re-propagation.
    for (Node& n : nodes_)
      std::erase_if(n.label.environments, [&](const Environment& e) {
        return subset(set, e.assumptions) && e.degree <= degree;
      });
  }

  void enumerate_consistent(const std::vector<NodeId>& set, std::set<std::vector<NodeId>>& seen,
                            std::set<std::vector<NodeId>>& out) const {
    if (!seen.insert(set).second) return;
    const Nogood* embedded = nullptr;
    for (const Nogood& g : nogoods_)
      if (subset(g.assumptions, set)) { embedded = &g; break; }
    if (!embedded) {
      out.insert(set);
      return;
    }
    if (embedded->assumptions.empty()) return;  // nothing is consistent
    for (NodeId a : embedded->assumptions) {
      std::vector<NodeId> sub;
      sub.reserve(set.size() - 1);
      for (NodeId x : set)
        if (x != a) sub.push_back(x);
      enumerate_consistent(sub, seen, out);
    }
  }

  bool is_maximal(const std::vector<NodeId>& kept, const std::vector<NodeId>& all) const {
    for (NodeId a : all) {
      if (contains(kept, a)) continue;
      std::vector<NodeId> trial = kept;
      trial.insert(std::lower_bound(trial.begin(), trial.end(), a), a);
      bool blocked = false;
      for (const Nogood& g : nogoods_)
        if (subset(g.assumptions, trial)) { blocked = true; break; }
      if (!blocked) return false;
    }
    return true;
  }

  Interpretation make_interpretation(std::vector<NodeId> kept, const std::vector<NodeId>& all) const {
    std::sort(kept.begin(), kept.end());
    Interpretation out;
    out.kept = kept;
    for (NodeId a : all)
      if (!contains(kept, a)) out.discarded.push_back(a);
    return out;
  }

  std::vector<Weight> discarded_weights(const Interpretation& i) const {
    std::vector<Weight> ws;
    for (NodeId a : i.discarded) ws.push_back(weight_of(a));
    std::sort(ws.begin(), ws.end(), std::greater<Weight>());
    return ws;
  }

  std::vector<Node> nodes_;
  std::vector<Justification> justifications_;
  std::map<NodeId, std::vector<JustificationId>> by_antecedent_;
  std::vector<Nogood> nogoods_;
  std::size_t enumeration_cap_ = 24;
};

}  // namespace piatms
