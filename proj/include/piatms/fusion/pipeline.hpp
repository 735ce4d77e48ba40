#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "piatms/engine.hpp"
#include "piatms/fusion/certainty.hpp"
#include "piatms/fusion/doctrine.hpp"
#include "piatms/fusion/scenario.hpp"
#include "piatms/fusion/unit.hpp"
#include "piatms/rules.hpp"
#include "piatms/textio.hpp"
#include "piatms/weight.hpp"

namespace piatms::fusion {

/// A conflict-free arrangement of units; members stay sorted by certainty
/// descending, id ascending.
struct Solution {
  std::vector<Unit> members;

  bool operator==(const Solution&) const = default;
};

inline void canonicalize(Solution& s) {
  std::sort(s.members.begin(), s.members.end(), [](const Unit& a, const Unit& b) {
    if (a.certainty != b.certainty) return a.certainty > b.certainty;
    return a.id < b.id;
  });
}

inline std::vector<std::string> member_ids(const Solution& s) {
  std::vector<std::string> ids;
  for (const Unit& u : s.members) ids.push_back(u.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Leximax on member certainties: compare the sorted-descending certainty
/// vectors, greater first; on a shared prefix the longer (more complete)
/// arrangement wins; final tie broken on member ids.
inline bool solution_rank_less(const Solution& a, const Solution& b) {
  std::size_t n = std::min(a.members.size(), b.members.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.members[i].certainty != b.members[i].certainty)
      return a.members[i].certainty > b.members[i].certainty;
  }
  if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
  return member_ids(a) < member_ids(b);
}

struct ConflictRecord {
  std::string other;  // unit id of the rival hypothesis
  Weight degree = Weight::one();  // nogood degree between the two

  bool operator==(const ConflictRecord&) const = default;
};

/// Everything the explain command needs about one unit, captured in the
/// phase that created it.
struct UnitRecord {
  Unit unit;
  bool observation = false;
  CertaintyFactors factors;
  std::vector<ConflictRecord> conflicts;
  std::string label;  // ATMS label with node ids replaced by unit ids
  std::vector<std::pair<std::vector<std::string>, Weight>> label_envs;
};

struct PhaseTrace {
  Level from = Level::section;
  std::size_t working_memories = 0;
  std::size_t complete_hypotheses = 0;
  std::size_t incomplete_hypotheses = 0;
  std::size_t nogoods = 0;
  std::size_t combinations = 0;
  std::size_t greedy_iterations = 0;
  std::size_t greedy_nogood_inspections = 0;
  std::size_t greedy_inspection_budget = 0;  // sum of |nogoods|^2 over working memories
};

struct RunResult {
  std::vector<Solution> solutions;
  std::map<std::string, UnitRecord> records;
  std::vector<PhaseTrace> phases;
};

struct PipelineOptions {
  int k = 3;              // combinations kept per phase
  int m = 3;              // final solutions reported
  bool greedy = false;    // select via the greedy best interpretation
  WeightTransform factor_transform;  // applied to every atomic certainty factor
  std::size_t max_firings = 20000;
};

/// Phase-by-phase k-best aggregation: each input solution seeds a private
/// working memory whose rules propose next-level units as ATMS hypotheses;
/// shared leaves become nogoods, the best consistent combinations are
/// completed greedily and pooled across memories.
class Pipeline {
 public:
  explicit Pipeline(Doctrine doctrine, PipelineOptions options = {})
      : doctrine_(std::move(doctrine)), options_(std::move(options)) {
    if (options_.k < 1 || options_.m < 1) throw std::invalid_argument("k and m must be >= 1");
  }

  const PipelineOptions& options() const { return options_; }

  RunResult run(const Scenario& scenario) {
    RunResult result;
    records_ = {};
    registry_ = {};
    level_counters_ = {};
    conflicts_ = {};
    conflict_pairs_ = {};
    if (scenario.observations.empty()) return result;

    Solution initial;
    for (const Unit& obs : scenario.observations) {
      Unit u = obs;
      u.certainty = apply_transform(options_.factor_transform, u.certainty);
      UnitRecord rec;
      rec.unit = u;
      rec.observation = true;
      rec.label_envs = {{{}, u.certainty}};
      records_.emplace(u.id, std::move(rec));
      initial.members.push_back(std::move(u));
    }
    canonicalize(initial);

    std::vector<Solution> current{initial};
    for (Level from : {Level::section, Level::company, Level::battalion, Level::regiment}) {
      PhaseTrace trace;
      current = aggregate_phase(current, from, options_.k, trace);
      result.phases.push_back(trace);
    }
    for (auto& [id, rec] : records_)
      if (auto it = conflicts_.find(id); it != conflicts_.end()) rec.conflicts = it->second;
    renumber(current);
    if (current.size() > static_cast<std::size_t>(options_.m))
      current.resize(static_cast<std::size_t>(options_.m));
    result.solutions = std::move(current);
    result.records = records_;
    return result;
  }

  /// One aggregation step: level `from` members of each input solution feed a
  /// fresh working memory; everything else is carried through unchanged.
  std::vector<Solution> aggregate_phase(const std::vector<Solution>& inputs, Level from, int k,
                                        PhaseTrace& trace) {
    trace.from = from;
    std::vector<Solution> pooled;
    for (std::size_t si = 0; si < inputs.size(); ++si) {
      const Solution& input = inputs[si];
      std::vector<Unit> participants, carried;
      for (const Unit& u : input.members)
        (u.level == from ? participants : carried).push_back(u);

      Engine engine;
      rules::WorkingMemory wm("pwm" + std::to_string(si), engine);
      std::map<NodeId, std::string> node_names;
      std::map<std::string, const Unit*> by_id;
      for (const Unit& u : participants) {
        NodeId node = engine.add_fact(u.certainty);
        wm.assert_element("unit", unit_attrs(u), node);
        node_names.emplace(node, u.id);
        by_id.emplace(u.id, &u);
      }
      ++trace.working_memories;

      std::vector<Hypothesis> complete = generate_complete_hypotheses(wm, from, node_names);
      install_conflicts(engine, complete, node_names);
      trace.complete_hypotheses += complete.size();
      trace.nogoods += engine.nogoods().size();
      trace.greedy_inspection_budget += engine.nogoods().size() * engine.nogoods().size();
      for (const Hypothesis& h : complete) record_hypothesis(h, engine, node_names);

      std::vector<Interpretation> combos;
      if (options_.greedy) {
        Engine::GreedyStats stats;
        combos.push_back(engine.best_interpretation(stats));
        trace.greedy_iterations += stats.iterations;
        trace.greedy_nogood_inspections += stats.nogood_inspections;
      } else {
        combos = engine.interpretations(static_cast<std::size_t>(k));
      }

      std::vector<Solution> children;
      for (const Interpretation& combo : combos) {
        Solution out;
        std::set<std::string> used;  // participant ids consumed by members
        for (const Hypothesis& h : complete) {
          if (!std::count(combo.kept.begin(), combo.kept.end(), h.node)) continue;
          out.members.push_back(h.unit);
          used.insert(h.unit.sub_units.begin(), h.unit.sub_units.end());
        }
        std::vector<Unit> leftovers;
        for (const Unit& u : participants)
          if (!used.count(u.id)) leftovers.push_back(u);

        std::vector<Hypothesis> partial = generate_incomplete_hypotheses(leftovers, from, wm, node_names);
        trace.incomplete_hypotheses += partial.size();
        std::stable_sort(partial.begin(), partial.end(), [](const Hypothesis& a, const Hypothesis& b) {
          if (a.unit.certainty != b.unit.certainty) return a.unit.certainty > b.unit.certainty;
          return a.unit.id < b.unit.id;
        });
        for (const Hypothesis& h : partial) {
          bool clash = false;
          for (const std::string& sub : h.unit.sub_units)
            if (used.count(sub)) clash = true;
          if (clash) continue;
          out.members.push_back(h.unit);
          used.insert(h.unit.sub_units.begin(), h.unit.sub_units.end());
          record_hypothesis(h, engine, node_names);
        }
        for (const Unit& u : participants)
          if (!used.count(u.id)) out.members.push_back(u);
        for (const Unit& u : carried) out.members.push_back(u);
        canonicalize(out);
        children.push_back(std::move(out));
      }
      // children keep the interpretation rank of their combination and
      // parents keep their incoming rank, so raising k appends alternatives
      // without reshuffling the ones a smaller k would have reported
      for (Solution& s : children) pooled.push_back(std::move(s));
    }

    std::vector<Solution> kept;
    std::vector<std::set<std::string>> kept_ids;
    for (Solution& s : pooled) {
      if (kept.size() == static_cast<std::size_t>(k)) break;
      auto ids = member_ids(s);
      std::set<std::string> id_set(ids.begin(), ids.end());
      bool subsumed = false;
      for (const auto& prev : kept_ids)
        if (std::includes(prev.begin(), prev.end(), id_set.begin(), id_set.end()) ||
            std::includes(id_set.begin(), id_set.end(), prev.begin(), prev.end()))
          subsumed = true;
      if (subsumed) continue;
      kept_ids.push_back(std::move(id_set));
      kept.push_back(std::move(s));
    }
    trace.combinations = kept.size();
    return kept;
  }

 private:
  struct Hypothesis {
    Unit unit;
    NodeId node = 0;
    CertaintyFactors factors;
  };

  static rules::Attrs unit_attrs(const Unit& u) {
    return {{"id", u.id},
            {"level", std::string(to_string(u.level))},
            {"type", u.type},
            {"t0", static_cast<std::int64_t>(u.t0)},
            {"t1", static_cast<std::int64_t>(u.t1)},
            {"axes", join(u.axes)},
            {"leaves", join(u.leaves)}};
  }

  std::string assign_id(const Unit& u) {
    std::string sig = unit_signature(u) + "|" + join(u.sub_units);
    auto it = registry_.find(sig);
    if (it != registry_.end()) return it->second;
    static const std::map<Level, char> prefix{{Level::company, 'c'},
                                              {Level::battalion, 'b'},
                                              {Level::regiment, 'r'},
                                              {Level::division, 'd'}};
    std::string id = prefix.at(u.level) + std::to_string(++level_counters_[u.level]);
    registry_.emplace(std::move(sig), id);
    return id;
  }

  Unit build_aggregate(const std::vector<const rules::Element*>& elements, const Template& tmpl,
                       bool complete) {
    Unit u;
    u.level = tmpl.result_level;
    u.type = tmpl.result_type;
    u.complete = complete;
    bool first = true;
    std::vector<std::string> axes, leaves;
    for (const rules::Element* e : elements) {
      auto t0 = static_cast<int>(std::get<std::int64_t>(e->attrs.at("t0")));
      auto t1 = static_cast<int>(std::get<std::int64_t>(e->attrs.at("t1")));
      if (first || t0 < u.t0) u.t0 = t0;
      if (first || t1 > u.t1) u.t1 = t1;
      first = false;
      u.sub_units.push_back(std::get<std::string>(e->attrs.at("id")));
      for (const std::string& a : textio::split(std::get<std::string>(e->attrs.at("axes")), ','))
        axes.push_back(a);
      for (const std::string& l : textio::split(std::get<std::string>(e->attrs.at("leaves")), ','))
        leaves.push_back(l);
    }
    std::sort(u.sub_units.begin(), u.sub_units.end());
    u.axes = sorted_unique(std::move(axes));
    u.leaves = sorted_unique(std::move(leaves));
    u.id = assign_id(u);
    return u;
  }

  /// Template-compiled rules propose every complete candidate as an ATMS
  /// assumption weighted with its certainty.
  std::vector<Hypothesis> generate_complete_hypotheses(rules::WorkingMemory& wm, Level from,
                                                       std::map<NodeId, std::string>& node_names) {
    auto to = level_above(from);
    std::vector<Hypothesis> out;
    if (!to) return out;
    for (const Template* tmpl : doctrine_.at_level(*to)) {
      rules::Rule rule;
      rule.name = "complete-" + std::string(to_string(*to)) + "-" + tmpl->result_type;
      for (const Requirement& req : tmpl->required)
        for (int i = 0; i < req.count; ++i) {
          rules::Pattern p = rules::match_class("unit");
          rules::eq(p, "level", std::string(to_string(from)));
          rules::eq(p, "type", req.type);
          rule.conditions.push_back(std::move(p));
        }
      rule.guard = [tmpl](const rules::Match& m) {
        return rules::span_of(m.elements) <= tmpl->max_span_minutes &&
               rules::axes_of(m.elements) <= tmpl->max_axes;
      };
      rule.action = [this, tmpl, &wm, &out, &node_names](rules::FiringContext& ctx) {
        Hypothesis h;
        h.unit = build_aggregate(ctx.match().elements, *tmpl, true);
        h.factors = certainty_factors(h.unit, *tmpl);
        h.unit.certainty = combine_certainty(h.factors, options_.factor_transform);
        auto eid = ctx.derive_hypothesis("hyp", {{"id", h.unit.id}}, h.unit.certainty);
        h.node = wm.element(eid).node;
        node_names.emplace(h.node, h.unit.id);
        out.push_back(std::move(h));
      };
      wm.define_rule(std::move(rule));
    }
    wm.run_to_quiescence(options_.max_firings);
    return out;
  }

  /// Every proper sub-multiset of leftover units that fits a template becomes
  /// an incomplete candidate (completeness strictly below 1).
  std::vector<Hypothesis> generate_incomplete_hypotheses(const std::vector<Unit>& leftovers,
                                                         Level from, rules::WorkingMemory& wm,
                                                         std::map<NodeId, std::string>& node_names) {
    auto to = level_above(from);
    std::vector<Hypothesis> out;
    if (!to || leftovers.empty()) return out;
    std::vector<const Unit*> pool;
    for (const Unit& u : leftovers) pool.push_back(&u);
    std::sort(pool.begin(), pool.end(), [](const Unit* a, const Unit* b) { return a->id < b->id; });

    for (const Template* tmpl : doctrine_.at_level(*to)) {
      std::map<std::string, int> budget;
      for (const Requirement& r : tmpl->required) budget[r.type] += r.count;
      std::vector<const Unit*> chosen;
      enumerate_subsets(pool, 0, budget, tmpl->required_total(), chosen, [&] {
        Unit u;
        u.level = tmpl->result_level;
        u.type = tmpl->result_type;
        u.complete = false;
        bool first = true;
        std::vector<std::string> axes, leaves;
        for (const Unit* m : chosen) {
          if (first || m->t0 < u.t0) u.t0 = m->t0;
          if (first || m->t1 > u.t1) u.t1 = m->t1;
          first = false;
          u.sub_units.push_back(m->id);
          axes.insert(axes.end(), m->axes.begin(), m->axes.end());
          leaves.insert(leaves.end(), m->leaves.begin(), m->leaves.end());
        }
        u.axes = sorted_unique(std::move(axes));
        u.leaves = sorted_unique(std::move(leaves));
        if (u.t1 - u.t0 > tmpl->max_span_minutes) return;
        if (static_cast<int>(u.axes.size()) > tmpl->max_axes) return;
        Hypothesis h;
        h.factors.base = tmpl->base_weight;
        h.factors.completeness =
            completeness_factor(static_cast<int>(u.sub_units.size()), tmpl->required_total());
        h.factors.temporal = temporal_factor(u.t1 - u.t0, tmpl->max_span_minutes);
        u.id = assign_id(u);
        u.certainty = combine_certainty(h.factors, options_.factor_transform);
        h.unit = std::move(u);
        h.node = wm.engine().add_assumption(h.unit.certainty);
        wm.assert_element("hyp", {{"id", h.unit.id}}, h.node);
        node_names.emplace(h.node, h.unit.id);
        out.push_back(std::move(h));
      });
    }
    return out;
  }

  template <typename Emit>
  void enumerate_subsets(const std::vector<const Unit*>& pool, std::size_t i,
                         std::map<std::string, int>& budget, int required_total,
                         std::vector<const Unit*>& chosen, const Emit& emit) {
    if (!chosen.empty() && static_cast<int>(chosen.size()) < required_total) emit();
    if (i == pool.size() || static_cast<int>(chosen.size()) + 1 >= required_total) return;
    for (std::size_t j = i; j < pool.size(); ++j) {
      auto it = budget.find(pool[j]->type);
      if (it == budget.end() || it->second == 0) continue;
      --it->second;
      chosen.push_back(pool[j]);
      enumerate_subsets(pool, j + 1, budget, required_total, chosen, emit);
      chosen.pop_back();
      ++it->second;
    }
  }

  /// Shared leaves make two hypotheses categorically contradictory.
  void install_conflicts(Engine& engine, std::vector<Hypothesis>& hyps,
                         const std::map<NodeId, std::string>&) {
    for (std::size_t i = 0; i < hyps.size(); ++i)
      for (std::size_t j = i + 1; j < hyps.size(); ++j) {
        if (!leaves_intersect(hyps[i].unit, hyps[j].unit)) continue;
        engine.add_justification({hyps[i].node, hyps[j].node}, Engine::kContradiction,
                                 Weight::one());
        auto key = std::minmax(hyps[i].unit.id, hyps[j].unit.id);
        if (!conflict_pairs_.insert(key).second) continue;
        Weight degree = std::min(hyps[i].unit.certainty, hyps[j].unit.certainty);
        conflicts_[hyps[i].unit.id].push_back({hyps[j].unit.id, degree});
        conflicts_[hyps[j].unit.id].push_back({hyps[i].unit.id, degree});
      }
  }

  static std::string render_label(
      const std::vector<std::pair<std::vector<std::string>, Weight>>& envs) {
    std::string out = "{";
    bool first_env = true;
    for (const auto& [ids, degree] : envs) {
      if (!first_env) out += ",";
      first_env = false;
      if (ids.empty())
        out += "(\xe2\x88\x85,";
      else
        out += "({" + join(ids) + "},";
      out += degree.str() + ")";
    }
    return out + "}";
  }

  void record_hypothesis(const Hypothesis& h, const Engine& engine,
                         const std::map<NodeId, std::string>& names) {
    UnitRecord rec;
    rec.unit = h.unit;
    rec.factors = h.factors;
    for (const Environment& env : engine.label(h.node).environments) {
      std::vector<std::string> ids;
      for (NodeId a : env.assumptions) {
        auto it = names.find(a);
        ids.push_back(it != names.end() ? it->second : "#" + std::to_string(a));
      }
      rec.label_envs.push_back({std::move(ids), env.degree});
    }
    records_.emplace(h.unit.id, std::move(rec));
  }

  /// Ids are first handed out in discovery order, which depends on k and the
  /// selection mode. Renumbering afterwards by position in the content-ordered
  /// solution list makes reports for the same arrangement identical across
  /// runs with different settings (the k=1 report is the head of the k=3 one).
  void renumber(std::vector<Solution>& solutions) {
    // pure content key per recorded unit, built bottom-up over the echelons
    std::map<std::string, std::string> ckey;
    for (const auto& [id, rec] : records_)
      if (rec.observation) ckey.emplace(id, id);
    for (Level lv : {Level::company, Level::battalion, Level::regiment, Level::division})
      for (const auto& [id, rec] : records_) {
        if (rec.observation || rec.unit.level != lv) continue;
        std::vector<std::string> subs;
        for (const std::string& s : rec.unit.sub_units) subs.push_back(ckey.at(s));
        std::sort(subs.begin(), subs.end());
        ckey.emplace(id, std::string(to_string(lv)) + "|" + rec.unit.type + "|" +
                             join(rec.unit.leaves) + "|" + join(subs));
      }

    // canonical member order within each solution, independent of the old ids;
    // the solution list order itself is part of the result and is preserved
    for (Solution& s : solutions)
      std::sort(s.members.begin(), s.members.end(), [&](const Unit& a, const Unit& b) {
        if (a.certainty != b.certainty) return a.certainty > b.certainty;
        return ckey.at(a.id) < ckey.at(b.id);
      });

    // number aggregates by first appearance in a depth-first walk of the
    // ranked solutions, then the remaining recorded units by content
    static const std::map<Level, char> prefix{{Level::company, 'c'},
                                              {Level::battalion, 'b'},
                                              {Level::regiment, 'r'},
                                              {Level::division, 'd'}};
    std::map<std::string, std::string> rename;
    for (const auto& [id, rec] : records_)
      if (rec.observation) rename.emplace(id, id);
    std::map<Level, int> counters;
    auto visit = [&](auto&& self, const std::string& id) -> void {
      if (rename.count(id)) return;
      const UnitRecord& rec = records_.at(id);
      rename.emplace(id, prefix.at(rec.unit.level) + std::to_string(++counters[rec.unit.level]));
      std::vector<std::string> subs = rec.unit.sub_units;
      std::sort(subs.begin(), subs.end(),
                [&](const std::string& a, const std::string& b) { return ckey.at(a) < ckey.at(b); });
      for (const std::string& sub : subs) self(self, sub);
    };
    for (const Solution& s : solutions)
      for (const Unit& u : s.members) visit(visit, u.id);
    for (Level lv : {Level::company, Level::battalion, Level::regiment, Level::division}) {
      std::vector<std::pair<std::string, std::string>> rest;
      for (const auto& [id, rec] : records_)
        if (!rec.observation && rec.unit.level == lv && !rename.count(id))
          rest.push_back({ckey.at(id), id});
      std::sort(rest.begin(), rest.end());
      for (const auto& [key, old] : rest) visit(visit, old);
    }

    std::map<std::string, UnitRecord> renamed;
    for (const auto& [id, rec] : records_) {
      UnitRecord r = rec;
      r.unit.id = rename.at(id);
      for (std::string& s : r.unit.sub_units) s = rename.at(s);
      std::sort(r.unit.sub_units.begin(), r.unit.sub_units.end());
      for (ConflictRecord& c : r.conflicts) c.other = rename.at(c.other);
      std::sort(r.conflicts.begin(), r.conflicts.end(), [](const auto& a, const auto& b) {
        return a.other < b.other;
      });
      for (auto& [ids, degree] : r.label_envs) {
        for (std::string& s : ids)
          if (auto it = rename.find(s); it != rename.end()) s = it->second;
        std::sort(ids.begin(), ids.end());
      }
      r.label = render_label(r.label_envs);
      renamed.emplace(r.unit.id, std::move(r));
    }
    records_ = std::move(renamed);

    for (Solution& s : solutions) {
      for (Unit& u : s.members) {
        u.id = rename.at(u.id);
        for (std::string& sub : u.sub_units) sub = rename.at(sub);
        std::sort(u.sub_units.begin(), u.sub_units.end());
      }
      canonicalize(s);
    }
  }

  Doctrine doctrine_;
  PipelineOptions options_;
  std::map<std::string, std::string> registry_;  // signature -> canonical unit id
  std::map<Level, int> level_counters_;
  std::map<std::string, std::vector<ConflictRecord>> conflicts_;
  std::set<std::pair<std::string, std::string>> conflict_pairs_;
  std::map<std::string, UnitRecord> records_;
};

inline RunResult run_pipeline(const Scenario& scenario, const Doctrine& doctrine,
                              PipelineOptions options = {}) {
  Pipeline p(doctrine, std::move(options));
  return p.run(scenario);
}

}  // namespace piatms::fusion
