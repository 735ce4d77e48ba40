#pragma once

// Structured report format ("report v1"): a units dictionary followed by the
// ranked solutions, one record per line. Parses back to an equal Report so
// runs can be archived and explained later.

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "piatms/fusion/pipeline.hpp"
#include "piatms/fusion/unit.hpp"
#include "piatms/textio.hpp"

namespace piatms::fusion {

struct ReportUnit {
  Unit unit;
  bool observation = false;
  std::optional<CertaintyFactors> factors;  // aggregates only
  std::vector<ConflictRecord> conflicts;
  std::string label;

  bool operator==(const ReportUnit&) const = default;
};

struct Report {
  std::map<std::string, ReportUnit> units;
  std::vector<std::vector<std::string>> solutions;  // member ids, rank order

  bool operator==(const Report&) const = default;
};

inline Report make_report(const RunResult& run) {
  Report out;
  for (const auto& [id, rec] : run.records) {
    ReportUnit ru;
    ru.unit = rec.unit;
    ru.observation = rec.observation;
    if (!rec.observation) ru.factors = rec.factors;
    ru.conflicts = rec.conflicts;
    ru.label = rec.label;
    out.units.emplace(id, std::move(ru));
  }
  for (const Solution& s : run.solutions) {
    std::vector<std::string> ids;
    for (const Unit& u : s.members) ids.push_back(u.id);
    out.solutions.push_back(std::move(ids));
  }
  return out;
}

inline void print_report(const Report& report, std::ostream& os) {
  os << "report v1\n";
  for (const auto& [id, ru] : report.units) {
    const Unit& u = ru.unit;
    os << "unit id=" << id << " level=" << to_string(u.level) << " type=" << u.type
       << " t0=" << u.t0 << " t1=" << u.t1 << " axes=" << join(u.axes)
       << " cert=" << u.certainty.str() << " complete=" << (u.complete ? 1 : 0)
       << " obs=" << (ru.observation ? 1 : 0);
    if (!u.sub_units.empty()) os << " subs=" << join(u.sub_units);
    if (!ru.observation) os << " leaves=" << join(u.leaves);
    if (ru.factors)
      os << " base=" << ru.factors->base.str() << " comp=" << ru.factors->completeness.str()
         << " temp=" << ru.factors->temporal.str();
    if (!ru.label.empty()) os << " label=" << ru.label;
    os << "\n";
  }
  for (const auto& [id, ru] : report.units)
    for (const ConflictRecord& c : ru.conflicts)
      os << "conflict unit=" << id << " other=" << c.other << " deg=" << c.degree.str() << "\n";
  for (const auto& members : report.solutions) os << "solution members=" << join(members) << "\n";
}

inline Report parse_report(std::istream& in, const std::string& filename) {
  using textio::split;
  using textio::split_kv;
  using textio::split_ws;
  using textio::strip;

  Report out;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> ParseError { return {filename, lineno, msg}; };

  if (!std::getline(in, line)) throw fail("empty report file");
  ++lineno;
  if (strip(line) != "report v1") throw fail("expected header 'report v1'");

  while (std::getline(in, line)) {
    ++lineno;
    std::string text = strip(line);
    if (text.empty() || text[0] == '#') continue;
    auto tok = split_ws(text);
    std::map<std::string, std::string> kv;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      std::string key, value;
      if (!split_kv(tok[i], key, value)) throw fail("expected key=value, got '" + tok[i] + "'");
      kv[key] = value;
    }
    auto need = [&](const std::string& key) {
      auto it = kv.find(key);
      if (it == kv.end()) throw fail(tok[0] + " record needs " + key + "=");
      return it->second;
    };
    auto need_weight = [&](const std::string& key) {
      auto w = Weight::parse(need(key));
      if (!w) throw fail(key + " must be a decimal in (0,1]");
      return *w;
    };
    auto need_int = [&](const std::string& key) {
      long long v;
      if (!textio::parse_int(need(key), v)) throw fail(key + " must be an integer");
      return static_cast<int>(v);
    };

    if (tok[0] == "unit") {
      ReportUnit ru;
      Unit& u = ru.unit;
      u.id = need("id");
      auto level = parse_level(need("level"));
      if (!level) throw fail("unknown level '" + kv["level"] + "'");
      u.level = *level;
      u.type = need("type");
      u.t0 = need_int("t0");
      u.t1 = need_int("t1");
      u.axes = split(need("axes"), ',');
      u.certainty = need_weight("cert");
      u.complete = need_int("complete") != 0;
      ru.observation = need_int("obs") != 0;
      if (kv.count("subs")) u.sub_units = split(kv["subs"], ',');
      u.leaves = ru.observation ? std::vector<std::string>{u.id} : split(need("leaves"), ',');
      if (kv.count("base"))
        ru.factors = CertaintyFactors{need_weight("base"), need_weight("comp"), need_weight("temp")};
      if (kv.count("label")) ru.label = kv["label"];
      if (!out.units.emplace(u.id, std::move(ru)).second)
        throw fail("duplicate unit id '" + kv["id"] + "'");
    } else if (tok[0] == "conflict") {
      auto it = out.units.find(need("unit"));
      if (it == out.units.end()) throw fail("conflict references unknown unit '" + kv["unit"] + "'");
      it->second.conflicts.push_back({need("other"), need_weight("deg")});
    } else if (tok[0] == "solution") {
      auto members = split(need("members"), ',');
      for (const std::string& m : members)
        if (!out.units.count(m)) throw fail("solution references unknown unit '" + m + "'");
      out.solutions.push_back(std::move(members));
    } else {
      throw fail("unknown record '" + tok[0] + "'");
    }
  }
  return out;
}

inline void render_unit_tree(const Report& report, const std::string& id, int depth,
                             std::ostream& os) {
  auto it = report.units.find(id);
  if (it == report.units.end()) return;
  const ReportUnit& ru = it->second;
  const Unit& u = ru.unit;
  os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << u.id << " "
     << to_string(u.level) << " " << u.type;
  if (ru.observation) {
    os << " t=" << render_minutes(u.t0) << " axis=" << join(u.axes)
       << " conf=" << u.certainty.str() << "\n";
    return;
  }
  os << " cert=" << u.certainty.str() << " span=" << render_minutes(u.t0) << ".."
     << render_minutes(u.t1) << " axes=" << join(u.axes)
     << (u.complete ? " complete" : " incomplete") << "\n";
  for (const std::string& sub : u.sub_units) render_unit_tree(report, sub, depth + 1, os);
}

/// Human-readable view: ranked solutions as indented unit trees.
inline void render_text(const Report& report, std::ostream& os) {
  if (report.solutions.empty()) {
    os << "no solutions\n";
    return;
  }
  for (std::size_t i = 0; i < report.solutions.size(); ++i) {
    os << "solution " << (i + 1) << "\n";
    for (const std::string& id : report.solutions[i]) render_unit_tree(report, id, 1, os);
  }
}

/// Explanation of one unit: certainty derivation, label, membership chain
/// down to the leaf observations, and rival hypotheses.
inline bool explain_unit(const Report& report, const std::string& id, std::ostream& os) {
  auto it = report.units.find(id);
  if (it == report.units.end()) return false;
  const ReportUnit& ru = it->second;
  const Unit& u = ru.unit;
  os << (ru.observation ? "observation " : "unit ") << u.id << " " << to_string(u.level) << " "
     << u.type << "\n";
  if (ru.factors)
    os << "  certainty " << u.certainty.str() << " = min(base " << ru.factors->base.str()
       << ", completeness " << ru.factors->completeness.str() << ", temporal "
       << ru.factors->temporal.str() << ")\n";
  else
    os << "  confidence " << u.certainty.str() << "\n";
  if (!ru.label.empty()) os << "  label " << ru.label << "\n";
  if (!u.sub_units.empty()) {
    os << "  members:\n";
    for (const std::string& sub : u.sub_units) render_unit_tree(report, sub, 2, os);
  }
  if (!ru.conflicts.empty()) {
    os << "  conflicts:\n";
    for (const ConflictRecord& c : ru.conflicts)
      os << "    " << c.other << " deg=" << c.degree.str() << "\n";
  }
  return true;
}

}  // namespace piatms::fusion
