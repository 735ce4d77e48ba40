#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "piatms/weight.hpp"

namespace piatms::fusion {

enum class Level { section, company, battalion, regiment, division };

inline const char* to_string(Level l) {
  switch (l) {
    case Level::section: return "section";
    case Level::company: return "company";
    case Level::battalion: return "battalion";
    case Level::regiment: return "regiment";
    case Level::division: return "division";
  }
  return "?";
}

inline std::optional<Level> parse_level(const std::string& s) {
  for (Level l : {Level::section, Level::company, Level::battalion, Level::regiment, Level::division})
    if (s == to_string(l)) return l;
  return std::nullopt;
}

inline std::optional<Level> level_below(Level l) {
  switch (l) {
    case Level::section: return std::nullopt;
    case Level::company: return Level::section;
    case Level::battalion: return Level::company;
    case Level::regiment: return Level::battalion;
    case Level::division: return Level::regiment;
  }
  return std::nullopt;
}

inline std::optional<Level> level_above(Level l) {
  switch (l) {
    case Level::section: return Level::company;
    case Level::company: return Level::battalion;
    case Level::battalion: return Level::regiment;
    case Level::regiment: return Level::division;
    case Level::division: return std::nullopt;
  }
  return std::nullopt;
}

/// An observed or aggregated unit. For aggregates the time interval is the
/// hull of the sub-units' intervals and the axes are their union; leaves are
/// the transitive observation ids (an observed unit is its own single leaf).
struct Unit {
  std::string id;
  Level level = Level::section;
  std::string type;
  int t0 = 0, t1 = 0;  // minutes since scenario start
  std::vector<std::string> axes;       // sorted, unique
  std::vector<std::string> sub_units;  // direct sub-unit ids; empty for observations
  std::vector<std::string> leaves;     // sorted, unique
  Weight certainty = Weight::one();
  bool complete = true;

  bool operator==(const Unit&) const = default;
};

inline std::string render_minutes(int m) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", m / 60, m % 60);
  return buf;
}

inline std::string join(const std::vector<std::string>& v, char sep = ',') {
  std::string out;
  for (const std::string& s : v) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

inline std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline bool leaves_intersect(const Unit& a, const Unit& b) {
  // both leaf vectors are sorted
  std::size_t i = 0, j = 0;
  while (i < a.leaves.size() && j < b.leaves.size()) {
    if (a.leaves[i] == b.leaves[j]) return true;
    if (a.leaves[i] < b.leaves[j]) ++i;
    else ++j;
  }
  return false;
}

/// Canonical identity of a unit by role and evidence, used for cross-working-
/// memory deduplication and solution subset checks.
inline std::string unit_signature(const Unit& u) {
  return std::string(to_string(u.level)) + "|" + u.type + "|" + join(u.leaves);
}

}  // namespace piatms::fusion
