#pragma once

// Scenario files: one observation per line.
//
//   scenario v1
//   obs id=s1 level=section type=tank axis=A t=15 conf=0.9

#include <istream>
#include <set>
#include <string>
#include <vector>

#include "piatms/fusion/unit.hpp"
#include "piatms/textio.hpp"

namespace piatms::fusion {

struct Scenario {
  std::vector<Unit> observations;
};

inline Scenario parse_scenario(std::istream& in, const std::string& filename) {
  using textio::split_kv;
  using textio::split_ws;
  using textio::strip;

  Scenario out;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> ParseError { return {filename, lineno, msg}; };

  if (!std::getline(in, line)) throw fail("empty scenario file");
  ++lineno;
  if (strip(line) != "scenario v1") throw fail("expected header 'scenario v1'");

  while (std::getline(in, line)) {
    ++lineno;
    std::string text = strip(line);
    if (text.empty() || text[0] == '#') continue;
    auto tok = split_ws(text);
    if (tok[0] != "obs") throw fail("unknown directive '" + tok[0] + "'");

    Unit u;
    bool has_id = false, has_level = false, has_type = false, has_axis = false, has_t = false;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      std::string key, value;
      if (!split_kv(tok[i], key, value)) throw fail("expected key=value, got '" + tok[i] + "'");
      if (key == "id") {
        u.id = value;
        has_id = !value.empty();
      } else if (key == "level") {
        auto level = parse_level(value);
        if (!level) throw fail("unknown level '" + value + "'");
        u.level = *level;
        has_level = true;
      } else if (key == "type") {
        u.type = value;
        has_type = !value.empty();
      } else if (key == "axis") {
        u.axes = {value};
        has_axis = !value.empty();
      } else if (key == "t") {
        long long t;
        if (!textio::parse_int(value, t) || t < 0) throw fail("t must be a non-negative minute offset");
        u.t0 = u.t1 = static_cast<int>(t);
        has_t = true;
      } else if (key == "conf") {
        auto w = Weight::parse(value);
        if (!w) throw fail("conf must be a decimal in (0,1]");
        u.certainty = *w;
      } else {
        throw fail("unknown field '" + key + "'");
      }
    }
    if (!has_id) throw fail("obs needs id=");
    if (!has_level) throw fail("obs needs level=");
    if (!has_type) throw fail("obs needs type=");
    if (!has_axis) throw fail("obs needs axis=");
    if (!has_t) throw fail("obs needs t=");
    if (!ids.insert(u.id).second) throw fail("duplicate observation id '" + u.id + "'");
    u.leaves = {u.id};
    out.observations.push_back(std::move(u));
  }
  return out;
}

}  // namespace piatms::fusion
