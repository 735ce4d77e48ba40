#pragma once

// Doctrine files: one composition template per block.
//
//   doctrine v1
//   template company tank
//   requires 3 section tank
//   span 60
//   axes 1
//   base 0.9
//   end

#include <istream>
#include <string>
#include <vector>

#include "piatms/fusion/unit.hpp"
#include "piatms/textio.hpp"
#include "piatms/weight.hpp"

namespace piatms::fusion {

struct Requirement {
  std::string type;
  int count = 0;

  bool operator==(const Requirement&) const = default;
};

struct Template {
  Level result_level = Level::company;
  std::string result_type;
  std::vector<Requirement> required;  // sub-units, all one level below
  int max_span_minutes = 0;
  int max_axes = 1;
  Weight base_weight = Weight::one();

  int required_total() const {
    int n = 0;
    for (const Requirement& r : required) n += r.count;
    return n;
  }
};

struct Doctrine {
  std::vector<Template> templates;

  std::vector<const Template*> at_level(Level result_level) const {
    std::vector<const Template*> out;
    for (const Template& t : templates)
      if (t.result_level == result_level) out.push_back(&t);
    return out;
  }

  const Template* find(Level result_level, const std::string& result_type) const {
    for (const Template& t : templates)
      if (t.result_level == result_level && t.result_type == result_type) return &t;
    return nullptr;
  }
};

inline Doctrine parse_doctrine(std::istream& in, const std::string& filename) {
  using textio::split_ws;
  using textio::strip;

  Doctrine out;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> ParseError { return {filename, lineno, msg}; };

  if (!std::getline(in, line)) throw fail("empty doctrine file");
  ++lineno;
  if (strip(line) != "doctrine v1") throw fail("expected header 'doctrine v1'");

  Template cur;
  bool open = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string text = strip(line);
    if (text.empty() || text[0] == '#') continue;
    auto tok = split_ws(text);
    const std::string& kw = tok[0];
    if (kw == "template") {
      if (open) throw fail("nested template block");
      if (tok.size() != 3) throw fail("expected 'template <level> <type>'");
      auto level = parse_level(tok[1]);
      if (!level) throw fail("unknown level '" + tok[1] + "'");
      if (!level_below(*level)) throw fail("a template cannot produce " + tok[1] + " units");
      cur = Template{};
      cur.result_level = *level;
      cur.result_type = tok[2];
      open = true;
      continue;
    }
    if (!open) throw fail("'" + kw + "' outside a template block");
    if (kw == "end") {
      if (cur.required.empty()) throw fail("template has no requires line");
      if (cur.max_span_minutes <= 0) throw fail("template span must be positive");
      if (cur.max_axes <= 0) throw fail("template axes must be positive");
      out.templates.push_back(cur);
      open = false;
    } else if (kw == "requires") {
      long long n;
      if (tok.size() != 4 || !textio::parse_int(tok[1], n) || n <= 0)
        throw fail("expected 'requires <count> <level> <type>'");
      auto level = parse_level(tok[2]);
      if (!level) throw fail("unknown level '" + tok[2] + "'");
      if (level != level_below(cur.result_level))
        throw fail("required sub-units must be exactly one level below " +
                   std::string(to_string(cur.result_level)));
      cur.required.push_back({tok[3], static_cast<int>(n)});
    } else if (kw == "span") {
      long long v;
      if (tok.size() != 2 || !textio::parse_int(tok[1], v)) throw fail("expected 'span <minutes>'");
      cur.max_span_minutes = static_cast<int>(v);
    } else if (kw == "axes") {
      long long v;
      if (tok.size() != 2 || !textio::parse_int(tok[1], v)) throw fail("expected 'axes <count>'");
      cur.max_axes = static_cast<int>(v);
    } else if (kw == "base") {
      auto w = tok.size() == 2 ? Weight::parse(tok[1]) : std::nullopt;
      if (!w) throw fail("expected 'base <decimal in (0,1]>'");
      cur.base_weight = *w;
    } else {
      throw fail("unknown directive '" + kw + "'");
    }
  }
  if (open) throw fail("unterminated template block (missing 'end')");
  return out;
}

}  // namespace piatms::fusion
