#pragma once

// Declarative rule files. One rule per block:
//
//   rules v1
//   rule company-of-three
//   priority 10
//   weight 0.9
//   cond s1: unit level=section type=$t axes=$a
//   cond s2: unit level=section type=$t axes=$a
//   cond s3: unit level=section type=$t axes=$a
//   guard span(s1,s2,s3) <= 60
//   action assert unit level=company type=$t
//   end
//
// Attribute specs are `$var` (bind / join) or a literal (integer when it
// parses as one, string otherwise). Guard terms are span(vars), axes(vars),
// `$var` or an integer; comparators: < <= > >= == !=. Multiple guard lines
// conjoin. Every variable used in a guard or action must be bound by a cond.

#include <functional>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "piatms/rules.hpp"
#include "piatms/textio.hpp"

namespace piatms::rules {

namespace detail {

struct GuardTerm {
  enum class Kind { span, axes, var, constant } kind;
  std::vector<std::size_t> cond_indices;  // span/axes
  std::string var;
  std::int64_t constant = 0;
};

struct GuardSpec {
  GuardTerm lhs, rhs;
  std::string op;
};

inline std::int64_t eval_term(const GuardTerm& t, const Match& m) {
  switch (t.kind) {
    case GuardTerm::Kind::constant:
      return t.constant;
    case GuardTerm::Kind::var: {
      const Value& v = m.bindings.at(t.var);
      if (!std::holds_alternative<std::int64_t>(v))
        throw std::runtime_error("guard variable $" + t.var + " is not numeric");
      return std::get<std::int64_t>(v);
    }
    case GuardTerm::Kind::span:
    case GuardTerm::Kind::axes: {
      std::vector<const Element*> es;
      for (std::size_t i : t.cond_indices) es.push_back(m.elements[i]);
      return t.kind == GuardTerm::Kind::span ? span_of(es) : axes_of(es);
    }
  }
  return 0;
}

inline bool eval_guard(const GuardSpec& g, const Match& m) {
  std::int64_t l = eval_term(g.lhs, m), r = eval_term(g.rhs, m);
  if (g.op == "<=") return l <= r;
  if (g.op == "<") return l < r;
  if (g.op == ">=") return l >= r;
  if (g.op == ">") return l > r;
  if (g.op == "==") return l == r;
  return l != r;  // "!="
}

inline Value parse_literal(const std::string& s) {
  long long v;
  if (textio::parse_int(s, v)) return Value{static_cast<std::int64_t>(v)};
  return Value{s};
}

}  // namespace detail

/// Parses a rule file; throws ParseError with file:line on malformed input.
inline std::vector<Rule> parse_rules(std::istream& in, const std::string& filename) {
  using textio::split;
  using textio::split_kv;
  using textio::split_ws;
  using textio::strip;

  std::vector<Rule> out;
  std::string line;
  int lineno = 0;

  auto fail = [&](const std::string& msg) -> ParseError { return {filename, lineno, msg}; };

  if (!std::getline(in, line)) throw fail("empty rule file");
  ++lineno;
  if (strip(line) != "rules v1") throw fail("expected header 'rules v1'");

  struct Pending {
    Rule rule;
    std::map<std::string, std::size_t> cond_of_var;     // element variable -> condition index
    std::map<std::string, std::size_t> cond_of_binding; // $var -> first binding condition
    std::vector<detail::GuardSpec> guards;
    struct ActionAssert {
      std::string cls;
      std::vector<std::pair<std::string, std::string>> attrs;  // attr -> raw spec
    };
    std::vector<ActionAssert> asserts;
    bool open = false;
  } cur;

  auto resolve_term = [&](const std::string& tok) -> detail::GuardTerm {
    detail::GuardTerm t;
    long long v;
    if (textio::parse_int(tok, v)) {
      t.kind = detail::GuardTerm::Kind::constant;
      t.constant = v;
      return t;
    }
    if (tok.starts_with("$")) {
      t.kind = detail::GuardTerm::Kind::var;
      t.var = tok.substr(1);
      if (!cur.cond_of_binding.count(t.var)) throw fail("unbound variable $" + t.var + " in guard");
      return t;
    }
    std::size_t open_p = tok.find('('), close_p = tok.rfind(')');
    if (open_p == std::string::npos || close_p != tok.size() - 1 || close_p < open_p)
      throw fail("malformed guard term '" + tok + "'");
    std::string fn = tok.substr(0, open_p);
    if (fn == "span") t.kind = detail::GuardTerm::Kind::span;
    else if (fn == "axes") t.kind = detail::GuardTerm::Kind::axes;
    else throw fail("unknown guard function '" + fn + "'");
    for (const std::string& v2 : split(tok.substr(open_p + 1, close_p - open_p - 1), ',')) {
      auto it = cur.cond_of_var.find(strip(v2));
      if (it == cur.cond_of_var.end()) throw fail("unknown condition variable '" + strip(v2) + "'");
      t.cond_indices.push_back(it->second);
    }
    if (t.cond_indices.empty()) throw fail("guard function needs at least one condition variable");
    return t;
  };

  auto finish = [&]() {
    if (cur.rule.conditions.empty()) throw fail("rule '" + cur.rule.name + "' has no cond lines");
    if (cur.asserts.empty()) throw fail("rule '" + cur.rule.name + "' has no action line");
    // validate action variables
    for (const auto& a : cur.asserts)
      for (const auto& [attr, spec] : a.attrs)
        if (spec.starts_with("$") && !cur.cond_of_binding.count(spec.substr(1)))
          throw fail("unbound variable " + spec + " in action");
    auto guards = cur.guards;
    if (!guards.empty())
      cur.rule.guard = [guards](const Match& m) {
        for (const auto& g : guards)
          if (!detail::eval_guard(g, m)) return false;
        return true;
      };
    auto asserts = cur.asserts;
    cur.rule.action = [asserts](FiringContext& ctx) {
      for (const auto& a : asserts) {
        Attrs attrs;
        for (const auto& [attr, spec] : a.attrs) {
          if (spec.starts_with("$"))
            attrs[attr] = ctx.match().bindings.at(spec.substr(1));
          else
            attrs[attr] = detail::parse_literal(spec);
        }
        ctx.derive_fact(a.cls, std::move(attrs));
      }
    };
    out.push_back(std::move(cur.rule));
    cur = Pending{};
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string text = strip(line);
    if (text.empty() || text[0] == '#') continue;
    std::vector<std::string> tok = split_ws(text);
    const std::string& kw = tok[0];

    if (kw == "rule") {
      if (cur.open) throw fail("nested rule block");
      if (tok.size() != 2) throw fail("expected 'rule <name>'");
      cur.open = true;
      cur.rule.name = tok[1];
      continue;
    }
    if (!cur.open) throw fail("'" + kw + "' outside a rule block");

    if (kw == "end") {
      finish();
    } else if (kw == "priority") {
      long long v;
      if (tok.size() != 2 || !textio::parse_int(tok[1], v)) throw fail("expected 'priority <int>'");
      cur.rule.priority = static_cast<int>(v);
    } else if (kw == "weight") {
      auto w = tok.size() == 2 ? Weight::parse(tok[1]) : std::nullopt;
      if (!w) throw fail("expected 'weight <decimal in (0,1]>'");
      cur.rule.weight = *w;
    } else if (kw == "cond") {
      if (tok.size() < 3 || !tok[1].ends_with(":")) throw fail("expected 'cond <var>: <class> ...'");
      std::string var = tok[1].substr(0, tok[1].size() - 1);
      if (cur.cond_of_var.count(var)) throw fail("duplicate condition variable '" + var + "'");
      Pattern p = match_class(tok[2]);
      for (std::size_t i = 3; i < tok.size(); ++i) {
        std::string attr, spec;
        if (!split_kv(tok[i], attr, spec)) throw fail("expected attr=value, got '" + tok[i] + "'");
        if (spec.starts_with("$")) {
          bind(p, attr, spec.substr(1));
          cur.cond_of_binding.emplace(spec.substr(1), cur.rule.conditions.size());
        } else {
          eq(p, attr, detail::parse_literal(spec));
        }
      }
      cur.cond_of_var.emplace(var, cur.rule.conditions.size());
      cur.rule.conditions.push_back(std::move(p));
    } else if (kw == "guard") {
      if (tok.size() != 4) throw fail("expected 'guard <term> <op> <term>'");
      static const std::vector<std::string> ops{"<=", "<", ">=", ">", "==", "!="};
      if (std::find(ops.begin(), ops.end(), tok[2]) == ops.end())
        throw fail("unknown comparator '" + tok[2] + "'");
      cur.guards.push_back({resolve_term(tok[1]), resolve_term(tok[3]), tok[2]});
    } else if (kw == "action") {
      if (tok.size() < 3 || tok[1] != "assert") throw fail("expected 'action assert <class> ...'");
      Pending::ActionAssert a;
      a.cls = tok[2];
      for (std::size_t i = 3; i < tok.size(); ++i) {
        std::string attr, spec;
        if (!split_kv(tok[i], attr, spec)) throw fail("expected attr=value, got '" + tok[i] + "'");
        a.attrs.emplace_back(attr, spec);
      }
      cur.asserts.push_back(std::move(a));
    } else {
      throw fail("unknown directive '" + kw + "'");
    }
  }
  if (cur.open) throw fail("unterminated rule block (missing 'end')");
  return out;
}

}  // namespace piatms::rules
