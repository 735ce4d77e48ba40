#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "piatms/rule_file.hpp"
#include "piatms/rules.hpp"

using namespace piatms;
using namespace piatms::rules;

namespace {

Weight w(double v) { return Weight::from_double(v); }

ElementId assert_section(WorkingMemory& wm, Engine& eng, const std::string& id,
                         const std::string& type, const std::string& axis, std::int64_t t,
                         double conf = 1.0) {
  NodeId node = eng.add_fact(w(conf));
  return wm.assert_element("unit", {{"id", id},
                                    {"level", std::string("section")},
                                    {"type", type},
                                    {"axes", axis},
                                    {"t0", t},
                                    {"t1", t}},
                           node);
}

Rule company_rule(int priority = 0) {
  Rule r;
  r.name = "company-of-three";
  r.priority = priority;
  r.weight = w(0.9);
  Pattern p = match_class("unit");
  eq(p, "level", std::string("section"));
  bind(p, "type", "t");
  bind(p, "axes", "a");
  r.conditions = {p, p, p};
  r.guard = [](const Match& m) { return span_of(m.elements) <= 60; };
  r.action = [](FiringContext& ctx) {
    Attrs attrs{{"level", std::string("company")},
                {"type", ctx.match().bindings.at("t")},
                {"axes", ctx.match().bindings.at("a")},
                {"t0", std::int64_t{0}},
                {"t1", span_of(ctx.match().elements)}};
    std::string members;
    for (const Element* e : ctx.match().elements) {
      if (!members.empty()) members += ',';
      members += to_string(e->attrs.at("id"));
    }
    attrs["members"] = members;
    ctx.derive_hypothesis("hypothesis", std::move(attrs), ctx.rule_weight());
  };
  return r;
}

}  // namespace

TEST_CASE("two-condition join matches only pairs agreeing on the shared variable") {
  Engine eng;
  WorkingMemory wm("pwm", eng);
  Rule r;
  r.name = "pair";
  Pattern p = match_class("unit");
  eq(p, "level", std::string("section"));
  bind(p, "type", "t");
  r.conditions = {p, p};
  r.action = [](FiringContext& ctx) {
    ctx.derive_fact("pair", {{"type", ctx.match().bindings.at("t")}});
  };
  wm.define_rule(r);
  assert_section(wm, eng, "s1", "tank", "A", 0);
  assert_section(wm, eng, "s2", "tank", "A", 10);
  assert_section(wm, eng, "s3", "rifle", "A", 20);
  auto report = wm.run_to_quiescence();
  // only the tank pair joins; symmetry breaking yields one canonical tuple
  CHECK(report.firings.size() == 1);
  CHECK(wm.elements_of("pair").size() == 1);
}

TEST_CASE("span guard filters bindings") {
  Engine eng;
  WorkingMemory wm("pwm", eng);
  wm.define_rule(company_rule());
  assert_section(wm, eng, "s1", "tank", "A", 0);
  assert_section(wm, eng, "s2", "tank", "A", 10);
  assert_section(wm, eng, "s3", "tank", "A", 100);  // out of the 60-minute window
  wm.run_to_quiescence();
  CHECK(wm.elements_of("hypothesis").empty());
}

TEST_CASE("duplicate rule name is a definition error") {
  Engine eng;
  WorkingMemory wm("pwm", eng);
  wm.define_rule(company_rule());
  CHECK_THROWS_AS(wm.define_rule(company_rule()), RuleDefinitionError);
}

TEST_CASE("three sections enable the three-condition company rule") {
  Engine eng;
  WorkingMemory wm("pwm", eng);
  wm.define_rule(company_rule());
  assert_section(wm, eng, "s1", "tank", "A", 0);
  assert_section(wm, eng, "s2", "tank", "A", 20);
  assert_section(wm, eng, "s3", "tank", "A", 40);
  auto report = wm.run_to_quiescence();
  CHECK(report.firings.size() == 1);
  CHECK(wm.elements_of("hypothesis").size() == 1);
}

TEST_CASE("four sections yield two canonical surviving hypotheses") {
  // times 0/15/40/75: {s1,s2,s3} spans 40 and {s2,s3,s4} spans 60; the two
  // mixed triples span 75 and fail the one-hour guard
  Engine eng;
  WorkingMemory wm("pwm", eng);
  wm.define_rule(company_rule());
  assert_section(wm, eng, "s1", "tank", "A", 0);
  assert_section(wm, eng, "s2", "tank", "A", 15);
  assert_section(wm, eng, "s3", "tank", "A", 40);
  assert_section(wm, eng, "s4", "tank", "A", 75);
  wm.run_to_quiescence();
  auto hyps = wm.elements_of("hypothesis");
  REQUIRE(hyps.size() == 2);
  CHECK(to_string(hyps[0]->attrs.at("members")) == "s1,s2,s3");
  CHECK(to_string(hyps[1]->attrs.at("members")) == "s2,s3,s4");
}

TEST_CASE("duplicate assert is idempotent; working memories are isolated") {
  Engine eng;
  WorkingMemory wm1("pwm1", eng), wm2("pwm2", eng);
  ElementId e1 = assert_section(wm1, eng, "s1", "tank", "A", 0);
  ElementId e2 = assert_section(wm1, eng, "s1", "tank", "A", 0);
  CHECK(e1 == e2);
  CHECK(wm1.elements().size() == 1);
  CHECK(wm2.elements().empty());
}

TEST_CASE("a firing justifies its consequent by the matched elements") {
  Engine eng;
  WorkingMemory wm("pwm", eng);
  Rule r;
  r.name = "derive";
  r.weight = w(0.7);
  Pattern p = match_class("unit");
  eq(p, "level", std::string("section"));
  r.conditions = {p};
  r.action = [](FiringContext& ctx) { ctx.derive_fact("note", {}); };
  wm.define_rule(r);
  ElementId s = assert_section(wm, eng, "s1", "tank", "A", 0, 0.8);
  wm.run_to_quiescence();
  auto notes = wm.elements_of("note");
  REQUIRE(notes.size() == 1);
  // label flows from the section fact through the rule weight
  CHECK(eng.label(notes[0]->node).environments ==
        std::vector<Environment>{{{}, w(0.7)}});
  CHECK(eng.kind(notes[0]->node) == NodeKind::derived);
  CHECK(eng.kind(wm.element(s).node) == NodeKind::fact);
}

TEST_CASE("refractoriness: quiescence is stable under re-running") {
  Engine eng;
  WorkingMemory wm("pwm", eng);
  wm.define_rule(company_rule());
  assert_section(wm, eng, "s1", "tank", "A", 0);
  assert_section(wm, eng, "s2", "tank", "A", 20);
  assert_section(wm, eng, "s3", "tank", "A", 40);
  CHECK(wm.run_to_quiescence().firings.size() == 1);
  CHECK(wm.run_to_quiescence().firings.empty());
}

TEST_CASE("empty memory fires nothing") {
  Engine eng;
  WorkingMemory wm("pwm", eng);
  wm.define_rule(company_rule());
  CHECK(wm.run_to_quiescence().firings.empty());
}

TEST_CASE("firing cap guards non-quiescent rulebases") {
  Engine eng;
  WorkingMemory wm("pwm", eng);
  Rule r;
  r.name = "spawn";
  Pattern p = match_class("seed");
  bind(p, "n", "n");
  r.conditions = {p};
  r.action = [](FiringContext& ctx) {
    auto n = std::get<std::int64_t>(ctx.match().bindings.at("n"));
    ctx.derive_fact("seed", {{"n", n + 1}});
  };
  wm.define_rule(r);
  wm.assert_element("seed", {{"n", std::int64_t{0}}}, eng.add_fact(w(1.0)));
  CHECK_THROWS_AS(wm.run_to_quiescence(25), std::runtime_error);
}

TEST_CASE("final TMS state is independent of conflict-resolution order") {
  // two independent single-condition rules; flipping their priorities
  // permutes firing order but not the derived beliefs
  auto build = [&](int pa, int pb) {
    auto eng = std::make_unique<Engine>();
    WorkingMemory wm("pwm", *eng);
    for (const auto& [name, prio, weight] :
         {std::tuple{"ra", pa, 0.6}, std::tuple{"rb", pb, 0.8}}) {
      Rule r;
      r.name = name;
      r.priority = prio;
      r.weight = w(weight);
      Pattern p = match_class("unit");
      eq(p, "level", std::string("section"));
      bind(p, "id", "i");
      r.conditions = {p};
      std::string cls = std::string("out-") + name;
      r.action = [cls](FiringContext& ctx) {
        ctx.derive_fact(cls, {{"id", ctx.match().bindings.at("i")}});
      };
      wm.define_rule(r);
    }
    assert_section(wm, *eng, "s1", "tank", "A", 0, 0.9);
    assert_section(wm, *eng, "s2", "tank", "A", 5, 0.7);
    wm.run_to_quiescence();
    // canonical view: element content -> best derivation degree
    std::map<std::string, std::string> view;
    for (const Element& e : wm.elements()) {
      std::string key = e.cls;
      for (const auto& [k, v] : e.attrs) key += " " + k + "=" + to_string(v);
      auto deg = eng->context_degree(e.node, {});
      view[key] = deg ? deg->str() : "none";
    }
    return view;
  };
  CHECK(build(1, 2) == build(2, 1));
}

TEST_CASE("declarative rule files parse and run") {
  std::istringstream file(
      "rules v1\n"
      "# pairs of sections of one type within the hour\n"
      "rule section-pair\n"
      "priority 5\n"
      "weight 0.8\n"
      "cond a: unit level=section type=$t\n"
      "cond b: unit level=section type=$t\n"
      "guard span(a,b) <= 60\n"
      "action assert pair type=$t\n"
      "end\n");
  auto rules = parse_rules(file, "pairs.rules");
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].priority == 5);
  CHECK(rules[0].weight == w(0.8));

  Engine eng;
  WorkingMemory wm("pwm", eng);
  wm.define_rule(rules[0]);
  assert_section(wm, eng, "s1", "tank", "A", 0);
  assert_section(wm, eng, "s2", "tank", "A", 30);
  assert_section(wm, eng, "s3", "tank", "A", 120);
  wm.run_to_quiescence();
  // only s1-s2 fall within the window; s3 pairs span > 60
  CHECK(wm.elements_of("pair").size() == 1);
}

TEST_CASE("rule file errors cite line numbers") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_rules(in, "bad.rules");
  };

  CHECK_THROWS_WITH_AS(parse("rules v2\n"), "bad.rules:1: expected header 'rules v1'", ParseError);
  CHECK_THROWS_WITH_AS(parse("rules v1\n"
                             "rule r\n"
                             "cond a: unit\n"
                             "guard span(b) <= 3\n"),
                       "bad.rules:4: unknown condition variable 'b'", ParseError);
  CHECK_THROWS_WITH_AS(parse("rules v1\n"
                             "rule r\n"
                             "cond a: unit\n"
                             "action assert out x=$y\n"
                             "end\n"),
                       "bad.rules:5: unbound variable $y in action", ParseError);
  CHECK_THROWS_AS(parse("rules v1\n"
                        "rule r\n"
                        "cond a: unit\n"
                        "action assert out\n"),
                  ParseError);  // missing 'end'
}
