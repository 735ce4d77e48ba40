#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "piatms/clause_base.hpp"

using namespace piatms;

namespace {
Weight w(double v) { return Weight::from_double(v); }
}

TEST_CASE("alpha_cut filters by weight, boundary inclusive") {
  ClauseBase base;
  PropId p = base.add_prop("p"), q = base.add_prop("q");
  base.add_clause({pos(p)}, w(0.9));
  base.add_clause({pos(q)}, w(0.5));
  CHECK(base.alpha_cut(w(0.6)).clauses().size() == 1);
  CHECK(base.alpha_cut(w(0.9)).clauses().size() == 1);
  CHECK(base.alpha_cut(w(0.91)).clauses().empty());
  CHECK(base.alpha_cut(w(0.1)).clauses().size() == 2);
}

TEST_CASE("alpha cuts are nested") {
  std::mt19937 rng(11);
  for (int iter = 0; iter < 100; ++iter) {
    ClauseBase base;
    PropId p = base.add_prop(), q = base.add_prop();
    int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      std::vector<Literal> lits;
      if (rng() % 2) lits.push_back(rng() % 2 ? pos(p) : neg(p));
      lits.push_back(rng() % 2 ? pos(q) : neg(q));
      base.add_clause(lits, Weight::from_raw(1 + static_cast<int>(rng() % 10000)));
    }
    Weight t1 = Weight::from_raw(1 + static_cast<int>(rng() % 10000));
    Weight t2 = Weight::from_raw(1 + static_cast<int>(rng() % 10000));
    if (t2 < t1) std::swap(t1, t2);
    auto upper = base.alpha_cut(t2).clauses();
    auto lower = base.alpha_cut(t1).clauses();
    for (const auto& c : upper)
      CHECK(std::find(lower.begin(), lower.end(), c) != lower.end());
  }
}

TEST_CASE("inconsistency_degree examples") {
  ClauseBase base;
  PropId p = base.add_prop("p");
  base.add_clause({pos(p)}, w(0.8));
  base.add_clause({neg(p)}, w(0.5));
  CHECK(base.inconsistency_degree() == w(0.5));

  ClauseBase horn;
  PropId hp = horn.add_prop("p"), hq = horn.add_prop("q");
  horn.add_clause({pos(hp)}, w(0.8));
  horn.add_clause({neg(hp), pos(hq)}, w(0.6));
  CHECK(!horn.inconsistency_degree());

  ClauseBase total;
  PropId tp = total.add_prop("p");
  total.add_clause({pos(tp)}, w(1.0));
  total.add_clause({neg(tp)}, w(1.0));
  CHECK(total.inconsistency_degree() == w(1.0));
}

TEST_CASE("entailment_degree examples") {
  ClauseBase base;
  PropId p = base.add_prop("p"), q = base.add_prop("q");
  base.add_clause({pos(p)}, w(0.8));
  base.add_clause({neg(p), pos(q)}, w(0.6));
  CHECK(base.entailment_degree(q) == w(0.6));
  CHECK(base.entailment_degree(p) == w(0.8));

  ClauseBase direct;
  PropId dq = direct.add_prop("q");
  direct.add_clause({pos(dq)}, w(0.9));
  CHECK(direct.entailment_degree(dq) == w(0.9));

  ClauseBase unrelated;
  PropId up = unrelated.add_prop("p");
  PropId uq = unrelated.add_prop("q");
  unrelated.add_clause({pos(up)}, w(0.8));
  CHECK(!unrelated.entailment_degree(uq));
}

TEST_CASE("chain entailment matches the min/max fold") {
  // p@0.8, p->q@0.6, q->r@0.9 : r entailed at min(0.8,0.6,0.9)
  ClauseBase base;
  PropId p = base.add_prop(), q = base.add_prop(), r = base.add_prop();
  base.add_clause({pos(p)}, w(0.8));
  base.add_clause({neg(p), pos(q)}, w(0.6));
  base.add_clause({neg(q), pos(r)}, w(0.9));
  std::vector<Weight> pq{w(0.8)};
  Weight dq = combine_support(pq, w(0.6));
  std::vector<Weight> qr{dq};
  CHECK(base.entailment_degree(r) == combine_support(qr, w(0.9)));
}

TEST_CASE("degrees never exceed the max clause weight") {
  std::mt19937 rng(23);
  for (int iter = 0; iter < 200; ++iter) {
    ClauseBase base;
    int np = 2 + static_cast<int>(rng() % 4);
    for (int i = 0; i < np; ++i) base.add_prop();
    Weight maxw = Weight::from_raw(1);
    int nc = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < nc; ++i) {
      std::vector<Literal> lits;
      int len = 1 + static_cast<int>(rng() % 3);
      for (int l = 0; l < len; ++l)
        lits.push_back({static_cast<PropId>(rng() % np), rng() % 2 == 0});
      Weight cw = Weight::from_raw(1 + static_cast<int>(rng() % 10000));
      if (cw > maxw) maxw = cw;
      try {
        base.add_clause(lits, cw);
      } catch (const std::invalid_argument&) {
        --i;  // both signs of one prop; redraw
        continue;
      }
    }
    auto inc = base.inconsistency_degree();
    if (inc) CHECK(*inc <= maxw);
    auto ent = base.entailment_degree(0);
    if (ent) CHECK(*ent <= maxw);
  }
}

TEST_CASE("unit closure and enumeration agree on Horn bases") {
  std::mt19937 rng(31);
  for (int iter = 0; iter < 150; ++iter) {
    ClauseBase a(12), b(12);
    a.set_sat_method(ClauseBase::SatMethod::unit_closure);
    b.set_sat_method(ClauseBase::SatMethod::enumerate);
    int np = 2 + static_cast<int>(rng() % 5);
    for (int i = 0; i < np; ++i) { a.add_prop(); b.add_prop(); }
    int nc = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < nc; ++i) {
      std::vector<Literal> lits;
      std::vector<int> props(static_cast<std::size_t>(np));
      for (int pi = 0; pi < np; ++pi) props[static_cast<std::size_t>(pi)] = pi;
      std::shuffle(props.begin(), props.end(), rng);
      int len = 1 + static_cast<int>(rng() % std::min(np, 3));
      bool head = rng() % 2 == 0;
      for (int l = 0; l < len; ++l)
        lits.push_back({static_cast<PropId>(props[static_cast<std::size_t>(l)]), head && l == 0});
      Weight cw = Weight::from_raw(1000 * (1 + static_cast<int>(rng() % 10)));
      a.add_clause(lits, cw);
      b.add_clause(lits, cw);
    }
    CHECK(a.inconsistency_degree() == b.inconsistency_degree());
    for (int p = 0; p < np; ++p)
      CHECK(a.entailment_degree(p) == b.entailment_degree(p));
  }
}

TEST_CASE("proposition cap is enforced") {
  ClauseBase base(3);
  for (int i = 0; i < 4; ++i) base.add_prop();
  CHECK_THROWS_AS(base.inconsistency_degree(), OracleCapExceeded);
  CHECK_THROWS_AS(base.entailment_degree(0), OracleCapExceeded);
}

TEST_CASE("clause invariants are rejected") {
  ClauseBase base;
  PropId p = base.add_prop();
  CHECK_THROWS_AS(base.add_clause({pos(p), neg(p)}, w(0.5)), std::invalid_argument);
  CHECK_THROWS_AS(base.add_clause({pos(5)}, w(0.5)), std::invalid_argument);
}
