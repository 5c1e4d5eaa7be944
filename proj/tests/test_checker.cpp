#include <doctest.h>

#include "choreo/checker.hpp"
#include "choreo/parser.hpp"
#include "choreo/smtlib.hpp"

using namespace choreo;

static VarBounds bb(std::initializer_list<std::tuple<std::string, long, long>> bs) {
  VarBounds vb;
  for (auto& [n, lo, hi] : bs) vb.bounds[n] = {Rat(lo), Rat(hi)};
  return vb;
}

TEST_CASE("interval arithmetic basics") {
  RIval a = RIval::make(Rat(1), Rat(2));
  RIval b = RIval::make(Rat(-1), Rat(3));
  RIval s = ri_add(a, b);
  CHECK(s.lo == 0);
  CHECK(s.hi == 5);
  RIval m = ri_mul(a, b);
  CHECK(m.lo == -2);
  CHECK(m.hi == 6);
  RIval d = ri_div(a, b);
  CHECK(d.top);  // denominator spans zero
  RIval q = ri_sqrt(RIval::make(Rat(4), Rat(9)));
  CHECK(q.lo == 2);
  CHECK(q.hi == 3);
}

TEST_CASE("three-valued predicate evaluation") {
  IEnv env{{"x", RIval::make(Rat(0), Rat(1))}};
  CHECK(eval_pred_interval(parse_pred("x <= 2"), env) == TriBool::True);
  CHECK(eval_pred_interval(parse_pred("x > 2"), env) == TriBool::False);
  CHECK(eval_pred_interval(parse_pred("x <= 0.5"), env) == TriBool::Unknown);
  // A covering disjunction is invisible to one-shot interval evaluation
  // (both disjuncts are Unknown); bisection resolves it.
  CHECK(eval_pred_interval(parse_pred("x <= 0.5 || x >= 0.2"), env) == TriBool::Unknown);
  CheckerOptions opts;
  opts.use_solver = false;
  VarBounds vb;
  vb.bounds["x"] = {Rat(0), Rat(1)};
  CHECK(check_validity(parse_pred("x <= 0.5 || x >= 0.2"), vb, opts).verdict == Verdict::Valid);
}

TEST_CASE("validity of closed formulas") {
  CheckerOptions opts;
  opts.use_solver = false;
  CHECK(check_validity(parse_pred("1 + 1 = 2"), {}, opts).verdict == Verdict::Valid);
  CHECK(check_validity(parse_pred("sqrt(4) = 2"), {}, opts).verdict == Verdict::Valid);
  CHECK(check_validity(parse_pred("1 > 2"), {}, opts).verdict == Verdict::Refuted);
}

TEST_CASE("validity with branch and refute") {
  CheckerOptions opts;
  opts.use_solver = false;
  auto vb = bb({{"x", -4, 4}});

  // A true fact with margin.
  auto r1 = check_validity(parse_pred("x * x >= 0"), vb, opts);
  CHECK(r1.verdict == Verdict::Valid);

  // A false claim; the witness must falsify it exactly.
  auto goal2 = parse_pred("x + 1 <= 3");
  auto r2 = check_validity(goal2, vb, opts);
  REQUIRE(r2.verdict == Verdict::Refuted);
  CHECK(eval_pred_point(goal2, r2.witness) == TriBool::False);

  // Two-variable fact with margin. (The sharp version, with equality attained
  // on the whole diagonal, is out of reach of interval refinement.)
  auto vb2 = bb({{"x", -2, 2}, {"y", -2, 2}});
  auto r3 = check_validity(parse_pred("x * x + y * y + 1 >= 2 * x * y"), vb2, opts);
  CHECK(r3.verdict == Verdict::Valid);
  auto opts_small = opts;
  opts_small.node_budget = 4000;
  auto r3b = check_validity(parse_pred("x * x + y * y >= 2 * x * y"), vb2, opts_small);
  CHECK(r3b.verdict != Verdict::Refuted);  // sound: never falsely refuted

  // Tight boundary case stays sound (may be Unknown, must not be Refuted).
  auto r4 = check_validity(parse_pred("x * x >= 0 && x <= 4"), vb, opts);
  CHECK(r4.verdict != Verdict::Refuted);

  // Strict inequality that fails only at one interior point.
  auto goal5 = parse_pred("dist(x - 1) > 0");
  auto r5 = check_validity(goal5, vb, opts);
  CHECK(r5.verdict != Verdict::Valid);  // x = 1 falsifies
  if (r5.verdict == Verdict::Refuted)
    CHECK(eval_pred_point(goal5, r5.witness) == TriBool::False);

  // Unbounded variables are reported, not guessed.
  auto r6 = check_validity(parse_pred("z <= 1"), vb, opts);
  CHECK(r6.verdict == Verdict::Unknown);
  CHECK(r6.note.find("z") != std::string::npos);
}

TEST_CASE("implication validity used by contract reasoning") {
  CheckerOptions opts;
  opts.use_solver = false;
  auto vb = bb({{"Cart.x", -10, 10}, {"clock", 0, 30}});
  auto g = parse_pred("dist(Cart.x - 4) <= 0.1 => dist(Cart.x - 4) <= 0.5");
  CHECK(check_validity(g, vb, opts).verdict == Verdict::Valid);
  auto h = parse_pred("dist(Cart.x - 4) <= 0.5 => dist(Cart.x - 4) <= 0.1");
  CHECK(check_validity(h, vb, opts).verdict == Verdict::Refuted);
}

TEST_CASE("footprint disjointness") {
  CheckerOptions opts;
  opts.use_solver = false;
  Footprint a = fp_box(ex_num(0), ex_num(1), ex_num(0), ex_num(1), ex_num(0), ex_num(1));
  Footprint b = fp_box(ex_num(2), ex_num(3), ex_num(0), ex_num(1), ex_num(0), ex_num(1));
  Footprint c = fp_box(ex_num(make_rat(1, 2)), ex_num(2), ex_num(0), ex_num(1), ex_num(0),
                       ex_num(1));
  VarBounds vb = bb({{"px", -10, 10}, {"py", -10, 10}, {"pz", -10, 10}});
  CHECK(footprints_disjoint(a, b, vb, opts).verdict == Verdict::Valid);
  auto r = footprints_disjoint(a, c, vb, opts);
  CHECK(r.verdict == Verdict::Refuted);

  // Predicate footprints: separated half-spaces.
  Footprint h1 = fp_pred(parse_pred("px <= 1"));
  Footprint h2 = fp_pred(parse_pred("px >= 1.5"));
  CHECK(footprints_disjoint(h1, h2, vb, opts).verdict == Verdict::Valid);
  Footprint h3 = fp_pred(parse_pred("px >= 0.5"));
  CHECK(footprints_disjoint(h1, h3, vb, opts).verdict == Verdict::Refuted);

  // Mixed box/predicate.
  CHECK(footprints_disjoint(a, h2, vb, opts).verdict == Verdict::Valid);
}

TEST_CASE("footprint containment") {
  CheckerOptions opts;
  opts.use_solver = false;
  Footprint inner = fp_box(ex_num(0), ex_num(1), ex_num(0), ex_num(1), ex_num(0), ex_num(1));
  Footprint outer = fp_box(ex_num(-1), ex_num(2), ex_num(-1), ex_num(2), ex_num(-1), ex_num(2));
  VarBounds vb = bb({{"px", -10, 10}, {"py", -10, 10}, {"pz", -10, 10}});
  CHECK(footprint_within(inner, outer, vb, opts).verdict == Verdict::Valid);
  CHECK(footprint_within(outer, inner, vb, opts).verdict == Verdict::Refuted);
}

TEST_CASE("smt emission and re-parsing round trip") {
  auto goal = parse_pred("sqrt(x * x) <= max(x, -x) && min(x, y) <= y => x + 0.25 <= 3");
  VarBounds vb = bb({{"x", -2, 2}, {"y", -2, 2}});
  std::string script = emit_smt2_validity(goal, vb);
  CHECK(script.find("(set-logic QF_NRA)") == 0);
  CHECK(script.find("__sqrt0") != std::string::npos);
  CHECK(script.find("(check-sat)") != std::string::npos);

  SmtParsed back = parse_smt2_validity(script);
  CHECK(pred_equal(back.goal, goal));
  CHECK(back.bounds.bounds.at("x").first == -2);
  CHECK(back.bounds.bounds.at("y").second == 2);

  // Emission is a fixed point modulo parsing.
  std::string script2 = emit_smt2_validity(back.goal, back.bounds);
  CHECK(script2 == script);
}

TEST_CASE("world box derivation") {
  System sys;
  sys.bounds.bounds["Cart.x"] = {Rat(-10), Rat(10)};
  VarBounds wb = with_world_box(sys);
  CHECK(wb.bounds.count("px") == 1);
  CHECK(wb.bounds.at("px").first <= -100);
  CHECK(wb.bounds.at("Cart.x").second == 10);
}
