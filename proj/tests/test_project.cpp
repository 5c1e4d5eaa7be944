#include <doctest.h>

#include "choreo/contracts.hpp"
#include "choreo/parser.hpp"
#include "choreo/printer.hpp"
#include "choreo/project.hpp"

using namespace choreo;

namespace {

System parse(const char* src) { return parse_system(src, "test.mcc"); }

MotionInstance inst(const System& sys, const std::string& p, const std::string& m) {
  MotionAtom a;
  a.participant = p;
  a.name = m;
  return instantiate(sys, a);
}

LocalP L(const char* src) { return parse_local(src, "local.mcc"); }

bool mutually_refine(const MotionInstance& a, const MotionInstance& b, const VarBounds& vb) {
  return refines(a, b, vb).holds && refines(b, a, vb).holds;
}

}  // namespace

// ---------------------------------------------------------------------------
// Motion merging

static const char* kMergeSys = R"(
system MergeSys;
vars C : x;
vars Q : w;
bound C.x : [0, 10];
bound Q.w : [0, 10];

motion C.m1() {
  pre: x >= 0; guarantee: x >= 0; post: x >= 1;
  footprint: box(0, 4, 0, 1, 0, 1); duration: [1, 5];
  mode: interruptible; trajectory: x := x;
}
motion C.m2() {
  pre: x >= 2; guarantee: x <= 5; post: x <= 9;
  footprint: box(2, 6, 0, 1, 0, 1); duration: [2, 8];
  mode: interruptible; trajectory: x := x;
}
motion C.grab() {
  footprint: box(0, 1, 0, 1, 0, 1); duration: [1, 2];
  mode: noninterruptible; trajectory: x := x;
}
motion Q.qm() {
  footprint: box(8, 9, 0, 1, 0, 1); duration: [0, inf);
  mode: interruptible; trajectory: w := w;
}

global Main = rec X . dt< C: m1(), Q: qm() > . C -> Q: k() . X;
)";

TEST_CASE("merging a motion with itself gives it back unchanged") {
  System sys = parse(kMergeSys);
  MotionInstance a = inst(sys, "C", "m1");
  MotionMerge m = merge_motion(a, a);
  REQUIRE(m.ok);
  CHECK(atom_equal(m.inst.atom, a.atom));
  CHECK(pred_equal(m.inst.pre, a.pre));
  CHECK(pred_equal(m.inst.assume, a.assume));
  CHECK(pred_equal(m.inst.guarantee, a.guarantee));
  CHECK(pred_equal(m.inst.post, a.post));
  CHECK(fp_equal(m.inst.fp, a.fp));
  CHECK(ival_equal(m.inst.duration, a.duration));
  CHECK(refines(m.inst, a, sys.bounds).holds);
}

TEST_CASE("merged motion unions preconditions and intersects guarantees") {
  System sys = parse(kMergeSys);
  MotionInstance a = inst(sys, "C", "m1");
  MotionInstance b = inst(sys, "C", "m2");
  MotionMerge m = merge_motion(a, b);
  REQUIRE(m.ok);
  CHECK(m.inst.atom.name == "(m1&m2)");
  CHECK(pred_equal(m.inst.pre, pr_or(a.pre, b.pre)));
  CHECK(pred_equal(m.inst.guarantee, pr_and(a.guarantee, b.guarantee)));
  CHECK(pred_equal(m.inst.post, pr_and(a.post, b.post)));
  // Duration windows intersect: [1,5] with [2,8].
  CHECK(ival_equal(m.inst.duration, ival(Rat(2), Rat(5))));

  // The defining property: the merged motion can stand in for either input.
  RefineReport ra = refines(m.inst, a, sys.bounds);
  RefineReport rb = refines(m.inst, b, sys.bounds);
  CHECK(ra.holds);
  CHECK(rb.holds);
}

TEST_CASE("motion merging commutes up to mutual refinement") {
  System sys = parse(kMergeSys);
  MotionInstance a = inst(sys, "C", "m1");
  MotionInstance b = inst(sys, "C", "m2");
  MotionMerge ab = merge_motion(a, b);
  MotionMerge ba = merge_motion(b, a);
  REQUIRE(ab.ok);
  REQUIRE(ba.ok);
  CHECK(atom_equal(ab.inst.atom, ba.inst.atom));
  CHECK(ival_equal(ab.inst.duration, ba.inst.duration));
  CHECK(mutually_refine(ab.inst, ba.inst, sys.bounds));
}

TEST_CASE("motions of different interruptibility do not merge") {
  System sys = parse(kMergeSys);
  MotionMerge m = merge_motion(inst(sys, "C", "m1"), inst(sys, "C", "grab"));
  CHECK(!m.ok);
  CHECK(m.why.find("mode-mismatch") != std::string::npos);
}

TEST_CASE("motions of different participants do not merge") {
  System sys = parse(kMergeSys);
  MotionMerge m = merge_motion(inst(sys, "C", "m1"), inst(sys, "Q", "qm"));
  CHECK(!m.ok);
  CHECK(m.why.find("different-owner") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Local type merging

TEST_CASE("a local type merges with itself and with its own unfolding") {
  System sys = parse(kMergeSys);
  LocalP t = L("rec X . run C: m1() . X");
  LocalMerge m = merge_local(sys, t, t);
  REQUIRE(m.ok);
  CHECK(lt_equal(m.type, t));

  LocalMerge mu = merge_local(sys, t, lt_unfold(t));
  REQUIRE(mu.ok);
  CHECK(lt_equal(mu.type, t));
}

TEST_CASE("branchings from one peer merge by label union") {
  System sys = parse(kMergeSys);
  LocalP a = L("Q ? { a() . [] }");
  LocalP b = L("Q ? { b() . [] }");
  LocalMerge m = merge_local(sys, a, b);
  REQUIRE(m.ok);
  CHECK(lt_equal(m.type, L("Q ? { a() . [], b() . [] }")));
  // Symmetric merge gives the same type: entries come out label-sorted.
  LocalMerge m2 = merge_local(sys, b, a);
  REQUIRE(m2.ok);
  CHECK(lt_equal(m.type, m2.type));
}

TEST_CASE("a shared label must continue identically on both sides") {
  System sys = parse(kMergeSys);
  LocalP a = L("Q ? { a() . run C: m1() . [] }");
  LocalP b = L("Q ? { a() . run C: m2() . [] }");
  LocalMerge m = merge_local(sys, a, b);
  CHECK(!m.ok);
  CHECK(m.why.find("continues differently") != std::string::npos);
}

TEST_CASE("branchings expecting different peers do not merge") {
  System sys = parse(kMergeSys);
  LocalMerge m = merge_local(sys, L("Q ? { a() . [] }"), L("C ? { b() . [] }"));
  CHECK(!m.ok);
  CHECK(m.why.find("different peers") != std::string::npos);
}

TEST_CASE("a selection does not merge with a branching") {
  System sys = parse(kMergeSys);
  LocalMerge m = merge_local(sys, L("Q ! a() . []"), L("Q ? { a() . [] }"));
  CHECK(!m.ok);
  CHECK(m.why.find("selection") != std::string::npos);
}

TEST_CASE("a motion becomes the default of a plain branching") {
  System sys = parse(kMergeSys);
  LocalP mot = L("run C: m1() . []");
  LocalP bra = L("Q ? { go() . [] }");
  LocalP expect = L("Q ? { go() . [], after run C: m1() . [] }");
  LocalMerge m = merge_local(sys, mot, bra);
  REQUIRE(m.ok);
  CHECK(lt_is_branch_with_default(m.type));
  CHECK(lt_equal(m.type, expect));
  // The symmetric orientation applies the same rule.
  LocalMerge m2 = merge_local(sys, bra, mot);
  REQUIRE(m2.ok);
  CHECK(lt_equal(m2.type, expect));
}

TEST_CASE("a branching with a default absorbs a plain branching, keeping the default") {
  System sys = parse(kMergeSys);
  LocalP a = L("Q ? { a() . [] }");
  LocalP b = L("Q ? { b() . [], after run C: m1() . [] }");
  LocalMerge m = merge_local(sys, a, b);
  REQUIRE(m.ok);
  CHECK(lt_equal(m.type, L("Q ? { a() . [], b() . [], after run C: m1() . [] }")));
}

TEST_CASE("two defaulted branchings merge their default motions") {
  System sys = parse(kMergeSys);
  LocalP a = L("Q ? { a() . [], after run C: m1() . [] }");
  LocalP b = L("Q ? { b() . [], after run C: m2() . [] }");
  LocalMerge m = merge_local(sys, a, b);
  REQUIRE(m.ok);
  REQUIRE(lt_is_branch_with_default(m.type));
  REQUIRE(m.type->branches.size() == 2);
  CHECK(m.type->branches[0].label == "a");
  CHECK(m.type->branches[1].label == "b");
  CHECK(m.type->dflt->first.name == "(m1&m2)");
  REQUIRE(m.type->dflt_inst.has_value());
  CHECK(refines(*m.type->dflt_inst, inst(sys, "C", "m1"), sys.bounds).holds);
  CHECK(refines(*m.type->dflt_inst, inst(sys, "C", "m2"), sys.bounds).holds);
}

TEST_CASE("equal default motions merge without synthesizing a composite") {
  System sys = parse(kMergeSys);
  LocalP a = L("Q ? { a() . [], after run C: m1() . [] }");
  LocalP b = L("Q ? { b() . [], after run C: m1() . [] }");
  LocalMerge m = merge_local(sys, a, b);
  REQUIRE(m.ok);
  CHECK(lt_equal(m.type, L("Q ? { a() . [], b() . [], after run C: m1() . [] }")));
  CHECK(!m.type->dflt_inst.has_value());
}

TEST_CASE("defaulted branchings with different default continuations do not merge") {
  System sys = parse(kMergeSys);
  LocalP a = L("Q ? { a() . [], after run C: m1() . run C: m1() . [] }");
  LocalP b = L("Q ? { b() . [], after run C: m1() . [] }");
  LocalMerge m = merge_local(sys, a, b);
  CHECK(!m.ok);
  CHECK(m.why.find("default continuations differ") != std::string::npos);
}

TEST_CASE("a motion merges into a defaulted branching when continuations agree") {
  System sys = parse(kMergeSys);
  LocalP mot = L("run C: m1() . []");
  LocalP bra = L("Q ? { go() . [], after run C: m2() . [] }");
  LocalMerge m = merge_local(sys, mot, bra);
  REQUIRE(m.ok);
  REQUIRE(lt_is_branch_with_default(m.type));
  CHECK(m.type->dflt->first.name == "(m1&m2)");
  CHECK(m.type->branches.size() == 1);

  LocalP mot2 = L("run C: m1() . run C: m1() . []");
  LocalMerge bad = merge_local(sys, mot2, bra);
  CHECK(!bad.ok);
  CHECK(bad.why.find("continuation differs") != std::string::npos);
}

TEST_CASE("motions with different atoms do not merge as local types") {
  System sys = parse(kMergeSys);
  LocalMerge m = merge_local(sys, L("run C: m1() . []"), L("run C: m2() . []"));
  CHECK(!m.ok);
  CHECK(m.why.find("cannot merge") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Projection

static const char* kLineSys = R"(
system Line;
vars Prod : y;
vars Cart : x;
vars Arm : z;
bound Prod.y : [-10, 10];
bound Cart.x : [-10, 10];
bound Arm.z : [-10, 10];

motion Prod.p_idle() { footprint: box(0, 1, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: y := y; }
motion Prod.place()  { footprint: box(0, 1, 0, 1, 1, 2); duration: [1, 2];   mode: interruptible; trajectory: y := y; }
motion Cart.c_idle() { footprint: box(2, 3, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: x := x; }
motion Cart.c_move() { footprint: box(2, 5, 0, 1, 0, 1); duration: [1, 4];   mode: interruptible; trajectory: x := x; }
motion Arm.a_idle()  { footprint: box(6, 7, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: z := z; }
motion Arm.a_work()  { footprint: box(6, 8, 0, 1, 0, 1); duration: [1, 3];   mode: interruptible; trajectory: z := z; }

global Main =
  rec X .
  dt< Prod: place(), Cart: c_idle(), Arm: a_idle() > .
  ( Prod -> Cart [y <= 0]: green() . dt< Prod: p_idle(), Cart: c_move(), Arm: a_idle() >
  + Prod -> Cart [y >= 0]: red()   . dt< Prod: p_idle(), Cart: c_move(), Arm: a_idle() > ) .
  Cart -> Arm: go() .
  dt< Prod: p_idle(), Cart: c_idle(), Arm: a_work() > .
  X;
)";

TEST_CASE("the choice sender projects to a guarded selection") {
  System sys = parse(kLineSys);
  ProjectResult p = project(sys, sys.global, "Prod");
  REQUIRE(p.ok());
  LocalP expect = L(
      "rec X . run Prod: place() . "
      "!{ Cart![y <= 0] green() . run Prod: p_idle() . run Prod: p_idle() . X, "
      "   Cart![y >= 0] red()   . run Prod: p_idle() . run Prod: p_idle() . X }");
  CHECK(lt_equal(p.type, expect));
}

TEST_CASE("the choice receiver projects to a branching over both labels") {
  System sys = parse(kLineSys);
  ProjectResult p = project(sys, sys.global, "Cart");
  REQUIRE(p.ok());
  LocalP expect = L(
      "rec X . run Cart: c_idle() . "
      "Prod ? { green() . run Cart: c_move() . Arm ! go() . run Cart: c_idle() . X, "
      "         red()   . run Cart: c_move() . Arm ! go() . run Cart: c_idle() . X }");
  CHECK(lt_equal(p.type, expect));
}

TEST_CASE("an uninvolved participant projects through the choice by merging") {
  System sys = parse(kLineSys);
  ProjectResult p = project(sys, sys.global, "Arm");
  REQUIRE(p.ok());
  LocalP expect = L(
      "rec X . run Arm: a_idle() . run Arm: a_idle() . "
      "Cart ? { go() . run Arm: a_work() . X }");
  CHECK(lt_equal(p.type, expect));
}

TEST_CASE("projection commutes with one-step unfolding") {
  System sys = parse(kLineSys);
  GlobalP unf = gt_unfold(sys.global);
  for (std::string r : {"Prod", "Cart", "Arm"}) {
    ProjectResult a = project(sys, sys.global, r);
    ProjectResult b = project(sys, unf, r);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(lt_equal(a.type, b.type));
  }
}

TEST_CASE("projection covers every participant of the global type") {
  System sys = parse(kLineSys);
  auto all = project_all(sys, sys.global);
  REQUIRE(all.size() == 3);
  for (const auto& [r, p] : all) {
    CAPTURE(r);
    CHECK(p.ok());
    CHECK(!lt_has_hole(p.type));
  }
}

static const char* kDivergeSys = R"(
system Diverge;
vars Prod : y;
vars Cart : x;
vars Arm : z;
bound Prod.y : [-10, 10];
bound Cart.x : [-10, 10];
bound Arm.z : [-10, 10];

motion Prod.p_idle() { footprint: box(0, 1, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: y := y; }
motion Cart.c_idle() { footprint: box(2, 3, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: x := x; }
motion Arm.a_idle()  { footprint: box(6, 7, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: z := z; }
motion Arm.a_work()  { footprint: box(6, 8, 0, 1, 0, 1); duration: [1, 3];   mode: interruptible; trajectory: z := z; }

global Main =
  rec X .
  ( Prod -> Cart [y <= 0]: green() . dt< Prod: p_idle(), Cart: c_idle(), Arm: a_idle() >
  + Prod -> Cart [y >= 0]: red()   . dt< Prod: p_idle(), Cart: c_idle(), Arm: a_work() > ) .
  Cart -> Arm: go() .
  dt< Prod: p_idle(), Cart: c_idle(), Arm: a_idle() > .
  X;
)";

TEST_CASE("an uninformed participant may not behave differently across alternatives") {
  System sys = parse(kDivergeSys);
  // The arm runs a_idle in one alternative and a_work in the other without
  // ever learning which was taken: its projection is undefined.
  ProjectResult arm = project(sys, sys.global, "Arm");
  CHECK(!arm.ok());
  REQUIRE(!arm.errors.empty());
  CHECK(arm.errors[0].kind == ProjectionError::Kind::MergeUndefined);
  CHECK(arm.errors[0].participant == "Arm");
  // The informed participants still project fine.
  CHECK(project(sys, sys.global, "Prod").ok());
  CHECK(project(sys, sys.global, "Cart").ok());
}

static const char* kSepSys = R"(
system SepSys;
vars P : a;
vars Q : b;
vars R : c;
bound P.a : [-10, 10];
bound Q.b : [-10, 10];
bound R.c : [-10, 10];

motion P.mp() { footprint: box(0, 1, 0, 1, 0, 1); duration: [1, 2]; mode: interruptible; trajectory: a := a; }
motion Q.mq() { footprint: box(2, 3, 0, 1, 0, 1); duration: [1, 2]; mode: interruptible; trajectory: b := b; }
motion R.mr() { footprint: box(4, 5, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: c := c; }

global Main =
  rec X .
  ( dt< P: mp() > *[ box(0, 1, 0, 1, 0, 1) | box(2, 3, 0, 1, 0, 1) ] dt< Q: mq(), R: mr() > ) .
  P -> Q: k() .
  Q -> R: k2() .
  X;
)";

TEST_CASE("separated factors project to the side a participant occurs in") {
  System sys = parse(kSepSys);
  ProjectResult p = project(sys, sys.global, "P");
  REQUIRE(p.ok());
  CHECK(lt_equal(p.type, L("rec X . run P: mp() . Q ! k() . X")));
  ProjectResult q = project(sys, sys.global, "Q");
  REQUIRE(q.ok());
  CHECK(lt_equal(q.type, L("rec X . run Q: mq() . P ? { k() . R ! k2() . X }")));
}

static const char* kAbsentSys = R"(
system Absent;
vars P : a;
vars Q : b;
vars R : c;
bound P.a : [-10, 10];
bound Q.b : [-10, 10];
bound R.c : [-10, 10];

motion P.mp() { footprint: box(0, 1, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: a := a; }
motion Q.mq() { footprint: box(2, 3, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: b := b; }

global Main = rec X . dt< P: mp(), Q: mq() > . P -> Q: k() . X;
)";

TEST_CASE("a participant absent from a recursion body cannot be projected") {
  System sys = parse(kAbsentSys);
  ProjectResult r = project(sys, sys.global, "R");
  CHECK(!r.ok());
  REQUIRE(!r.errors.empty());
  CHECK(r.errors[0].kind == ProjectionError::Kind::ParticipantAbsentInRec);
  // R is not a participant of the global type at all, so project_all skips it.
  auto all = project_all(sys, sys.global);
  CHECK(all.size() == 2);
  CHECK(!all.count("R"));
}
