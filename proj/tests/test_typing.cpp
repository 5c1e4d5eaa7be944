#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "choreo/parser.hpp"
#include "choreo/printer.hpp"
#include "choreo/project.hpp"
#include "choreo/smtlib.hpp"
#include "choreo/typing.hpp"

using namespace choreo;

namespace {

System parse(const char* src) { return parse_system(src, "test.mcc"); }

LocalP L(const char* src) { return parse_local(src, "local.mcc"); }

ProcP P(const char* src, const char* subject) { return parse_process(src, subject, "proc.mcc"); }

bool has_issue(const ProcTypingResult& r, const std::string& rule, const std::string& frag) {
  for (const auto& i : r.issues)
    if (i.rule == rule && i.detail.find(frag) != std::string::npos) return true;
  return false;
}

bool has_trace(const std::vector<std::string>& trace, const std::string& frag) {
  for (const auto& l : trace)
    if (l.find(frag) != std::string::npos) return true;
  return false;
}

// Participant C drives the motions under test; Q is its peer. strong refines
// weak (wider start window, tighter effect, nested footprint and duration);
// weak2 is contract-identical to weak under a different name.
static const char* kTypeSys = R"(
system TypeSys;
vars C : x;
vars Q : w;
bound C.x : [0, 10];
bound Q.w : [0, 10];

motion C.weak()   { pre: x >= 2; post: x >= 0; footprint: box(0, 6, 0, 1, 0, 1); duration: [1, 8]; mode: interruptible; trajectory: x := x; }
motion C.weak2()  { pre: x >= 2; post: x >= 0; footprint: box(0, 6, 0, 1, 0, 1); duration: [1, 8]; mode: interruptible; trajectory: x := x; }
motion C.strong() { pre: x >= 0; guarantee: x >= 0; post: x >= 1; footprint: box(1, 5, 0, 1, 0, 1); duration: [2, 5]; mode: interruptible; trajectory: x := x; }
motion C.gain()   { pre: x >= 0; post: x >= 4; footprint: box(0, 1, 0, 1, 0, 1); duration: [1, 2]; mode: interruptible; trajectory: x := x; }
motion C.need4()  { pre: x >= 4; post: x >= 4; footprint: box(0, 1, 0, 1, 0, 1); duration: [1, 2]; mode: interruptible; trajectory: x := x; }
motion C.m_move(x_f) { pre: x_f > x; post: x = x_f; footprint: box(0, 6, 0, 1, 0, 1); duration: [1, 2]; mode: interruptible; trajectory: x := x; }
motion Q.qm() { footprint: box(8, 9, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: w := w; }

global Main = rec X . dt< C: weak(), Q: qm() > . C -> Q: k() . X;
)";

}  // namespace

// ---------------------------------------------------------------------------
// Subtyping

TEST_CASE("subtyping is reflexive on every type shape") {
  System sys = parse(kTypeSys);
  const char* shapes[] = {
      "rec X . run C: weak() . X",
      "rec X . !{ Q![x >= 0] a(nu : real | nu >= 1) . X, Q!b() . X }",
      "rec X . Q ? { a(nu : real | nu >= 1) . X, b() . X, after run C: weak() . X }",
      "Q ? { a() . [] }",
      "[]",
  };
  for (const char* s : shapes) {
    CAPTURE(s);
    CHECK(subtype(sys, "C", L(s), L(s), sys.bounds).holds());
  }
}

TEST_CASE("subtyping relates a recursive type to its own unfolding") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . run C: weak() . Q ? { a() . X }");
  CHECK(subtype(sys, "C", t, lt_unfold(t), sys.bounds).holds());
  CHECK(subtype(sys, "C", lt_unfold(t), t, sys.bounds).holds());
}

TEST_CASE("a motion prefix is covariant in contract refinement") {
  System sys = parse(kTypeSys);
  LocalP s = L("run C: strong() . []");
  LocalP w = L("run C: weak() . []");
  CHECK(subtype(sys, "C", s, w, sys.bounds).holds());
  SubtypeResult bad = subtype(sys, "C", w, s, sys.bounds);
  CHECK(bad.verdict == Verdict::Refuted);
  CHECK(has_trace(bad.trace, "does not refine"));
}

TEST_CASE("a selection may offer fewer labels than its supertype") {
  System sys = parse(kTypeSys);
  LocalP few = L("!{ Q![x >= 5] a() . [] }");
  LocalP more = L("!{ Q![x >= 1] a() . [], Q!b() . [] }");
  CHECK(subtype(sys, "C", few, more, sys.bounds).holds());
  SubtypeResult bad = subtype(sys, "C", more, few, sys.bounds);
  CHECK(bad.verdict == Verdict::Refuted);
  CHECK(has_trace(bad.trace, "supertype selection lacks"));
}

TEST_CASE("selection guards and payloads strengthen covariantly") {
  System sys = parse(kTypeSys);
  // Guard: the subtype may only select when the supertype also could.
  CHECK(subtype(sys, "C", L("!{ Q![x >= 5] a() . [] }"), L("!{ Q![x >= 1] a() . [] }"),
                sys.bounds)
            .holds());
  SubtypeResult g = subtype(sys, "C", L("!{ Q![x >= 1] a() . [] }"),
                            L("!{ Q![x >= 5] a() . [] }"), sys.bounds);
  CHECK(g.verdict == Verdict::Refuted);
  CHECK(has_trace(g.trace, "guard of a"));
  // Payload: the subtype promises at least as much about what it sends.
  CHECK(subtype(sys, "C", L("Q ! a(nu : real | nu >= 5) . []"),
                L("Q ! a(nu : real | nu >= 0) . []"), sys.bounds)
            .holds());
  SubtypeResult p = subtype(sys, "C", L("Q ! a(nu : real | nu >= 0) . []"),
                            L("Q ! a(nu : real | nu >= 5) . []"), sys.bounds);
  CHECK(p.verdict == Verdict::Refuted);
  CHECK(has_trace(p.trace, "payload of a"));
}

TEST_CASE("a branching may accept more labels with weaker payload demands") {
  System sys = parse(kTypeSys);
  LocalP wide = L("Q ? { a(nu : real | nu >= 0) . [], b() . [] }");
  LocalP narrow = L("Q ? { a(nu : real | nu >= 5) . [] }");
  CHECK(subtype(sys, "C", wide, narrow, sys.bounds).holds());
  SubtypeResult bad = subtype(sys, "C", narrow, wide, sys.bounds);
  CHECK(bad.verdict == Verdict::Refuted);
  CHECK(has_trace(bad.trace, "lacks label b"));
  // Payloads are contravariant: the subtype must cope with anything the
  // supertype admits.
  SubtypeResult contra = subtype(sys, "C", L("Q ? { a(nu : real | nu >= 5) . [] }"),
                                 L("Q ? { a(nu : real | nu >= 0) . [] }"), sys.bounds);
  CHECK(contra.verdict == Verdict::Refuted);
}

TEST_CASE("a default arm can be dropped on the supertype side") {
  System sys = parse(kTypeSys);
  LocalP dflt = L("Q ? { a() . [], b() . [], after run C: weak() . [] }");
  LocalP plain = L("Q ? { a() . [] }");
  CHECK(subtype(sys, "C", dflt, plain, sys.bounds).holds());
  // The other way round the subtype has no default to meet the supertype's.
  SubtypeResult bad = subtype(sys, "C", plain, dflt, sys.bounds);
  CHECK(bad.verdict == Verdict::Refuted);
  CHECK(has_trace(bad.trace, "default"));
}

TEST_CASE("a defaulted branching can stand in for a bare motion") {
  System sys = parse(kTypeSys);
  LocalP b = L("Q ? { a() . [], after run C: strong() . [] }");
  LocalP m = L("run C: weak() . []");
  CHECK(subtype(sys, "C", b, m, sys.bounds).holds());
  // A bare motion cannot absorb a branching: it ignores incoming messages.
  CHECK(subtype(sys, "C", m, b, sys.bounds).verdict == Verdict::Refuted);
  // The default must genuinely refine the motion.
  LocalP bw = L("Q ? { a() . [], after run C: weak() . [] }");
  CHECK(subtype(sys, "C", bw, L("run C: strong() . []"), sys.bounds).verdict ==
        Verdict::Refuted);
}

TEST_CASE("recursive types are compared up to unfolding with refined prefixes") {
  System sys = parse(kTypeSys);
  LocalP s = L("rec X . run C: strong() . X");
  LocalP w = L("rec Y . run C: weak() . Y");
  CHECK(subtype(sys, "C", s, w, sys.bounds).holds());
  CHECK(subtype(sys, "C", w, s, sys.bounds).verdict == Verdict::Refuted);
  // Contract-identical motions under different names are mutual subtypes.
  LocalP w2 = L("rec Z . run C: weak2() . Z");
  CHECK(subtype(sys, "C", w, w2, sys.bounds).holds());
  CHECK(subtype(sys, "C", w2, w, sys.bounds).holds());
}

TEST_CASE("unrelated type shapes do not subtype") {
  System sys = parse(kTypeSys);
  SubtypeResult r = subtype(sys, "C", L("Q ! a() . []"), L("Q ? { a() . [] }"), sys.bounds);
  CHECK(r.verdict == Verdict::Refuted);
  CHECK(has_trace(r.trace, "no rule relates"));
  CHECK(subtype(sys, "C", L("Q ? { a() . [] }"), L("C ? { a() . [] }"), sys.bounds).verdict ==
        Verdict::Refuted);
}

// ---------------------------------------------------------------------------
// Process typing: motions

TEST_CASE("a motion chain threads postconditions into preconditions") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . run C: gain() . run C: need4() . X");
  ProcP p = P("rec X . run gain() . run need4() . X", "C");
  ProcTypingResult r = type_process(sys, "C", parse_pred("x >= 0"), p, t);
  CHECK(r.ok());
  CHECK(has_trace(r.trace, "t-motion discharged"));

  // Reversed, the first motion's effect does not establish the second's
  // start window: x >= 4 is needed but only x >= 0 is known.
  LocalP t2 = L("rec X . run C: need4() . run C: gain() . X");
  ProcP p2 = P("rec X . run need4() . run gain() . X", "C");
  ProcTypingResult r2 = type_process(sys, "C", parse_pred("x >= 0"), p2, t2);
  CHECK(r2.verdict == Verdict::Refuted);
  CHECK(has_issue(r2, "t-motion", "precondition of need4"));
}

TEST_CASE("a known state that misses a parameterised precondition is refuted with a witness") {
  System sys = parse(kTypeSys);
  MotionAtom a;
  a.participant = "C";
  a.name = "m_move";
  a.args = {ex_num(Rat(3))};
  ProcP p = pc_motion(a, nullptr);
  LocalP t = L("run C: m_move(3) . []");
  ProcTypingResult r = type_process(sys, "C", parse_pred("x = 5"), p, t);
  REQUIRE(r.verdict == Verdict::Refuted);
  REQUIRE(!r.issues.empty());
  CHECK(r.issues[0].rule == "t-motion");
  // The only state satisfying the context is x = 5, and 3 > 5 fails there.
  CHECK(r.issues[0].detail.find("witness") != std::string::npos);
  CHECK(r.issues[0].detail.find("C.x=5") != std::string::npos);
}

TEST_CASE("the process motion may refine the motion promised by the type") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . run C: weak() . X");
  ProcTypingResult r =
      type_process(sys, "C", parse_pred("x >= 2"), P("rec X . run strong() . X", "C"), t);
  CHECK(r.ok());
  CHECK(has_trace(r.trace, "sub-motion replaced weak by strong"));

  ProcTypingResult bad =
      type_process(sys, "C", parse_pred("x >= 2"),
                   P("rec X . run weak() . X", "C"), L("rec X . run C: strong() . X"));
  CHECK(bad.verdict == Verdict::Refuted);
  CHECK(has_issue(bad, "sub-motion", "does not refine"));
}

TEST_CASE("a motion process cannot inhabit a branching type") {
  System sys = parse(kTypeSys);
  ProcTypingResult r = type_process(sys, "C", nullptr, P("rec X . run weak() . X", "C"),
                                    L("rec X . Q ? { a() . X }"));
  CHECK(r.verdict == Verdict::Refuted);
  CHECK(has_issue(r, "t-motion", "branching"));
}

// ---------------------------------------------------------------------------
// Process typing: sends

TEST_CASE("a send discharges the selection guard and payload refinement") {
  System sys = parse(kTypeSys);
  ProcP p = pc_send("Q", "k", parse_expr("x + 1"), nullptr);
  LocalP t = L("!{ Q![x >= 0] k(nu : real | nu >= 1) . [] }");
  ProcTypingResult r = type_process(sys, "C", parse_pred("x >= 0"), p, t);
  CHECK(r.ok());
  CHECK(has_trace(r.trace, "t-out discharged"));

  LocalP t2 = L("!{ Q![x >= 0] k(nu : real | nu >= 2) . [] }");
  ProcTypingResult r2 = type_process(sys, "C", parse_pred("x >= 0"), p, t2);
  CHECK(r2.verdict == Verdict::Refuted);
  CHECK(has_issue(r2, "t-out", "guard and payload"));
}

TEST_CASE("a send must pick a label the selection offers, with the right payload sort") {
  System sys = parse(kTypeSys);
  ProcP wrong_label = pc_send("Q", "z", nullptr, nullptr);
  ProcTypingResult r1 =
      type_process(sys, "C", nullptr, wrong_label, L("Q ! k() . []"));
  CHECK(has_issue(r1, "t-out", "no entry Q!z"));

  ProcP with_payload = pc_send("Q", "k", parse_expr("x"), nullptr);
  ProcTypingResult r2 = type_process(sys, "C", nullptr, with_payload, L("Q ! k() . []"));
  CHECK(has_issue(r2, "t-out", "does not carry a real payload"));

  ProcP no_payload = pc_send("Q", "k", nullptr, nullptr);
  ProcTypingResult r3 =
      type_process(sys, "C", nullptr, no_payload, L("Q ! k(nu : real | nu >= 0) . []"));
  CHECK(has_issue(r3, "t-out", "requires a payload"));

  ProcTypingResult r4 = type_process(sys, "C", nullptr, no_payload,
                                     L("rec X . Q ? { k() . X }"));
  CHECK(has_issue(r4, "t-out", "its type is a branching"));
}

// ---------------------------------------------------------------------------
// Process typing: receives

TEST_CASE("a received payload refinement enters the logical context through its binder") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . Q ? { k(nu : real | nu >= 3) . !{ Q!r(nu : real | nu >= 2) . X } }");
  ProcP p = P("rec X . Q ? { k(v) . Q ! r(v) . X }", "C");
  ProcTypingResult r = type_process(sys, "C", nullptr, p, t);
  CHECK(r.ok());

  // Demanding more of the forwarded value than the arrival promised fails.
  LocalP t2 = L("rec X . Q ? { k(nu : real | nu >= 3) . !{ Q!r(nu : real | nu >= 4) . X } }");
  ProcTypingResult r2 = type_process(sys, "C", nullptr, p, t2);
  CHECK(r2.verdict == Verdict::Refuted);
  CHECK(has_issue(r2, "t-out", "guard and payload"));
}

TEST_CASE("receive arms line up with the branching labels") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . Q ? { a() . X, b() . X }");
  ProcTypingResult missing =
      type_process(sys, "C", nullptr, P("rec X . Q ? { a() . X }", "C"), t);
  CHECK(missing.verdict == Verdict::Refuted);
  CHECK(has_issue(missing, "t-choice1", "no arm for label b"));

  // Extra arms are dead code, not an error: the type never delivers them.
  ProcTypingResult extra = type_process(
      sys, "C", nullptr, P("rec X . Q ? { a() . X, b() . X, c() . X }", "C"), t);
  CHECK(extra.ok());
  CHECK(has_trace(extra.trace, "arm c can never fire"));

  ProcTypingResult peer = type_process(
      sys, "C", nullptr, P("rec X . C ? { a() . X, b() . X }", "C"), t);
  CHECK(peer.verdict == Verdict::Refuted);
  CHECK(has_issue(peer, "t-choice1", "expects Q"));
}

TEST_CASE("default arms are typed like motions and required when the type has one") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . Q ? { a() . X, after run C: weak() . X }");
  ProcTypingResult ok = type_process(
      sys, "C", nullptr, P("rec X . Q ? { a() . X, after run strong() . X }", "C"), t);
  CHECK(ok.ok());

  ProcTypingResult missing =
      type_process(sys, "C", nullptr, P("rec X . Q ? { a() . X }", "C"), t);
  CHECK(missing.verdict == Verdict::Refuted);
  CHECK(has_issue(missing, "t-choice2", "receive has none"));

  // A default in the process against a plain branching is merely unreachable.
  ProcTypingResult spare = type_process(
      sys, "C", nullptr, P("rec X . Q ? { a() . X, after run strong() . X }", "C"),
      L("rec X . Q ? { a() . X }"));
  CHECK(spare.ok());
  CHECK(has_trace(spare.trace, "default arm can never fire"));
}

TEST_CASE("a guarded receive with a default can inhabit a bare motion type") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . run C: weak() . X");
  ProcTypingResult r = type_process(
      sys, "C", nullptr, P("rec X . Q ? { stop() . X, after run strong() . X }", "C"), t);
  CHECK(r.ok());
  CHECK(has_trace(r.trace, "arm stop can never fire"));

  ProcTypingResult bad = type_process(
      sys, "C", nullptr, P("rec X . Q ? { stop() . X }", "C"), t);
  CHECK(bad.verdict == Verdict::Refuted);
  CHECK(has_issue(bad, "t-choice2", "no default arm"));
}

// ---------------------------------------------------------------------------
// Process typing: conditionals

TEST_CASE("a conditional splits a selection between its branches") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . !{ Q![x <= 5] lo() . X, Q![x >= 5] hi() . X }");
  ProcP p = P("rec X . if x <= 5 then Q ! lo() . X else Q ! hi() . X", "C");
  ProcTypingResult r = type_process(sys, "C", nullptr, p, t);
  CHECK(r.ok());
  CHECK(has_trace(r.trace, "t-cond tries branch lo"));
}

TEST_CASE("conditional candidates are tried in declaration order with rollback") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . !{ Q![x >= 0] a() . X, Q![x >= 0] b() . X }");
  // Both guards follow from the condition; the first candidate fits.
  ProcTypingResult first = type_process(
      sys, "C", nullptr, P("rec X . if x >= 0 then Q ! a() . X else Q ! b() . X", "C"), t);
  CHECK(first.ok());
  CHECK(has_trace(first.trace, "tries branch a"));
  // Here the first candidate fails (the then-arm sends b), so typing backs
  // off and commits to the second; no stale issues remain.
  ProcTypingResult second = type_process(
      sys, "C", nullptr, P("rec X . if x >= 0 then Q ! b() . X else Q ! a() . X", "C"), t);
  CHECK(second.ok());
  CHECK(has_trace(second.trace, "tries branch a"));
  CHECK(has_trace(second.trace, "tries branch b"));
}

TEST_CASE("a conditional with no implied guard is refuted") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . !{ Q![x >= 6] hi() . X, Q![x >= 7] lo() . X }");
  ProcP p = P("rec X . if x <= 5 then Q ! hi() . X else Q ! lo() . X", "C");
  ProcTypingResult r = type_process(sys, "C", nullptr, p, t);
  CHECK(r.verdict == Verdict::Refuted);
  CHECK(has_issue(r, "t-cond", "no selection guard is implied"));
}

TEST_CASE("when the then-branch consumes the whole selection the else must be dead") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . !{ Q!go() . X }");
  ProcTypingResult dead = type_process(
      sys, "C", nullptr, P("rec X . if x >= -1 then Q ! go() . X else Q ! go() . X", "C"), t);
  CHECK(dead.ok());
  CHECK(has_trace(dead.trace, "unreachability of the else branch"));

  ProcTypingResult live = type_process(
      sys, "C", nullptr, P("rec X . if x >= 5 then Q ! go() . X else Q ! go() . X", "C"), t);
  CHECK(live.verdict == Verdict::Refuted);
  CHECK(has_issue(live, "t-cond", "unreachability"));
}

TEST_CASE("a conditional cannot be typed at a branching") {
  System sys = parse(kTypeSys);
  ProcTypingResult r = type_process(
      sys, "C", nullptr,
      P("rec X . if x >= 0 then Q ? { a() . X } else Q ? { a() . X }", "C"),
      L("rec X . Q ? { a() . X }"));
  CHECK(r.verdict == Verdict::Refuted);
  CHECK(has_issue(r, "t-cond", "must be typed at a selection"));
}

// ---------------------------------------------------------------------------
// Process typing: recursion

TEST_CASE("recursion closes the loop when the bound type recurs") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . run C: weak() . X");
  ProcTypingResult r =
      type_process(sys, "C", parse_pred("x >= 2"), P("rec X . run weak() . X", "C"), t);
  CHECK(r.ok());
  CHECK(has_trace(r.trace, "closes the loop"));

  ProcTypingResult unbound =
      type_process(sys, "C", nullptr, pc_var("Z"), L("rec X . run C: weak() . X"));
  CHECK(unbound.verdict == Verdict::Refuted);
  CHECK(has_issue(unbound, "t-rec", "unbound process variable Z"));
}

TEST_CASE("a recursion re-entered at a smaller type closes through subtyping") {
  System sys = parse(kTypeSys);
  // The loop is bound at weak . (rec Y . weak2 . Y) but recurs at the inner
  // type; the bound type is a subtype since weak refines weak2.
  LocalP t = L("run C: weak() . rec Y . run C: weak2() . Y");
  ProcP p = P("rec X . run strong() . X", "C");
  ProcTypingResult r = type_process(sys, "C", parse_pred("x >= 2"), p, t);
  CHECK(r.ok());
  CHECK(has_trace(r.trace, "t-sub closes the loop"));
}

TEST_CASE("a process that outruns its type is refuted") {
  System sys = parse(kTypeSys);
  ProcTypingResult r = type_process(sys, "C", nullptr,
                                    P("rec X . run weak() . X", "C"), L("[]"));
  CHECK(r.verdict == Verdict::Refuted);
  CHECK(has_issue(r, "t-sub", "type ends in a hole"));
}

// ---------------------------------------------------------------------------
// Logical-context monotonicity (spot check; the randomized suite generalizes)

TEST_CASE("strengthening the logical context preserves typability") {
  System sys = parse(kTypeSys);
  LocalP t = L("rec X . run C: gain() . run C: need4() . X");
  ProcP p = P("rec X . run gain() . run need4() . X", "C");
  for (const char* sigma : {"x >= 0", "x >= 0 & x <= 3", "x = 1", "x >= 1 & x = 2"}) {
    CAPTURE(sigma);
    ProcTypingResult r = type_process(sys, "C", parse_pred(sigma), p, t);
    CHECK(r.ok());
  }
}

// ---------------------------------------------------------------------------
// SMT dumps

TEST_CASE("failing validity queries can be dumped and re-parsed") {
  System sys = parse(kTypeSys);
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "choreo-typing-dump-test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  TypingOptions opts;
  opts.dump_smt_dir = dir.string();
  MotionAtom a;
  a.participant = "C";
  a.name = "m_move";
  a.args = {ex_num(Rat(3))};
  ProcTypingResult r =
      type_process(sys, "C", parse_pred("x = 5"), pc_motion(a, nullptr),
                   L("run C: m_move(3) . []"), opts);
  REQUIRE(r.verdict == Verdict::Refuted);
  REQUIRE(!r.issues.empty());
  REQUIRE(!r.issues[0].smt_file.empty());

  std::ifstream in(r.issues[0].smt_file);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  SmtParsed parsed = parse_smt2_validity(buf.str());
  REQUIRE(parsed.goal != nullptr);
  CHECK(parsed.bounds.bounds.count("C.x") == 1);
  // The dumped goal is the failing query itself: still refutable.
  CHECK(check_validity(parsed.goal, parsed.bounds).verdict == Verdict::Refuted);
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Session typing

static const char* kSessSys = R"(
system Line;
vars Prod : y;
vars Cart : x;
vars Arm : z;
bound Prod.y : [-10, 10];
bound Cart.x : [-10, 10];
bound Arm.z : [-10, 10];
init Prod : y = 0;
init Cart : x = 2;
init Arm : z = 6;
geom Prod : box(0, 1, 0, 1, 0, 1);
geom Cart : box(2, 3, 0, 1, 0, 1);
geom Arm : box(6, 7, 0, 1, 0, 1);

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

process Prod =
  rec X . run place() .
  if y <= 0 then Cart ! green() . run p_idle() . run p_idle() . X
  else Cart ! red() . run p_idle() . run p_idle() . X;
process Cart =
  rec X . run c_idle() .
  Prod ? { green() . run c_move() . Arm ! go() . run c_idle() . X,
           red()   . run c_move() . Arm ! go() . run c_idle() . X };
process Arm =
  rec X . run a_idle() . run a_idle() . Cart ? { go() . run a_work() . X };
)";

TEST_CASE("a full session types end to end") {
  System sys = parse(kSessSys);
  SessionReport rep = type_session(sys);
  for (const auto& [r, res] : rep.participants) {
    CAPTURE(r);
    for (const auto& i : res.issues) CAPTURE(i.rule + " " + i.where + ": " + i.detail);
    CHECK(res.ok());
  }
  CHECK(rep.session_issues.empty());
  CHECK(rep.ok());
  REQUIRE(rep.participants.size() == 3);
  CHECK(rep.participants.count("Prod") == 1);
  CHECK(rep.participants.count("Cart") == 1);
  CHECK(rep.participants.count("Arm") == 1);
}

TEST_CASE("every participant of the global type needs a process") {
  std::string src(kSessSys);
  size_t cut = src.find("process Arm");
  REQUIRE(cut != std::string::npos);
  System sys = parse_system(src.substr(0, cut), "test.mcc");
  SessionReport rep = type_session(sys);
  CHECK(rep.verdict == Verdict::Refuted);
  bool found = false;
  for (const auto& i : rep.session_issues)
    if (i.rule == "participant-without-process" && i.where == "Arm") found = true;
  CHECK(found);
  // The other two still type-check on their own.
  CHECK(rep.participants.at("Prod").ok());
  CHECK(rep.participants.at("Cart").ok());
}

TEST_CASE("a declared participant absent from the global type is reported") {
  std::string src(kSessSys);
  src.insert(src.find("bound Prod.y"), "vars Spare : s;\n");
  System sys = parse_system(src, "test.mcc");
  SessionReport rep = type_session(sys);
  CHECK(rep.verdict == Verdict::Refuted);
  bool found = false;
  for (const auto& i : rep.session_issues)
    if (i.rule == "t-sess" && i.where == "Spare" &&
        i.detail.find("does not occur") != std::string::npos)
      found = true;
  CHECK(found);
}

static const char* kCollideTemplate = R"(
system Collide;
vars P : a;
vars Q : b;
bound P.a : [0, 10];
bound Q.b : [0, 10];
init P : a = 0;
init Q : b = 0;
geom P : GEOM_P;
geom Q : GEOM_Q;

motion P.pm() { footprint: box(0, 1, 0, 1, 0, 1); duration: [1, 2]; mode: interruptible; trajectory: a := a; }
motion Q.qm() { footprint: box(4, 5, 0, 1, 0, 1); duration: [0, inf); mode: interruptible; trajectory: b := b; }

global Main = rec X . dt< P: pm(), Q: qm() > . P -> Q: k() . X;

process P = rec X . run pm() . Q ! k() . X;
process Q = rec X . run qm() . P ? { k() . X };
)";

static System collide_sys(const char* gp, const char* gq) {
  std::string src(kCollideTemplate);
  src.replace(src.find("GEOM_P"), 6, gp);
  src.replace(src.find("GEOM_Q"), 6, gq);
  return parse_system(src, "test.mcc");
}

TEST_CASE("overlapping initial geometries are a session error with a witness") {
  System sys = collide_sys("box(0, 1, 0, 1, 0, 1)", "box(0, 1, 0, 1, 0, 1)");
  SessionReport rep = type_session(sys);
  CHECK(rep.verdict == Verdict::Refuted);
  REQUIRE(!rep.session_issues.empty());
  const TypingIssue* coll = nullptr;
  for (const auto& i : rep.session_issues)
    if (i.rule == "initial-collision") coll = &i;
  REQUIRE(coll != nullptr);
  CHECK(coll->where == "P/Q");
  CHECK(coll->detail.find("witness") != std::string::npos);
  // Both participants still type-check; the failure is the spatial premise.
  CHECK(rep.participants.at("P").ok());
  CHECK(rep.participants.at("Q").ok());
}

TEST_CASE("initial disjointness does not depend on which side is which") {
  const char* near = "box(0, 2, 0, 1, 0, 1)";
  const char* far = "box(3, 5, 0, 1, 0, 1)";
  SessionReport ab = type_session(collide_sys(near, far));
  SessionReport ba = type_session(collide_sys(far, near));
  CHECK(ab.ok());
  CHECK(ba.ok());

  const char* lo = "box(0, 3, 0, 1, 0, 1)";
  const char* hi = "box(2, 5, 0, 1, 0, 1)";
  SessionReport xy = type_session(collide_sys(lo, hi));
  SessionReport yx = type_session(collide_sys(hi, lo));
  CHECK(xy.verdict == Verdict::Refuted);
  CHECK(yx.verdict == Verdict::Refuted);
}

TEST_CASE("session typing surfaces per-participant typing failures") {
  std::string src(kCollideTemplate);
  src.replace(src.find("GEOM_P"), 6, "box(0, 1, 0, 1, 0, 1)");
  src.replace(src.find("GEOM_Q"), 6, "box(2, 3, 0, 1, 0, 1)");
  // P sends a label the projected selection does not offer.
  size_t at = src.find("Q ! k()");
  src.replace(at, 7, "Q ! z()");
  // A label unknown to the global type still parses as a process.
  System sys = parse_system(src, "test.mcc");
  SessionReport rep = type_session(sys);
  CHECK(rep.verdict == Verdict::Refuted);
  CHECK(!rep.participants.at("P").ok());
  CHECK(rep.participants.at("Q").ok());
}
