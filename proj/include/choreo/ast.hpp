#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "choreo/rational.hpp"

namespace choreo {

struct SrcSpan {
  int line = 0, col = 0, end_line = 0, end_col = 0;
  bool known() const { return line > 0; }
  std::string str() const { return std::to_string(line) + ":" + std::to_string(col); }
};

// ---------------------------------------------------------------------------
// Arithmetic expressions over real-valued variables.

enum class ExKind { Num, Var, Add, Sub, Mul, Div, Neg, Sqrt, Min, Max };

struct Expr;
using ExprP = std::shared_ptr<const Expr>;

struct Expr {
  ExKind kind;
  Rat num;          // Num
  std::string var;  // Var
  ExprP a, b;       // operands (Neg/Sqrt use a only)
};

ExprP ex_num(const Rat& v);
ExprP ex_num(long v);
ExprP ex_var(const std::string& name);
ExprP ex_add(ExprP a, ExprP b);
ExprP ex_sub(ExprP a, ExprP b);
ExprP ex_mul(ExprP a, ExprP b);
ExprP ex_div(ExprP a, ExprP b);
ExprP ex_neg(ExprP a);
ExprP ex_sqrt(ExprP a);
ExprP ex_min(ExprP a, ExprP b);
ExprP ex_max(ExprP a, ExprP b);

// ---------------------------------------------------------------------------
// Predicates.

enum class PrKind { Lit, Cmp, Not, And, Or, Imp };
enum class CmpOp { Lt, Le, Eq, Ge, Gt };

struct Pred;
using PredP = std::shared_ptr<const Pred>;

struct Pred {
  PrKind kind;
  bool lit = false;     // Lit
  CmpOp op = CmpOp::Eq; // Cmp
  ExprP lhs, rhs;       // Cmp
  PredP p, q;           // Not (p), And/Or/Imp
};

PredP pr_lit(bool b);
PredP pr_true();
PredP pr_false();
PredP pr_cmp(CmpOp op, ExprP l, ExprP r);
PredP pr_not(PredP p);
PredP pr_and(PredP p, PredP q);  // collapses literal true
PredP pr_or(PredP p, PredP q);
PredP pr_imp(PredP p, PredP q);

bool expr_equal(const ExprP& a, const ExprP& b);
bool pred_equal(const PredP& a, const PredP& b);
void expr_vars(const ExprP& e, std::set<std::string>& out);
void pred_vars(const PredP& p, std::set<std::string>& out);

// Simultaneous substitution of variables by expressions.
ExprP expr_subst(const ExprP& e, const std::map<std::string, ExprP>& m);
PredP pred_subst(const PredP& p, const std::map<std::string, ExprP>& m);

// ---------------------------------------------------------------------------
// Sorts and refinements.

enum class SortKind { Unit, Real, Point, Vector, Prod };

struct Sort {
  SortKind kind = SortKind::Unit;
  std::shared_ptr<const Sort> a, b;  // Prod
};

Sort sort_unit();
Sort sort_real();
Sort sort_point();
Sort sort_vector();
Sort sort_prod(const Sort& a, const Sort& b);
bool sort_equal(const Sort& a, const Sort& b);
std::string sort_str(const Sort& s);

// (nu : sort | pred); the bound payload variable is always "nu".
struct Refinement {
  Sort sort;
  PredP pred;
};

Refinement ref_trivial();  // (nu: unit | true)
bool ref_equal(const Refinement& a, const Refinement& b);

// ---------------------------------------------------------------------------
// Footprints: either a box with expression-valued edges (over X and clock)
// or a predicate over px/py/pz, X, clock.

struct Footprint {
  enum class Kind { Box, Pred } kind = Kind::Box;
  std::array<ExprP, 6> box{};  // xlo xhi ylo yhi zlo zhi
  PredP pred;
};

Footprint fp_box(ExprP xlo, ExprP xhi, ExprP ylo, ExprP yhi, ExprP zlo, ExprP zhi);
Footprint fp_pred(PredP p);
bool fp_equal(const Footprint& a, const Footprint& b);
// The footprint as a predicate over px/py/pz (boxes expand to conjunctions).
PredP fp_as_pred(const Footprint& f);
// For two Box footprints: a predicate over the edge expressions (no px/py/pz)
// saying the closed boxes share at least one point.  Requires Box kind.
PredP fp_boxes_overlap(const Footprint& a, const Footprint& b);
// For two Box footprints: a predicate over the edge expressions saying the
// inner box is contained in the outer one (an empty inner box is contained in
// anything).  Requires Box kind.
PredP fp_box_within(const Footprint& inner, const Footprint& outer);

// ---------------------------------------------------------------------------
// Motion primitives.

enum class Mode { Interruptible, NonInterruptible };  // Interruptible may be cut short by a message

// Mode of a composed group per the interrupt combinator: both interruptible
// stays interruptible, otherwise the composite is non-interruptible.
Mode mode_combine(Mode a, Mode b);

struct Ival {
  Rat lo;
  bool hi_inf = true;
  Rat hi;  // meaningful when !hi_inf
};

Ival ival(const Rat& lo, const Rat& hi);
Ival ival_inf(const Rat& lo);
bool ival_contains(const Ival& i, const Rat& t);
bool ival_subset(const Ival& a, const Ival& b);
Ival ival_intersect(const Ival& a, const Ival& b);  // may be empty (lo > hi)
Ival ival_hull(const Ival& a, const Ival& b);
bool ival_empty(const Ival& i);
bool ival_equal(const Ival& a, const Ival& b);
std::string ival_str(const Ival& i);

struct MotionSpec {
  std::string owner;  // participant
  std::string name;
  std::vector<std::pair<std::string, Sort>> params;
  PredP pre;        // over X ∪ W ∪ params
  PredP assume;     // over W ∪ {clock} ∪ params
  PredP guarantee;  // over X ∪ {clock} ∪ params
  PredP post;       // over X ∪ W ∪ params
  Footprint fp;
  Ival duration;
  Mode mode = Mode::Interruptible;
  // Closed forms mapping each state var to an expression over the initial
  // state (bare var names), params, and clock.
  std::vector<std::pair<std::string, ExprP>> trajectory;
};

std::string motion_key(const std::string& owner, const std::string& name);

// A use of a motion primitive inside a type or process.
struct MotionAtom {
  std::string participant;
  std::string name;
  std::vector<ExprP> args;
  std::optional<Footprint> cell;  // partition-cell annotation for compatibility
};

bool atom_equal(const MotionAtom& a, const MotionAtom& b);

// A motion spec applied to an atom's arguments: every predicate field is
// closed over qualified variables, parameters eliminated.
struct MotionInstance {
  const MotionSpec* spec = nullptr;
  MotionAtom atom;
  PredP pre, assume, guarantee, post;
  Footprint fp;
  Ival duration;
  Mode mode = Mode::Interruptible;
};

// ---------------------------------------------------------------------------
// Participants.

struct Participant {
  std::string name;
  std::vector<std::string> state_vars;  // X; names globally unique in a system
  std::vector<std::string> input_vars;  // W; each names another participant's state var
  Footprint geom;                       // occupied space as a function of X
  PredP init;
};

// ---------------------------------------------------------------------------
// Global types.   G ::= g.G | t | rec t.G
// g ::= message | joint motion | g.g | g+...+g | g*g

enum class GPKind { Message, Motion, Seq, Choice, Sep };

struct GPrefix;
using GPrefixP = std::shared_ptr<const GPrefix>;

struct GPrefix {
  GPKind kind;
  // Message
  std::string from, to;
  PredP guard;
  std::string label;
  Refinement ref;
  // Motion
  std::vector<MotionAtom> atoms;
  // Seq / Sep
  GPrefixP a, b;
  std::optional<Footprint> cell_left, cell_right;  // Sep annotations
  // Choice
  std::vector<GPrefixP> alts;
  mutable SrcSpan span;
};

GPrefixP gp_msg(std::string from, std::string to, PredP guard, std::string label, Refinement ref);
GPrefixP gp_motion(std::vector<MotionAtom> atoms);
GPrefixP gp_seq(GPrefixP a, GPrefixP b);
GPrefixP gp_choice(std::vector<GPrefixP> alts);
GPrefixP gp_sep(GPrefixP a, GPrefixP b, std::optional<Footprint> cl, std::optional<Footprint> cr);

enum class GTKind { Seq, Rec, Var };

struct GlobalType;
using GlobalP = std::shared_ptr<const GlobalType>;

struct GlobalType {
  GTKind kind;
  GPrefixP prefix;  // Seq
  GlobalP cont;     // Seq
  std::string var;  // Rec/Var
  GlobalP body;     // Rec
  mutable SrcSpan span;
};

GlobalP gt_seq(GPrefixP g, GlobalP cont);
GlobalP gt_rec(std::string var, GlobalP body);
GlobalP gt_var(std::string var);

// One-step unfolding: rec t.G  =>  G{rec t.G / t}.
GlobalP gt_unfold(const GlobalP& g);

void gp_participants(const GPrefixP& g, std::set<std::string>& out);
std::set<std::string> gt_participants(const GlobalP& g);

// Equality of regular trees (equi-recursive bisimulation).
bool gt_equal(const GlobalP& a, const GlobalP& b);

// ---------------------------------------------------------------------------
// Local types.

enum class LTKind { Motion, Select, Branch, Rec, Var, Hole };

struct LocalType;
using LocalP = std::shared_ptr<const LocalType>;

struct SelectEntry {
  PredP guard;
  std::string peer;
  std::string label;
  Refinement ref;
  LocalP cont;
};

struct BranchEntry {
  std::string label;
  Refinement ref;
  LocalP cont;
};

struct LocalType {
  LTKind kind;
  // Motion
  MotionAtom atom;
  LocalP cont;
  // Select
  std::vector<SelectEntry> selects;
  // Branch (+ optional default motion => BranchWithDefault)
  std::string peer;
  std::vector<BranchEntry> branches;
  std::optional<std::pair<MotionAtom, LocalP>> dflt;
  // Rec / Var
  std::string var;
  LocalP body;
  // Merge-synthesized motion semantics: set when the node's atom does not
  // name a declared motion (merged defaults); preferred over
  // re-instantiation by lt_motion_instance / lt_default_instance.
  std::optional<MotionInstance> motion_inst;
  std::optional<MotionInstance> dflt_inst;
};

LocalP lt_motion(MotionAtom a, LocalP cont);
LocalP lt_select(std::vector<SelectEntry> entries);
LocalP lt_branch(std::string peer, std::vector<BranchEntry> entries);
LocalP lt_branch_default(std::string peer, std::vector<BranchEntry> entries, MotionAtom a, LocalP cont);
LocalP lt_rec(std::string var, LocalP body);
LocalP lt_var(std::string var);
LocalP lt_hole();

bool lt_is_branch_with_default(const LocalP& t);
LocalP lt_unfold(const LocalP& t);
bool lt_equal(const LocalP& a, const LocalP& b);
// Replaces every Hole leaf by c.
LocalP lt_plug(const LocalP& t, const LocalP& c);
bool lt_has_hole(const LocalP& t);

// ---------------------------------------------------------------------------
// Processes.

enum class PKind { Send, Recv, Motion, Cond, Rec, Var };

struct Process;
using ProcP = std::shared_ptr<const Process>;

struct RecvBranch {
  std::string label;
  std::string bind;  // payload variable
  ProcP cont;
};

struct Process {
  PKind kind;
  // Send
  std::string peer;  // also the sender for Recv
  std::string label;
  ExprP payload;
  ProcP cont;  // Send / Motion continuation
  // Recv (+ optional default motion)
  std::vector<RecvBranch> branches;
  std::optional<std::pair<MotionAtom, ProcP>> dflt;
  // Motion
  MotionAtom atom;
  // Cond
  PredP cond;
  ProcP pthen, pelse;
  // Rec / Var
  std::string var;
  ProcP body;
  mutable SrcSpan span;
};

ProcP pc_send(std::string peer, std::string label, ExprP payload, ProcP cont);
ProcP pc_recv(std::string from, std::vector<RecvBranch> branches,
              std::optional<std::pair<MotionAtom, ProcP>> dflt = std::nullopt);
ProcP pc_motion(MotionAtom a, ProcP cont);
ProcP pc_cond(PredP c, ProcP t, ProcP e);
ProcP pc_rec(std::string var, ProcP body);
ProcP pc_var(std::string var);

ProcP pc_unfold(const ProcP& p);
bool pc_equal(const ProcP& a, const ProcP& b);

// ---------------------------------------------------------------------------
// Systems.

struct VarBounds {
  // var name -> [lo, hi]
  std::map<std::string, std::pair<Rat, Rat>> bounds;
};

struct System {
  std::string name;
  std::vector<Participant> participants;
  std::map<std::string, MotionSpec> motions;  // keyed by "Owner.name"
  VarBounds bounds;
  std::string global_name;
  GlobalP global;
  std::map<std::string, ProcP> processes;

  const Participant* find_participant(const std::string& n) const;
  const MotionSpec* find_motion(const std::string& owner, const std::string& n) const;
  // Owner of a state variable (input variables resolve through this).
  const Participant* owner_of_var(const std::string& bare) const;
};

// Qualified variable name "P.x".
std::string qvar(const std::string& participant, const std::string& bare);

// Rewrites input-variable references to their source state variable's
// qualified name; state vars of p become "p.x". Reserved names
// (clock, nu, px, py, pz) and unknown names are left alone.
PredP canonicalize_pred(const System& sys, const std::string& owner, const PredP& p);
ExprP canonicalize_expr(const System& sys, const std::string& owner, const ExprP& e);
Footprint canonicalize_fp(const System& sys, const std::string& owner, const Footprint& f);

// Instantiates a motion spec with an atom's argument expressions:
// parameters are substituted positionally; state/input vars are qualified.
// Returns a spec whose predicate fields are closed over qualified vars,
// params eliminated.
MotionInstance instantiate(const System& sys, const MotionAtom& atom);

// The semantic contract carried by a local-type Motion node or Branch
// default: the merge-synthesized instance when present, otherwise the atom
// instantiated against the system's motion declarations.
MotionInstance lt_motion_instance(const System& sys, const LocalType& t);
MotionInstance lt_default_instance(const System& sys, const LocalType& t);

}  // namespace choreo
