#include "choreo/ast.hpp"

#include <cassert>
#include <functional>
#include <stdexcept>

namespace choreo {

// ---------------------------------------------------------------------------
// Expressions.


ExprP ex_num(const Rat& v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExKind::Num;
  e->num = v;
  return e;
}
ExprP ex_num(long v) { return ex_num(Rat(v)); }
ExprP ex_var(const std::string& name) {
  auto e = std::make_shared<Expr>();
  e->kind = ExKind::Var;
  e->var = name;
  return e;
}
static ExprP ex_bin(ExKind k, ExprP a, ExprP b) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
ExprP ex_add(ExprP a, ExprP b) { return ex_bin(ExKind::Add, std::move(a), std::move(b)); }
ExprP ex_sub(ExprP a, ExprP b) { return ex_bin(ExKind::Sub, std::move(a), std::move(b)); }
ExprP ex_mul(ExprP a, ExprP b) { return ex_bin(ExKind::Mul, std::move(a), std::move(b)); }
ExprP ex_div(ExprP a, ExprP b) { return ex_bin(ExKind::Div, std::move(a), std::move(b)); }
ExprP ex_neg(ExprP a) { return ex_bin(ExKind::Neg, std::move(a), nullptr); }
ExprP ex_sqrt(ExprP a) { return ex_bin(ExKind::Sqrt, std::move(a), nullptr); }
ExprP ex_min(ExprP a, ExprP b) { return ex_bin(ExKind::Min, std::move(a), std::move(b)); }
ExprP ex_max(ExprP a, ExprP b) { return ex_bin(ExKind::Max, std::move(a), std::move(b)); }

// ---------------------------------------------------------------------------
// Predicates.

PredP pr_lit(bool b) {
  auto p = std::make_shared<Pred>();
  p->kind = PrKind::Lit;
  p->lit = b;
  return p;
}
PredP pr_true() {
  static PredP t = pr_lit(true);
  return t;
}
PredP pr_false() {
  static PredP f = pr_lit(false);
  return f;
}
PredP pr_cmp(CmpOp op, ExprP l, ExprP r) {
  auto p = std::make_shared<Pred>();
  p->kind = PrKind::Cmp;
  p->op = op;
  p->lhs = std::move(l);
  p->rhs = std::move(r);
  return p;
}
PredP pr_not(PredP q) {
  auto p = std::make_shared<Pred>();
  p->kind = PrKind::Not;
  p->p = std::move(q);
  return p;
}
static bool is_lit(const PredP& p, bool v) { return p && p->kind == PrKind::Lit && p->lit == v; }
PredP pr_and(PredP a, PredP b) {
  if (is_lit(a, true)) return b;
  if (is_lit(b, true)) return a;
  if (is_lit(a, false) || is_lit(b, false)) return pr_false();
  auto p = std::make_shared<Pred>();
  p->kind = PrKind::And;
  p->p = std::move(a);
  p->q = std::move(b);
  return p;
}
PredP pr_or(PredP a, PredP b) {
  if (is_lit(a, false)) return b;
  if (is_lit(b, false)) return a;
  if (is_lit(a, true) || is_lit(b, true)) return pr_true();
  auto p = std::make_shared<Pred>();
  p->kind = PrKind::Or;
  p->p = std::move(a);
  p->q = std::move(b);
  return p;
}
PredP pr_imp(PredP a, PredP b) {
  if (is_lit(a, true)) return b;
  if (is_lit(b, true) || is_lit(a, false)) return pr_true();
  auto p = std::make_shared<Pred>();
  p->kind = PrKind::Imp;
  p->p = std::move(a);
  p->q = std::move(b);
  return p;
}

bool expr_equal(const ExprP& a, const ExprP& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExKind::Num: return a->num == b->num;
    case ExKind::Var: return a->var == b->var;
    case ExKind::Neg:
    case ExKind::Sqrt: return expr_equal(a->a, b->a);
    default: return expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
  }
}

bool pred_equal(const PredP& a, const PredP& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case PrKind::Lit: return a->lit == b->lit;
    case PrKind::Cmp:
      return a->op == b->op && expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
    case PrKind::Not: return pred_equal(a->p, b->p);
    default: return pred_equal(a->p, b->p) && pred_equal(a->q, b->q);
  }
}

void expr_vars(const ExprP& e, std::set<std::string>& out) {
  if (!e) return;
  switch (e->kind) {
    case ExKind::Num: return;
    case ExKind::Var: out.insert(e->var); return;
    default:
      expr_vars(e->a, out);
      expr_vars(e->b, out);
  }
}

void pred_vars(const PredP& p, std::set<std::string>& out) {
  if (!p) return;
  switch (p->kind) {
    case PrKind::Lit: return;
    case PrKind::Cmp:
      expr_vars(p->lhs, out);
      expr_vars(p->rhs, out);
      return;
    default:
      pred_vars(p->p, out);
      pred_vars(p->q, out);
  }
}

ExprP expr_subst(const ExprP& e, const std::map<std::string, ExprP>& m) {
  if (!e) return e;
  switch (e->kind) {
    case ExKind::Num: return e;
    case ExKind::Var: {
      auto it = m.find(e->var);
      return it == m.end() ? e : it->second;
    }
    case ExKind::Neg: return ex_neg(expr_subst(e->a, m));
    case ExKind::Sqrt: return ex_sqrt(expr_subst(e->a, m));
    default: {
      auto a = expr_subst(e->a, m);
      auto b = expr_subst(e->b, m);
      return ex_bin(e->kind, std::move(a), std::move(b));
    }
  }
}

PredP pred_subst(const PredP& p, const std::map<std::string, ExprP>& m) {
  if (!p) return p;
  switch (p->kind) {
    case PrKind::Lit: return p;
    case PrKind::Cmp: return pr_cmp(p->op, expr_subst(p->lhs, m), expr_subst(p->rhs, m));
    case PrKind::Not: return pr_not(pred_subst(p->p, m));
    case PrKind::And: return pr_and(pred_subst(p->p, m), pred_subst(p->q, m));
    case PrKind::Or: return pr_or(pred_subst(p->p, m), pred_subst(p->q, m));
    case PrKind::Imp: return pr_imp(pred_subst(p->p, m), pred_subst(p->q, m));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Sorts.

Sort sort_unit() { return Sort{SortKind::Unit, nullptr, nullptr}; }
Sort sort_real() { return Sort{SortKind::Real, nullptr, nullptr}; }
Sort sort_point() { return Sort{SortKind::Point, nullptr, nullptr}; }
Sort sort_vector() { return Sort{SortKind::Vector, nullptr, nullptr}; }
Sort sort_prod(const Sort& a, const Sort& b) {
  return Sort{SortKind::Prod, std::make_shared<Sort>(a), std::make_shared<Sort>(b)};
}
bool sort_equal(const Sort& a, const Sort& b) {
  if (a.kind != b.kind) return false;
  if (a.kind != SortKind::Prod) return true;
  return sort_equal(*a.a, *b.a) && sort_equal(*a.b, *b.b);
}
std::string sort_str(const Sort& s) {
  switch (s.kind) {
    case SortKind::Unit: return "unit";
    case SortKind::Real: return "real";
    case SortKind::Point: return "point";
    case SortKind::Vector: return "vector";
    case SortKind::Prod: return sort_str(*s.a) + " * " + sort_str(*s.b);
  }
  return "unit";
}

Refinement ref_trivial() { return Refinement{sort_unit(), pr_true()}; }
bool ref_equal(const Refinement& a, const Refinement& b) {
  return sort_equal(a.sort, b.sort) && pred_equal(a.pred, b.pred);
}

// ---------------------------------------------------------------------------
// Footprints.

Footprint fp_box(ExprP xlo, ExprP xhi, ExprP ylo, ExprP yhi, ExprP zlo, ExprP zhi) {
  Footprint f;
  f.kind = Footprint::Kind::Box;
  f.box = {std::move(xlo), std::move(xhi), std::move(ylo),
           std::move(yhi), std::move(zlo), std::move(zhi)};
  return f;
}
Footprint fp_pred(PredP p) {
  Footprint f;
  f.kind = Footprint::Kind::Pred;
  f.pred = std::move(p);
  return f;
}
bool fp_equal(const Footprint& a, const Footprint& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Footprint::Kind::Box) {
    for (int i = 0; i < 6; ++i)
      if (!expr_equal(a.box[i], b.box[i])) return false;
    return true;
  }
  return pred_equal(a.pred, b.pred);
}
PredP fp_as_pred(const Footprint& f) {
  if (f.kind == Footprint::Kind::Pred) return f.pred;
  static const char* axes[3] = {"px", "py", "pz"};
  PredP p = pr_true();
  for (int i = 0; i < 3; ++i) {
    p = pr_and(p, pr_cmp(CmpOp::Le, f.box[2 * i], ex_var(axes[i])));
    p = pr_and(p, pr_cmp(CmpOp::Le, ex_var(axes[i]), f.box[2 * i + 1]));
  }
  return p;
}

PredP fp_boxes_overlap(const Footprint& a, const Footprint& b) {
  assert(a.kind == Footprint::Kind::Box && b.kind == Footprint::Kind::Box);
  PredP p = pr_true();
  for (int i = 0; i < 3; ++i) {
    // Both boxes are nonempty on this axis and their closed intervals meet.
    p = pr_and(p, pr_cmp(CmpOp::Le, a.box[2 * i], a.box[2 * i + 1]));
    p = pr_and(p, pr_cmp(CmpOp::Le, b.box[2 * i], b.box[2 * i + 1]));
    p = pr_and(p, pr_cmp(CmpOp::Le, a.box[2 * i], b.box[2 * i + 1]));
    p = pr_and(p, pr_cmp(CmpOp::Le, b.box[2 * i], a.box[2 * i + 1]));
  }
  return p;
}

PredP fp_box_within(const Footprint& inner, const Footprint& outer) {
  assert(inner.kind == Footprint::Kind::Box && outer.kind == Footprint::Kind::Box);
  PredP empty = pr_false();
  PredP contained = pr_true();
  for (int i = 0; i < 3; ++i) {
    empty = pr_or(empty, pr_cmp(CmpOp::Lt, inner.box[2 * i + 1], inner.box[2 * i]));
    contained = pr_and(contained, pr_cmp(CmpOp::Le, outer.box[2 * i], inner.box[2 * i]));
    contained = pr_and(contained, pr_cmp(CmpOp::Le, inner.box[2 * i + 1], outer.box[2 * i + 1]));
  }
  return pr_or(empty, contained);
}

// ---------------------------------------------------------------------------
// Modes and duration intervals.

Mode mode_combine(Mode a, Mode b) {
  if (a == Mode::Interruptible && b == Mode::Interruptible) return Mode::Interruptible;
  return Mode::NonInterruptible;
}

Ival ival(const Rat& lo, const Rat& hi) { return Ival{lo, false, hi}; }
Ival ival_inf(const Rat& lo) { return Ival{lo, true, Rat(0)}; }
bool ival_contains(const Ival& i, const Rat& t) {
  if (t < i.lo) return false;
  return i.hi_inf || t <= i.hi;
}
bool ival_subset(const Ival& a, const Ival& b) {
  if (ival_empty(a)) return true;
  if (a.lo < b.lo) return false;
  if (b.hi_inf) return true;
  if (a.hi_inf) return false;
  return a.hi <= b.hi;
}
Ival ival_intersect(const Ival& a, const Ival& b) {
  Ival r;
  r.lo = a.lo > b.lo ? a.lo : b.lo;
  if (a.hi_inf && b.hi_inf) {
    r.hi_inf = true;
  } else {
    r.hi_inf = false;
    if (a.hi_inf) r.hi = b.hi;
    else if (b.hi_inf) r.hi = a.hi;
    else r.hi = a.hi < b.hi ? a.hi : b.hi;
  }
  return r;
}
Ival ival_hull(const Ival& a, const Ival& b) {
  Ival r;
  r.lo = a.lo < b.lo ? a.lo : b.lo;
  r.hi_inf = a.hi_inf || b.hi_inf;
  if (!r.hi_inf) r.hi = a.hi > b.hi ? a.hi : b.hi;
  return r;
}
bool ival_empty(const Ival& i) { return !i.hi_inf && i.hi < i.lo; }
bool ival_equal(const Ival& a, const Ival& b) {
  if (a.lo != b.lo || a.hi_inf != b.hi_inf) return false;
  return a.hi_inf || a.hi == b.hi;
}
std::string ival_str(const Ival& i) {
  if (i.hi_inf) return "[" + rat_str(i.lo) + ", inf)";
  return "[" + rat_str(i.lo) + ", " + rat_str(i.hi) + "]";
}

std::string motion_key(const std::string& owner, const std::string& name) {
  return owner + "." + name;
}

bool atom_equal(const MotionAtom& a, const MotionAtom& b) {
  if (a.participant != b.participant || a.name != b.name) return false;
  if (a.args.size() != b.args.size()) return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!expr_equal(a.args[i], b.args[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Global types.

GPrefixP gp_msg(std::string from, std::string to, PredP guard, std::string label, Refinement ref) {
  auto g = std::make_shared<GPrefix>();
  g->kind = GPKind::Message;
  g->from = std::move(from);
  g->to = std::move(to);
  g->guard = guard ? std::move(guard) : pr_true();
  g->label = std::move(label);
  g->ref = std::move(ref);
  return g;
}
GPrefixP gp_motion(std::vector<MotionAtom> atoms) {
  auto g = std::make_shared<GPrefix>();
  g->kind = GPKind::Motion;
  g->atoms = std::move(atoms);
  return g;
}
GPrefixP gp_seq(GPrefixP a, GPrefixP b) {
  auto g = std::make_shared<GPrefix>();
  g->kind = GPKind::Seq;
  g->a = std::move(a);
  g->b = std::move(b);
  return g;
}
GPrefixP gp_choice(std::vector<GPrefixP> alts) {
  auto g = std::make_shared<GPrefix>();
  g->kind = GPKind::Choice;
  g->alts = std::move(alts);
  return g;
}
GPrefixP gp_sep(GPrefixP a, GPrefixP b, std::optional<Footprint> cl, std::optional<Footprint> cr) {
  auto g = std::make_shared<GPrefix>();
  g->kind = GPKind::Sep;
  g->a = std::move(a);
  g->b = std::move(b);
  g->cell_left = std::move(cl);
  g->cell_right = std::move(cr);
  return g;
}

GlobalP gt_seq(GPrefixP g, GlobalP cont) {
  auto t = std::make_shared<GlobalType>();
  t->kind = GTKind::Seq;
  t->prefix = std::move(g);
  t->cont = std::move(cont);
  return t;
}
GlobalP gt_rec(std::string var, GlobalP body) {
  auto t = std::make_shared<GlobalType>();
  t->kind = GTKind::Rec;
  t->var = std::move(var);
  t->body = std::move(body);
  return t;
}
GlobalP gt_var(std::string var) {
  auto t = std::make_shared<GlobalType>();
  t->kind = GTKind::Var;
  t->var = std::move(var);
  return t;
}

static GlobalP gt_subst_var(const GlobalP& g, const std::string& v, const GlobalP& r) {
  if (!g) return g;
  switch (g->kind) {
    case GTKind::Var: return g->var == v ? r : g;
    case GTKind::Rec:
      if (g->var == v) return g;  // shadowed
      return gt_rec(g->var, gt_subst_var(g->body, v, r));
    case GTKind::Seq: return gt_seq(g->prefix, gt_subst_var(g->cont, v, r));
  }
  return g;
}

GlobalP gt_unfold(const GlobalP& g) {
  if (!g || g->kind != GTKind::Rec) return g;
  return gt_subst_var(g->body, g->var, g);
}

void gp_participants(const GPrefixP& g, std::set<std::string>& out) {
  if (!g) return;
  switch (g->kind) {
    case GPKind::Message:
      out.insert(g->from);
      out.insert(g->to);
      return;
    case GPKind::Motion:
      for (auto& a : g->atoms) out.insert(a.participant);
      return;
    case GPKind::Seq:
    case GPKind::Sep:
      gp_participants(g->a, out);
      gp_participants(g->b, out);
      return;
    case GPKind::Choice:
      for (auto& a : g->alts) gp_participants(a, out);
      return;
  }
}

std::set<std::string> gt_participants(const GlobalP& g0) {
  std::set<std::string> out;
  std::function<void(const GlobalP&)> go = [&](const GlobalP& g) {
    if (!g) return;
    switch (g->kind) {
      case GTKind::Seq:
        gp_participants(g->prefix, out);
        go(g->cont);
        return;
      case GTKind::Rec: go(g->body); return;
      case GTKind::Var: return;
    }
  };
  go(g0);
  return out;
}

// ---------------------------------------------------------------------------
// Equi-recursive equality. Types are trees (parser output, rebuilt spines),
// so a node pointer determines its binding environment and memoizing on
// pointer pairs is sound and finite.

namespace {

template <typename T>
struct EqEnv {
  std::map<std::string, std::shared_ptr<const T>> recs;
};

struct PtrPairLess {
  bool operator()(const std::pair<const void*, const void*>& a,
                  const std::pair<const void*, const void*>& b) const {
    return a < b;
  }
};

}  // namespace

static bool gt_equal_go(GlobalP a, EqEnv<GlobalType> ea, GlobalP b, EqEnv<GlobalType> eb,
                        std::set<std::pair<const void*, const void*>>& seen);

static bool gp_equal(const GPrefixP& a, const GPrefixP& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case GPKind::Message:
      return a->from == b->from && a->to == b->to && a->label == b->label &&
             pred_equal(a->guard, b->guard) && ref_equal(a->ref, b->ref);
    case GPKind::Motion: {
      if (a->atoms.size() != b->atoms.size()) return false;
      for (size_t i = 0; i < a->atoms.size(); ++i)
        if (!atom_equal(a->atoms[i], b->atoms[i])) return false;
      return true;
    }
    case GPKind::Seq:
    case GPKind::Sep: return gp_equal(a->a, b->a) && gp_equal(a->b, b->b);
    case GPKind::Choice: {
      if (a->alts.size() != b->alts.size()) return false;
      for (size_t i = 0; i < a->alts.size(); ++i)
        if (!gp_equal(a->alts[i], b->alts[i])) return false;
      return true;
    }
  }
  return false;
}

static bool gt_equal_go(GlobalP a, EqEnv<GlobalType> ea, GlobalP b, EqEnv<GlobalType> eb,
                        std::set<std::pair<const void*, const void*>>& seen) {
  // Normalize both sides to head form, unrolling rec binders.
  for (int hop = 0; hop < 4096; ++hop) {
    if (a && a->kind == GTKind::Rec) {
      ea.recs[a->var] = a;
      a = a->body;
      continue;
    }
    if (a && a->kind == GTKind::Var) {
      auto it = ea.recs.find(a->var);
      if (it == ea.recs.end()) break;  // free var: compare syntactically
      a = it->second->body;
      continue;
    }
    break;
  }
  for (int hop = 0; hop < 4096; ++hop) {
    if (b && b->kind == GTKind::Rec) {
      eb.recs[b->var] = b;
      b = b->body;
      continue;
    }
    if (b && b->kind == GTKind::Var) {
      auto it = eb.recs.find(b->var);
      if (it == eb.recs.end()) break;
      b = it->second->body;
      continue;
    }
    break;
  }
  if (a == b) return true;
  if (!a || !b) return false;
  auto key = std::make_pair((const void*)a.get(), (const void*)b.get());
  if (seen.count(key)) return true;
  seen.insert(key);
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case GTKind::Var: return a->var == b->var;  // both free
    case GTKind::Seq:
      return gp_equal(a->prefix, b->prefix) && gt_equal_go(a->cont, ea, b->cont, eb, seen);
    case GTKind::Rec: return false;  // unreachable after normalization
  }
  return false;
}

bool gt_equal(const GlobalP& a, const GlobalP& b) {
  std::set<std::pair<const void*, const void*>> seen;
  return gt_equal_go(a, {}, b, {}, seen);
}

// ---------------------------------------------------------------------------
// Local types.

LocalP lt_motion(MotionAtom a, LocalP cont) {
  auto t = std::make_shared<LocalType>();
  t->kind = LTKind::Motion;
  t->atom = std::move(a);
  t->cont = std::move(cont);
  return t;
}
LocalP lt_select(std::vector<SelectEntry> entries) {
  auto t = std::make_shared<LocalType>();
  t->kind = LTKind::Select;
  t->selects = std::move(entries);
  return t;
}
LocalP lt_branch(std::string peer, std::vector<BranchEntry> entries) {
  auto t = std::make_shared<LocalType>();
  t->kind = LTKind::Branch;
  t->peer = std::move(peer);
  t->branches = std::move(entries);
  return t;
}
LocalP lt_branch_default(std::string peer, std::vector<BranchEntry> entries, MotionAtom a,
                         LocalP cont) {
  auto t = std::make_shared<LocalType>();
  t->kind = LTKind::Branch;
  t->peer = std::move(peer);
  t->branches = std::move(entries);
  t->dflt = std::make_pair(std::move(a), std::move(cont));
  return t;
}
LocalP lt_rec(std::string var, LocalP body) {
  auto t = std::make_shared<LocalType>();
  t->kind = LTKind::Rec;
  t->var = std::move(var);
  t->body = std::move(body);
  return t;
}
LocalP lt_var(std::string var) {
  auto t = std::make_shared<LocalType>();
  t->kind = LTKind::Var;
  t->var = std::move(var);
  return t;
}
LocalP lt_hole() {
  auto t = std::make_shared<LocalType>();
  t->kind = LTKind::Hole;
  return t;
}

bool lt_is_branch_with_default(const LocalP& t) {
  return t && t->kind == LTKind::Branch && t->dflt.has_value();
}

static LocalP lt_subst_var(const LocalP& t, const std::string& v, const LocalP& r) {
  if (!t) return t;
  switch (t->kind) {
    case LTKind::Var: return t->var == v ? r : t;
    case LTKind::Rec:
      if (t->var == v) return t;
      return lt_rec(t->var, lt_subst_var(t->body, v, r));
    case LTKind::Motion: {
      auto n = std::make_shared<LocalType>(*t);
      n->cont = lt_subst_var(t->cont, v, r);
      return n;
    }
    case LTKind::Select: {
      auto n = std::make_shared<LocalType>(*t);
      for (auto& e : n->selects) e.cont = lt_subst_var(e.cont, v, r);
      return n;
    }
    case LTKind::Branch: {
      auto n = std::make_shared<LocalType>(*t);
      for (auto& e : n->branches) e.cont = lt_subst_var(e.cont, v, r);
      if (n->dflt) n->dflt->second = lt_subst_var(n->dflt->second, v, r);
      return n;
    }
    case LTKind::Hole: return t;
  }
  return t;
}

LocalP lt_unfold(const LocalP& t) {
  if (!t || t->kind != LTKind::Rec) return t;
  return lt_subst_var(t->body, t->var, t);
}

static bool lt_equal_go(LocalP a, EqEnv<LocalType> ea, LocalP b, EqEnv<LocalType> eb,
                        std::set<std::pair<const void*, const void*>>& seen) {
  for (int hop = 0; hop < 4096; ++hop) {
    if (a && a->kind == LTKind::Rec) {
      ea.recs[a->var] = a;
      a = a->body;
      continue;
    }
    if (a && a->kind == LTKind::Var) {
      auto it = ea.recs.find(a->var);
      if (it == ea.recs.end()) break;
      a = it->second->body;
      continue;
    }
    break;
  }
  for (int hop = 0; hop < 4096; ++hop) {
    if (b && b->kind == LTKind::Rec) {
      eb.recs[b->var] = b;
      b = b->body;
      continue;
    }
    if (b && b->kind == LTKind::Var) {
      auto it = eb.recs.find(b->var);
      if (it == eb.recs.end()) break;
      b = it->second->body;
      continue;
    }
    break;
  }
  if (a == b) return true;
  if (!a || !b) return false;
  auto key = std::make_pair((const void*)a.get(), (const void*)b.get());
  if (seen.count(key)) return true;
  seen.insert(key);
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case LTKind::Var: return a->var == b->var;
    case LTKind::Hole: return true;
    case LTKind::Motion:
      return atom_equal(a->atom, b->atom) && lt_equal_go(a->cont, ea, b->cont, eb, seen);
    case LTKind::Select: {
      if (a->selects.size() != b->selects.size()) return false;
      for (size_t i = 0; i < a->selects.size(); ++i) {
        const auto& x = a->selects[i];
        const auto& y = b->selects[i];
        if (x.peer != y.peer || x.label != y.label || !pred_equal(x.guard, y.guard) ||
            !ref_equal(x.ref, y.ref))
          return false;
        if (!lt_equal_go(x.cont, ea, y.cont, eb, seen)) return false;
      }
      return true;
    }
    case LTKind::Branch: {
      if (a->peer != b->peer || a->branches.size() != b->branches.size()) return false;
      if (a->dflt.has_value() != b->dflt.has_value()) return false;
      for (size_t i = 0; i < a->branches.size(); ++i) {
        const auto& x = a->branches[i];
        const auto& y = b->branches[i];
        if (x.label != y.label || !ref_equal(x.ref, y.ref)) return false;
        if (!lt_equal_go(x.cont, ea, y.cont, eb, seen)) return false;
      }
      if (a->dflt) {
        if (!atom_equal(a->dflt->first, b->dflt->first)) return false;
        if (!lt_equal_go(a->dflt->second, ea, b->dflt->second, eb, seen)) return false;
      }
      return true;
    }
    case LTKind::Rec: return false;
  }
  return false;
}

bool lt_equal(const LocalP& a, const LocalP& b) {
  std::set<std::pair<const void*, const void*>> seen;
  return lt_equal_go(a, {}, b, {}, seen);
}

LocalP lt_plug(const LocalP& t, const LocalP& c) {
  if (!t) return t;
  switch (t->kind) {
    case LTKind::Hole: return c;
    case LTKind::Var: return t;
    case LTKind::Rec: return lt_rec(t->var, lt_plug(t->body, c));
    case LTKind::Motion: {
      auto n = std::make_shared<LocalType>(*t);
      n->cont = lt_plug(t->cont, c);
      return n;
    }
    case LTKind::Select: {
      auto n = std::make_shared<LocalType>(*t);
      for (auto& e : n->selects) e.cont = lt_plug(e.cont, c);
      return n;
    }
    case LTKind::Branch: {
      auto n = std::make_shared<LocalType>(*t);
      for (auto& e : n->branches) e.cont = lt_plug(e.cont, c);
      if (n->dflt) n->dflt->second = lt_plug(n->dflt->second, c);
      return n;
    }
  }
  return t;
}

bool lt_has_hole(const LocalP& t) {
  if (!t) return false;
  switch (t->kind) {
    case LTKind::Hole: return true;
    case LTKind::Var: return false;
    case LTKind::Rec: return lt_has_hole(t->body);
    case LTKind::Motion: return lt_has_hole(t->cont);
    case LTKind::Select:
      for (auto& e : t->selects)
        if (lt_has_hole(e.cont)) return true;
      return false;
    case LTKind::Branch:
      for (auto& e : t->branches)
        if (lt_has_hole(e.cont)) return true;
      return t->dflt && lt_has_hole(t->dflt->second);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Processes.

ProcP pc_send(std::string peer, std::string label, ExprP payload, ProcP cont) {
  auto p = std::make_shared<Process>();
  p->kind = PKind::Send;
  p->peer = std::move(peer);
  p->label = std::move(label);
  p->payload = std::move(payload);
  p->cont = std::move(cont);
  return p;
}
ProcP pc_recv(std::string from, std::vector<RecvBranch> branches,
              std::optional<std::pair<MotionAtom, ProcP>> dflt) {
  auto p = std::make_shared<Process>();
  p->kind = PKind::Recv;
  p->peer = std::move(from);
  p->branches = std::move(branches);
  p->dflt = std::move(dflt);
  return p;
}
ProcP pc_motion(MotionAtom a, ProcP cont) {
  auto p = std::make_shared<Process>();
  p->kind = PKind::Motion;
  p->atom = std::move(a);
  p->cont = std::move(cont);
  return p;
}
ProcP pc_cond(PredP c, ProcP t, ProcP e) {
  auto p = std::make_shared<Process>();
  p->kind = PKind::Cond;
  p->cond = std::move(c);
  p->pthen = std::move(t);
  p->pelse = std::move(e);
  return p;
}
ProcP pc_rec(std::string var, ProcP body) {
  auto p = std::make_shared<Process>();
  p->kind = PKind::Rec;
  p->var = std::move(var);
  p->body = std::move(body);
  return p;
}
ProcP pc_var(std::string var) {
  auto p = std::make_shared<Process>();
  p->kind = PKind::Var;
  p->var = std::move(var);
  return p;
}

static ProcP pc_subst_var(const ProcP& p, const std::string& v, const ProcP& r) {
  if (!p) return p;
  switch (p->kind) {
    case PKind::Var: return p->var == v ? r : p;
    case PKind::Rec:
      if (p->var == v) return p;
      return pc_rec(p->var, pc_subst_var(p->body, v, r));
    case PKind::Send: return pc_send(p->peer, p->label, p->payload, pc_subst_var(p->cont, v, r));
    case PKind::Recv: {
      auto bs = p->branches;
      for (auto& b : bs) b.cont = pc_subst_var(b.cont, v, r);
      auto d = p->dflt;
      if (d) d->second = pc_subst_var(d->second, v, r);
      return pc_recv(p->peer, std::move(bs), std::move(d));
    }
    case PKind::Motion: return pc_motion(p->atom, pc_subst_var(p->cont, v, r));
    case PKind::Cond:
      return pc_cond(p->cond, pc_subst_var(p->pthen, v, r), pc_subst_var(p->pelse, v, r));
  }
  return p;
}

ProcP pc_unfold(const ProcP& p) {
  if (!p || p->kind != PKind::Rec) return p;
  return pc_subst_var(p->body, p->var, p);
}

static bool pc_equal_go(ProcP a, EqEnv<Process> ea, ProcP b, EqEnv<Process> eb,
                        std::set<std::pair<const void*, const void*>>& seen) {
  for (int hop = 0; hop < 4096; ++hop) {
    if (a && a->kind == PKind::Rec) {
      ea.recs[a->var] = a;
      a = a->body;
      continue;
    }
    if (a && a->kind == PKind::Var) {
      auto it = ea.recs.find(a->var);
      if (it == ea.recs.end()) break;
      a = it->second->body;
      continue;
    }
    break;
  }
  for (int hop = 0; hop < 4096; ++hop) {
    if (b && b->kind == PKind::Rec) {
      eb.recs[b->var] = b;
      b = b->body;
      continue;
    }
    if (b && b->kind == PKind::Var) {
      auto it = eb.recs.find(b->var);
      if (it == eb.recs.end()) break;
      b = it->second->body;
      continue;
    }
    break;
  }
  if (a == b) return true;
  if (!a || !b) return false;
  auto key = std::make_pair((const void*)a.get(), (const void*)b.get());
  if (seen.count(key)) return true;
  seen.insert(key);
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case PKind::Var: return a->var == b->var;
    case PKind::Send:
      return a->peer == b->peer && a->label == b->label && expr_equal(a->payload, b->payload) &&
             pc_equal_go(a->cont, ea, b->cont, eb, seen);
    case PKind::Recv: {
      if (a->peer != b->peer || a->branches.size() != b->branches.size()) return false;
      if (a->dflt.has_value() != b->dflt.has_value()) return false;
      for (size_t i = 0; i < a->branches.size(); ++i) {
        const auto& x = a->branches[i];
        const auto& y = b->branches[i];
        if (x.label != y.label || x.bind != y.bind) return false;
        if (!pc_equal_go(x.cont, ea, y.cont, eb, seen)) return false;
      }
      if (a->dflt) {
        if (!atom_equal(a->dflt->first, b->dflt->first)) return false;
        if (!pc_equal_go(a->dflt->second, ea, b->dflt->second, eb, seen)) return false;
      }
      return true;
    }
    case PKind::Motion:
      return atom_equal(a->atom, b->atom) && pc_equal_go(a->cont, ea, b->cont, eb, seen);
    case PKind::Cond:
      return pred_equal(a->cond, b->cond) && pc_equal_go(a->pthen, ea, b->pthen, eb, seen) &&
             pc_equal_go(a->pelse, ea, b->pelse, eb, seen);
    case PKind::Rec: return false;
  }
  return false;
}

bool pc_equal(const ProcP& a, const ProcP& b) {
  std::set<std::pair<const void*, const void*>> seen;
  return pc_equal_go(a, {}, b, {}, seen);
}

// ---------------------------------------------------------------------------
// Systems.

const Participant* System::find_participant(const std::string& n) const {
  for (auto& p : participants)
    if (p.name == n) return &p;
  return nullptr;
}

const MotionSpec* System::find_motion(const std::string& owner, const std::string& n) const {
  auto it = motions.find(motion_key(owner, n));
  return it == motions.end() ? nullptr : &it->second;
}

const Participant* System::owner_of_var(const std::string& bare) const {
  for (auto& p : participants)
    for (auto& v : p.state_vars)
      if (v == bare) return &p;
  return nullptr;
}

std::string qvar(const std::string& participant, const std::string& bare) {
  return participant + "." + bare;
}

static bool is_reserved_var(const std::string& n) {
  return n == "clock" || n == "nu" || n == "px" || n == "py" || n == "pz" || n == "nu.x" ||
         n == "nu.y" || n == "nu.z";
}

ExprP canonicalize_expr(const System& sys, const std::string& owner, const ExprP& e) {
  if (!e) return e;
  switch (e->kind) {
    case ExKind::Num: return e;
    case ExKind::Var: {
      const std::string& n = e->var;
      if (is_reserved_var(n)) return e;
      if (n.find('.') != std::string::npos) {
        // Already qualified: re-resolve through the bare name so inputs
        // written as "P.x" still land on the owning participant.
        auto bare = n.substr(n.find('.') + 1);
        if (auto* p = sys.owner_of_var(bare)) return ex_var(qvar(p->name, bare));
        return e;
      }
      if (auto* p = sys.owner_of_var(n)) return ex_var(qvar(p->name, n));
      (void)owner;
      return e;  // parameter or unknown: untouched
    }
    case ExKind::Neg: return ex_neg(canonicalize_expr(sys, owner, e->a));
    case ExKind::Sqrt: return ex_sqrt(canonicalize_expr(sys, owner, e->a));
    default: {
      auto ce = std::make_shared<Expr>();
      ce->kind = e->kind;
      ce->a = canonicalize_expr(sys, owner, e->a);
      ce->b = canonicalize_expr(sys, owner, e->b);
      return ce;
    }
  }
}

PredP canonicalize_pred(const System& sys, const std::string& owner, const PredP& p) {
  if (!p) return p;
  switch (p->kind) {
    case PrKind::Lit: return p;
    case PrKind::Cmp:
      return pr_cmp(p->op, canonicalize_expr(sys, owner, p->lhs),
                    canonicalize_expr(sys, owner, p->rhs));
    case PrKind::Not: return pr_not(canonicalize_pred(sys, owner, p->p));
    case PrKind::And:
      return pr_and(canonicalize_pred(sys, owner, p->p), canonicalize_pred(sys, owner, p->q));
    case PrKind::Or:
      return pr_or(canonicalize_pred(sys, owner, p->p), canonicalize_pred(sys, owner, p->q));
    case PrKind::Imp:
      return pr_imp(canonicalize_pred(sys, owner, p->p), canonicalize_pred(sys, owner, p->q));
  }
  return p;
}

static Footprint fp_map(const Footprint& f, const std::function<ExprP(const ExprP&)>& fe,
                        const std::function<PredP(const PredP&)>& fp) {
  Footprint r = f;
  if (f.kind == Footprint::Kind::Box) {
    for (int i = 0; i < 6; ++i) r.box[i] = fe(f.box[i]);
  } else {
    r.pred = fp(f.pred);
  }
  return r;
}

Footprint canonicalize_fp(const System& sys, const std::string& owner, const Footprint& f) {
  return fp_map(
      f, [&](const ExprP& e) { return canonicalize_expr(sys, owner, e); },
      [&](const PredP& p) { return canonicalize_pred(sys, owner, p); });
}

MotionInstance instantiate(const System& sys, const MotionAtom& atom) {
  const MotionSpec* spec = sys.find_motion(atom.participant, atom.name);
  if (!spec)
    throw std::invalid_argument("unknown motion " + motion_key(atom.participant, atom.name));
  if (spec->params.size() != atom.args.size())
    throw std::invalid_argument("arity mismatch for " + motion_key(atom.participant, atom.name));
  std::map<std::string, ExprP> sub;
  for (size_t i = 0; i < spec->params.size(); ++i)
    sub[spec->params[i].first] = canonicalize_expr(sys, atom.participant, atom.args[i]);
  auto doP = [&](const PredP& p) {
    return pred_subst(canonicalize_pred(sys, spec->owner, p), sub);
  };
  auto doE = [&](const ExprP& e) {
    return expr_subst(canonicalize_expr(sys, spec->owner, e), sub);
  };
  MotionInstance mi;
  mi.spec = spec;
  mi.atom = atom;
  mi.pre = doP(spec->pre);
  mi.assume = doP(spec->assume);
  mi.guarantee = doP(spec->guarantee);
  mi.post = doP(spec->post);
  mi.fp = fp_map(spec->fp, doE, doP);
  mi.duration = spec->duration;
  mi.mode = spec->mode;
  if (atom.cell) {
    // Cell annotations are written at the use site; bare names there belong
    // to the executing participant.
    mi.atom.cell = canonicalize_fp(sys, atom.participant, *atom.cell);
  }
  return mi;
}

MotionInstance lt_motion_instance(const System& sys, const LocalType& t) {
  assert(t.kind == LTKind::Motion);
  if (t.motion_inst) return *t.motion_inst;
  return instantiate(sys, t.atom);
}

MotionInstance lt_default_instance(const System& sys, const LocalType& t) {
  assert(t.kind == LTKind::Branch && t.dflt.has_value());
  if (t.dflt_inst) return *t.dflt_inst;
  return instantiate(sys, t.dflt->first);
}

}  // namespace choreo
