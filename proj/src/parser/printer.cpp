#include "choreo/printer.hpp"

#include <sstream>

namespace choreo {

// ---------------------------------------------------------------------------
// Expressions. Precedence: Add/Sub 1, Mul/Div 2, Neg 3, atoms 4.

static int ex_prec(const ExprP& e) {
  switch (e->kind) {
    case ExKind::Add:
    case ExKind::Sub: return 1;
    case ExKind::Mul:
    case ExKind::Div: return 2;
    case ExKind::Neg: return 3;
    default: return 4;
  }
}

static void rx(std::ostringstream& o, const ExprP& e, int ctx) {
  if (!e) {
    o << "<null>";
    return;
  }
  int p = ex_prec(e);
  bool paren = p < ctx;
  if (paren) o << "(";
  switch (e->kind) {
    case ExKind::Num: o << rat_decimal_str(e->num); break;
    case ExKind::Var: o << e->var; break;
    case ExKind::Add:
      rx(o, e->a, 1);
      o << " + ";
      rx(o, e->b, 2);
      break;
    case ExKind::Sub:
      rx(o, e->a, 1);
      o << " - ";
      rx(o, e->b, 2);
      break;
    case ExKind::Mul:
      rx(o, e->a, 2);
      o << " * ";
      rx(o, e->b, 3);
      break;
    case ExKind::Div:
      rx(o, e->a, 2);
      o << " / ";
      rx(o, e->b, 3);
      break;
    case ExKind::Neg:
      o << "-";
      rx(o, e->a, 3);
      break;
    case ExKind::Sqrt:
      o << "sqrt(";
      rx(o, e->a, 0);
      o << ")";
      break;
    case ExKind::Min:
      o << "min(";
      rx(o, e->a, 0);
      o << ", ";
      rx(o, e->b, 0);
      o << ")";
      break;
    case ExKind::Max:
      o << "max(";
      rx(o, e->a, 0);
      o << ", ";
      rx(o, e->b, 0);
      o << ")";
      break;
  }
  if (paren) o << ")";
}

std::string render_expr(const ExprP& e) {
  std::ostringstream o;
  rx(o, e, 0);
  return o.str();
}

// ---------------------------------------------------------------------------
// Predicates. Precedence: Imp 1 (right), Or 2, And 3, Not 4, Cmp/Lit 5.

static int pr_prec(const PredP& p) {
  switch (p->kind) {
    case PrKind::Imp: return 1;
    case PrKind::Or: return 2;
    case PrKind::And: return 3;
    case PrKind::Not: return 4;
    default: return 5;
  }
}

static const char* cmp_str(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Eq: return "=";
    case CmpOp::Ge: return ">=";
    case CmpOp::Gt: return ">";
  }
  return "?";
}

static void rp(std::ostringstream& o, const PredP& p, int ctx) {
  if (!p) {
    o << "<null>";
    return;
  }
  int prec = pr_prec(p);
  bool paren = prec < ctx;
  if (paren) o << "(";
  switch (p->kind) {
    case PrKind::Lit: o << (p->lit ? "true" : "false"); break;
    case PrKind::Cmp:
      rx(o, p->lhs, 0);
      o << " " << cmp_str(p->op) << " ";
      rx(o, p->rhs, 0);
      break;
    case PrKind::Not:
      o << "!";
      rp(o, p->p, 5);
      break;
    case PrKind::And:
      rp(o, p->p, 4);
      o << " && ";
      rp(o, p->q, 3);
      break;
    case PrKind::Or:
      rp(o, p->p, 3);
      o << " || ";
      rp(o, p->q, 2);
      break;
    case PrKind::Imp:
      rp(o, p->p, 2);
      o << " => ";
      rp(o, p->q, 1);
      break;
  }
  if (paren) o << ")";
}

std::string render_pred(const PredP& p) {
  std::ostringstream o;
  rp(o, p, 0);
  return o.str();
}

// ---------------------------------------------------------------------------

std::string render_sort(const Sort& s) {
  switch (s.kind) {
    case SortKind::Unit: return "unit";
    case SortKind::Real: return "real";
    case SortKind::Point: return "point";
    case SortKind::Vector: return "vector";
    case SortKind::Prod: {
      std::string l = render_sort(*s.a);
      if (s.a->kind == SortKind::Prod) l = "(" + l + ")";
      return l + " * " + render_sort(*s.b);
    }
  }
  return "unit";
}

std::string render_ref(const Refinement& r) {
  return "nu: " + render_sort(r.sort) + " | " + render_pred(r.pred);
}

std::string render_fp(const Footprint& f) {
  if (f.kind == Footprint::Kind::Box) {
    std::ostringstream o;
    o << "box(";
    for (int i = 0; i < 6; ++i) {
      if (i) o << ", ";
      rx(o, f.box[i], 0);
    }
    o << ")";
    return o.str();
  }
  return "pred(" + render_pred(f.pred) + ")";
}

std::string render_ival(const Ival& i) {
  if (i.hi_inf) return "[" + rat_decimal_str(i.lo) + ", inf)";
  return "[" + rat_decimal_str(i.lo) + ", " + rat_decimal_str(i.hi) + "]";
}

static std::string render_args(const std::vector<ExprP>& args) {
  std::ostringstream o;
  o << "(";
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) o << ", ";
    rx(o, args[i], 0);
  }
  o << ")";
  return o.str();
}

std::string render_atom(const MotionAtom& a) {
  std::string s = a.participant + ": " + a.name + render_args(a.args);
  if (a.cell) s += " @ " + render_fp(*a.cell);
  return s;
}

// ---------------------------------------------------------------------------
// Global prefixes. Factor position: atoms and seps render bare; choices and
// seqs wrap themselves in parentheses (the grammar only allows them there).

static bool ref_is_unit_trivial(const Refinement& r) {
  return r.sort.kind == SortKind::Unit && r.pred && r.pred->kind == PrKind::Lit && r.pred->lit;
}

static std::string render_gp(const GPrefixP& g, bool factor_pos);

static std::string render_gp_seq_chain(const GPrefixP& g) {
  // Inside parentheses: a '.'-chain of factors.
  if (g->kind == GPKind::Seq)
    return render_gp(g->a, true) + " . " + render_gp_seq_chain(g->b);
  return render_gp(g, true);
}

static std::string render_gp(const GPrefixP& g, bool factor_pos) {
  if (!g) return "<null>";
  switch (g->kind) {
    case GPKind::Message: {
      std::string s = g->from + " -> " + g->to + " [" + render_pred(g->guard) + "]: " + g->label;
      if (ref_is_unit_trivial(g->ref)) s += "()";
      else s += "(" + render_ref(g->ref) + ")";
      return s;
    }
    case GPKind::Motion: {
      std::string s = "dt< ";
      for (size_t i = 0; i < g->atoms.size(); ++i) {
        if (i) s += ", ";
        s += render_atom(g->atoms[i]);
      }
      s += " >";
      return s;
    }
    case GPKind::Sep: {
      std::string s = render_gp(g->a, true) + " *[" +
                      (g->cell_left ? render_fp(*g->cell_left) : std::string("none")) + " | " +
                      (g->cell_right ? render_fp(*g->cell_right) : std::string("none")) + "] " +
                      render_gp(g->b, true);
      return factor_pos ? "(" + s + ")" : s;
    }
    case GPKind::Seq: {
      std::string s = render_gp_seq_chain(g);
      return factor_pos ? "(" + s + ")" : s;
    }
    case GPKind::Choice: {
      std::string s = "( ";
      for (size_t i = 0; i < g->alts.size(); ++i) {
        if (i) s += " + ";
        s += render_gp(g->alts[i], false);
      }
      s += " )";
      return s;
    }
  }
  return "<null>";
}

std::string render_gprefix(const GPrefixP& g) { return render_gp(g, true); }

std::string render_global(const GlobalP& g) {
  if (!g) return "<null>";
  switch (g->kind) {
    case GTKind::Var: return g->var;
    case GTKind::Rec: return "rec " + g->var + " . " + render_global(g->body);
    case GTKind::Seq: return render_gp(g->prefix, true) + " . " + render_global(g->cont);
  }
  return "<null>";
}

// ---------------------------------------------------------------------------
// Local types.

static std::string render_local_atom(const MotionAtom& a) {
  // Subject is contextual; keep it explicit for unambiguous re-parsing.
  std::string s = "run " + a.participant + ": " + a.name + render_args(a.args);
  if (a.cell) s += " @ " + render_fp(*a.cell);
  return s;
}

std::string render_local(const LocalP& t) {
  if (!t) return "<null>";
  switch (t->kind) {
    case LTKind::Hole: return "[]";
    case LTKind::Var: return t->var;
    case LTKind::Rec: return "rec " + t->var + " . " + render_local(t->body);
    case LTKind::Motion: return render_local_atom(t->atom) + " . " + render_local(t->cont);
    case LTKind::Select: {
      if (t->selects.size() == 1) {
        const auto& e = t->selects[0];
        std::string s = e.peer + "![" + render_pred(e.guard) + "] " + e.label;
        if (ref_is_unit_trivial(e.ref)) s += "()";
        else s += "(" + render_ref(e.ref) + ")";
        return s + " . " + render_local(e.cont);
      }
      std::string s = "!{ ";
      for (size_t i = 0; i < t->selects.size(); ++i) {
        const auto& e = t->selects[i];
        if (i) s += ", ";
        s += e.peer + "![" + render_pred(e.guard) + "] " + e.label;
        if (ref_is_unit_trivial(e.ref)) s += "()";
        else s += "(" + render_ref(e.ref) + ")";
        s += " . " + render_local(e.cont);
      }
      return s + " }";
    }
    case LTKind::Branch: {
      std::string s = t->peer + "?{ ";
      for (size_t i = 0; i < t->branches.size(); ++i) {
        const auto& e = t->branches[i];
        if (i) s += ", ";
        s += e.label;
        if (ref_is_unit_trivial(e.ref)) s += "()";
        else s += "(" + render_ref(e.ref) + ")";
        s += " . " + render_local(e.cont);
      }
      if (t->dflt) {
        if (!t->branches.empty()) s += ", ";
        s += "after " + render_local_atom(t->dflt->first) + " . " + render_local(t->dflt->second);
      }
      return s + " }";
    }
  }
  return "<null>";
}

// ---------------------------------------------------------------------------
// Processes.

std::string render_process(const ProcP& p) {
  if (!p) return "<null>";
  switch (p->kind) {
    case PKind::Var: return p->var;
    case PKind::Rec: return "rec " + p->var + " . " + render_process(p->body);
    case PKind::Send:
      return p->peer + "!" + p->label + "(" + (p->payload ? render_expr(p->payload) : "") + ") . " +
             render_process(p->cont);
    case PKind::Motion: {
      std::string s = "run " + p->atom.name + render_args(p->atom.args);
      return s + " . " + render_process(p->cont);
    }
    case PKind::Cond:
      return "if " + render_pred(p->cond) + " then ( " + render_process(p->pthen) + " ) else ( " +
             render_process(p->pelse) + " )";
    case PKind::Recv: {
      std::string s = p->peer + "?{ ";
      for (size_t i = 0; i < p->branches.size(); ++i) {
        const auto& b = p->branches[i];
        if (i) s += ", ";
        s += b.label + "(" + b.bind + ") . " + render_process(b.cont);
      }
      if (p->dflt) {
        if (!p->branches.empty()) s += ", ";
        s += "after run " + p->dflt->first.name + render_args(p->dflt->first.args) + " . " +
             render_process(p->dflt->second);
      }
      return s + " }";
    }
  }
  return "<null>";
}

// ---------------------------------------------------------------------------
// Whole systems.

std::string render_system(const System& s) {
  std::ostringstream o;
  o << "system " << s.name << ";\n\n";
  for (const auto& p : s.participants) {
    o << "vars " << p.name << " : ";
    for (size_t i = 0; i < p.state_vars.size(); ++i) {
      if (i) o << ", ";
      o << p.state_vars[i];
    }
    o << ";\n";
    if (!p.input_vars.empty()) {
      o << "inputs " << p.name << " : ";
      for (size_t i = 0; i < p.input_vars.size(); ++i) {
        if (i) o << ", ";
        o << p.input_vars[i];
      }
      o << ";\n";
    }
    o << "init " << p.name << " : " << render_pred(p.init) << ";\n";
    o << "geom " << p.name << " : " << render_fp(p.geom) << ";\n";
  }
  o << "\n";
  for (const auto& [v, b] : s.bounds.bounds)
    o << "bound " << v << " : [" << rat_decimal_str(b.first) << ", " << rat_decimal_str(b.second)
      << "];\n";
  o << "\n";
  for (const auto& [key, m] : s.motions) {
    o << "motion " << m.owner << "." << m.name << "(";
    for (size_t i = 0; i < m.params.size(); ++i) {
      if (i) o << ", ";
      o << m.params[i].first << ": " << render_sort(m.params[i].second);
    }
    o << ") {\n";
    o << "  pre: " << render_pred(m.pre) << ";\n";
    o << "  assume: " << render_pred(m.assume) << ";\n";
    o << "  guarantee: " << render_pred(m.guarantee) << ";\n";
    o << "  post: " << render_pred(m.post) << ";\n";
    o << "  footprint: " << render_fp(m.fp) << ";\n";
    o << "  duration: " << render_ival(m.duration) << ";\n";
    o << "  mode: " << (m.mode == Mode::Interruptible ? "interruptible" : "noninterruptible")
      << ";\n";
    if (!m.trajectory.empty()) {
      o << "  trajectory: ";
      for (size_t i = 0; i < m.trajectory.size(); ++i) {
        if (i) o << ", ";
        o << m.trajectory[i].first << " := " << render_expr(m.trajectory[i].second);
      }
      o << ";\n";
    }
    o << "}\n\n";
  }
  if (s.global) o << "global " << s.global_name << " = " << render_global(s.global) << ";\n\n";
  for (const auto& [name, proc] : s.processes)
    o << "process " << name << " = " << render_process(proc) << ";\n";
  return o.str();
}

}  // namespace choreo
