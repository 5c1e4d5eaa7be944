#include "choreo/interval.hpp"

#include <algorithm>

namespace choreo {

RIval ri_add(const RIval& a, const RIval& b) {
  if (a.top || b.top) return RIval::whole();
  return RIval::make(Rat(a.lo + b.lo), Rat(a.hi + b.hi));
}
RIval ri_sub(const RIval& a, const RIval& b) {
  if (a.top || b.top) return RIval::whole();
  return RIval::make(Rat(a.lo - b.hi), Rat(a.hi - b.lo));
}
RIval ri_neg(const RIval& a) {
  if (a.top) return a;
  return RIval::make(Rat(-a.hi), Rat(-a.lo));
}
RIval ri_mul(const RIval& a, const RIval& b) {
  if (a.top || b.top) return RIval::whole();
  Rat c1 = a.lo * b.lo, c2 = a.lo * b.hi, c3 = a.hi * b.lo, c4 = a.hi * b.hi;
  Rat lo = std::min(std::min(c1, c2), std::min(c3, c4));
  Rat hi = std::max(std::max(c1, c2), std::max(c3, c4));
  return RIval::make(lo, hi);
}
RIval ri_div(const RIval& a, const RIval& b) {
  if (a.top || b.top) return RIval::whole();
  // Division by an interval containing zero is undefined here.
  if (b.lo <= 0 && 0 <= b.hi) return RIval::whole();
  Rat c1 = a.lo / b.lo, c2 = a.lo / b.hi, c3 = a.hi / b.lo, c4 = a.hi / b.hi;
  Rat lo = std::min(std::min(c1, c2), std::min(c3, c4));
  Rat hi = std::max(std::max(c1, c2), std::max(c3, c4));
  return RIval::make(lo, hi);
}
RIval ri_sqrt(const RIval& a, unsigned prec_bits) {
  if (a.top) return a;
  if (a.hi < 0) return RIval::whole();  // entirely undefined
  Rat lo_in = a.lo < 0 ? Rat(0) : a.lo;
  Rat llo, lhi, hlo, hhi;
  if (auto ex = rat_sqrt_exact(lo_in)) {
    llo = *ex;
  } else {
    rat_sqrt_bounds(lo_in, prec_bits, llo, lhi);
  }
  if (auto ex = rat_sqrt_exact(a.hi)) {
    hhi = *ex;
  } else {
    rat_sqrt_bounds(a.hi, prec_bits, hlo, hhi);
  }
  return RIval::make(llo, hhi);
}
RIval ri_min(const RIval& a, const RIval& b) {
  if (a.top || b.top) return RIval::whole();
  return RIval::make(std::min(a.lo, b.lo), std::min(a.hi, b.hi));
}
RIval ri_max(const RIval& a, const RIval& b) {
  if (a.top || b.top) return RIval::whole();
  return RIval::make(std::max(a.lo, b.lo), std::max(a.hi, b.hi));
}
RIval ri_sqr(const RIval& a) {
  if (a.top) return a;
  Rat l2 = a.lo * a.lo, h2 = a.hi * a.hi;
  if (a.lo >= 0) return RIval::make(l2, h2);
  if (a.hi <= 0) return RIval::make(h2, l2);
  return RIval::make(Rat(0), std::max(l2, h2));
}
RIval ri_abs(const RIval& a) {
  if (a.top) return a;
  if (a.lo >= 0) return a;
  if (a.hi <= 0) return ri_neg(a);
  return RIval::make(Rat(0), std::max(Rat(-a.lo), a.hi));
}

RIval eval_expr_interval(const ExprP& e, const IEnv& env) {
  if (!e) return RIval::whole();
  switch (e->kind) {
    case ExKind::Num: return RIval::point(e->num);
    case ExKind::Var: {
      auto it = env.find(e->var);
      return it == env.end() ? RIval::whole() : it->second;
    }
    case ExKind::Add: return ri_add(eval_expr_interval(e->a, env), eval_expr_interval(e->b, env));
    case ExKind::Sub: return ri_sub(eval_expr_interval(e->a, env), eval_expr_interval(e->b, env));
    case ExKind::Mul:
      if (expr_equal(e->a, e->b)) return ri_sqr(eval_expr_interval(e->a, env));
      return ri_mul(eval_expr_interval(e->a, env), eval_expr_interval(e->b, env));
    case ExKind::Div: return ri_div(eval_expr_interval(e->a, env), eval_expr_interval(e->b, env));
    case ExKind::Neg: return ri_neg(eval_expr_interval(e->a, env));
    case ExKind::Sqrt: return ri_sqrt(eval_expr_interval(e->a, env));
    case ExKind::Min: return ri_min(eval_expr_interval(e->a, env), eval_expr_interval(e->b, env));
    case ExKind::Max:
      // |e| written as max(e, -e)
      if (e->b && e->b->kind == ExKind::Neg && expr_equal(e->b->a, e->a))
        return ri_abs(eval_expr_interval(e->a, env));
      return ri_max(eval_expr_interval(e->a, env), eval_expr_interval(e->b, env));
  }
  return RIval::whole();
}

static TriBool cmp_intervals(CmpOp op, const RIval& l, const RIval& r) {
  if (l.top || r.top) return TriBool::Unknown;
  switch (op) {
    case CmpOp::Le:
      if (l.hi <= r.lo) return TriBool::True;
      if (l.lo > r.hi) return TriBool::False;
      return TriBool::Unknown;
    case CmpOp::Lt:
      if (l.hi < r.lo) return TriBool::True;
      if (l.lo >= r.hi) return TriBool::False;
      return TriBool::Unknown;
    case CmpOp::Ge: return cmp_intervals(CmpOp::Le, r, l);
    case CmpOp::Gt: return cmp_intervals(CmpOp::Lt, r, l);
    case CmpOp::Eq:
      if (l.lo == l.hi && r.lo == r.hi && l.lo == r.lo) return TriBool::True;
      if (l.hi < r.lo || r.hi < l.lo) return TriBool::False;
      return TriBool::Unknown;
  }
  return TriBool::Unknown;
}

TriBool eval_pred_interval(const PredP& p, const IEnv& env) {
  if (!p) return TriBool::Unknown;
  switch (p->kind) {
    case PrKind::Lit: return tri(p->lit);
    case PrKind::Cmp:
      return cmp_intervals(p->op, eval_expr_interval(p->lhs, env),
                           eval_expr_interval(p->rhs, env));
    case PrKind::Not: return tnot(eval_pred_interval(p->p, env));
    case PrKind::And: return tand(eval_pred_interval(p->p, env), eval_pred_interval(p->q, env));
    case PrKind::Or: return tor(eval_pred_interval(p->p, env), eval_pred_interval(p->q, env));
    case PrKind::Imp: return timp(eval_pred_interval(p->p, env), eval_pred_interval(p->q, env));
  }
  return TriBool::Unknown;
}

std::optional<Rat> eval_expr_point(const ExprP& e, const std::map<std::string, Rat>& env) {
  if (!e) return std::nullopt;
  switch (e->kind) {
    case ExKind::Num: return e->num;
    case ExKind::Var: {
      auto it = env.find(e->var);
      if (it == env.end()) return std::nullopt;
      return it->second;
    }
    case ExKind::Neg: {
      auto a = eval_expr_point(e->a, env);
      if (!a) return std::nullopt;
      return Rat(-*a);
    }
    case ExKind::Sqrt: {
      auto a = eval_expr_point(e->a, env);
      if (!a || *a < 0) return std::nullopt;
      return rat_sqrt_exact(*a);  // nullopt if irrational
    }
    default: {
      auto a = eval_expr_point(e->a, env);
      auto b = eval_expr_point(e->b, env);
      if (!a || !b) return std::nullopt;
      switch (e->kind) {
        case ExKind::Add: return Rat(*a + *b);
        case ExKind::Sub: return Rat(*a - *b);
        case ExKind::Mul: return Rat(*a * *b);
        case ExKind::Div:
          if (*b == 0) return std::nullopt;
          return Rat(*a / *b);
        case ExKind::Min: return std::min(*a, *b);
        case ExKind::Max: return std::max(*a, *b);
        default: return std::nullopt;
      }
    }
  }
}

TriBool eval_pred_point(const PredP& p, const std::map<std::string, Rat>& env) {
  // Point evaluation via degenerate intervals: exact wherever subexpressions
  // are rational, and a tight enclosure across square roots.
  IEnv ienv;
  for (auto& [k, v] : env) ienv[k] = RIval::point(v);
  if (!p) return TriBool::Unknown;
  switch (p->kind) {
    case PrKind::Lit: return tri(p->lit);
    case PrKind::Cmp: {
      RIval l = eval_expr_interval(p->lhs, ienv);
      RIval r = eval_expr_interval(p->rhs, ienv);
      // Sharpen with exact evaluation when possible.
      auto le = eval_expr_point(p->lhs, env);
      auto re = eval_expr_point(p->rhs, env);
      if (le) l = RIval::point(*le);
      if (re) r = RIval::point(*re);
      return cmp_intervals(p->op, l, r);
    }
    case PrKind::Not: return tnot(eval_pred_point(p->p, env));
    case PrKind::And: return tand(eval_pred_point(p->p, env), eval_pred_point(p->q, env));
    case PrKind::Or: return tor(eval_pred_point(p->p, env), eval_pred_point(p->q, env));
    case PrKind::Imp: return timp(eval_pred_point(p->p, env), eval_pred_point(p->q, env));
  }
  return TriBool::Unknown;
}

}  // namespace choreo
