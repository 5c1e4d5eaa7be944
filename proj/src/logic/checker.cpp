#include "choreo/checker.hpp"

#include <algorithm>
#include <vector>

#include "choreo/smtlib.hpp"

namespace choreo {

namespace {

// ---------------------------------------------------------------------------
// Syntactic validity. These rules certify goals that are tight at a shared
// constraint boundary, where interval bisection never terminates with a
// verdict: identical implication sides, conjunct projection, disjunct
// introduction, interval subsumption over one expression, and the edge facts
// generated for min/max-cornered boxes.

bool tauto_pred(const PredP& p);
bool implies_syn(const PredP& p, const PredP& q);

// a <= b certain by shape alone.
bool le_syn(const ExprP& a, const ExprP& b) {
  if (expr_equal(a, b)) return true;
  if (a->kind == ExKind::Num && b->kind == ExKind::Num) return a->num <= b->num;
  // min(x,y) <= b when either projection already is; dually for max.
  if (a->kind == ExKind::Min && (le_syn(a->a, b) || le_syn(a->b, b))) return true;
  if (a->kind == ExKind::Max && le_syn(a->a, b) && le_syn(a->b, b)) return true;
  if (b->kind == ExKind::Max && (le_syn(a, b->a) || le_syn(a, b->b))) return true;
  if (b->kind == ExKind::Min && le_syn(a, b->a) && le_syn(a, b->b)) return true;
  return false;
}

// One-sided numeric form of a comparison: e `op` c.
struct CmpNorm {
  ExprP e;
  CmpOp op;
  Rat c;
};
std::optional<CmpNorm> cmp_norm(const Pred& p) {
  if (p.kind != PrKind::Cmp) return std::nullopt;
  if (p.rhs->kind == ExKind::Num && p.lhs->kind != ExKind::Num)
    return CmpNorm{p.lhs, p.op, p.rhs->num};
  if (p.lhs->kind == ExKind::Num && p.rhs->kind != ExKind::Num) {
    CmpOp flip = p.op;
    switch (p.op) {
      case CmpOp::Lt: flip = CmpOp::Gt; break;
      case CmpOp::Le: flip = CmpOp::Ge; break;
      case CmpOp::Ge: flip = CmpOp::Le; break;
      case CmpOp::Gt: flip = CmpOp::Lt; break;
      case CmpOp::Eq: break;
    }
    return CmpNorm{p.rhs, flip, p.lhs->num};
  }
  return std::nullopt;
}

bool rat_cmp(const Rat& a, CmpOp op, const Rat& b) {
  switch (op) {
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Eq: return a == b;
    case CmpOp::Ge: return a >= b;
    case CmpOp::Gt: return a > b;
  }
  return false;
}

// Does the solution set of (e op1 c1) sit inside that of (e op2 c2)?
bool cmp_subsumes(const CmpNorm& h, const CmpNorm& g) {
  if (!expr_equal(h.e, g.e)) return false;
  auto upper = [](CmpOp o) { return o == CmpOp::Lt || o == CmpOp::Le; };
  auto lower = [](CmpOp o) { return o == CmpOp::Gt || o == CmpOp::Ge; };
  if (h.op == CmpOp::Eq) return rat_cmp(h.c, g.op, g.c);
  if (g.op == CmpOp::Eq) return false;  // a half-line never fits a point
  if (upper(h.op) && upper(g.op)) {
    if (g.op == CmpOp::Le) return h.c <= g.c;
    return h.op == CmpOp::Lt ? h.c <= g.c : h.c < g.c;  // target strict
  }
  if (lower(h.op) && lower(g.op)) {
    if (g.op == CmpOp::Ge) return h.c >= g.c;
    return h.op == CmpOp::Gt ? h.c >= g.c : h.c > g.c;
  }
  return false;
}

bool tauto_pred(const PredP& p) {
  if (!p) return false;
  switch (p->kind) {
    case PrKind::Lit: return p->lit;
    case PrKind::And: return tauto_pred(p->p) && tauto_pred(p->q);
    case PrKind::Or: return tauto_pred(p->p) || tauto_pred(p->q);
    case PrKind::Imp: return implies_syn(p->p, p->q);
    case PrKind::Not: return false;
    case PrKind::Cmp:
      switch (p->op) {
        case CmpOp::Le: return le_syn(p->lhs, p->rhs);
        case CmpOp::Ge: return le_syn(p->rhs, p->lhs);
        case CmpOp::Eq: return expr_equal(p->lhs, p->rhs);
        case CmpOp::Lt:
          return p->lhs->kind == ExKind::Num && p->rhs->kind == ExKind::Num &&
                 p->lhs->num < p->rhs->num;
        case CmpOp::Gt:
          return p->lhs->kind == ExKind::Num && p->rhs->kind == ExKind::Num &&
                 p->lhs->num > p->rhs->num;
      }
      return false;
  }
  return false;
}

bool implies_syn(const PredP& p, const PredP& q) {
  if (!p || !q) return false;
  if (pred_equal(p, q)) return true;
  if (tauto_pred(q)) return true;
  if (p->kind == PrKind::Lit && !p->lit) return true;
  if (p->kind == PrKind::And && (implies_syn(p->p, q) || implies_syn(p->q, q))) return true;
  if (p->kind == PrKind::Or && implies_syn(p->p, q) && implies_syn(p->q, q)) return true;
  if (q->kind == PrKind::And && implies_syn(p, q->p) && implies_syn(p, q->q)) return true;
  if (q->kind == PrKind::Or && (implies_syn(p, q->p) || implies_syn(p, q->q))) return true;
  if (p->kind == PrKind::Cmp && q->kind == PrKind::Cmp) {
    auto h = cmp_norm(*p);
    auto g = cmp_norm(*q);
    if (h && g && cmp_subsumes(*h, *g)) return true;
  }
  return false;
}

struct Box {
  std::vector<std::string> vars;
  std::vector<Rat> lo, hi;

  IEnv env() const {
    IEnv e;
    for (size_t i = 0; i < vars.size(); ++i) e[vars[i]] = RIval::make(lo[i], hi[i]);
    return e;
  }
  std::map<std::string, Rat> center() const {
    std::map<std::string, Rat> c;
    for (size_t i = 0; i < vars.size(); ++i) c[vars[i]] = Rat((lo[i] + hi[i]) / 2);
    return c;
  }
  size_t widest() const {
    size_t best = 0;
    Rat w(-1);
    for (size_t i = 0; i < vars.size(); ++i) {
      Rat wi = hi[i] - lo[i];
      if (wi > w) {
        w = wi;
        best = i;
      }
    }
    return best;
  }
};

// Constants the goal compares a variable against directly: candidate
// coordinates for refutation probing. An equality antecedent holds only on a
// measure-zero slice, which interval bisection brackets forever without its
// centre probes ever landing on it; the slice sits exactly at one of these.
void cmp_candidates(const PredP& p, std::map<std::string, std::vector<Rat>>& out) {
  if (!p) return;
  switch (p->kind) {
    case PrKind::Lit: return;
    case PrKind::Not: cmp_candidates(p->p, out); return;
    case PrKind::And:
    case PrKind::Or:
    case PrKind::Imp:
      cmp_candidates(p->p, out);
      cmp_candidates(p->q, out);
      return;
    case PrKind::Cmp: {
      auto add = [&out](const ExprP& v, const ExprP& e) {
        if (!v || v->kind != ExKind::Var) return;
        if (auto c = eval_expr_point(e, {})) out[v->var].push_back(*c);
      };
      add(p->lhs, p->rhs);
      add(p->rhs, p->lhs);
      return;
    }
  }
}

struct Search {
  const PredP& goal;
  const CheckerOptions& opts;
  bool any_unknown = false;
  long nodes = 0;
  std::optional<std::map<std::string, Rat>> refutation;

  Search(const PredP& g, const CheckerOptions& o) : goal(g), opts(o) {}

  // Depth-first refutation search. Returns early once a witness is found.
  void run(Box& box, int depth) {
    if (refutation) return;
    if (++nodes > opts.node_budget) {
      any_unknown = true;
      return;
    }
    TriBool t = eval_pred_interval(goal, box.env());
    if (t == TriBool::True) return;  // valid over this whole box
    if (t == TriBool::False) {
      // The whole box falsifies the goal; its centre is a witness.
      refutation = box.center();
      return;
    }
    // Unknown: probe the centre for a cheap counterexample.
    auto c = box.center();
    if (eval_pred_point(goal, c) == TriBool::False) {
      refutation = std::move(c);
      return;
    }
    if (depth >= opts.max_depth) {
      any_unknown = true;
      return;
    }
    size_t ax = box.widest();
    if (box.hi[ax] == box.lo[ax]) {  // degenerate in every direction
      any_unknown = true;
      return;
    }
    Rat mid = Rat((box.lo[ax] + box.hi[ax]) / 2);
    Rat save_hi = box.hi[ax], save_lo = box.lo[ax];
    box.hi[ax] = mid;
    run(box, depth + 1);
    box.hi[ax] = save_hi;
    if (refutation) return;
    box.lo[ax] = mid;
    run(box, depth + 1);
    box.lo[ax] = save_lo;
  }
};

}  // namespace

CheckResult check_validity(const PredP& goal, const VarBounds& bounds,
                           const CheckerOptions& opts) {
  CheckResult res;

  // Structurally valid goals (X => X, A && B => A, X => X || Y, edge facts
  // about min/max boxes) are certified outright; the interval search cannot
  // decide them because every box straddling the shared constraint boundary
  // stays indeterminate at all depths.
  if (tauto_pred(goal)) {
    res.verdict = Verdict::Valid;
    return res;
  }

  std::set<std::string> fv;
  pred_vars(goal, fv);

  // Closed goals evaluate directly.
  if (fv.empty()) {
    TriBool t = eval_pred_point(goal, {});
    if (t == TriBool::True) res.verdict = Verdict::Valid;
    else if (t == TriBool::False) res.verdict = Verdict::Refuted;
    else res.verdict = Verdict::Unknown;
    return res;
  }

  Box box;
  for (auto& v : fv) {
    auto it = bounds.bounds.find(v);
    if (it == bounds.bounds.end()) {
      res.verdict = Verdict::Unknown;
      res.note = "no bounds for variable '" + v + "'";
      return res;
    }
    box.vars.push_back(v);
    box.lo.push_back(it->second.first);
    box.hi.push_back(it->second.second);
  }

  Search s(goal, opts);
  s.run(box, 0);
  if (s.refutation) {
    res.verdict = Verdict::Refuted;
    res.witness = *s.refutation;
    return res;
  }
  if (!s.any_unknown) {
    res.verdict = Verdict::Valid;
    return res;
  }

  // Bisection was inconclusive. Probe a grid of candidate points — interval
  // endpoints, centres, and the constants the goal compares each variable
  // against — looking for a refutation that sits on a constraint boundary.
  {
    std::vector<std::vector<Rat>> axes(box.vars.size());
    std::map<std::string, std::vector<Rat>> cand;
    cmp_candidates(goal, cand);
    size_t combos = 1;
    for (size_t i = 0; i < box.vars.size() && combos <= 4096; ++i) {
      std::set<Rat> s_i{box.lo[i], box.hi[i], Rat((box.lo[i] + box.hi[i]) / 2)};
      auto it = cand.find(box.vars[i]);
      if (it != cand.end())
        for (const Rat& c : it->second)
          if (c >= box.lo[i] && c <= box.hi[i]) s_i.insert(c);
      axes[i].assign(s_i.begin(), s_i.end());
      combos *= axes[i].size();
    }
    if (combos <= 4096) {
      std::vector<size_t> idx(axes.size(), 0);
      while (true) {
        std::map<std::string, Rat> pt;
        for (size_t i = 0; i < axes.size(); ++i) pt[box.vars[i]] = axes[i][idx[i]];
        if (eval_pred_point(goal, pt) == TriBool::False) {
          res.verdict = Verdict::Refuted;
          res.witness = std::move(pt);
          return res;
        }
        size_t i = 0;
        while (i < axes.size() && ++idx[i] == axes[i].size()) idx[i++] = 0;
        if (i == axes.size()) break;
      }
    }
  }

  res.verdict = Verdict::Unknown;
  res.note = "bisection inconclusive at depth " + std::to_string(opts.max_depth);

  if (opts.use_solver) {
    if (auto ext = solver_check_validity(goal, bounds)) return *ext;
  }
  return res;
}

CheckResult footprints_disjoint(const Footprint& a, const Footprint& b, const VarBounds& bounds,
                                const CheckerOptions& opts) {
  // Fast path: two boxes with closed constant edges.
  if (a.kind == Footprint::Kind::Box && b.kind == Footprint::Kind::Box) {
    std::array<Rat, 6> ea, eb;
    bool closed = true;
    for (int i = 0; i < 6 && closed; ++i) {
      auto va = eval_expr_point(a.box[i], {});
      auto vb = eval_expr_point(b.box[i], {});
      if (!va || !vb) closed = false;
      else {
        ea[i] = *va;
        eb[i] = *vb;
      }
    }
    if (closed) {
      CheckResult res;
      // Empty boxes occupy no space.
      bool a_empty = ea[0] > ea[1] || ea[2] > ea[3] || ea[4] > ea[5];
      bool b_empty = eb[0] > eb[1] || eb[2] > eb[3] || eb[4] > eb[5];
      if (a_empty || b_empty) {
        res.verdict = Verdict::Valid;
        return res;
      }
      for (int ax = 0; ax < 3; ++ax) {
        if (ea[2 * ax + 1] < eb[2 * ax] || eb[2 * ax + 1] < ea[2 * ax]) {
          res.verdict = Verdict::Valid;
          return res;
        }
      }
      res.verdict = Verdict::Refuted;
      static const char* axes[3] = {"px", "py", "pz"};
      for (int ax = 0; ax < 3; ++ax) {
        Rat lo = std::max(ea[2 * ax], eb[2 * ax]);
        Rat hi = std::min(ea[2 * ax + 1], eb[2 * ax + 1]);
        res.witness[axes[ax]] = Rat((lo + hi) / 2);
      }
      return res;
    }
    // Expression-valued edges: compare the edges directly instead of
    // quantifying over a point px/py/pz — three fewer search dimensions and
    // no boundary-touching stalemates for abutting boxes.
    return check_validity(pr_not(fp_boxes_overlap(a, b)), bounds, opts);
  }
  PredP both = pr_and(fp_as_pred(a), fp_as_pred(b));
  return check_validity(pr_not(both), bounds, opts);
}

CheckResult footprint_within(const Footprint& inner, const Footprint& outer,
                             const VarBounds& bounds, const CheckerOptions& opts) {
  if (inner.kind == Footprint::Kind::Box && outer.kind == Footprint::Kind::Box)
    return check_validity(fp_box_within(inner, outer), bounds, opts);
  return check_validity(pr_imp(fp_as_pred(inner), fp_as_pred(outer)), bounds, opts);
}

VarBounds bounds_union(const VarBounds& a, const VarBounds& b) {
  VarBounds r = a;
  for (auto& [k, v] : b.bounds) r.bounds[k] = v;
  return r;
}

VarBounds with_world_box(const System& sys) {
  Rat m(10);
  for (auto& [v, be] : sys.bounds.bounds) {
    Rat lo = be.first < 0 ? Rat(-be.first) : be.first;
    Rat hi = be.second < 0 ? Rat(-be.second) : be.second;
    m = std::max(m, std::max(lo, hi));
  }
  Rat wb = m * 2 + 100;
  VarBounds r = sys.bounds;
  for (const char* ax : {"px", "py", "pz"})
    if (!r.bounds.count(ax)) r.bounds[ax] = {Rat(-wb), wb};
  return r;
}

}  // namespace choreo
