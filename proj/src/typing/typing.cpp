#include "choreo/typing.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <set>

#include "choreo/contracts.hpp"
#include "choreo/printer.hpp"
#include "choreo/project.hpp"
#include "choreo/smtlib.hpp"

namespace choreo {

namespace {

Verdict meet(Verdict a, Verdict b) {
  if (a == Verdict::Refuted || b == Verdict::Refuted) return Verdict::Refuted;
  if (a == Verdict::Unknown || b == Verdict::Unknown) return Verdict::Unknown;
  return Verdict::Valid;
}

Verdict refine_verdict(const RefineReport& r) {
  if (r.holds) return Verdict::Valid;
  return r.unknown ? Verdict::Unknown : Verdict::Refuted;
}

std::string refine_why(const RefineReport& r) {
  for (const auto& c : r.clauses)
    if (c.check.verdict != Verdict::Valid)
      return c.clause + " is " + verdict_str(c.check.verdict);
  return "refinement holds";
}

std::string witness_str(const CheckResult& cr) {
  if (cr.witness.empty()) return "";
  std::string s = " [witness:";
  for (const auto& [k, v] : cr.witness) s += " " + k + "=" + rat_str(v);
  return s + "]";
}

// ---------------------------------------------------------------------------
// Subtyping

struct SubEnv {
  std::map<std::string, LocalP> recs;
};

LocalP sub_norm(LocalP t, SubEnv& env) {
  for (int hop = 0; hop < 4096; ++hop) {
    if (t && t->kind == LTKind::Rec) {
      env.recs[t->var] = t;
      t = t->body;
      continue;
    }
    if (t && t->kind == LTKind::Var) {
      auto it = env.recs.find(t->var);
      if (it == env.recs.end()) break;  // free variable: compare by name
      t = it->second->body;
      continue;
    }
    break;
  }
  return t;
}

const char* lt_kind_str(const LocalP& t) {
  switch (t->kind) {
    case LTKind::Motion: return "motion";
    case LTKind::Select: return "selection";
    case LTKind::Branch: return "branching";
    case LTKind::Rec: return "recursion";
    case LTKind::Var: return "type variable";
    case LTKind::Hole: return "hole";
  }
  return "type";
}

struct Subtyper {
  const System& sys;
  const std::string& owner;
  const VarBounds& vb;
  const TypingOptions& opts;
  std::vector<std::string> trace;
  std::set<std::pair<const LocalType*, const LocalType*>> seen;

  Verdict implies(const PredP& p, const PredP& q, const std::string& what) {
    CheckResult cr = check_validity(pr_imp(p, q), vb, opts.checker);
    if (cr.verdict != Verdict::Valid)
      trace.push_back(what + " is " + verdict_str(cr.verdict) + ": " +
                      render_pred(pr_imp(p, q)) + witness_str(cr));
    return cr.verdict;
  }

  Verdict motion_leq(const MotionInstance& a, const MotionInstance& b, const std::string& what) {
    ContractOptions copts;
    copts.checker = opts.checker;
    RefineReport rr = refines(a, b, vb, copts);
    Verdict v = refine_verdict(rr);
    if (v != Verdict::Valid)
      trace.push_back(what + ": " + a.atom.name + " does not refine " + b.atom.name + " (" +
                      refine_why(rr) + ")");
    return v;
  }

  Verdict fail(const LocalP& a, const LocalP& b, const std::string& why) {
    trace.push_back("no rule relates a " + std::string(lt_kind_str(a)) + " to a " +
                    lt_kind_str(b) + (why.empty() ? "" : ": " + why));
    return Verdict::Refuted;
  }

  // Branch entries of the supertype must be handled by the subtype with
  // weaker payload requirements and smaller continuations.
  Verdict branch_entries_leq(const LocalP& a, const LocalP& b, SubEnv& ea, SubEnv& eb) {
    Verdict v = Verdict::Valid;
    for (const auto& be : b->branches) {
      const BranchEntry* ae = nullptr;
      for (const auto& x : a->branches)
        if (x.label == be.label) ae = &x;
      if (!ae) {
        trace.push_back("subtype branching lacks label " + be.label);
        return Verdict::Refuted;
      }
      if (!sort_equal(ae->ref.sort, be.ref.sort)) {
        trace.push_back("payload sorts differ at label " + be.label);
        return Verdict::Refuted;
      }
      PredP pa = canonicalize_pred(sys, a->peer, ae->ref.pred);
      PredP pb = canonicalize_pred(sys, b->peer, be.ref.pred);
      v = meet(v, implies(pb, pa, "payload of " + be.label));
      v = meet(v, go(ae->cont, ea, be.cont, eb));
      if (v == Verdict::Refuted) return v;
    }
    return v;
  }

  Verdict go(LocalP a, SubEnv ea, LocalP b, SubEnv eb) {
    a = sub_norm(a, ea);
    b = sub_norm(b, eb);
    if (!a || !b) return (!a && !b) ? Verdict::Valid : Verdict::Refuted;
    auto key = std::make_pair(a.get(), b.get());
    if (a == b || seen.count(key)) return Verdict::Valid;
    seen.insert(key);

    if (a->kind == LTKind::Hole && b->kind == LTKind::Hole) return Verdict::Valid;
    if (a->kind == LTKind::Var && b->kind == LTKind::Var)
      return a->var == b->var ? Verdict::Valid : fail(a, b, "different free variables");

    if (a->kind == LTKind::Motion && b->kind == LTKind::Motion) {
      Verdict v = motion_leq(lt_motion_instance(sys, *a), lt_motion_instance(sys, *b),
                             "motion prefix");
      return meet(v, go(a->cont, ea, b->cont, eb));
    }

    if (a->kind == LTKind::Select && b->kind == LTKind::Select) {
      Verdict v = Verdict::Valid;
      for (const auto& ae : a->selects) {
        const SelectEntry* be = nullptr;
        for (const auto& y : b->selects)
          if (y.peer == ae.peer && y.label == ae.label) be = &y;
        if (!be) {
          trace.push_back("supertype selection lacks " + ae.peer + "!" + ae.label);
          return Verdict::Refuted;
        }
        if (!sort_equal(ae.ref.sort, be->ref.sort)) {
          trace.push_back("payload sorts differ at label " + ae.label);
          return Verdict::Refuted;
        }
        v = meet(v, implies(canonicalize_pred(sys, owner, ae.guard),
                            canonicalize_pred(sys, owner, be->guard), "guard of " + ae.label));
        v = meet(v, implies(canonicalize_pred(sys, owner, ae.ref.pred),
                            canonicalize_pred(sys, owner, be->ref.pred),
                            "payload of " + ae.label));
        v = meet(v, go(ae.cont, ea, be->cont, eb));
        if (v == Verdict::Refuted) return v;
      }
      return v;
    }

    if (a->kind == LTKind::Branch && b->kind == LTKind::Branch) {
      if (a->peer != b->peer) return fail(a, b, "branchings expect different peers");
      if (b->dflt && !a->dflt) return fail(a, b, "supertype has a default motion, subtype has none");
      Verdict v = branch_entries_leq(a, b, ea, eb);
      if (v == Verdict::Refuted) return v;
      if (a->dflt && b->dflt) {
        v = meet(v, motion_leq(lt_default_instance(sys, *a), lt_default_instance(sys, *b),
                               "default motion"));
        v = meet(v, go(a->dflt->second, ea, b->dflt->second, eb));
      }
      return v;
    }

    // A defaulted branching standing in for a bare motion: sending blocks, so
    // the extra receive arms can never fire.
    if (a->kind == LTKind::Branch && a->dflt && b->kind == LTKind::Motion) {
      Verdict v = motion_leq(lt_default_instance(sys, *a), lt_motion_instance(sys, *b),
                             "default motion");
      return meet(v, go(a->dflt->second, ea, b->cont, eb));
    }

    return fail(a, b, "");
  }
};

}  // namespace

SubtypeResult subtype(const System& sys, const std::string& owner, const LocalP& a,
                      const LocalP& b, const VarBounds& bounds, const TypingOptions& opts) {
  Subtyper s{sys, owner, bounds, opts, {}, {}};
  SubtypeResult res;
  if (lt_equal(a, b)) {  // cheap reflexivity, no validity queries
    res.verdict = Verdict::Valid;
    return res;
  }
  res.verdict = s.go(a, {}, b, {});
  res.trace = std::move(s.trace);
  return res;
}

// ---------------------------------------------------------------------------
// Process typing

namespace {

// Bounds for a received payload variable: derived from the conjuncts of the
// payload predicate when they pin the variable down, otherwise the same
// operational envelope the world box uses. Validity is always relative to
// the declared state bounds, and payload values originate from sender
// expressions over that bounded state.
std::pair<Rat, Rat> payload_bounds(const std::string& x, const PredP& p, const VarBounds& vb) {
  auto mag = [](const Rat& r) { return r < 0 ? Rat(-r) : r; };
  Rat scale(10);
  for (const auto& [k, b] : vb.bounds) scale = std::max(scale, std::max(mag(b.first), mag(b.second)));
  Rat lo = -(scale * 2 + 100), hi = scale * 2 + 100;

  IEnv env;
  for (const auto& [k, b] : vb.bounds) env[k] = RIval::make(b.first, b.second);

  // Scan top-level conjuncts of the form x <op> e or e <op> x.
  std::vector<PredP> todo{p};
  while (!todo.empty()) {
    PredP q = todo.back();
    todo.pop_back();
    if (!q) continue;
    if (q->kind == PrKind::And) {
      todo.push_back(q->p);
      todo.push_back(q->q);
      continue;
    }
    if (q->kind != PrKind::Cmp) continue;
    bool lhs_x = q->lhs && q->lhs->kind == ExKind::Var && q->lhs->var == x;
    bool rhs_x = q->rhs && q->rhs->kind == ExKind::Var && q->rhs->var == x;
    if (lhs_x == rhs_x) continue;  // neither side, or both sides, is x
    RIval other = eval_expr_interval(lhs_x ? q->rhs : q->lhs, env);
    if (other.top) continue;
    CmpOp op = q->op;
    if (rhs_x) {  // e op x  ==  x op' e with the comparison flipped
      if (op == CmpOp::Le) op = CmpOp::Ge;
      else if (op == CmpOp::Lt) op = CmpOp::Gt;
      else if (op == CmpOp::Ge) op = CmpOp::Le;
      else if (op == CmpOp::Gt) op = CmpOp::Lt;
    }
    switch (op) {
      case CmpOp::Le:
      case CmpOp::Lt: hi = std::min(hi, other.hi); break;
      case CmpOp::Ge:
      case CmpOp::Gt: lo = std::max(lo, other.lo); break;
      case CmpOp::Eq:
        lo = std::max(lo, other.lo);
        hi = std::min(hi, other.hi);
        break;
    }
  }
  if (lo > hi) return {hi, lo};  // contradictory constraints: keep a box
  return {lo, hi};
}

struct Typer {
  const System& sys;
  std::string owner;
  VarBounds vb;
  const TypingOptions& opts;
  ProcTypingResult res;
  std::map<std::string, LocalP> grec;
  int dumps = 0;

  void issue(const std::string& rule, const std::string& where, std::string detail, Verdict v,
             std::string smt = "") {
    res.issues.push_back({rule, where, std::move(detail), v, std::move(smt)});
    res.verdict = meet(res.verdict, v);
  }

  std::string dump_query(const std::string& rule, const PredP& goal) {
    if (opts.dump_smt_dir.empty()) return "";
    std::string path =
        opts.dump_smt_dir + "/" + owner + "-" + rule + "-" + std::to_string(++dumps) + ".smt2";
    std::ofstream out(path);
    out << emit_smt2_validity(goal, vb);
    return path;
  }

  bool require_valid(const std::string& rule, const std::string& where, const PredP& goal,
                     const std::string& what) {
    CheckResult cr = check_validity(goal, vb, opts.checker);
    if (cr.verdict == Verdict::Valid) {
      res.trace.push_back(where + ": " + rule + " discharged " + what);
      return true;
    }
    issue(rule, where, what + " is " + verdict_str(cr.verdict) + ": " + render_pred(goal) +
                           witness_str(cr),
          cr.verdict, dump_query(rule, goal));
    return false;
  }

  // Types a process motion prefix (atom + continuation) against a motion
  // type given by an instance and continuation — shared by the plain motion
  // rule and the default branches.
  void motion_prefix(const PredP& sigma, const MotionAtom& patom, const ProcP& cont,
                     const MotionInstance& ti, const MotionAtom& tatom, const LocalP& tcont,
                     const std::string& where) {
    MotionInstance pi = instantiate(sys, patom);
    if (!atom_equal(patom, tatom)) {
      ContractOptions copts;
      copts.checker = opts.checker;
      RefineReport rr = refines(pi, ti, vb, copts);
      if (!rr.holds)
        issue("sub-motion", where,
              "motion " + patom.name + " does not refine " + tatom.name + " (" + refine_why(rr) +
                  ")",
              refine_verdict(rr));
      else
        res.trace.push_back(where + ": sub-motion replaced " + tatom.name + " by " + patom.name);
    }
    require_valid("t-motion", where, pr_imp(sigma, pi.pre),
                  "precondition of " + patom.name);
    check(pi.post, cont, tcont, where + ".k");
  }

  void check(const PredP& sigma, const ProcP& p, LocalP t, const std::string& where) {
    if (!p) return;

    // t-rec binds the process variable to the expected type and resets the
    // logical context; recursion is re-entered from arbitrary loop states.
    if (p->kind == PKind::Rec) {
      grec[p->var] = t;
      res.trace.push_back(where + ": t-rec on " + p->var);
      check(pr_true(), p->body, t, where + ".body");
      return;
    }
    if (p->kind == PKind::Var) {
      auto it = grec.find(p->var);
      if (it == grec.end()) {
        issue("t-rec", where, "unbound process variable " + p->var, Verdict::Refuted);
        return;
      }
      if (lt_equal(it->second, t)) {
        res.trace.push_back(where + ": " + p->var + " closes the loop");
        return;
      }
      SubtypeResult sr = subtype(sys, owner, it->second, t, vb, opts);
      if (sr.verdict == Verdict::Valid) {
        res.trace.push_back(where + ": t-sub closes the loop for " + p->var);
        return;
      }
      std::string why;
      for (const auto& l : sr.trace) why += "\n    " + l;
      issue("t-sub", where,
            "type bound to " + p->var + " is not a subtype of the expected type" + why,
            sr.verdict);
      return;
    }

    // Equi-recursive types: expose a prefix to match the process against.
    for (int hop = 0; hop < 4096 && t && t->kind == LTKind::Rec; ++hop) t = lt_unfold(t);
    if (!t || t->kind == LTKind::Var || t->kind == LTKind::Hole) {
      issue("t-sub", where, "process continues but its type ends in a " +
                                std::string(t ? lt_kind_str(t) : "missing type"),
            Verdict::Refuted);
      return;
    }

    switch (p->kind) {
      case PKind::Motion: {
        if (t->kind == LTKind::Motion) {
          motion_prefix(sigma, p->atom, p->cont, lt_motion_instance(sys, *t), t->atom, t->cont,
                        where);
          return;
        }
        issue("t-motion", where,
              "process runs motion " + p->atom.name + " but its type is a " + lt_kind_str(t),
              Verdict::Refuted);
        return;
      }

      case PKind::Send: {
        if (t->kind != LTKind::Select) {
          issue("t-out", where,
                "process sends " + p->label + " but its type is a " + lt_kind_str(t),
                Verdict::Refuted);
          return;
        }
        const SelectEntry* e = nullptr;
        for (const auto& s : t->selects)
          if (s.peer == p->peer && s.label == p->label) e = &s;
        if (!e) {
          issue("t-out", where,
                "selection has no entry " + p->peer + "!" + p->label, Verdict::Refuted);
          return;
        }
        PredP guard = canonicalize_pred(sys, owner, e->guard);
        PredP refp = canonicalize_pred(sys, owner, e->ref.pred);
        if (p->payload) {
          if (e->ref.sort.kind != SortKind::Real) {
            issue("t-out", where, "label " + p->label + " does not carry a real payload",
                  Verdict::Refuted);
            return;
          }
          ExprP v = canonicalize_expr(sys, owner, p->payload);
          refp = pred_subst(refp, {{"nu", v}});
        } else if (e->ref.sort.kind != SortKind::Unit) {
          issue("t-out", where, "label " + p->label + " requires a payload", Verdict::Refuted);
          return;
        }
        require_valid("t-out", where, pr_imp(sigma, pr_and(guard, refp)),
                      "guard and payload refinement of " + p->label);
        check(sigma, p->cont, e->cont, where + ".k");
        return;
      }

      case PKind::Recv: {
        if (t->kind == LTKind::Motion) {
          // The type promises an uninterrupted motion: only the default arm
          // can run, and no message can arrive to trigger the others.
          if (!p->dflt) {
            issue("t-choice2", where,
                  "type is a bare motion but the receive has no default arm", Verdict::Refuted);
            return;
          }
          for (const auto& b : p->branches)
            res.trace.push_back(where + ": arm " + b.label +
                                " can never fire (type promises a motion)");
          motion_prefix(sigma, p->dflt->first, p->dflt->second, lt_motion_instance(sys, *t),
                        t->atom, t->cont, where + ".after");
          return;
        }
        if (t->kind != LTKind::Branch) {
          issue("t-choice1", where,
                "process receives from " + p->peer + " but its type is a " + lt_kind_str(t),
                Verdict::Refuted);
          return;
        }
        if (t->peer != p->peer) {
          issue("t-choice1", where,
                "process receives from " + p->peer + " but the type expects " + t->peer,
                Verdict::Refuted);
          return;
        }
        std::set<std::string> typed;
        for (const auto& te : t->branches) {
          typed.insert(te.label);
          const RecvBranch* arm = nullptr;
          for (const auto& b : p->branches)
            if (b.label == te.label) arm = &b;
          if (!arm) {
            issue("t-choice1", where, "receive has no arm for label " + te.label,
                  Verdict::Refuted);
            continue;
          }
          PredP pe = canonicalize_pred(sys, t->peer, te.ref.pred);
          PredP sigma_i;
          std::optional<std::pair<Rat, Rat>> saved;
          if (!arm->bind.empty()) {
            PredP inst = pred_subst(pe, {{"nu", ex_var(arm->bind)}});
            sigma_i = pr_and(sigma, inst);
            auto it = vb.bounds.find(arm->bind);
            if (it != vb.bounds.end()) saved = it->second;
            vb.bounds[arm->bind] = payload_bounds(arm->bind, inst, vb);
          } else {
            sigma_i = pr_and(sigma, pe);
          }
          check(sigma_i, arm->cont, te.cont, where + "." + te.label);
          if (!arm->bind.empty()) {
            if (saved) vb.bounds[arm->bind] = *saved;
            else vb.bounds.erase(arm->bind);
          }
        }
        for (const auto& b : p->branches)
          if (!typed.count(b.label))
            res.trace.push_back(where + ": arm " + b.label +
                                " can never fire (not offered by the type)");
        if (t->dflt) {
          if (!p->dflt) {
            issue("t-choice2", where, "type has a default motion but the receive has none",
                  Verdict::Refuted);
            return;
          }
          motion_prefix(sigma, p->dflt->first, p->dflt->second, lt_default_instance(sys, *t),
                        t->dflt->first, t->dflt->second, where + ".after");
        } else if (p->dflt) {
          res.trace.push_back(where +
                              ": default arm can never fire (type has no default motion)");
        }
        return;
      }

      case PKind::Cond: {
        if (t->kind != LTKind::Select) {
          issue("t-cond", where,
                "conditional must be typed at a selection, got a " + std::string(lt_kind_str(t)),
                Verdict::Refuted);
          return;
        }
        PredP c = canonicalize_pred(sys, owner, p->cond);
        PredP then_ctx = pr_and(sigma, c);
        PredP else_ctx = pr_and(sigma, pr_not(c));
        // Candidate branches whose guard follows from the condition, tried
        // in declaration order.
        std::vector<size_t> cands;
        for (size_t k = 0; k < t->selects.size(); ++k) {
          PredP gk = canonicalize_pred(sys, owner, t->selects[k].guard);
          if (check_validity(pr_imp(then_ctx, gk), vb, opts.checker).verdict == Verdict::Valid)
            cands.push_back(k);
        }
        if (cands.empty()) {
          issue("t-cond", where,
                "no selection guard is implied by the branch condition " + render_pred(c),
                Verdict::Refuted, dump_query("t-cond", pr_imp(then_ctx, pr_false())));
          return;
        }
        size_t base_issues = res.issues.size();
        Verdict base_verdict = res.verdict;
        for (size_t attempt = 0; attempt < cands.size(); ++attempt) {
          size_t k = cands[attempt];
          res.trace.push_back(where + ": t-cond tries branch " + t->selects[k].label);
          try_cond(then_ctx, else_ctx, p, t, k, where);
          if (res.issues.size() == base_issues) return;  // success, committed
          if (attempt + 1 < cands.size()) {
            res.issues.resize(base_issues);  // roll back, try the next candidate
            res.verdict = base_verdict;
          }
        }
        return;  // last candidate's issues stand
      }

      default: break;
    }
    issue("typing", where, "unhandled process form", Verdict::Refuted);
  }

  void try_cond(const PredP& then_ctx, const PredP& else_ctx, const ProcP& p, const LocalP& t,
                size_t k, const std::string& where) {
    check(then_ctx, p->pthen, lt_select({t->selects[k]}), where + ".then");
    std::vector<SelectEntry> rest;
    for (size_t i = 0; i < t->selects.size(); ++i)
      if (i != k) rest.push_back(t->selects[i]);
    if (rest.empty()) {
      // The whole selection went to the then-arm: the else-arm must be dead.
      require_valid("t-cond", where + ".else", pr_imp(else_ctx, pr_false()),
                    "unreachability of the else branch");
      return;
    }
    check(else_ctx, p->pelse, lt_select(std::move(rest)), where + ".else");
  }
};

}  // namespace

ProcTypingResult type_process(const System& sys, const std::string& owner, const PredP& sigma0,
                              const ProcP& p, const LocalP& t, const TypingOptions& opts) {
  Typer ty{sys, owner, sys.bounds, opts, {}, {}, 0};
  // Qualifying variable names is idempotent, so an already-canonical context
  // (as passed by type_session) is unchanged.
  PredP sigma = sigma0 ? canonicalize_pred(sys, owner, sigma0) : pr_true();
  ty.check(sigma, p, t, owner);
  return std::move(ty.res);
}

// ---------------------------------------------------------------------------
// Session typing

SessionReport type_session(const System& sys, const TypingOptions& opts) {
  SessionReport rep;
  if (!sys.global) {
    rep.session_issues.push_back(
        {"t-sess", "session", "system has no global type", Verdict::Refuted, ""});
    rep.verdict = Verdict::Refuted;
    return rep;
  }
  std::set<std::string> pg = gt_participants(sys.global);

  // pt(G) must be exactly the declared participants, each with a process.
  for (const auto& part : sys.participants)
    if (!pg.count(part.name))
      rep.session_issues.push_back({"t-sess", part.name,
                                    "declared participant does not occur in the global type",
                                    Verdict::Refuted, ""});
  std::vector<std::string> to_type;
  for (const auto& r : pg) {
    if (!sys.processes.count(r)) {
      rep.session_issues.push_back(
          {"participant-without-process", r,
           "participant of the global type has no process", Verdict::Refuted, ""});
      continue;
    }
    to_type.push_back(r);
  }

  // Projections first (cheap, no validity queries), then the per-participant
  // typing runs in parallel over the shared read-only system.
  std::map<std::string, LocalP> types;
  for (const auto& r : to_type) {
    ProjectResult pr = project(sys, sys.global, r);
    if (!pr.ok()) {
      std::string why;
      for (const auto& e : pr.errors) why += (why.empty() ? "" : "; ") + projection_error_str(e);
      rep.session_issues.push_back(
          {"projection", r, "global type does not project: " + why, Verdict::Refuted, ""});
      continue;
    }
    types[r] = pr.type;
  }

  std::vector<std::pair<std::string, std::future<ProcTypingResult>>> jobs;
  for (const auto& [r, t] : types) {
    const Participant* part = sys.find_participant(r);
    PredP init = part ? canonicalize_pred(sys, r, part->init) : pr_true();
    const ProcP& proc = sys.processes.at(r);
    jobs.emplace_back(r, std::async(std::launch::async, [&sys, r = r, init, proc, t = t, &opts] {
                        return type_process(sys, r, init, proc, t, opts);
                      }));
  }
  for (auto& [r, fut] : jobs) rep.participants[r] = fut.get();

  // Initial collision freedom: no spatial point can satisfy both geometries
  // under both init predicates.
  VarBounds wb = with_world_box(sys);
  std::vector<const Participant*> parts;
  for (const auto& p : sys.participants)
    if (pg.count(p.name)) parts.push_back(&p);
  for (size_t i = 0; i < parts.size(); ++i) {
    for (size_t j = i + 1; j < parts.size(); ++j) {
      const Participant &pi = *parts[i], &pj = *parts[j];
      PredP inits = pr_and(canonicalize_pred(sys, pi.name, pi.init),
                           canonicalize_pred(sys, pj.name, pj.init));
      Footprint gi = canonicalize_fp(sys, pi.name, pi.geom);
      Footprint gj = canonicalize_fp(sys, pj.name, pj.geom);
      CheckResult cr;
      if (gi.kind == Footprint::Kind::Box && gj.kind == Footprint::Kind::Box)
        cr = check_validity(pr_imp(inits, pr_not(fp_boxes_overlap(gi, gj))), wb, opts.checker);
      else
        cr = check_validity(
            pr_not(pr_and(inits, pr_and(fp_as_pred(gi), fp_as_pred(gj)))), wb, opts.checker);
      if (cr.verdict != Verdict::Valid)
        rep.session_issues.push_back(
            {"initial-collision", pi.name + "/" + pj.name,
             "initial geometries may overlap" + witness_str(cr), cr.verdict, ""});
    }
  }

  for (const auto& [r, res] : rep.participants) rep.verdict = meet(rep.verdict, res.verdict);
  for (const auto& iss : rep.session_issues) rep.verdict = meet(rep.verdict, iss.verdict);
  return rep;
}

}  // namespace choreo
