#include "choreo/wellformed.hpp"

#include <algorithm>
#include <stdexcept>

#include "choreo/checker.hpp"
#include "choreo/contracts.hpp"
#include "choreo/printer.hpp"

namespace choreo {

const char* wf_kind_str(WfKind k) {
  switch (k) {
    case WfKind::UnboundTypeVar: return "UnboundTypeVar";
    case WfKind::SelfMessage: return "SelfMessage";
    case WfKind::ScopeError: return "ScopeError";
    case WfKind::NonPartition: return "NonPartition";
    case WfKind::ForeignVariable: return "ForeignVariable";
    case WfKind::ChoiceShape: return "ChoiceShape";
    case WfKind::DuplicateChoiceLabel: return "DuplicateChoiceLabel";
    case WfKind::CellsOverlap: return "CellsOverlap";
    case WfKind::FootprintEscapesCell: return "FootprintEscapesCell";
    case WfKind::AssumeCrossesBoundary: return "AssumeCrossesBoundary";
    case WfKind::ChoiceNotTotal: return "ChoiceNotTotal";
    case WfKind::MotionNotTotal: return "MotionNotTotal";
    case WfKind::MotionIncompatible: return "MotionIncompatible";
    case WfKind::EmptyJointWindow: return "EmptyJointWindow";
    case WfKind::UmcViolation: return "UmcViolation";
    case WfKind::MotionAfterMotion: return "MotionAfterMotion";
    case WfKind::SenderNotReady: return "SenderNotReady";
    case WfKind::TotalSyncViolation: return "TotalSyncViolation";
    case WfKind::UnknownObligation: return "UnknownObligation";
  }
  return "?";
}

const char* wf_clause_str(WfClause c) {
  switch (c) {
    case WfClause::TotalChoice: return "total-choice";
    case WfClause::WellScoped: return "well-scoped";
    case WfClause::Motion: return "motion";
    case WfClause::Sync: return "synchronisability";
  }
  return "?";
}

std::string ChoreoEvent::str() const {
  std::string s;
  if (kind == Kind::Message) {
    s = from + "->" + to + ":" + label;
  } else {
    s = "dt<";
    bool first = true;
    for (const auto& a : atoms) {
      if (!first) s += ", ";
      first = false;
      s += a.participant + ":" + a.name;
    }
    s += ">";
  }
  if (virt) s += "'";
  return s;
}

bool WfReport::clause_ok(WfClause c) const {
  for (const auto& v : violations)
    if (v.clause == c) return false;
  return true;
}

bool WfReport::has(WfKind k) const {
  for (const auto& v : violations)
    if (v.kind == k) return true;
  return false;
}

std::string WfReport::summary() const {
  std::string s;
  for (WfClause c :
       {WfClause::TotalChoice, WfClause::WellScoped, WfClause::Motion, WfClause::Sync}) {
    int cnt = 0;
    for (const auto& v : violations)
      if (v.clause == c) ++cnt;
    if (!s.empty()) s += "; ";
    s += std::string(wf_clause_str(c)) + ": " +
         (cnt == 0 ? std::string("ok") : std::to_string(cnt) + " violation(s)");
  }
  return s;
}

namespace {

std::string at(const SrcSpan& sp) { return sp.known() ? sp.str() : std::string(); }

std::string join(const std::set<std::string>& xs) {
  std::string s;
  for (const auto& x : xs) {
    if (!s.empty()) s += ", ";
    s += x;
  }
  return s;
}

std::string witness_str(const std::map<std::string, Rat>& w) {
  std::string s;
  for (const auto& [k, v] : w) {
    if (!s.empty()) s += ", ";
    s += k + " = " + rat_str(v);
  }
  return s;
}

// Position of an event in the once-unfolded syntax tree: the structural nodes
// ('.', '+', '*') passed on the way down, each with the child index taken.
using Path = std::vector<std::pair<int, int>>;

struct GraphBuilder {
  const System& sys;
  WfReport* rep;
  std::vector<ChoreoEvent> events;
  std::vector<Path> paths;
  std::vector<char> kinds;  // structural node serial -> '.', '+' or '*'
  std::set<std::string> all;
  bool capped = false;
  static constexpr size_t kEventCap = 4096;

  GraphBuilder(const System& s, WfReport* r) : sys(s), rep(r) {
    for (const auto& p : sys.participants) all.insert(p.name);
  }

  void violation(WfKind k, WfClause c, const SrcSpan& sp, std::string det) {
    if (rep) rep->violations.push_back({k, c, at(sp), std::move(det)});
  }

  int node(char k) {
    kinds.push_back(k);
    return static_cast<int>(kinds.size()) - 1;
  }

  // Names a participant may mention: its own state variables plus the sensor
  // inputs it reads (under the owner's qualified name).
  std::set<std::string> readable(const std::string& who) const {
    std::set<std::string> r;
    if (const Participant* p = sys.find_participant(who)) {
      for (const auto& x : p->state_vars) r.insert(qvar(who, x));
      for (const auto& w : p->input_vars)
        if (const Participant* o = sys.owner_of_var(w)) r.insert(qvar(o->name, w));
    }
    return r;
  }

  void check_readable(const PredP& canon, const std::string& who,
                      const std::set<std::string>& extra, const SrcSpan& sp,
                      const std::string& what) {
    std::set<std::string> vs;
    pred_vars(canon, vs);
    std::set<std::string> ok = readable(who);
    for (const auto& v : vs)
      if (!ok.count(v) && !extra.count(v))
        violation(WfKind::ForeignVariable, WfClause::WellScoped, sp,
                  what + " mentions '" + v + "', which " + who + " cannot evaluate");
  }

  void message_event(const GPrefix& g, const Path& path, const std::set<std::string>& scope,
                     bool virt) {
    if (!virt) {
      if (g.from == g.to)
        violation(WfKind::SelfMessage, WfClause::WellScoped, g.span,
                  g.from + " sends '" + g.label + "' to itself");
      std::set<std::string> esc;
      for (const auto& p : {g.from, g.to})
        if (!scope.count(p)) esc.insert(p);
      if (!esc.empty())
        violation(WfKind::ScopeError, WfClause::WellScoped, g.span,
                  "message " + g.from + "->" + g.to + ":" + g.label + " engages " + join(esc) +
                      " outside its scope {" + join(scope) + "}");
      if (g.guard)
        check_readable(canonicalize_pred(sys, g.from, g.guard), g.from, {}, g.span,
                       "guard of " + g.from + "->" + g.to + ":" + g.label);
      if (g.ref.pred)
        check_readable(canonicalize_pred(sys, g.from, g.ref.pred), g.from,
                       {"nu", "nu.x", "nu.y", "nu.z"}, g.span,
                       "payload refinement of " + g.from + "->" + g.to + ":" + g.label);
    }
    ChoreoEvent e;
    e.kind = ChoreoEvent::Kind::Message;
    e.virt = virt;
    e.from = g.from;
    e.to = g.to;
    e.label = g.label;
    e.guard = g.guard;
    e.parts = {g.from, g.to};
    e.scope = scope;
    e.span = g.span;
    paths.push_back(path);
    events.push_back(std::move(e));
  }

  void motion_event(const GPrefix& g, const Path& path, const std::set<std::string>& scope,
                    bool virt) {
    std::set<std::string> parts;
    for (const auto& a : g.atoms) parts.insert(a.participant);
    if (!virt) {
      std::set<std::string> esc;
      for (const auto& p : parts)
        if (!scope.count(p)) esc.insert(p);
      if (!esc.empty())
        violation(WfKind::ScopeError, WfClause::WellScoped, g.span,
                  "joint motion engages " + join(esc) + " outside its scope {" + join(scope) +
                      "}");
      for (const auto& a : g.atoms) {
        std::set<std::string> vs;
        for (const auto& arg : a.args) expr_vars(canonicalize_expr(sys, a.participant, arg), vs);
        std::set<std::string> ok = readable(a.participant);
        for (const auto& v : vs)
          if (!ok.count(v))
            violation(WfKind::ForeignVariable, WfClause::WellScoped, g.span,
                      "argument of " + motion_key(a.participant, a.name) + " mentions '" + v +
                          "', which " + a.participant + " cannot evaluate");
      }
    }
    ChoreoEvent e;
    e.kind = ChoreoEvent::Kind::Motion;
    e.virt = virt;
    e.atoms = g.atoms;
    e.parts = std::move(parts);
    e.scope = scope;
    e.span = g.span;
    paths.push_back(path);
    events.push_back(std::move(e));
  }

  void choice_shape(const GPrefix& c) {
    const GPrefix* head = nullptr;
    std::set<std::string> labels;
    for (const auto& alt : c.alts) {
      const GPrefix* m = alt.get();
      while (m && m->kind == GPKind::Seq) m = m->a.get();
      if (!m || m->kind != GPKind::Message) {
        violation(WfKind::ChoiceShape, WfClause::WellScoped, c.span,
                  "a choice alternative does not open with a message");
        continue;
      }
      if (!head) {
        head = m;
      } else if (m->from != head->from || m->to != head->to) {
        violation(WfKind::ChoiceShape, WfClause::WellScoped, m->span,
                  "choice alternatives mix endpoints " + head->from + "->" + head->to + " and " +
                      m->from + "->" + m->to);
      }
      if (!labels.insert(m->label).second)
        violation(WfKind::DuplicateChoiceLabel, WfClause::WellScoped, m->span,
                  "label '" + m->label + "' repeats across alternatives");
    }
  }

  void walk_prefix(const GPrefixP& g, const Path& path, const std::set<std::string>& scope,
                   bool virt) {
    if (!g) return;
    if (events.size() >= kEventCap) {
      capped = true;
      return;
    }
    switch (g->kind) {
      case GPKind::Message:
        message_event(*g, path, scope, virt);
        break;
      case GPKind::Motion:
        motion_event(*g, path, scope, virt);
        break;
      case GPKind::Seq: {
        int s = node('.');
        Path p0 = path;
        p0.emplace_back(s, 0);
        walk_prefix(g->a, p0, scope, virt);
        Path p1 = path;
        p1.emplace_back(s, 1);
        walk_prefix(g->b, p1, scope, virt);
        break;
      }
      case GPKind::Choice: {
        int s = node('+');
        if (!virt) choice_shape(*g);
        for (size_t i = 0; i < g->alts.size(); ++i) {
          Path p = path;
          p.emplace_back(s, static_cast<int>(i));
          walk_prefix(g->alts[i], p, scope, virt);
        }
        break;
      }
      case GPKind::Sep: {
        int s = node('*');
        std::set<std::string> ptL, ptR;
        gp_participants(g->a, ptL);
        gp_participants(g->b, ptR);
        if (!virt) {
          std::set<std::string> inter;
          for (const auto& p : ptL)
            if (ptR.count(p)) inter.insert(p);
          if (!inter.empty())
            violation(WfKind::NonPartition, WfClause::WellScoped, g->span,
                      "participants {" + join(inter) + "} appear on both sides of '*'");
        }
        std::set<std::string> scopeL, scopeR;
        for (const auto& p : scope) (ptL.count(p) ? scopeL : scopeR).insert(p);
        Path p0 = path;
        p0.emplace_back(s, 0);
        walk_prefix(g->a, p0, scopeL, virt);
        Path p1 = path;
        p1.emplace_back(s, 1);
        walk_prefix(g->b, p1, scopeR, virt);
        break;
      }
    }
  }

  struct RecEntry {
    GlobalP body;
    int remaining = 1;
  };

  void walk_global(const GlobalP& g, std::map<std::string, RecEntry> env, const Path& path,
                   bool virt) {
    if (!g) return;
    if (events.size() >= kEventCap) {
      capped = true;
      return;
    }
    switch (g->kind) {
      case GTKind::Seq: {
        int s = node('.');
        Path p0 = path;
        p0.emplace_back(s, 0);
        walk_prefix(g->prefix, p0, all, virt);
        Path p1 = path;
        p1.emplace_back(s, 1);
        walk_global(g->cont, std::move(env), p1, virt);
        break;
      }
      case GTKind::Rec: {
        env[g->var] = {g->body, 1};
        walk_global(g->body, std::move(env), path, virt);
        break;
      }
      case GTKind::Var: {
        auto it = env.find(g->var);
        if (it == env.end()) {
          if (!virt)
            violation(WfKind::UnboundTypeVar, WfClause::WellScoped, g->span,
                      "type variable '" + g->var + "' is unbound");
          break;
        }
        // Lay the loop body out once more so cross-iteration orderings are
        // visible; the second copy only serves as edge targets and witnesses.
        if (it->second.remaining > 0) {
          auto env2 = env;
          env2[g->var].remaining = 0;
          walk_global(it->second.body, std::move(env2), path, true);
        }
        break;
      }
    }
  }
};

}  // namespace

ChoreoGraph build_choreo_graph(const System& sys, WfReport* rep) {
  GraphBuilder b(sys, rep);
  b.walk_global(sys.global, {}, {}, false);
  if (b.capped && rep)
    rep->notes.push_back("event cap reached; ordering analysis truncated");

  ChoreoGraph g;
  g.events = std::move(b.events);
  int n = g.n();
  g.hb.assign(n, std::vector<bool>(n, false));
  g.imm.assign(n, std::vector<bool>(n, false));

  // Direct orderings: two events are ordered when their lowest common
  // structural ancestor is a '.' node (left operand before right operand) and
  // the pair passes the dependency test -- for two messages the later sender
  // must be an endpoint of the earlier message; when a motion is involved the
  // events must share a participant.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Path& pi = b.paths[i];
      const Path& pj = b.paths[j];
      size_t k = 0;
      while (k < pi.size() && k < pj.size() && pi[k] == pj[k]) ++k;
      if (k >= pi.size() || k >= pj.size()) continue;
      if (pi[k].first != pj[k].first) continue;
      if (b.kinds[pi[k].first] != '.') continue;
      if (pi[k].second >= pj[k].second) continue;
      const ChoreoEvent& a = g.events[i];
      const ChoreoEvent& c = g.events[j];
      bool edge = false;
      if (a.kind == ChoreoEvent::Kind::Message && c.kind == ChoreoEvent::Kind::Message) {
        edge = (c.from == a.from || c.from == a.to);
      } else {
        for (const auto& p : a.parts)
          if (c.parts.count(p)) {
            edge = true;
            break;
          }
      }
      if (edge) g.hb[i][j] = true;
    }
  }

  // Transitive closure; all edges point forward in emission order, so the
  // relation is a strict partial order by construction.
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (g.hb[i][k])
        for (int j = 0; j < n; ++j)
          if (g.hb[k][j]) g.hb[i][j] = true;

  // Transitive reduction: keep exactly the uncovered pairs.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (g.hb[i][j]) {
        bool covered = false;
        for (int k = 0; k < n && !covered; ++k)
          covered = g.hb[i][k] && g.hb[k][j];
        g.imm[i][j] = !covered;
      }
  return g;
}

void check_synchronisability(const System& sys, const ChoreoGraph& g, WfReport& rep) {
  int n = g.n();
  for (int i = 0; i < n; ++i) {
    const ChoreoEvent& e = g.events[i];
    if (e.kind != ChoreoEvent::Kind::Motion || e.virt) continue;

    std::vector<int> msgs, mots;
    for (int j = 0; j < n; ++j) {
      if (!g.imm[i][j]) continue;
      (g.events[j].kind == ChoreoEvent::Kind::Message ? msgs : mots).push_back(j);
    }

    for (int j : mots)
      rep.violations.push_back(
          {WfKind::MotionAfterMotion, WfClause::Sync, at(e.span),
           e.str() + " is immediately followed by " + g.events[j].str() +
               " with no communication between them"});

    if (!mots.empty()) continue;  // already reported; sender analysis is moot

    // The branches of a choice share one sender and one receiver, so several
    // immediate message successors count as a single minimal communication
    // as long as they all originate from the same sender.  Distinct senders
    // are a genuine race: the receiver cannot know whom to expect first.
    std::set<std::string> senders;
    for (int j : msgs) senders.insert(g.events[j].from);

    if (senders.size() == 1) {
      const std::string& sender = *senders.begin();
      rep.minimal_sender[i] = sender;
      // The next communication interrupts the motions; participants locked
      // in a non-interruptible primitive cannot take it unless they are the
      // one sending.
      for (const auto& a : e.atoms) {
        const MotionSpec* spec = sys.find_motion(a.participant, a.name);
        if (spec && spec->mode == Mode::NonInterruptible && a.participant != sender)
          rep.violations.push_back(
              {WfKind::SenderNotReady, WfClause::Sync, at(g.events[msgs[0]].span),
               a.participant + " runs non-interruptible " +
                   motion_key(a.participant, a.name) + " during " + e.str() +
                   " but the next communication " + g.events[msgs[0]].str() +
                   " is sent by " + sender});
      }
    } else if (senders.empty()) {
      rep.violations.push_back({WfKind::UmcViolation, WfClause::Sync, at(e.span),
                                "no communication follows " + e.str()});
    } else {
      std::string list;
      for (int j : msgs) {
        if (!list.empty()) list += ", ";
        list += g.events[j].str();
      }
      rep.violations.push_back(
          {WfKind::UmcViolation, WfClause::Sync, at(e.span),
           e.str() + " has competing minimal senders " + join(senders) + " (" + list + ")"});
    }
  }

  // Total synchronisation: between any ordered change of motion primitives,
  // every executor of the earlier motion must be notified by some message.
  for (int i = 0; i < n; ++i) {
    const ChoreoEvent& e = g.events[i];
    if (e.kind != ChoreoEvent::Kind::Motion || e.virt) continue;
    for (int j = 0; j < n; ++j) {
      if (!g.hb[i][j] || g.imm[i][j]) continue;
      if (g.events[j].kind != ChoreoEvent::Kind::Motion) continue;
      for (const auto& p : e.parts) {
        bool notified = false;
        for (int k = 0; k < n && !notified; ++k) {
          if (g.events[k].kind != ChoreoEvent::Kind::Message) continue;
          if (!g.hb[i][k] || !g.hb[k][j]) continue;
          notified = (g.events[k].from == p || g.events[k].to == p);
        }
        if (!notified)
          rep.violations.push_back({WfKind::TotalSyncViolation, WfClause::Sync, at(e.span),
                                    p + " is not notified by any message between " + e.str() +
                                        " and " + g.events[j].str()});
      }
    }
  }
}

void check_motion_compat(const System& sys, const ChoreoGraph& g, const WfOptions& opts,
                         WfReport& rep) {
  VarBounds vb = with_world_box(sys);
  std::set<std::string> seen;
  for (int i = 0; i < g.n(); ++i) {
    const ChoreoEvent& e = g.events[i];
    if (e.kind != ChoreoEvent::Kind::Motion || e.virt) continue;

    std::set<std::string> ex, dups;
    for (const auto& a : e.atoms)
      if (!ex.insert(a.participant).second) dups.insert(a.participant);
    if (!dups.empty())
      rep.violations.push_back({WfKind::MotionNotTotal, WfClause::Motion, at(e.span),
                                "{" + join(dups) + "} listed more than once in " + e.str()});
    std::set<std::string> missing;
    for (const auto& p : e.scope)
      if (!ex.count(p)) missing.insert(p);
    if (!missing.empty())
      rep.violations.push_back({WfKind::MotionNotTotal, WfClause::Motion, at(e.span),
                                e.str() + " does not give a motion primitive to " +
                                    join(missing) + " (scope {" + join(e.scope) + "})"});

    std::string key;
    for (const auto& a : e.atoms) key += render_atom(a) + ";";
    if (!seen.insert(key).second) continue;  // identical tuple already checked

    CompatReport cr;
    try {
      cr = check_compatible(sys, e.atoms, vb, opts.contracts);
    } catch (const std::exception& ex2) {
      rep.violations.push_back(
          {WfKind::MotionIncompatible, WfClause::Motion, at(e.span), e.str() + ": " + ex2.what()});
      continue;
    }
    for (const auto& err : cr.errors) {
      WfKind kind = err.kind == CompatError::Kind::UnknownVerdict ? WfKind::UnknownObligation
                                                                  : WfKind::MotionIncompatible;
      rep.violations.push_back(
          {kind, WfClause::Motion, at(e.span), e.str() + ": " + compat_error_str(err)});
    }
    if (cr.errors.empty() && e.atoms.size() > 1 && ival_empty(cr.composite.duration))
      rep.violations.push_back({WfKind::EmptyJointWindow, WfClause::Motion, at(e.span),
                                e.str() + ": the duration windows have empty intersection"});
  }
}

namespace {

struct ChoiceWalker {
  const System& sys;
  const WfOptions& opts;
  WfReport& rep;

  static bool literally_true(const PredP& p) {
    return p && p->kind == PrKind::Lit && p->lit;
  }

  void guard_valid(const PredP& canon, const SrcSpan& sp, const std::string& what) {
    if (!canon || literally_true(canon)) return;
    if (canon->kind == PrKind::Lit) {  // literal false
      rep.violations.push_back({WfKind::ChoiceNotTotal, WfClause::TotalChoice, at(sp),
                                what + " is never satisfiable"});
      return;
    }
    CheckResult cr = check_validity(canon, sys.bounds, opts.contracts.checker);
    switch (cr.verdict) {
      case Verdict::Valid:
        return;
      case Verdict::Refuted:
        rep.violations.push_back({WfKind::ChoiceNotTotal, WfClause::TotalChoice, at(sp),
                                  what + " can be false (" + witness_str(cr.witness) + ")"});
        return;
      case Verdict::Unknown:
        if (opts.contracts.assume_unknown_valid)
          rep.notes.push_back(what + ": validity unknown, assumed total");
        else
          rep.violations.push_back({WfKind::UnknownObligation, WfClause::TotalChoice, at(sp),
                                    what + ": validity could not be decided" +
                                        (cr.note.empty() ? "" : " (" + cr.note + ")")});
        return;
    }
  }

  // at_head marks the first message of a choice alternative, whose guard is
  // covered by the alternative-wide disjunction instead of individually.
  void prefix(const GPrefixP& g, bool at_head) {
    if (!g) return;
    switch (g->kind) {
      case GPKind::Message:
        if (!at_head)
          guard_valid(canonicalize_pred(sys, g->from, g->guard), g->span,
                      "guard of " + g->from + "->" + g->to + ":" + g->label);
        break;
      case GPKind::Motion:
        break;
      case GPKind::Seq:
        prefix(g->a, at_head);
        prefix(g->b, false);
        break;
      case GPKind::Sep:
        prefix(g->a, false);
        prefix(g->b, false);
        break;
      case GPKind::Choice: {
        PredP dis = pr_false();
        bool shaped = true;
        for (const auto& alt : g->alts) {
          const GPrefix* m = alt.get();
          while (m && m->kind == GPKind::Seq) m = m->a.get();
          if (m && m->kind == GPKind::Message)
            dis = pr_or(dis, canonicalize_pred(sys, m->from, m->guard));
          else
            shaped = false;  // reported by the scope analysis
        }
        if (shaped) guard_valid(dis, g->span, "guard disjunction of the choice");
        for (const auto& alt : g->alts) prefix(alt, true);
        break;
      }
    }
  }

  void global(const GlobalP& g) {
    const GlobalType* cur = g.get();
    std::set<std::string> seen;
    while (cur) {
      switch (cur->kind) {
        case GTKind::Seq:
          prefix(cur->prefix, false);
          cur = cur->cont.get();
          break;
        case GTKind::Rec:
          if (!seen.insert(cur->var).second) return;
          cur = cur->body.get();
          break;
        case GTKind::Var:
          return;
      }
    }
  }
};

struct SepCheck {
  const System& sys;
  const WfOptions& opts;
  WfReport& rep;
  VarBounds vb;

  SepCheck(const System& s, const WfOptions& o, WfReport& r) : sys(s), opts(o), rep(r) {
    vb = with_world_box(sys);
    if (!vb.bounds.count("clock")) vb.bounds["clock"] = {Rat(0), contract_clock_horizon()};
  }

  void collect_motions(const GPrefixP& g, std::vector<const GPrefix*>& out) {
    if (!g) return;
    switch (g->kind) {
      case GPKind::Motion:
        out.push_back(g.get());
        break;
      case GPKind::Message:
        break;
      case GPKind::Seq:
      case GPKind::Sep:
        collect_motions(g->a, out);
        collect_motions(g->b, out);
        break;
      case GPKind::Choice:
        for (const auto& alt : g->alts) collect_motions(alt, out);
        break;
    }
  }

  struct Side {
    std::string name;
    std::optional<Footprint> cell;
    std::set<std::string> parts;
    std::vector<MotionInstance> insts;
    std::vector<std::string> inst_names;
  };

  Side make_side(const char* name, const GPrefixP& g, const std::optional<Footprint>& cell) {
    Side s;
    s.name = name;
    gp_participants(g, s.parts);
    if (cell) s.cell = canonicalize_fp(sys, "", *cell);
    std::vector<const GPrefix*> ms;
    collect_motions(g, ms);
    for (const GPrefix* m : ms)
      for (const auto& a : m->atoms) {
        try {
          s.insts.push_back(instantiate(sys, a));
          s.inst_names.push_back(motion_key(a.participant, a.name));
        } catch (const std::exception&) {
          // unknown motion or arity mismatch is reported elsewhere
        }
      }
    return s;
  }

  // The region a side claims: its declared cell, or failing that the union of
  // its motion footprints.
  PredP claim(const Side& s) const {
    if (s.cell) return fp_as_pred(*s.cell);
    PredP p = pr_false();
    for (const auto& mi : s.insts) p = pr_or(p, fp_as_pred(mi.fp));
    return p;
  }

  void handle(const GPrefix& sep) {
    Side L = make_side("left", sep.a, sep.cell_left);
    Side R = make_side("right", sep.b, sep.cell_right);

    PredP both = pr_and(claim(L), claim(R));
    if (!(both->kind == PrKind::Lit && !both->lit)) {
      CheckResult cr = check_validity(pr_not(both), vb, opts.contracts.checker);
      if (cr.verdict == Verdict::Refuted) {
        rep.violations.push_back({WfKind::CellsOverlap, WfClause::WellScoped, at(sep.span),
                                  "the separated regions can intersect (" +
                                      witness_str(cr.witness) + ")"});
      } else if (cr.verdict == Verdict::Unknown) {
        if (opts.contracts.assume_unknown_valid)
          rep.notes.push_back("separation at " + at(sep.span) +
                              ": disjointness unknown, assumed to hold");
        else
          rep.violations.push_back({WfKind::UnknownObligation, WfClause::WellScoped,
                                    at(sep.span),
                                    "disjointness of the separated regions could not be decided"});
      }
    }

    for (const Side* s : {&L, &R}) {
      if (s->cell) {
        for (size_t i = 0; i < s->insts.size(); ++i) {
          CheckResult cw = footprint_within(s->insts[i].fp, *s->cell, vb, opts.contracts.checker);
          if (cw.verdict == Verdict::Refuted) {
            rep.violations.push_back({WfKind::FootprintEscapesCell, WfClause::WellScoped,
                                      at(sep.span),
                                      "footprint of " + s->inst_names[i] + " escapes the " +
                                          s->name + " cell (" + witness_str(cw.witness) + ")"});
          } else if (cw.verdict == Verdict::Unknown) {
            if (opts.contracts.assume_unknown_valid)
              rep.notes.push_back("containment of " + s->inst_names[i] +
                                  " in its cell unknown, assumed to hold");
            else
              rep.violations.push_back({WfKind::UnknownObligation, WfClause::WellScoped,
                                        at(sep.span),
                                        "containment of " + s->inst_names[i] + " in the " +
                                            s->name + " cell could not be decided"});
          }
        }
      }
      // Assumptions made by one side must not depend on the other side's
      // state -- the sides evolve independently between synchronisations.
      for (size_t i = 0; i < s->insts.size(); ++i) {
        std::set<std::string> vs;
        pred_vars(s->insts[i].assume, vs);
        for (const auto& v : vs) {
          auto dot = v.find('.');
          if (dot == std::string::npos) continue;
          std::string owner = v.substr(0, dot);
          if (sys.find_participant(owner) && !s->parts.count(owner))
            rep.violations.push_back({WfKind::AssumeCrossesBoundary, WfClause::WellScoped,
                                      at(sep.span),
                                      "assumption of " + s->inst_names[i] + " reads '" + v +
                                          "' owned outside its separation side {" +
                                          join(s->parts) + "}"});
        }
      }
    }
  }

  void prefix(const GPrefixP& g) {
    if (!g) return;
    switch (g->kind) {
      case GPKind::Message:
      case GPKind::Motion:
        break;
      case GPKind::Seq:
        prefix(g->a);
        prefix(g->b);
        break;
      case GPKind::Sep:
        handle(*g);
        prefix(g->a);
        prefix(g->b);
        break;
      case GPKind::Choice:
        for (const auto& alt : g->alts) prefix(alt);
        break;
    }
  }

  void global(const GlobalP& g) {
    const GlobalType* cur = g.get();
    std::set<std::string> seen;
    while (cur) {
      switch (cur->kind) {
        case GTKind::Seq:
          prefix(cur->prefix);
          cur = cur->cont.get();
          break;
        case GTKind::Rec:
          if (!seen.insert(cur->var).second) return;
          cur = cur->body.get();
          break;
        case GTKind::Var:
          return;
      }
    }
  }
};

}  // namespace

void check_total_choice(const System& sys, const WfOptions& opts, WfReport& rep) {
  ChoiceWalker w{sys, opts, rep};
  w.global(sys.global);
}

void check_fully_separated(const System& sys, const WfOptions& opts, WfReport& rep) {
  SepCheck s(sys, opts, rep);
  s.global(sys.global);
}

WfReport check_well_formed(const System& sys, const WfOptions& opts) {
  WfReport rep;
  ChoreoGraph g = build_choreo_graph(sys, &rep);
  check_total_choice(sys, opts, rep);
  check_fully_separated(sys, opts, rep);
  check_motion_compat(sys, g, opts, rep);
  check_synchronisability(sys, g, rep);
  return rep;
}

}  // namespace choreo
