#include "choreo/project.hpp"

#include <algorithm>

namespace choreo {

namespace {

PredP pred_or(const PredP& a, const PredP& b) { return pred_equal(a, b) ? a : pr_or(a, b); }
PredP pred_and(const PredP& a, const PredP& b) { return pred_equal(a, b) ? a : pr_and(a, b); }

Footprint fp_intersect(const Footprint& a, const Footprint& b) {
  if (fp_equal(a, b)) return a;
  if (a.kind == Footprint::Kind::Box && b.kind == Footprint::Kind::Box) {
    std::array<ExprP, 6> e;
    for (int ax = 0; ax < 3; ++ax) {
      const ExprP &alo = a.box[2 * ax], &blo = b.box[2 * ax];
      const ExprP &ahi = a.box[2 * ax + 1], &bhi = b.box[2 * ax + 1];
      e[2 * ax] = expr_equal(alo, blo) ? alo : ex_max(alo, blo);
      e[2 * ax + 1] = expr_equal(ahi, bhi) ? ahi : ex_min(ahi, bhi);
    }
    return fp_box(e[0], e[1], e[2], e[3], e[4], e[5]);
  }
  return fp_pred(pred_and(fp_as_pred(a), fp_as_pred(b)));
}

}  // namespace

MotionMerge merge_motion(const MotionInstance& a, const MotionInstance& b) {
  MotionMerge m;
  if (a.atom.participant != b.atom.participant) {
    m.why = "different-owner: " + a.atom.participant + " vs " + b.atom.participant;
    return m;
  }
  if (a.mode != b.mode) {
    m.why = "mode-mismatch: " + a.atom.name + " is " +
            (a.mode == Mode::Interruptible ? "interruptible" : "non-interruptible") + ", " +
            b.atom.name + " is " +
            (b.mode == Mode::Interruptible ? "interruptible" : "non-interruptible");
    return m;
  }
  MotionInstance r;
  if (atom_equal(a.atom, b.atom)) {
    r.atom = a.atom;
    if (a.spec == b.spec) r.spec = a.spec;
  } else {
    // Canonical composite name so merging commutes at the type level.
    const std::string& n1 = std::min(a.atom.name, b.atom.name);
    const std::string& n2 = std::max(a.atom.name, b.atom.name);
    r.atom.participant = a.atom.participant;
    r.atom.name = "(" + n1 + "&" + n2 + ")";
  }
  r.pre = pred_or(a.pre, b.pre);
  r.assume = pred_or(a.assume, b.assume);
  r.guarantee = pred_and(a.guarantee, b.guarantee);
  r.post = pred_and(a.post, b.post);
  r.fp = fp_intersect(a.fp, b.fp);
  r.duration = ival_intersect(a.duration, b.duration);
  r.mode = a.mode;
  m.ok = true;
  m.inst = std::move(r);
  return m;
}

// ---------------------------------------------------------------------------
// merge_local

namespace {

// Union of branch entries keyed by label; entries present on both sides must
// coincide (plain merge). The union is label-sorted so merging commutes.
bool union_entries(const std::vector<BranchEntry>& xs, const std::vector<BranchEntry>& ys,
                   std::vector<BranchEntry>& out, std::string& why) {
  out = xs;
  for (const auto& y : ys) {
    const BranchEntry* hit = nullptr;
    for (const auto& x : xs)
      if (x.label == y.label) hit = &x;
    if (!hit) {
      out.push_back(y);
      continue;
    }
    if (!ref_equal(hit->ref, y.ref)) {
      why = "label " + y.label + " carries different payload refinements";
      return false;
    }
    if (!lt_equal(hit->cont, y.cont)) {
      why = "label " + y.label + " continues differently in the two branchings";
      return false;
    }
  }
  std::sort(out.begin(), out.end(),
            [](const BranchEntry& a, const BranchEntry& b) { return a.label < b.label; });
  return true;
}

LocalP branch_with_default(std::string peer, std::vector<BranchEntry> entries, MotionAtom atom,
                           LocalP cont, std::optional<MotionInstance> inst) {
  auto t = std::make_shared<LocalType>();
  t->kind = LTKind::Branch;
  t->peer = std::move(peer);
  t->branches = std::move(entries);
  t->dflt = std::make_pair(std::move(atom), std::move(cont));
  t->dflt_inst = std::move(inst);
  return t;
}

// One direction of the merge; returns nullopt when no rule matches the pair's
// shape, and a failed LocalMerge when a rule matched but a side condition
// does not hold.
std::optional<LocalMerge> merge_directed(const System& sys, const LocalP& a, const LocalP& b) {
  // Two branchings from the same peer.
  if (a->kind == LTKind::Branch && b->kind == LTKind::Branch) {
    if (a->peer != b->peer)
      return LocalMerge{false, nullptr,
                        "branchings expect different peers " + a->peer + " and " + b->peer};
    std::vector<BranchEntry> u;
    std::string why;
    if (!union_entries(a->branches, b->branches, u, why)) return LocalMerge{false, nullptr, why};
    if (a->dflt && b->dflt) {
      if (!lt_equal(a->dflt->second, b->dflt->second))
        return LocalMerge{false, nullptr, "default continuations differ"};
      MotionInstance ia = lt_default_instance(sys, *a);
      MotionInstance ib = lt_default_instance(sys, *b);
      auto mm = merge_motion(ia, ib);
      if (!mm.ok) return LocalMerge{false, nullptr, mm.why};
      bool plain = atom_equal(a->dflt->first, b->dflt->first) && !a->dflt_inst && !b->dflt_inst;
      return LocalMerge{true,
                        branch_with_default(a->peer, std::move(u), mm.inst.atom, a->dflt->second,
                                            plain ? std::nullopt
                                                  : std::optional<MotionInstance>(mm.inst)),
                        ""};
    }
    if (a->dflt)
      return LocalMerge{true,
                        branch_with_default(a->peer, std::move(u), a->dflt->first,
                                            a->dflt->second, a->dflt_inst),
                        ""};
    if (b->dflt)
      return LocalMerge{true,
                        branch_with_default(a->peer, std::move(u), b->dflt->first,
                                            b->dflt->second, b->dflt_inst),
                        ""};
    return LocalMerge{true, lt_branch(a->peer, std::move(u)), ""};
  }

  // A bare motion absorbed by a branching.
  if (a->kind == LTKind::Motion && b->kind == LTKind::Branch) {
    if (b->dflt) {
      if (!lt_equal(a->cont, b->dflt->second))
        return LocalMerge{false, nullptr,
                          "motion continuation differs from the default continuation"};
      MotionInstance ia = lt_motion_instance(sys, *a);
      MotionInstance ib = lt_default_instance(sys, *b);
      auto mm = merge_motion(ia, ib);
      if (!mm.ok) return LocalMerge{false, nullptr, mm.why};
      bool plain = atom_equal(a->atom, b->dflt->first) && !a->motion_inst && !b->dflt_inst;
      return LocalMerge{true,
                        branch_with_default(b->peer, b->branches, mm.inst.atom, b->dflt->second,
                                            plain ? std::nullopt
                                                  : std::optional<MotionInstance>(mm.inst)),
                        ""};
    }
    return LocalMerge{true,
                      branch_with_default(b->peer, b->branches, a->atom, a->cont, a->motion_inst),
                      ""};
  }

  return std::nullopt;
}

}  // namespace

LocalMerge merge_local(const System& sys, const LocalP& a, const LocalP& b) {
  if (!a || !b) return {false, nullptr, "merge of a missing type"};
  // Identity is equi-recursive, so a type merges with its own unfolding.
  // Recursions and selections merge only through identity.
  if (lt_equal(a, b)) return {true, a, ""};
  if (auto m = merge_directed(sys, a, b)) return *m;
  if (auto m = merge_directed(sys, b, a)) return *m;
  auto kind_name = [](const LocalP& t) {
    switch (t->kind) {
      case LTKind::Motion: return "a motion";
      case LTKind::Select: return "a selection";
      case LTKind::Branch: return "a branching";
      case LTKind::Rec: return "a recursion";
      case LTKind::Var: return "a type variable";
      case LTKind::Hole: return "a continuation hole";
    }
    return "a type";
  };
  return {false, nullptr,
          std::string("cannot merge ") + kind_name(a) + " with " + kind_name(b)};
}

// ---------------------------------------------------------------------------
// Projection

std::string projection_error_str(const ProjectionError& e) {
  std::string k;
  switch (e.kind) {
    case ProjectionError::Kind::MergeUndefined: k = "merge-undefined"; break;
    case ProjectionError::Kind::ParticipantAbsentInRec: k = "absent-in-rec"; break;
    case ProjectionError::Kind::NotInSepBranch: k = "not-in-sep-branch"; break;
  }
  return k + " at " + e.location + " (onto " + e.participant + "): " + e.detail;
}

namespace {

struct Projector {
  const System& sys;
  const std::string r;
  std::vector<ProjectionError> errs;
  // Unfolded global types share subterms (the rec node reappears inside its
  // own body), so both levels memoize on node identity; this also keeps each
  // error reported once.
  std::map<const GPrefix*, LocalP> memo_p;
  std::map<const GlobalType*, LocalP> memo_g;

  void err(ProjectionError::Kind k, const std::string& loc, std::string detail) {
    errs.push_back({k, r, loc, std::move(detail)});
  }

  // Splits the leading message of a choice alternative from the rest.
  static std::pair<GPrefixP, GPrefixP> split_head(const GPrefixP& g) {
    if (g->kind == GPKind::Message) return {g, nullptr};
    if (g->kind == GPKind::Seq) {
      auto [h, rest] = split_head(g->a);
      if (!h) return {nullptr, g};
      return {h, rest ? gp_seq(rest, g->b) : g->b};
    }
    return {nullptr, g};
  }

  LocalP prefix(const GPrefixP& g, const std::string& loc) {
    auto it = memo_p.find(g.get());
    if (it != memo_p.end()) return it->second;
    LocalP t = prefix_uncached(g, loc);
    memo_p.emplace(g.get(), t);
    return t;
  }

  LocalP prefix_uncached(const GPrefixP& g, const std::string& loc) {
    switch (g->kind) {
      case GPKind::Message:
        if (r == g->from)
          return lt_select({SelectEntry{g->guard, g->to, g->label, g->ref, lt_hole()}});
        if (r == g->to) return lt_branch(g->from, {BranchEntry{g->label, g->ref, lt_hole()}});
        return lt_hole();
      case GPKind::Motion:
        for (const auto& atom : g->atoms)
          if (atom.participant == r) return lt_motion(atom, lt_hole());
        return lt_hole();
      case GPKind::Seq:
        return lt_plug(prefix(g->a, loc + ".1"), prefix(g->b, loc + ".2"));
      case GPKind::Sep: {
        std::set<std::string> pl, pr;
        gp_participants(g->a, pl);
        gp_participants(g->b, pr);
        bool in_l = pl.count(r) > 0, in_r = pr.count(r) > 0;
        if (in_l && in_r)
          err(ProjectionError::Kind::NotInSepBranch, loc,
              r + " occurs on both sides of a separating conjunction");
        if (in_l) return prefix(g->a, loc + ".sepL");
        if (in_r) return prefix(g->b, loc + ".sepR");
        return lt_hole();
      }
      case GPKind::Choice: {
        bool sender = false;
        for (const auto& alt : g->alts) {
          auto [h, rest] = split_head(alt);
          (void)rest;
          if (h && h->from == r) sender = true;
        }
        if (sender) {
          // The deciding participant sees the guarded selection.
          std::vector<SelectEntry> es;
          for (size_t i = 0; i < g->alts.size(); ++i) {
            auto [h, rest] = split_head(g->alts[i]);
            std::string aloc = loc + ".alt" + std::to_string(i + 1);
            if (!h || h->from != r) {
              err(ProjectionError::Kind::MergeUndefined, aloc,
                  "alternative is not headed by a message sent by " + r);
              continue;
            }
            es.push_back(SelectEntry{h->guard, h->to, h->label, h->ref,
                                     rest ? prefix(rest, aloc) : lt_hole()});
          }
          return lt_select(std::move(es));
        }
        // Everyone else merges what the alternatives ask of them; a receiver
        // of an alternative's head contributes a one-entry branching, so the
        // receiving side comes out as the union of branchings.
        LocalP acc;
        for (size_t i = 0; i < g->alts.size(); ++i) {
          std::string aloc = loc + ".alt" + std::to_string(i + 1);
          LocalP t = prefix(g->alts[i], aloc);
          if (!acc) {
            acc = t;
            continue;
          }
          LocalMerge m = merge_local(sys, acc, t);
          if (!m.ok) {
            err(ProjectionError::Kind::MergeUndefined, aloc, m.why);
            return acc;
          }
          acc = m.type;
        }
        return acc ? acc : lt_hole();
      }
    }
    return lt_hole();
  }

  LocalP global(const GlobalP& g, const std::string& loc) {
    auto it = memo_g.find(g.get());
    if (it != memo_g.end()) return it->second;
    LocalP t = global_uncached(g, loc);
    memo_g.emplace(g.get(), t);
    return t;
  }

  LocalP global_uncached(const GlobalP& g, const std::string& loc) {
    switch (g->kind) {
      case GTKind::Seq:
        return lt_plug(prefix(g->prefix, loc), global(g->cont, loc + ".k"));
      case GTKind::Var:
        return lt_var(g->var);
      case GTKind::Rec:
        if (!gt_participants(g->body).count(r))
          err(ProjectionError::Kind::ParticipantAbsentInRec, loc,
              r + " does not occur in the body of rec " + g->var);
        return lt_rec(g->var, global(g->body, loc + ".body"));
    }
    return lt_hole();
  }
};

}  // namespace

ProjectResult project(const System& sys, const GlobalP& g, const std::string& r) {
  Projector p{sys, r, {}, {}, {}};
  ProjectResult res;
  res.type = p.global(g, "G");
  res.errors = std::move(p.errs);
  return res;
}

std::map<std::string, ProjectResult> project_all(const System& sys, const GlobalP& g) {
  std::map<std::string, ProjectResult> out;
  for (const auto& r : gt_participants(g)) out[r] = project(sys, g, r);
  return out;
}

}  // namespace choreo
