#include "choreo/contracts.hpp"

namespace choreo {

static VarBounds with_clock(const VarBounds& b) {
  VarBounds r = b;
  if (!r.bounds.count("clock")) r.bounds["clock"] = {Rat(0), contract_clock_horizon()};
  return r;
}

static void add_clause(std::vector<ClauseResult>& out, bool& all_valid, bool& any_refuted,
                       const std::string& name, CheckResult cr) {
  if (cr.verdict != Verdict::Valid) all_valid = false;
  if (cr.verdict == Verdict::Refuted) any_refuted = true;
  out.push_back({name, std::move(cr)});
}

RefineReport refines(const MotionInstance& a, const MotionInstance& b, const VarBounds& bounds,
                     const ContractOptions& opts) {
  RefineReport rep;
  VarBounds vb = with_clock(bounds);
  bool all_valid = true, any_refuted = false;

  // 1. The refining contract starts anywhere the refined one starts.
  add_clause(rep.clauses, all_valid, any_refuted, "pre",
             check_validity(pr_imp(b.pre, a.pre), vb, opts.checker));
  // 2. It assumes no more about its environment.
  add_clause(rep.clauses, all_valid, any_refuted, "assume",
             check_validity(pr_imp(b.assume, a.assume), vb, opts.checker));
  // 3. It guarantees at least as much while running.
  add_clause(rep.clauses, all_valid, any_refuted, "guarantee",
             check_validity(pr_imp(a.guarantee, b.guarantee), vb, opts.checker));
  // 4. It ends in states the refined contract could end in.
  add_clause(rep.clauses, all_valid, any_refuted, "post",
             check_validity(pr_imp(a.post, b.post), vb, opts.checker));
  // 5. It occupies no more space.
  add_clause(rep.clauses, all_valid, any_refuted, "footprint",
             footprint_within(a.fp, b.fp, vb, opts.checker));
  // 6. Its duration window is nested.
  {
    CheckResult cr;
    cr.verdict = ival_subset(a.duration, b.duration) ? Verdict::Valid : Verdict::Refuted;
    if (cr.verdict == Verdict::Refuted)
      cr.note = "duration " + ival_str(a.duration) + " not within " + ival_str(b.duration);
    add_clause(rep.clauses, all_valid, any_refuted, "duration", std::move(cr));
  }
  // 7. Interruptibility is identical.
  {
    CheckResult cr;
    cr.verdict = a.mode == b.mode ? Verdict::Valid : Verdict::Refuted;
    if (cr.verdict == Verdict::Refuted) cr.note = "interruptibility differs";
    add_clause(rep.clauses, all_valid, any_refuted, "mode", std::move(cr));
  }

  rep.holds = all_valid;
  rep.unknown = !all_valid && !any_refuted;
  if (opts.assume_unknown_valid && rep.unknown) {
    rep.holds = true;
    rep.unknown = false;
  }
  return rep;
}

std::string compat_error_str(const CompatError& e) {
  const char* k = "";
  switch (e.kind) {
    case CompatError::Kind::BothNonInterruptible: k = "both-noninterruptible"; break;
    case CompatError::Kind::DurationNotNested: k = "duration-not-nested"; break;
    case CompatError::Kind::FootprintOverlap: k = "footprint-overlap"; break;
    case CompatError::Kind::RefinementClauseFailed: k = "obligation-failed"; break;
    case CompatError::Kind::UnknownVerdict: k = "obligation-unknown"; break;
  }
  return std::string(k) + ": " + e.detail;
}

CompatReport compose_pair(const MotionInstance& a, const MotionInstance& b,
                          const VarBounds& bounds, const ContractOptions& opts) {
  CompatReport rep;
  VarBounds vb = with_clock(bounds);

  // At most one of the two may insist on running to completion.
  if (a.mode == Mode::NonInterruptible && b.mode == Mode::NonInterruptible) {
    rep.errors.push_back({CompatError::Kind::BothNonInterruptible,
                          motion_key(a.atom.participant, a.atom.name) + " and " +
                              motion_key(b.atom.participant, b.atom.name)});
  }

  // The joint window is the common window. A non-interruptible motion cannot
  // be cut short, so its window must lie within its partner's; two
  // interruptible motions may overlap freely.
  Ival dur = ival_intersect(a.duration, b.duration);
  if (a.mode == Mode::NonInterruptible && !ival_subset(a.duration, b.duration)) {
    rep.errors.push_back({CompatError::Kind::DurationNotNested,
                          ival_str(a.duration) + " (non-interruptible) not within " +
                              ival_str(b.duration)});
  }
  if (b.mode == Mode::NonInterruptible && !ival_subset(b.duration, a.duration)) {
    rep.errors.push_back({CompatError::Kind::DurationNotNested,
                          ival_str(b.duration) + " (non-interruptible) not within " +
                              ival_str(a.duration)});
  }

  // Each side's assumption is discharged by the other's guarantee.
  auto discharge = [&](const char* name, const PredP& g, const PredP& A) {
    CheckResult cr = check_validity(pr_imp(g, A), vb, opts.checker);
    rep.obligations.push_back({name, cr});
    if (cr.verdict == Verdict::Refuted) {
      rep.errors.push_back({CompatError::Kind::RefinementClauseFailed,
                            std::string(name) + (cr.note.empty() ? "" : ": " + cr.note)});
    } else if (cr.verdict == Verdict::Unknown && !opts.assume_unknown_valid) {
      rep.errors.push_back({CompatError::Kind::UnknownVerdict, name + (": " + cr.note)});
    }
  };
  discharge("guarantee(B)->assume(A)", b.guarantee, a.assume);
  discharge("guarantee(A)->assume(B)", a.guarantee, b.assume);

  // A cell annotation at the use site witnesses this side's share of the
  // joint footprint; a side without one stands on its declared footprint.
  auto witness = [](const MotionInstance& m) -> const Footprint& {
    return m.atom.cell ? *m.atom.cell : m.fp;
  };
  auto contain = [&](const MotionInstance& m, const char* side) {
    if (!m.atom.cell) return;
    CheckResult cr = footprint_within(m.fp, *m.atom.cell, vb, opts.checker);
    rep.obligations.push_back({std::string("footprint-within-cell(") + side + ")", cr});
    if (cr.verdict == Verdict::Refuted) {
      rep.errors.push_back({CompatError::Kind::RefinementClauseFailed,
                            motion_key(m.atom.participant, m.atom.name) +
                                ": footprint escapes its cell" +
                                (cr.note.empty() ? "" : " (" + cr.note + ")")});
    } else if (cr.verdict == Verdict::Unknown && !opts.assume_unknown_valid) {
      rep.errors.push_back({CompatError::Kind::UnknownVerdict,
                            std::string("footprint-within-cell(") + side + "): " + cr.note});
    }
  };
  contain(a, "A");
  contain(b, "B");

  // The two shares never overlap, under what the motions jointly guarantee.
  {
    const Footprint& fa = witness(a);
    const Footprint& fb = witness(b);
    PredP ctx = pr_and(a.guarantee, b.guarantee);
    CheckResult cr;
    if (ctx->kind == PrKind::Lit && ctx->lit) {
      cr = footprints_disjoint(fa, fb, vb, opts.checker);
    } else if (fa.kind == Footprint::Kind::Box && fb.kind == Footprint::Kind::Box) {
      // Compare box edges directly; quantifying over a shared point px/py/pz
      // adds three search dimensions the bisection rarely penetrates.
      cr = check_validity(pr_imp(ctx, pr_not(fp_boxes_overlap(fa, fb))), vb, opts.checker);
    } else {
      cr = check_validity(pr_imp(ctx, pr_not(pr_and(fp_as_pred(fa), fp_as_pred(fb)))), vb,
                          opts.checker);
    }
    rep.obligations.push_back({"footprints-disjoint", cr});
    if (cr.verdict == Verdict::Refuted) {
      std::string w;
      for (auto& [k, v] : cr.witness) w += (w.empty() ? "" : ", ") + k + " = " + rat_str(v);
      rep.errors.push_back({CompatError::Kind::FootprintOverlap, w});
    } else if (cr.verdict == Verdict::Unknown && !opts.assume_unknown_valid) {
      rep.errors.push_back({CompatError::Kind::UnknownVerdict, "footprints-disjoint: " + cr.note});
    }
  }

  rep.ok = rep.errors.empty();

  // Composite contract: assumptions are fully discharged internally.
  MotionInstance c;
  c.spec = nullptr;
  c.atom.participant = a.atom.participant + "+" + b.atom.participant;
  c.atom.name = a.atom.name + "+" + b.atom.name;
  c.pre = pr_and(a.pre, b.pre);
  c.assume = pr_true();
  c.guarantee = pr_and(a.guarantee, b.guarantee);
  c.post = pr_and(a.post, b.post);
  c.fp = fp_pred(pr_or(fp_as_pred(witness(a)), fp_as_pred(witness(b))));
  c.duration = dur;
  c.mode = mode_combine(a.mode, b.mode);
  rep.composite = std::move(c);
  return rep;
}

CompatReport check_compatible(const System& sys, const std::vector<MotionAtom>& atoms,
                              const VarBounds& bounds, const ContractOptions& opts) {
  CompatReport rep;
  if (atoms.empty()) {
    rep.ok = true;
    return rep;
  }
  MotionInstance acc = instantiate(sys, atoms[0]);
  if (atoms.size() == 1) {
    rep.ok = true;
    rep.composite = std::move(acc);
    return rep;
  }
  for (size_t i = 1; i < atoms.size(); ++i) {
    MotionInstance next = instantiate(sys, atoms[i]);
    CompatReport step = compose_pair(acc, next, bounds, opts);
    for (auto& e : step.errors) rep.errors.push_back(e);
    for (auto& o : step.obligations) rep.obligations.push_back(std::move(o));
    acc = std::move(step.composite);
  }
  rep.ok = rep.errors.empty();
  rep.composite = std::move(acc);
  return rep;
}

}  // namespace choreo
