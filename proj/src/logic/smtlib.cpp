#include "choreo/smtlib.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace choreo {

// ---------------------------------------------------------------------------
// Emission.

static std::string rat_smt(const Rat& r) {
  Int n = boost::multiprecision::numerator(r);
  Int d = boost::multiprecision::denominator(r);
  bool neg = n < 0;
  if (neg) n = -n;
  std::string core;
  if (d == 1) core = n.str();
  else core = "(/ " + n.str() + " " + d.str() + ")";
  return neg ? "(- " + core + ")" : core;
}

namespace {

struct SqrtTable {
  std::vector<std::pair<ExprP, std::string>> entries;  // argument -> aux name

  std::string name_for(const ExprP& arg) {
    for (auto& [a, n] : entries)
      if (expr_equal(a, arg)) return n;
    std::string n = "__sqrt" + std::to_string(entries.size());
    entries.emplace_back(arg, n);
    return n;
  }
};

void collect_sqrts_expr(const ExprP& e, SqrtTable& tab);

void collect_sqrts_expr(const ExprP& e, SqrtTable& tab) {
  if (!e) return;
  switch (e->kind) {
    case ExKind::Num:
    case ExKind::Var: return;
    case ExKind::Neg: collect_sqrts_expr(e->a, tab); return;
    case ExKind::Sqrt:
      collect_sqrts_expr(e->a, tab);  // inner roots first
      tab.name_for(e->a);
      return;
    default:
      collect_sqrts_expr(e->a, tab);
      collect_sqrts_expr(e->b, tab);
  }
}

void collect_sqrts_pred(const PredP& p, SqrtTable& tab) {
  if (!p) return;
  switch (p->kind) {
    case PrKind::Lit: return;
    case PrKind::Cmp:
      collect_sqrts_expr(p->lhs, tab);
      collect_sqrts_expr(p->rhs, tab);
      return;
    case PrKind::Not: collect_sqrts_pred(p->p, tab); return;
    default:
      collect_sqrts_pred(p->p, tab);
      collect_sqrts_pred(p->q, tab);
  }
}

std::string expr_smt(const ExprP& e, SqrtTable& tab) {
  switch (e->kind) {
    case ExKind::Num: return rat_smt(e->num);
    case ExKind::Var: return e->var;
    case ExKind::Add: return "(+ " + expr_smt(e->a, tab) + " " + expr_smt(e->b, tab) + ")";
    case ExKind::Sub: return "(- " + expr_smt(e->a, tab) + " " + expr_smt(e->b, tab) + ")";
    case ExKind::Mul: return "(* " + expr_smt(e->a, tab) + " " + expr_smt(e->b, tab) + ")";
    case ExKind::Div: return "(/ " + expr_smt(e->a, tab) + " " + expr_smt(e->b, tab) + ")";
    case ExKind::Neg: return "(- " + expr_smt(e->a, tab) + ")";
    case ExKind::Sqrt: return tab.name_for(e->a);
    case ExKind::Min: {
      std::string a = expr_smt(e->a, tab), b = expr_smt(e->b, tab);
      return "(ite (<= " + a + " " + b + ") " + a + " " + b + ")";
    }
    case ExKind::Max: {
      std::string a = expr_smt(e->a, tab), b = expr_smt(e->b, tab);
      return "(ite (<= " + a + " " + b + ") " + b + " " + a + ")";
    }
  }
  return "0";
}

std::string pred_smt(const PredP& p, SqrtTable& tab) {
  switch (p->kind) {
    case PrKind::Lit: return p->lit ? "true" : "false";
    case PrKind::Cmp: {
      const char* op = "=";
      switch (p->op) {
        case CmpOp::Lt: op = "<"; break;
        case CmpOp::Le: op = "<="; break;
        case CmpOp::Eq: op = "="; break;
        case CmpOp::Ge: op = ">="; break;
        case CmpOp::Gt: op = ">"; break;
      }
      return std::string("(") + op + " " + expr_smt(p->lhs, tab) + " " + expr_smt(p->rhs, tab) +
             ")";
    }
    case PrKind::Not: return "(not " + pred_smt(p->p, tab) + ")";
    case PrKind::And: return "(and " + pred_smt(p->p, tab) + " " + pred_smt(p->q, tab) + ")";
    case PrKind::Or: return "(or " + pred_smt(p->p, tab) + " " + pred_smt(p->q, tab) + ")";
    case PrKind::Imp: return "(=> " + pred_smt(p->p, tab) + " " + pred_smt(p->q, tab) + ")";
  }
  return "true";
}

}  // namespace

std::string emit_smt2_validity(const PredP& goal, const VarBounds& bounds) {
  std::set<std::string> fv;
  pred_vars(goal, fv);

  SqrtTable tab;
  collect_sqrts_pred(goal, tab);  // fixes aux naming order
  std::string goal_s = pred_smt(goal, tab);

  std::ostringstream o;
  o << "(set-logic QF_NRA)\n";
  for (auto& v : fv) o << "(declare-const " << v << " Real)\n";
  for (auto& [arg, name] : tab.entries) o << "(declare-const " << name << " Real)\n";
  for (auto& v : fv) {
    auto it = bounds.bounds.find(v);
    if (it == bounds.bounds.end()) continue;
    o << "(assert (<= " << rat_smt(it->second.first) << " " << v << "))\n";
    o << "(assert (<= " << v << " " << rat_smt(it->second.second) << "))\n";
  }
  for (auto& [arg, name] : tab.entries) {
    SqrtTable inner = tab;  // arguments may reference earlier roots
    o << "(assert (>= " << name << " 0))\n";
    o << "(assert (= (* " << name << " " << name << ") " << expr_smt(arg, inner) << "))\n";
  }
  o << "(assert (not " << goal_s << "))\n";
  o << "(check-sat)\n(get-model)\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// S-expression reading.

namespace {

struct Sx {
  bool atom = false;
  std::string text;
  std::vector<Sx> kids;
};

struct SxReader {
  const std::string& s;
  size_t pos = 0;
  explicit SxReader(const std::string& src) : s(src) {}

  void skip() {
    while (pos < s.size()) {
      if (std::isspace((unsigned char)s[pos])) {
        ++pos;
      } else if (s[pos] == ';') {
        while (pos < s.size() && s[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }
  bool done() {
    skip();
    return pos >= s.size();
  }
  Sx read() {
    skip();
    if (pos >= s.size()) throw std::runtime_error("unexpected end of s-expression input");
    if (s[pos] == '(') {
      ++pos;
      Sx sx;
      while (true) {
        skip();
        if (pos >= s.size()) throw std::runtime_error("unterminated s-expression");
        if (s[pos] == ')') {
          ++pos;
          return sx;
        }
        sx.kids.push_back(read());
      }
    }
    size_t start = pos;
    while (pos < s.size() && !std::isspace((unsigned char)s[pos]) && s[pos] != '(' &&
           s[pos] != ')')
      ++pos;
    Sx sx;
    sx.atom = true;
    sx.text = s.substr(start, pos - start);
    return sx;
  }
};

bool is_number_atom(const std::string& t) {
  if (t.empty()) return false;
  bool digit = false;
  for (size_t i = 0; i < t.size(); ++i) {
    char c = t[i];
    if (std::isdigit((unsigned char)c)) digit = true;
    else if (c != '.') return false;
  }
  return digit;
}

// Rebuild an arithmetic term; sqrt aux constants fold back into Sqrt nodes.
ExprP sx_to_expr(const Sx& x, const std::map<std::string, ExprP>& sqrt_defs) {
  if (x.atom) {
    if (is_number_atom(x.text)) {
      auto r = rat_from_literal(x.text);
      if (!r) throw std::runtime_error("bad numeral " + x.text);
      return ex_num(*r);
    }
    auto it = sqrt_defs.find(x.text);
    if (it != sqrt_defs.end()) return ex_sqrt(it->second);
    return ex_var(x.text);
  }
  if (x.kids.empty() || !x.kids[0].atom) throw std::runtime_error("bad term");
  const std::string& op = x.kids[0].text;
  auto arg = [&](size_t i) { return sx_to_expr(x.kids[i], sqrt_defs); };
  if (op == "-" && x.kids.size() == 2) {
    ExprP a = arg(1);
    if (a->kind == ExKind::Num) return ex_num(Rat(-a->num));
    return ex_neg(a);
  }
  if (op == "ite" && x.kids.size() == 4) {
    // (ite (<= a b) a b) = min, (ite (<= a b) b a) = max
    const Sx& c = x.kids[1];
    if (!c.atom && c.kids.size() == 3 && c.kids[0].atom && c.kids[0].text == "<=") {
      ExprP a = sx_to_expr(c.kids[1], sqrt_defs);
      ExprP b = sx_to_expr(c.kids[2], sqrt_defs);
      ExprP t = arg(2), e = arg(3);
      if (expr_equal(t, a) && expr_equal(e, b)) return ex_min(a, b);
      if (expr_equal(t, b) && expr_equal(e, a)) return ex_max(a, b);
    }
    throw std::runtime_error("unrecognised ite term");
  }
  if (x.kids.size() < 3) throw std::runtime_error("bad arity for " + op);
  ExprP acc = arg(1);
  for (size_t i = 2; i < x.kids.size(); ++i) {
    ExprP b = arg(i);
    if (op == "+") acc = ex_add(acc, b);
    else if (op == "-") acc = ex_sub(acc, b);
    else if (op == "*") acc = ex_mul(acc, b);
    else if (op == "/") {
      if (acc->kind == ExKind::Num && b->kind == ExKind::Num && b->num != 0)
        acc = ex_num(Rat(acc->num / b->num));
      else acc = ex_div(acc, b);
    } else {
      throw std::runtime_error("unknown operator " + op);
    }
  }
  return acc;
}

PredP sx_to_pred(const Sx& x, const std::map<std::string, ExprP>& sqrt_defs) {
  if (x.atom) {
    if (x.text == "true") return pr_true();
    if (x.text == "false") return pr_false();
    throw std::runtime_error("bad predicate atom " + x.text);
  }
  if (x.kids.empty() || !x.kids[0].atom) throw std::runtime_error("bad predicate");
  const std::string& op = x.kids[0].text;
  if (op == "not") return pr_not(sx_to_pred(x.kids[1], sqrt_defs));
  if (op == "and" || op == "or" || op == "=>") {
    PredP acc = sx_to_pred(x.kids[1], sqrt_defs);
    for (size_t i = 2; i < x.kids.size(); ++i) {
      PredP b = sx_to_pred(x.kids[i], sqrt_defs);
      if (op == "and") acc = pr_and(acc, b);
      else if (op == "or") acc = pr_or(acc, b);
      else acc = pr_imp(acc, b);
    }
    return acc;
  }
  CmpOp c;
  if (op == "<") c = CmpOp::Lt;
  else if (op == "<=") c = CmpOp::Le;
  else if (op == "=") c = CmpOp::Eq;
  else if (op == ">=") c = CmpOp::Ge;
  else if (op == ">") c = CmpOp::Gt;
  else throw std::runtime_error("unknown predicate operator " + op);
  return pr_cmp(c, sx_to_expr(x.kids[1], sqrt_defs), sx_to_expr(x.kids[2], sqrt_defs));
}

}  // namespace

SmtParsed parse_smt2_validity(const std::string& text) {
  SxReader rd(text);
  std::vector<Sx> forms;
  while (!rd.done()) forms.push_back(rd.read());

  SmtParsed out;
  std::map<std::string, ExprP> sqrt_defs;
  std::vector<Sx> asserts;
  for (auto& f : forms) {
    if (f.atom || f.kids.empty() || !f.kids[0].atom) continue;
    if (f.kids[0].text == "assert") asserts.push_back(f.kids[1]);
  }
  if (asserts.empty()) throw std::runtime_error("no assertions in script");

  auto is_sqrt_name = [](const std::string& n) { return n.rfind("__sqrt", 0) == 0; };

  for (auto& a : asserts) {
    // Definition shape: (= (* s s) arg)
    if (!a.atom && a.kids.size() == 3 && a.kids[0].atom && a.kids[0].text == "=" &&
        !a.kids[1].atom && a.kids[1].kids.size() == 3 && a.kids[1].kids[0].atom &&
        a.kids[1].kids[0].text == "*" && a.kids[1].kids[1].atom &&
        is_sqrt_name(a.kids[1].kids[1].text) && a.kids[1].kids[2].atom &&
        a.kids[1].kids[2].text == a.kids[1].kids[1].text) {
      sqrt_defs[a.kids[1].kids[1].text] = sx_to_expr(a.kids[2], sqrt_defs);
      continue;
    }
    // Nonnegativity side condition for an aux constant: skip.
    if (!a.atom && a.kids.size() == 3 && a.kids[0].atom && a.kids[0].text == ">=" &&
        a.kids[1].atom && is_sqrt_name(a.kids[1].text))
      continue;
    // Bound shape: (<= num var) or (<= var num)
    if (!a.atom && a.kids.size() == 3 && a.kids[0].atom && a.kids[0].text == "<=") {
      auto num_of = [&](const Sx& s) -> std::optional<Rat> {
        try {
          ExprP e = sx_to_expr(s, sqrt_defs);
          if (e->kind == ExKind::Num) return e->num;
          return std::nullopt;
        } catch (...) {
          return std::nullopt;
        }
      };
      if (a.kids[2].atom && !is_number_atom(a.kids[2].text) && !is_sqrt_name(a.kids[2].text)) {
        if (auto lo = num_of(a.kids[1])) {
          auto& b = out.bounds.bounds[a.kids[2].text];
          b.first = *lo;
          continue;
        }
      }
      if (a.kids[1].atom && !is_number_atom(a.kids[1].text) && !is_sqrt_name(a.kids[1].text)) {
        if (auto hi = num_of(a.kids[2])) {
          auto& b = out.bounds.bounds[a.kids[1].text];
          b.second = *hi;
          continue;
        }
      }
    }
    // Goal shape: (not goal) — the final assertion.
    if (!a.atom && a.kids.size() == 2 && a.kids[0].atom && a.kids[0].text == "not") {
      out.goal = sx_to_pred(a.kids[1], sqrt_defs);
      continue;
    }
    throw std::runtime_error("unrecognised assertion in script");
  }
  if (!out.goal) throw std::runtime_error("no goal assertion in script");
  return out;
}

// ---------------------------------------------------------------------------
// External solver bridge.

std::optional<CheckResult> solver_check_validity(const PredP& goal, const VarBounds& bounds) {
  const char* solver = std::getenv("CHOREOVERIFY_SOLVER");
  if (!solver || !*solver) return std::nullopt;

  std::string script = emit_smt2_validity(goal, bounds);
  char path[] = "/tmp/choreoverify_XXXXXX.smt2";
  int fd = mkstemps(path, 5);
  if (fd < 0) return std::nullopt;
  {
    FILE* f = fdopen(fd, "w");
    if (!f) return std::nullopt;
    fwrite(script.data(), 1, script.size(), f);
    fclose(f);
  }
  std::string cmd = std::string("timeout 30 ") + solver + " " + path + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    std::remove(path);
    return std::nullopt;
  }
  std::string output;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, n);
  pclose(pipe);
  std::remove(path);

  std::istringstream is(output);
  std::string first;
  is >> first;
  if (first == "unsat") {
    CheckResult r;
    r.verdict = Verdict::Valid;
    r.note = "certified unsat by external solver";
    return r;
  }
  if (first != "sat") return std::nullopt;

  // Extract a rational model and certify it against the goal.
  std::string rest = output.substr(output.find("sat") + 3);
  std::map<std::string, Rat> model;
  try {
    SxReader rd(rest);
    std::vector<Sx> forms;
    while (!rd.done()) forms.push_back(rd.read());
    std::function<void(const Sx&)> walk = [&](const Sx& f) {
      if (f.atom) return;
      if (f.kids.size() >= 5 && f.kids[0].atom && f.kids[0].text == "define-fun" &&
          f.kids[1].atom) {
        try {
          ExprP v = sx_to_expr(f.kids.back(), {});
          auto val = eval_expr_point(v, {});
          if (val) model[f.kids[1].text] = *val;
        } catch (...) {
          // Non-rational model value (e.g. an algebraic root): skip it; the
          // certification below will simply fail and we stay inconclusive.
        }
      }
      for (auto& k : f.kids) walk(k);
    };
    for (auto& f : forms) walk(f);
  } catch (...) {
    return std::nullopt;
  }

  std::set<std::string> fv;
  pred_vars(goal, fv);
  for (auto& v : fv)
    if (!model.count(v)) return std::nullopt;
  if (eval_pred_point(goal, model) == TriBool::False) {
    CheckResult r;
    r.verdict = Verdict::Refuted;
    for (auto& v : fv) r.witness[v] = model[v];
    r.note = "witness extracted from external solver model";
    return r;
  }
  return std::nullopt;
}

}  // namespace choreo
