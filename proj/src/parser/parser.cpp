#include "choreo/parser.hpp"

#include <cctype>
#include <optional>
#include <set>
#include <vector>

namespace choreo {

// ---------------------------------------------------------------------------
// Lexer.

namespace {

enum class Tok { Ident, Number, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SrcSpan span;
};

struct Lexer {
  const std::string& src;
  const std::string& file;
  size_t pos = 0;
  int line = 1, col = 1;

  Lexer(const std::string& s, const std::string& f) : src(s), file(f) {}

  [[noreturn]] void fail(const std::string& msg) {
    SrcSpan sp{line, col, line, col};
    throw LexError(sp, file + ": " + msg);
  }

  void advance(size_t n) {
    for (size_t i = 0; i < n && pos < src.size(); ++i, ++pos) {
      if (src[pos] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  }

  void skip_ws() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance(1);
      } else if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
        while (pos < src.size() && src[pos] != '\n') advance(1);
      } else {
        break;
      }
    }
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    static const char* two_char[] = {"->", "=>", "&&", "||", "<=", ">=", ":="};
    while (true) {
      skip_ws();
      if (pos >= src.size()) break;
      Token t;
      t.span = SrcSpan{line, col, line, col};
      char c = src[pos];
      if (std::isalpha((unsigned char)c) || c == '_') {
        size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum((unsigned char)src[pos]) || src[pos] == '_' || src[pos] == '\''))
          advance(1);
        t.kind = Tok::Ident;
        t.text = src.substr(start, pos - start);
      } else if (std::isdigit((unsigned char)c)) {
        size_t start = pos;
        while (pos < src.size() && std::isdigit((unsigned char)src[pos])) advance(1);
        if (pos + 1 < src.size() && src[pos] == '.' &&
            std::isdigit((unsigned char)src[pos + 1])) {
          advance(1);
          while (pos < src.size() && std::isdigit((unsigned char)src[pos])) advance(1);
        }
        t.kind = Tok::Number;
        t.text = src.substr(start, pos - start);
      } else {
        t.kind = Tok::Sym;
        bool matched = false;
        for (auto* s : two_char) {
          if (src.compare(pos, 2, s) == 0) {
            t.text = s;
            advance(2);
            matched = true;
            break;
          }
        }
        if (!matched) {
          static const std::string singles = ";:,.(){}[]<>!?@+-*/=|";
          if (singles.find(c) == std::string::npos)
            fail(std::string("unexpected character '") + c + "'");
          t.text = std::string(1, c);
          advance(1);
        }
      }
      t.span.end_line = line;
      t.span.end_col = col;
      out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.span = SrcSpan{line, col, line, col};
    out.push_back(end);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Parser.

struct Parser {
  std::vector<Token> toks;
  size_t pos = 0;
  std::string file;

  Parser(const std::string& src, const std::string& f) : file(f) {
    Lexer lx(src, f);
    toks = lx.run();
  }

  const Token& peek(size_t k = 0) const {
    size_t i = pos + k;
    return i < toks.size() ? toks[i] : toks.back();
  }
  bool at_sym(const std::string& s, size_t k = 0) const {
    return peek(k).kind == Tok::Sym && peek(k).text == s;
  }
  bool at_kw(const std::string& s, size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == s;
  }
  Token eat() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }
  [[noreturn]] void fail(const std::string& msg) {
    throw SyntaxError(peek().span, file + ": " + msg + " (found '" +
                                       (peek().kind == Tok::End ? "<eof>" : peek().text) + "')");
  }
  Token expect_sym(const std::string& s) {
    if (!at_sym(s)) fail("expected '" + s + "'");
    return eat();
  }
  Token expect_kw(const std::string& s) {
    if (!at_kw(s)) fail("expected '" + s + "'");
    return eat();
  }
  std::string expect_ident(const std::string& what) {
    if (peek().kind != Tok::Ident) fail("expected " + what);
    return eat().text;
  }

  // ---- numbers ----

  Rat parse_rat_lit() {
    bool neg = false;
    if (at_sym("-")) {
      eat();
      neg = true;
    }
    if (peek().kind != Tok::Number) fail("expected a number");
    Token t = eat();
    auto r = rat_from_literal(t.text);
    if (!r) throw LexError(t.span, file + ": bad numeric literal '" + t.text + "'");
    return neg ? Rat(-*r) : *r;
  }

  // ---- expressions ----

  ExprP parse_expr() {
    ExprP a = parse_term();
    while (at_sym("+") || at_sym("-")) {
      bool add = eat().text == "+";
      ExprP b = parse_term();
      a = add ? ex_add(a, b) : ex_sub(a, b);
    }
    return a;
  }

  ExprP parse_term() {
    ExprP a = parse_unary();
    while (at_sym("*") || at_sym("/")) {
      bool mul = eat().text == "*";
      ExprP b = parse_unary();
      if (mul) {
        a = ex_mul(a, b);
      } else if (a->kind == ExKind::Num && b->kind == ExKind::Num) {
        // Fold so "3/4" round-trips as the rational 3/4.
        if (b->num == 0) fail("division by zero in constant");
        a = ex_num(Rat(a->num / b->num));
      } else {
        a = ex_div(a, b);
      }
    }
    return a;
  }

  ExprP parse_unary() {
    if (at_sym("-")) {
      eat();
      ExprP a = parse_unary();
      if (a->kind == ExKind::Num) return ex_num(Rat(-a->num));
      return ex_neg(a);
    }
    return parse_primary();
  }

  ExprP parse_primary() {
    if (peek().kind == Tok::Number) {
      Token t = eat();
      auto r = rat_from_literal(t.text);
      if (!r) throw LexError(t.span, file + ": bad numeric literal '" + t.text + "'");
      return ex_num(*r);
    }
    if (at_sym("(")) {
      eat();
      ExprP e = parse_expr();
      expect_sym(")");
      return e;
    }
    if (peek().kind == Tok::Ident) {
      std::string name = eat().text;
      if (name == "sqrt") {
        expect_sym("(");
        ExprP a = parse_expr();
        expect_sym(")");
        return ex_sqrt(a);
      }
      if (name == "min" || name == "max") {
        expect_sym("(");
        ExprP a = parse_expr();
        expect_sym(",");
        ExprP b = parse_expr();
        expect_sym(")");
        return name == "min" ? ex_min(a, b) : ex_max(a, b);
      }
      if (name == "dist") {
        // dist(e) is |e|, written as max(e, -e).
        expect_sym("(");
        ExprP a = parse_expr();
        expect_sym(")");
        ExprP na = a->kind == ExKind::Num ? ex_num(Rat(-a->num)) : ex_neg(a);
        return ex_max(a, na);
      }
      // Qualified variable P.x
      if (at_sym(".") && peek(1).kind == Tok::Ident) {
        eat();
        std::string field = eat().text;
        return ex_var(name + "." + field);
      }
      return ex_var(name);
    }
    fail("expected an expression");
  }

  // ---- predicates ----

  PredP parse_pred() { return parse_imp(); }

  PredP parse_imp() {
    PredP a = parse_or();
    if (at_sym("=>")) {
      eat();
      return pr_imp(a, parse_imp());
    }
    return a;
  }
  PredP parse_or() {
    PredP a = parse_and();
    if (at_sym("||")) {
      eat();
      return pr_or(a, parse_or());
    }
    return a;
  }
  PredP parse_and() {
    PredP a = parse_not();
    if (at_sym("&&")) {
      eat();
      return pr_and(a, parse_and());
    }
    return a;
  }
  PredP parse_not() {
    if (at_sym("!")) {
      eat();
      return pr_not(parse_not());
    }
    return parse_pred_atom();
  }

  PredP parse_pred_atom() {
    if (at_kw("true")) {
      eat();
      return pr_true();
    }
    if (at_kw("false")) {
      eat();
      return pr_false();
    }
    if (at_sym("(")) {
      // Could be a parenthesised predicate or a parenthesised expression
      // starting a comparison; try the predicate reading first.
      size_t save = pos;
      eat();
      try {
        PredP p = parse_pred();
        expect_sym(")");
        if (at_sym("<") || at_sym("<=") || at_sym("=") || at_sym(">=") || at_sym(">") ||
            at_sym("+") || at_sym("-") || at_sym("*") || at_sym("/"))
          throw SyntaxError(peek().span, "expression parenthesis");
        return p;
      } catch (const SyntaxError&) {
        pos = save;
      }
    }
    ExprP l = parse_expr();
    CmpOp op;
    if (at_sym("<")) op = CmpOp::Lt;
    else if (at_sym("<=")) op = CmpOp::Le;
    else if (at_sym("=")) op = CmpOp::Eq;
    else if (at_sym(">=")) op = CmpOp::Ge;
    else if (at_sym(">")) op = CmpOp::Gt;
    else fail("expected a comparison operator");
    eat();
    ExprP r = parse_expr();
    return pr_cmp(op, l, r);
  }

  // ---- sorts, refinements, footprints, intervals ----

  Sort parse_sort_atom() {
    if (at_sym("(")) {
      eat();
      Sort s = parse_sort();
      expect_sym(")");
      return s;
    }
    std::string n = expect_ident("a sort");
    if (n == "unit") return sort_unit();
    if (n == "real") return sort_real();
    if (n == "point") return sort_point();
    if (n == "vector") return sort_vector();
    fail("unknown sort '" + n + "'");
  }

  Sort parse_sort() {
    Sort a = parse_sort_atom();
    if (at_sym("*")) {
      eat();
      return sort_prod(a, parse_sort());
    }
    return a;
  }

  // "( )" or "( nu : sort | pred )" — caller consumed nothing yet.
  Refinement parse_label_payload() {
    expect_sym("(");
    if (at_sym(")")) {
      eat();
      return ref_trivial();
    }
    expect_kw("nu");
    expect_sym(":");
    Sort s = parse_sort();
    expect_sym("|");
    PredP p = parse_pred();
    expect_sym(")");
    return Refinement{s, p};
  }

  Footprint parse_fp() {
    if (at_kw("box")) {
      eat();
      expect_sym("(");
      std::array<ExprP, 6> es;
      for (int i = 0; i < 6; ++i) {
        if (i) expect_sym(",");
        es[i] = parse_expr();
      }
      expect_sym(")");
      return fp_box(es[0], es[1], es[2], es[3], es[4], es[5]);
    }
    if (at_kw("pred")) {
      eat();
      expect_sym("(");
      PredP p = parse_pred();
      expect_sym(")");
      return fp_pred(p);
    }
    fail("expected a footprint (box(...) or pred(...))");
  }

  Ival parse_ival() {
    expect_sym("[");
    Rat lo = parse_rat_lit();
    expect_sym(",");
    if (at_kw("inf")) {
      eat();
      expect_sym(")");
      return ival_inf(lo);
    }
    Rat hi = parse_rat_lit();
    expect_sym("]");
    return ival(lo, hi);
  }

  // ---- global types ----

  std::vector<ExprP> parse_arg_list() {
    expect_sym("(");
    std::vector<ExprP> args;
    if (!at_sym(")")) {
      args.push_back(parse_expr());
      while (at_sym(",")) {
        eat();
        args.push_back(parse_expr());
      }
    }
    expect_sym(")");
    return args;
  }

  MotionAtom parse_atom() {
    MotionAtom a;
    a.participant = expect_ident("a participant name");
    expect_sym(":");
    a.name = expect_ident("a motion name");
    a.args = parse_arg_list();
    if (at_sym("@")) {
      eat();
      a.cell = parse_fp();
    }
    return a;
  }

  GPrefixP parse_g_message() {
    SrcSpan sp = peek().span;
    std::string from = expect_ident("a participant name");
    expect_sym("->");
    std::string to = expect_ident("a participant name");
    PredP guard = pr_true();
    if (at_sym("[")) {
      eat();
      guard = parse_pred();
      expect_sym("]");
    }
    expect_sym(":");
    std::string label = expect_ident("a label");
    Refinement ref = parse_label_payload();
    auto g = gp_msg(from, to, guard, label, ref);
    g->span = sp;
    return g;
  }

  GPrefixP parse_g_atom() {
    if (at_kw("dt")) {
      SrcSpan sp = peek().span;
      eat();
      expect_sym("<");
      std::vector<MotionAtom> atoms;
      atoms.push_back(parse_atom());
      while (at_sym(",")) {
        eat();
        atoms.push_back(parse_atom());
      }
      expect_sym(">");
      auto g = gp_motion(std::move(atoms));
      g->span = sp;
      return g;
    }
    if (at_sym("(")) {
      eat();
      GPrefixP g = parse_g_pexpr();
      expect_sym(")");
      return g;
    }
    if (peek().kind == Tok::Ident && at_sym("->", 1)) return parse_g_message();
    fail("expected a global prefix (dt< >, a message, or a parenthesised group)");
  }

  std::optional<Footprint> parse_cell_or_none() {
    if (at_kw("none")) {
      eat();
      return std::nullopt;
    }
    return parse_fp();
  }

  // sep binds tighter than '.', looser than atoms: a *[cl|cr] b
  GPrefixP parse_g_factor() {
    GPrefixP a = parse_g_atom();
    while (at_sym("*")) {
      SrcSpan sp = peek().span;
      eat();
      expect_sym("[");
      auto cl = parse_cell_or_none();
      expect_sym("|");
      auto cr = parse_cell_or_none();
      expect_sym("]");
      GPrefixP b = parse_g_atom();
      a = gp_sep(a, b, cl, cr);
      a->span = sp;
    }
    return a;
  }

  // Inside parentheses: full prefix grammar with '.'-sequences and '+' choice.
  GPrefixP parse_g_pseq() {
    GPrefixP a = parse_g_factor();
    if (at_sym(".")) {
      eat();
      return gp_seq(a, parse_g_pseq());
    }
    return a;
  }

  // The first communication of a '+' alternative, looking through sequencing.
  static const GPrefix* first_prefix(const GPrefix* g) {
    while (g->kind == GPKind::Seq) g = g->a.get();
    return g;
  }

  GPrefixP parse_g_pexpr() {
    std::vector<GPrefixP> alts;
    alts.push_back(parse_g_pseq());
    while (at_sym("+")) {
      eat();
      alts.push_back(parse_g_pseq());
    }
    if (alts.size() == 1) return alts[0];
    // Every alternative opens with a message; all share one sender/receiver
    // pair and carry pairwise distinct labels.
    const GPrefix* head = nullptr;
    std::set<std::string> labels;
    for (auto& alt : alts) {
      const GPrefix* m = first_prefix(alt.get());
      if (m->kind != GPKind::Message)
        throw SyntaxError(m->span.known() ? m->span : alt->span,
                          file + ": every alternative of a choice must begin with a message");
      if (!head) {
        head = m;
      } else if (m->from != head->from || m->to != head->to) {
        throw SyntaxError(m->span, file + ": choice alternatives must share one sender and "
                                          "receiver (saw " +
                                       head->from + " -> " + head->to + " and " + m->from +
                                       " -> " + m->to + ")");
      }
      if (!labels.insert(m->label).second)
        throw DuplicateLabel(m->span, file + ": duplicate choice label '" + m->label + "'");
    }
    auto c = gp_choice(std::move(alts));
    c->span = head->span;
    return c;
  }

  bool global_var_guarded(const GlobalP& g, const std::string& v) {
    if (!g) return true;
    switch (g->kind) {
      case GTKind::Var: return g->var != v;
      case GTKind::Rec: return g->var == v || global_var_guarded(g->body, v);
      case GTKind::Seq: return true;
    }
    return true;
  }

  GlobalP parse_g(std::set<std::string>& recvars) {
    SrcSpan sp = peek().span;
    if (at_kw("rec")) {
      eat();
      std::string v = expect_ident("a recursion variable");
      expect_sym(".");
      bool fresh = recvars.insert(v).second;
      GlobalP body = parse_g(recvars);
      if (fresh) recvars.erase(v);
      if (!global_var_guarded(body, v))
        throw UnguardedRecursion(sp, file + ": recursion variable '" + v +
                                         "' is not guarded by a prefix");
      auto t = gt_rec(v, body);
      t->span = sp;
      return t;
    }
    // A bare identifier not followed by '->' is a recursion variable.
    if (peek().kind == Tok::Ident && !at_sym("->", 1) && !at_sym(":", 1) && !at_kw("dt")) {
      std::string v = eat().text;
      if (!recvars.count(v))
        throw SyntaxError(sp, file + ": unbound recursion variable '" + v + "'");
      auto t = gt_var(v);
      t->span = sp;
      return t;
    }
    GPrefixP f = parse_g_factor();
    expect_sym(".");
    GlobalP cont = parse_g(recvars);
    auto t = gt_seq(f, cont);
    t->span = sp;
    return t;
  }

  // ---- local types ----

  MotionAtom parse_run_atom_local() {
    expect_kw("run");
    return parse_atom();
  }

  LocalP parse_l(std::set<std::string>& recvars) {
    SrcSpan sp = peek().span;
    if (at_kw("rec")) {
      eat();
      std::string v = expect_ident("a recursion variable");
      expect_sym(".");
      bool fresh = recvars.insert(v).second;
      LocalP body = parse_l(recvars);
      if (fresh) recvars.erase(v);
      if (!local_var_guarded(body, v))
        throw UnguardedRecursion(sp, file + ": recursion variable '" + v +
                                         "' is not guarded by a prefix");
      return lt_rec(v, body);
    }
    if (at_sym("[")) {
      eat();
      expect_sym("]");
      return lt_hole();
    }
    if (at_kw("run")) {
      MotionAtom a = parse_run_atom_local();
      expect_sym(".");
      return lt_motion(a, parse_l(recvars));
    }
    if (at_sym("!")) {  // multi-entry selection: !{ peer![g] l(...) . L, ... }
      eat();
      expect_sym("{");
      std::vector<SelectEntry> es;
      std::set<std::pair<std::string, std::string>> seen;
      while (true) {
        SelectEntry e;
        SrcSpan esp = peek().span;
        e.peer = expect_ident("a peer name");
        expect_sym("!");
        e.guard = pr_true();
        if (at_sym("[")) {
          eat();
          e.guard = parse_pred();
          expect_sym("]");
        }
        e.label = expect_ident("a label");
        e.ref = parse_label_payload();
        expect_sym(".");
        e.cont = parse_l(recvars);
        if (!seen.insert({e.peer, e.label}).second)
          throw DuplicateLabel(esp, file + ": duplicate selection '" + e.peer + "!" + e.label +
                                        "'");
        es.push_back(std::move(e));
        if (at_sym(",")) {
          eat();
          continue;
        }
        break;
      }
      expect_sym("}");
      return lt_select(std::move(es));
    }
    if (peek().kind == Tok::Ident && at_sym("!", 1)) {  // single selection
      SelectEntry e;
      e.peer = eat().text;
      eat();  // '!'
      e.guard = pr_true();
      if (at_sym("[")) {
        eat();
        e.guard = parse_pred();
        expect_sym("]");
      }
      e.label = expect_ident("a label");
      e.ref = parse_label_payload();
      expect_sym(".");
      e.cont = parse_l(recvars);
      return lt_select({std::move(e)});
    }
    if (peek().kind == Tok::Ident && at_sym("?", 1)) {  // branching
      std::string peer = eat().text;
      eat();  // '?'
      std::vector<BranchEntry> bs;
      std::optional<std::pair<MotionAtom, LocalP>> dflt;
      if (at_sym("{")) {
        eat();
        std::set<std::string> seen;
        while (true) {
          if (at_kw("after")) {
            SrcSpan asp = peek().span;
            eat();
            MotionAtom a = parse_run_atom_local();
            expect_sym(".");
            LocalP cont = parse_l(recvars);
            if (dflt) throw SyntaxError(asp, file + ": multiple 'after' defaults");
            dflt = std::make_pair(std::move(a), std::move(cont));
          } else {
            BranchEntry b;
            SrcSpan bsp = peek().span;
            b.label = expect_ident("a label");
            b.ref = parse_label_payload();
            expect_sym(".");
            b.cont = parse_l(recvars);
            if (!seen.insert(b.label).second)
              throw DuplicateLabel(bsp, file + ": duplicate branch label '" + b.label + "'");
            bs.push_back(std::move(b));
          }
          if (at_sym(",")) {
            eat();
            continue;
          }
          break;
        }
        expect_sym("}");
      } else {
        BranchEntry b;
        b.label = expect_ident("a label");
        b.ref = parse_label_payload();
        expect_sym(".");
        b.cont = parse_l(recvars);
        bs.push_back(std::move(b));
      }
      if (dflt)
        return lt_branch_default(peer, std::move(bs), dflt->first, dflt->second);
      return lt_branch(peer, std::move(bs));
    }
    if (peek().kind == Tok::Ident) {
      std::string v = eat().text;
      if (!recvars.count(v))
        throw SyntaxError(sp, file + ": unbound recursion variable '" + v + "'");
      return lt_var(v);
    }
    fail("expected a local type");
  }

  bool local_var_guarded(const LocalP& t, const std::string& v) {
    if (!t) return true;
    switch (t->kind) {
      case LTKind::Var: return t->var != v;
      case LTKind::Rec: return t->var == v || local_var_guarded(t->body, v);
      default: return true;
    }
  }

  // ---- processes ----

  ProcP parse_p(const std::string& subject, std::set<std::string>& recvars) {
    SrcSpan sp = peek().span;
    if (at_kw("rec")) {
      eat();
      std::string v = expect_ident("a recursion variable");
      expect_sym(".");
      bool fresh = recvars.insert(v).second;
      ProcP body = parse_p(subject, recvars);
      if (fresh) recvars.erase(v);
      if (!proc_var_guarded(body, v))
        throw UnguardedRecursion(sp, file + ": recursion variable '" + v +
                                         "' is not guarded by a prefix");
      auto r = pc_rec(v, body);
      r->span = sp;
      return r;
    }
    if (at_sym("(")) {
      eat();
      ProcP p = parse_p(subject, recvars);
      expect_sym(")");
      return p;
    }
    if (at_kw("if")) {
      eat();
      PredP c = parse_pred();
      expect_kw("then");
      ProcP t = parse_p(subject, recvars);
      expect_kw("else");
      ProcP e = parse_p(subject, recvars);
      auto r = pc_cond(c, t, e);
      r->span = sp;
      return r;
    }
    if (at_kw("run")) {
      eat();
      MotionAtom a;
      a.participant = subject;
      a.name = expect_ident("a motion name");
      a.args = parse_arg_list();
      expect_sym(".");
      auto r = pc_motion(a, parse_p(subject, recvars));
      r->span = sp;
      return r;
    }
    if (peek().kind == Tok::Ident && at_sym("!", 1)) {
      std::string peer = eat().text;
      eat();
      std::string label = expect_ident("a label");
      expect_sym("(");
      ExprP payload;
      if (!at_sym(")")) payload = parse_expr();
      expect_sym(")");
      expect_sym(".");
      auto r = pc_send(peer, label, payload, parse_p(subject, recvars));
      r->span = sp;
      return r;
    }
    if (peek().kind == Tok::Ident && at_sym("?", 1)) {
      std::string peer = eat().text;
      eat();
      std::vector<RecvBranch> bs;
      std::optional<std::pair<MotionAtom, ProcP>> dflt;
      if (at_sym("{")) {
        eat();
        std::set<std::string> seen;
        while (true) {
          if (at_kw("after")) {
            SrcSpan asp = peek().span;
            eat();
            expect_kw("run");
            MotionAtom a;
            a.participant = subject;
            a.name = expect_ident("a motion name");
            a.args = parse_arg_list();
            expect_sym(".");
            ProcP cont = parse_p(subject, recvars);
            if (dflt) throw SyntaxError(asp, file + ": multiple 'after' defaults");
            dflt = std::make_pair(std::move(a), std::move(cont));
          } else {
            RecvBranch b;
            SrcSpan bsp = peek().span;
            b.label = expect_ident("a label");
            expect_sym("(");
            if (!at_sym(")")) b.bind = expect_ident("a binder");
            expect_sym(")");
            expect_sym(".");
            b.cont = parse_p(subject, recvars);
            if (!seen.insert(b.label).second)
              throw DuplicateLabel(bsp, file + ": duplicate receive label '" + b.label + "'");
            bs.push_back(std::move(b));
          }
          if (at_sym(",")) {
            eat();
            continue;
          }
          break;
        }
        expect_sym("}");
      } else {
        RecvBranch b;
        b.label = expect_ident("a label");
        expect_sym("(");
        if (!at_sym(")")) b.bind = expect_ident("a binder");
        expect_sym(")");
        expect_sym(".");
        b.cont = parse_p(subject, recvars);
        bs.push_back(std::move(b));
      }
      auto r = pc_recv(peer, std::move(bs), std::move(dflt));
      r->span = sp;
      return r;
    }
    if (peek().kind == Tok::Ident) {
      std::string v = eat().text;
      if (!recvars.count(v))
        throw SyntaxError(sp, file + ": unbound recursion variable '" + v + "'");
      auto r = pc_var(v);
      r->span = sp;
      return r;
    }
    fail("expected a process");
  }

  bool proc_var_guarded(const ProcP& p, const std::string& v) {
    if (!p) return true;
    switch (p->kind) {
      case PKind::Var: return p->var != v;
      case PKind::Rec: return p->var == v || proc_var_guarded(p->body, v);
      case PKind::Cond: return proc_var_guarded(p->pthen, v) && proc_var_guarded(p->pelse, v);
      default: return true;
    }
  }

  // ---- system files ----

  Participant& get_participant(System& sys, const std::string& name, const SrcSpan& sp) {
    for (auto& p : sys.participants)
      if (p.name == name) return p;
    throw UnknownParticipant(sp, file + ": participant '" + name + "' has not been declared");
  }

  System parse_system_file() {
    System sys;
    bool saw_system = false;
    while (peek().kind != Tok::End) {
      SrcSpan sp = peek().span;
      std::string kw = expect_ident("a declaration keyword");
      if (kw == "system") {
        sys.name = expect_ident("a system name");
        expect_sym(";");
        saw_system = true;
      } else if (kw == "vars") {
        Participant p;
        p.name = expect_ident("a participant name");
        if (sys.find_participant(p.name))
          throw SyntaxError(sp, file + ": participant '" + p.name + "' declared twice");
        expect_sym(":");
        p.state_vars.push_back(expect_ident("a variable name"));
        while (at_sym(",")) {
          eat();
          p.state_vars.push_back(expect_ident("a variable name"));
        }
        expect_sym(";");
        p.init = pr_true();
        p.geom = fp_box(ex_num(0), ex_num(0), ex_num(0), ex_num(0), ex_num(0), ex_num(0));
        sys.participants.push_back(std::move(p));
      } else if (kw == "inputs") {
        std::string n = expect_ident("a participant name");
        auto& p = get_participant(sys, n, sp);
        expect_sym(":");
        p.input_vars.push_back(expect_ident("a variable name"));
        while (at_sym(",")) {
          eat();
          p.input_vars.push_back(expect_ident("a variable name"));
        }
        expect_sym(";");
      } else if (kw == "init") {
        std::string n = expect_ident("a participant name");
        auto& p = get_participant(sys, n, sp);
        expect_sym(":");
        p.init = parse_pred();
        expect_sym(";");
      } else if (kw == "geom") {
        std::string n = expect_ident("a participant name");
        auto& p = get_participant(sys, n, sp);
        expect_sym(":");
        p.geom = parse_fp();
        expect_sym(";");
      } else if (kw == "bound") {
        std::string v = expect_ident("a variable name");
        if (at_sym(".")) {
          eat();
          v += "." + expect_ident("a variable name");
        }
        expect_sym(":");
        expect_sym("[");
        Rat lo = parse_rat_lit();
        expect_sym(",");
        Rat hi = parse_rat_lit();
        expect_sym("]");
        expect_sym(";");
        sys.bounds.bounds[v] = {lo, hi};
      } else if (kw == "motion") {
        MotionSpec m;
        m.owner = expect_ident("a participant name");
        get_participant(sys, m.owner, sp);
        expect_sym(".");
        m.name = expect_ident("a motion name");
        expect_sym("(");
        if (!at_sym(")")) {
          while (true) {
            std::string pn = expect_ident("a parameter name");
            Sort s = sort_real();
            if (at_sym(":")) {
              eat();
              s = parse_sort();
            }
            m.params.emplace_back(pn, s);
            if (at_sym(",")) {
              eat();
              continue;
            }
            break;
          }
        }
        expect_sym(")");
        expect_sym("{");
        m.pre = pr_true();
        m.assume = pr_true();
        m.guarantee = pr_true();
        m.post = pr_true();
        m.fp = fp_pred(pr_false());
        m.duration = ival_inf(Rat(0));
        m.mode = Mode::Interruptible;
        while (!at_sym("}")) {
          SrcSpan fsp = peek().span;
          std::string field = expect_ident("a motion field");
          expect_sym(":");
          if (field == "pre") m.pre = parse_pred();
          else if (field == "assume") m.assume = parse_pred();
          else if (field == "guarantee") m.guarantee = parse_pred();
          else if (field == "post") m.post = parse_pred();
          else if (field == "footprint") m.fp = parse_fp();
          else if (field == "duration") m.duration = parse_ival();
          else if (field == "mode") {
            std::string md = expect_ident("a mode");
            if (md == "interruptible") m.mode = Mode::Interruptible;
            else if (md == "noninterruptible") m.mode = Mode::NonInterruptible;
            else throw SyntaxError(fsp, file + ": unknown mode '" + md + "'");
          } else if (field == "trajectory") {
            while (true) {
              std::string tv = expect_ident("a state variable");
              expect_sym(":=");
              m.trajectory.emplace_back(tv, parse_expr());
              if (at_sym(",")) {
                eat();
                continue;
              }
              break;
            }
          } else {
            throw SyntaxError(fsp, file + ": unknown motion field '" + field + "'");
          }
          expect_sym(";");
        }
        expect_sym("}");
        std::string key = motion_key(m.owner, m.name);
        if (sys.motions.count(key))
          throw SyntaxError(sp, file + ": motion '" + key + "' declared twice");
        sys.motions[key] = std::move(m);
      } else if (kw == "global") {
        sys.global_name = expect_ident("a global type name");
        expect_sym("=");
        std::set<std::string> rv;
        sys.global = parse_g(rv);
        expect_sym(";");
      } else if (kw == "process") {
        std::string subject = expect_ident("a participant name");
        get_participant(sys, subject, sp);
        expect_sym("=");
        std::set<std::string> rv;
        if (sys.processes.count(subject))
          throw SyntaxError(sp, file + ": process for '" + subject + "' declared twice");
        sys.processes[subject] = parse_p(subject, rv);
        expect_sym(";");
      } else {
        throw SyntaxError(sp, file + ": unknown declaration '" + kw + "'");
      }
    }
    if (!saw_system) {
      SrcSpan sp{1, 1, 1, 1};
      throw SyntaxError(sp, file + ": missing 'system' declaration");
    }
    validate(sys);
    return sys;
  }

  // Reference validation over the assembled system.
  void validate(System& sys) {
    SrcSpan sp{1, 1, 1, 1};
    // State variable names must be globally unique, or input references
    // become ambiguous.
    std::map<std::string, std::string> var_owner;
    for (auto& p : sys.participants) {
      for (auto& v : p.state_vars) {
        auto [it, fresh] = var_owner.emplace(v, p.name);
        if (!fresh)
          throw AmbiguousInputVariable(
              sp, file + ": state variable '" + v + "' is declared by both '" + it->second +
                      "' and '" + p.name + "', so input references to it are ambiguous");
      }
    }
    // Every input variable must name some other participant's state variable.
    for (auto& p : sys.participants) {
      for (auto& w : p.input_vars) {
        auto it = var_owner.find(w);
        if (it == var_owner.end())
          throw AmbiguousInputVariable(sp, file + ": input variable '" + w + "' of '" + p.name +
                                               "' does not match any state variable");
        if (it->second == p.name)
          throw AmbiguousInputVariable(sp, file + ": input variable '" + w + "' of '" + p.name +
                                               "' refers to its own state");
      }
    }
    // Motion references in the global type and in processes.
    if (sys.global) check_global_refs(sys, sys.global);
    for (auto& [name, proc] : sys.processes) check_proc_refs(sys, proc);
    // Requalify bound entries so they match canonical variable names.
    {
      std::map<std::string, std::pair<Rat, Rat>> canon;
      for (auto& [v, be] : sys.bounds.bounds) {
        std::string bare = v.substr(v.find('.') + 1);  // whole name if no dot
        auto it = var_owner.find(bare);
        canon[it != var_owner.end() ? qvar(it->second, bare) : v] = be;
      }
      sys.bounds.bounds = std::move(canon);
    }
  }

  void check_atom_ref(const System& sys, const MotionAtom& a, const SrcSpan& sp) {
    if (!sys.find_participant(a.participant))
      throw UnknownParticipant(sp, file + ": participant '" + a.participant + "' is not declared");
    const MotionSpec* m = sys.find_motion(a.participant, a.name);
    if (!m)
      throw UnknownMotion(sp, file + ": motion '" + motion_key(a.participant, a.name) +
                                  "' is not declared");
    if (m->params.size() != a.args.size())
      throw UnknownMotion(sp, file + ": motion '" + motion_key(a.participant, a.name) +
                                  "' expects " + std::to_string(m->params.size()) +
                                  " arguments, got " + std::to_string(a.args.size()));
  }

  void check_gprefix_refs(const System& sys, const GPrefixP& g) {
    if (!g) return;
    switch (g->kind) {
      case GPKind::Message:
        if (!sys.find_participant(g->from))
          throw UnknownParticipant(g->span, file + ": participant '" + g->from +
                                                "' is not declared");
        if (!sys.find_participant(g->to))
          throw UnknownParticipant(g->span, file + ": participant '" + g->to +
                                                "' is not declared");
        return;
      case GPKind::Motion:
        for (auto& a : g->atoms) check_atom_ref(sys, a, g->span);
        return;
      case GPKind::Seq:
      case GPKind::Sep:
        check_gprefix_refs(sys, g->a);
        check_gprefix_refs(sys, g->b);
        return;
      case GPKind::Choice:
        for (auto& a : g->alts) check_gprefix_refs(sys, a);
        return;
    }
  }

  void check_global_refs(const System& sys, const GlobalP& g) {
    if (!g) return;
    switch (g->kind) {
      case GTKind::Seq:
        check_gprefix_refs(sys, g->prefix);
        check_global_refs(sys, g->cont);
        return;
      case GTKind::Rec: check_global_refs(sys, g->body); return;
      case GTKind::Var: return;
    }
  }

  void check_proc_refs(const System& sys, const ProcP& p) {
    if (!p) return;
    switch (p->kind) {
      case PKind::Var: return;
      case PKind::Rec: check_proc_refs(sys, p->body); return;
      case PKind::Send:
        if (!sys.find_participant(p->peer))
          throw UnknownParticipant(p->span, file + ": participant '" + p->peer +
                                                "' is not declared");
        check_proc_refs(sys, p->cont);
        return;
      case PKind::Recv:
        if (!sys.find_participant(p->peer))
          throw UnknownParticipant(p->span, file + ": participant '" + p->peer +
                                                "' is not declared");
        for (auto& b : p->branches) check_proc_refs(sys, b.cont);
        if (p->dflt) {
          check_atom_ref(sys, p->dflt->first, p->span);
          check_proc_refs(sys, p->dflt->second);
        }
        return;
      case PKind::Motion:
        check_atom_ref(sys, p->atom, p->span);
        check_proc_refs(sys, p->cont);
        return;
      case PKind::Cond:
        check_proc_refs(sys, p->pthen);
        check_proc_refs(sys, p->pelse);
        return;
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points.

System parse_system(const std::string& source, const std::string& filename) {
  Parser p(source, filename);
  return p.parse_system_file();
}

GlobalP parse_global(const std::string& source, const std::string& filename) {
  Parser p(source, filename);
  std::set<std::string> rv;
  GlobalP g = p.parse_g(rv);
  if (p.peek().kind != Tok::End) p.fail("trailing input after global type");
  return g;
}

LocalP parse_local(const std::string& source, const std::string& filename) {
  Parser p(source, filename);
  std::set<std::string> rv;
  LocalP t = p.parse_l(rv);
  if (p.peek().kind != Tok::End) p.fail("trailing input after local type");
  return t;
}

ProcP parse_process(const std::string& source, const std::string& subject,
                    const std::string& filename) {
  Parser p(source, filename);
  std::set<std::string> rv;
  ProcP pr = p.parse_p(subject, rv);
  if (p.peek().kind != Tok::End) p.fail("trailing input after process");
  return pr;
}

PredP parse_pred(const std::string& source, const std::string& filename) {
  Parser p(source, filename);
  PredP q = p.parse_pred();
  if (p.peek().kind != Tok::End) p.fail("trailing input after predicate");
  return q;
}

ExprP parse_expr(const std::string& source, const std::string& filename) {
  Parser p(source, filename);
  ExprP e = p.parse_expr();
  if (p.peek().kind != Tok::End) p.fail("trailing input after expression");
  return e;
}

}  // namespace choreo
