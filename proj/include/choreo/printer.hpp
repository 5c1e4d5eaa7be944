#pragma once

#include <string>

#include "choreo/ast.hpp"

namespace choreo {

// Renderers produce the same surface syntax the parser reads, so that
// parse(render(x)) reconstructs x (up to the constant folds the expression
// builders already apply).

std::string render_expr(const ExprP& e);
std::string render_pred(const PredP& p);
std::string render_sort(const Sort& s);
std::string render_ref(const Refinement& r);      // "nu: real | pred" (no parens)
std::string render_fp(const Footprint& f);        // "box(...)" or "pred(...)"
std::string render_ival(const Ival& i);           // "[a, b]" or "[a, inf)"
std::string render_atom(const MotionAtom& a);     // "P: m(args) @ cell"
std::string render_gprefix(const GPrefixP& g);    // factor position
std::string render_global(const GlobalP& g);
std::string render_local(const LocalP& t);
std::string render_process(const ProcP& p);
std::string render_system(const System& s);

}  // namespace choreo
