#pragma once

// Specification language: parsing and canonical rendering.
//
// A spec file is line-oriented:
//
//   // comment
//   domain node = {N1, N2, N3}
//   predicate Class(node, label)
//   subsymbolic Dist(node, node)
//   option metric euclidean
//   option softness 1.0
//   1.5  Class(x, c) ^ Neighbor(x, y) => Class(y, c)
//   0.8  (Dist(x, y) < 0.5) * (Neighbor(x, y))
//   0.5  (Skill(s, c) == Skill(t, c))
//
// Formula operators, loosest first: <=> (iff), => (implies, right-assoc),
// v (or), ^ (and), ! (not).  Variables start lowercase, constants do not.
// Soft inequalities accept an optional per-term softness: (D(x,y) < 0.5 a=10).

#include <string>

#include "hmlnv/logic.hpp"

namespace hmlnv {

// Parse a complete spec from text.  Throws ParseError (with line/column) on
// any syntax or consistency problem; never returns a partial Spec.
Spec parse_spec_text(const std::string& text);

// Read and parse a spec file.
Spec load_spec(const std::string& path);

// Canonical text form.  parse_spec_text(render_spec(s)) reproduces s exactly.
std::string render_spec(const Spec& spec);

// Canonical text of one formula (used by render_spec and diagnostics).
std::string render_formula(const Spec& spec, const Property& property);

}  // namespace hmlnv
