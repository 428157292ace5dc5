#include <charconv>

#include "hmlnv/spec.hpp"

namespace hmlnv {

namespace {

// Shortest decimal that parses back to the same double.
std::string fmt_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

struct Renderer {
    const Spec& spec;
    const Property& property;

    std::string arg_text(const Arg& a, int domain) const {
        if (a.is_var) return property.free_vars[a.index].name;
        return spec.domains[domain].constants[a.index];
    }

    std::string atom_text(int schema, const std::vector<Arg>& args) const {
        const PredicateSchema& s = spec.schemas[schema];
        std::string out = s.name + "(";
        for (size_t i = 0; i < args.size(); ++i) {
            if (i) out += ", ";
            out += arg_text(args[i], s.arg_domains[i]);
        }
        return out + ")";
    }

    std::string term_text(const NumericTerm& t) const {
        if (t.is_constant()) return fmt_number(t.value);
        return atom_text(t.schema, t.args);
    }

    std::string soft_text(const Formula& f) const {
        if (f.kind == Formula::Kind::SoftEq)
            return "(" + term_text(f.lhs) + " == " + term_text(f.rhs) + ")";
        std::string out = "(" + term_text(f.term);
        out += (f.dir == IneqDir::Less) ? " < " : " > ";
        out += fmt_number(f.tau);
        if (f.softness != spec.default_softness) out += " a=" + fmt_number(f.softness);
        return out + ")";
    }

    // Binding strength; a child is parenthesised when it binds looser than
    // its context requires.
    static int prec_of(const Formula& f) {
        if (f.kind != Formula::Kind::Connective) return 6;
        switch (f.conn) {
            case Conn::Iff: return 1;
            case Conn::Implies: return 2;
            case Conn::Or: return 3;
            case Conn::And: return 4;
            case Conn::Not: return 5;
        }
        return 6;
    }

    std::string sym_text(const Formula& f, int min_prec) const {
        if (f.kind == Formula::Kind::Atom) return atom_text(f.schema, f.args);
        const int prec = prec_of(f);
        std::string out;
        switch (f.conn) {
            case Conn::Not:
                out = "!" + sym_text(*f.children[0], prec + 1);
                break;
            case Conn::And:
            case Conn::Or: {
                const char* op = (f.conn == Conn::And) ? " ^ " : " v ";
                for (size_t i = 0; i < f.children.size(); ++i) {
                    if (i) out += op;
                    out += sym_text(*f.children[i], prec + 1);
                }
                break;
            }
            case Conn::Implies:
                // right-associative: the left side needs to bind tighter
                out = sym_text(*f.children[0], prec + 1) + " => " +
                      sym_text(*f.children[1], prec);
                break;
            case Conn::Iff:
                // left-associative
                out = sym_text(*f.children[0], prec) + " <=> " +
                      sym_text(*f.children[1], prec + 1);
                break;
        }
        if (prec < min_prec) out = "(" + out + ")";
        return out;
    }

    std::string formula_text() const {
        const Formula& f = *property.formula;
        switch (classify(f)) {
            case FormulaClass::Symbolic:
                return sym_text(f, 0);
            case FormulaClass::Continuous:
                return soft_text(f);
            case FormulaClass::Hybrid:
                return soft_text(*f.cont_part) + " * (" + sym_text(*f.sym_part, 0) + ")";
        }
        return {};
    }
};

}  // namespace

std::string render_formula(const Spec& spec, const Property& property) {
    return Renderer{spec, property}.formula_text();
}

std::string render_spec(const Spec& spec) {
    std::string out;
    for (const Domain& d : spec.domains) {
        out += "domain " + d.name + " = {";
        for (size_t i = 0; i < d.constants.size(); ++i) {
            if (i) out += ", ";
            out += d.constants[i];
        }
        out += "}\n";
    }
    for (const PredicateSchema& s : spec.schemas) {
        out += (s.kind == AtomKind::Symbolic) ? "predicate " : "subsymbolic ";
        out += s.name + "(";
        for (size_t i = 0; i < s.arg_domains.size(); ++i) {
            if (i) out += ", ";
            out += spec.domains[s.arg_domains[i]].name;
        }
        out += ")\n";
    }
    out += "option metric " + spec.metric + "\n";
    out += "option softness " + fmt_number(spec.default_softness) + "\n";
    for (const Property& p : spec.properties)
        out += fmt_number(p.init_weight) + "  " + render_formula(spec, p) + "\n";
    return out;
}

}  // namespace hmlnv
