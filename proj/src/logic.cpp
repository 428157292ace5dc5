#include "hmlnv/logic.hpp"

#include <algorithm>

namespace hmlnv {

// ---------------------------------------------------------------------------
// Formula factories

FormulaPtr Formula::atom(int schema, std::vector<Arg> args) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Atom;
    f->schema = schema;
    f->args = std::move(args);
    return f;
}

FormulaPtr Formula::lnot(FormulaPtr child) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Connective;
    f->conn = Conn::Not;
    f->children = {std::move(child)};
    return f;
}

FormulaPtr Formula::connective(Conn c, std::vector<FormulaPtr> children) {
    if (c == Conn::Not && children.size() != 1)
        throw ContractViolation("negation takes exactly one child");
    if (c != Conn::Not && children.size() < 2)
        throw ContractViolation("binary connective needs at least two children");
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Connective;
    f->conn = c;
    f->children = std::move(children);
    return f;
}

FormulaPtr Formula::soft_eq(NumericTerm lhs, NumericTerm rhs) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::SoftEq;
    f->lhs = std::move(lhs);
    f->rhs = std::move(rhs);
    return f;
}

FormulaPtr Formula::soft_ineq(NumericTerm term, double tau, IneqDir dir, double softness) {
    if (!(softness > 0)) throw ContractViolation("softness must be positive");
    auto f = std::make_shared<Formula>();
    f->kind = Kind::SoftIneq;
    f->term = std::move(term);
    f->tau = tau;
    f->dir = dir;
    f->softness = softness;
    return f;
}

FormulaPtr Formula::product(FormulaPtr cont, FormulaPtr sym) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::HybridProduct;
    f->cont_part = std::move(cont);
    f->sym_part = std::move(sym);
    return f;
}

bool formula_equal(const Formula& a, const Formula& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Formula::Kind::Atom:
            return a.schema == b.schema && a.args == b.args;
        case Formula::Kind::Connective: {
            if (a.conn != b.conn || a.children.size() != b.children.size()) return false;
            for (size_t i = 0; i < a.children.size(); ++i)
                if (!formula_equal(*a.children[i], *b.children[i])) return false;
            return true;
        }
        case Formula::Kind::SoftEq:
            return a.lhs == b.lhs && a.rhs == b.rhs;
        case Formula::Kind::SoftIneq:
            return a.term == b.term && a.tau == b.tau && a.dir == b.dir &&
                   a.softness == b.softness;
        case Formula::Kind::HybridProduct:
            return formula_equal(*a.cont_part, *b.cont_part) &&
                   formula_equal(*a.sym_part, *b.sym_part);
    }
    return false;
}

FormulaClass classify(const Formula& f) {
    switch (f.kind) {
        case Formula::Kind::Atom:
            return FormulaClass::Symbolic;
        case Formula::Kind::Connective:
            return FormulaClass::Symbolic;
        case Formula::Kind::SoftEq:
        case Formula::Kind::SoftIneq:
            return FormulaClass::Continuous;
        case Formula::Kind::HybridProduct:
            return FormulaClass::Hybrid;
    }
    return FormulaClass::Symbolic;
}

// ---------------------------------------------------------------------------
// Spec lookups

int Spec::domain_index(const std::string& name) const {
    for (size_t i = 0; i < domains.size(); ++i)
        if (domains[i].name == name) return static_cast<int>(i);
    return -1;
}

int Spec::schema_index(const std::string& name) const {
    for (size_t i = 0; i < schemas.size(); ++i)
        if (schemas[i].name == name) return static_cast<int>(i);
    return -1;
}

static bool numeric_term_equal_named(const Spec&, const NumericTerm& a, const NumericTerm& b) {
    return a == b;
}

bool spec_equal(const Spec& a, const Spec& b) {
    if (a.domains.size() != b.domains.size() || a.schemas.size() != b.schemas.size() ||
        a.properties.size() != b.properties.size())
        return false;
    for (size_t i = 0; i < a.domains.size(); ++i)
        if (a.domains[i].name != b.domains[i].name ||
            a.domains[i].constants != b.domains[i].constants)
            return false;
    for (size_t i = 0; i < a.schemas.size(); ++i)
        if (a.schemas[i].name != b.schemas[i].name ||
            a.schemas[i].arg_domains != b.schemas[i].arg_domains ||
            a.schemas[i].kind != b.schemas[i].kind)
            return false;
    for (size_t i = 0; i < a.properties.size(); ++i) {
        if (a.properties[i].init_weight != b.properties[i].init_weight) return false;
        if (a.properties[i].free_vars != b.properties[i].free_vars) return false;
        if (!formula_equal(*a.properties[i].formula, *b.properties[i].formula)) return false;
    }
    (void)numeric_term_equal_named;
    return a.metric == b.metric && a.default_softness == b.default_softness;
}

// ---------------------------------------------------------------------------
// AtomTable

AtomTable::AtomTable(const Spec& spec) {
    blocks_.reserve(spec.schemas.size());
    for (const auto& schema : spec.schemas) {
        SchemaBlock blk;
        blk.offset = total_;
        blk.kind = schema.kind;
        blk.radix.reserve(schema.arg_domains.size());
        for (int d : schema.arg_domains)
            blk.radix.push_back(static_cast<int>(spec.domains[d].constants.size()));
        blk.strides.assign(blk.radix.size(), 1);
        for (int i = static_cast<int>(blk.radix.size()) - 2; i >= 0; --i)
            blk.strides[i] = blk.strides[i + 1] * blk.radix[i + 1];
        int count = 1;
        for (int r : blk.radix) count *= r;
        total_ += count;
        blocks_.push_back(std::move(blk));
    }
}

int AtomTable::id_of(int schema, std::span<const int> args) const {
    const SchemaBlock& blk = blocks_[schema];
    if (args.size() != blk.radix.size())
        throw ContractViolation("ground atom arity mismatch");
    int id = blk.offset;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] < 0 || args[i] >= blk.radix[i])
            throw ContractViolation("ground atom argument outside its domain");
        id += args[i] * blk.strides[i];
    }
    return id;
}

int AtomTable::id_of(const GroundAtom& atom) const { return id_of(atom.schema, atom.args); }

GroundAtom AtomTable::atom_of(int id) const {
    for (size_t s = 0; s < blocks_.size(); ++s) {
        const SchemaBlock& blk = blocks_[s];
        const int end = (s + 1 < blocks_.size()) ? blocks_[s + 1].offset : total_;
        if (id < blk.offset || id >= end) continue;
        GroundAtom atom;
        atom.schema = static_cast<int>(s);
        int rest = id - blk.offset;
        atom.args.resize(blk.radix.size());
        for (size_t i = 0; i < blk.radix.size(); ++i) {
            atom.args[i] = rest / blk.strides[i];
            rest %= blk.strides[i];
        }
        return atom;
    }
    throw ContractViolation("ground atom id out of range");
}

AtomKind AtomTable::kind_of(int id) const { return blocks_[schema_of(id)].kind; }

int AtomTable::schema_of(int id) const {
    for (size_t s = 0; s < blocks_.size(); ++s) {
        const int end = (s + 1 < blocks_.size()) ? blocks_[s + 1].offset : total_;
        if (id >= blocks_[s].offset && id < end) return static_cast<int>(s);
    }
    throw ContractViolation("ground atom id out of range");
}

std::string AtomTable::name_of(int id, const Spec& spec) const {
    const GroundAtom atom = atom_of(id);
    const PredicateSchema& schema = spec.schemas[atom.schema];
    std::string out = schema.name + "(";
    for (size_t i = 0; i < atom.args.size(); ++i) {
        if (i) out += ",";
        out += spec.domains[schema.arg_domains[i]].constants[atom.args[i]];
    }
    out += ")";
    return out;
}

std::pair<int, int> AtomTable::schema_range(int schema) const {
    const int first = blocks_[schema].offset;
    const int last =
        (static_cast<size_t>(schema) + 1 < blocks_.size()) ? blocks_[schema + 1].offset : total_;
    return {first, last};
}

// ---------------------------------------------------------------------------
// Grounding

std::vector<GroundProperty> ground_formula(const std::vector<Domain>& domains,
                                           const Property& property) {
    std::vector<GroundProperty> out;
    const size_t k = property.free_vars.size();
    if (k == 0) {
        out.push_back({&property, {}});
        return out;
    }
    std::vector<int> sizes(k);
    long total = 1;
    for (size_t i = 0; i < k; ++i) {
        sizes[i] = static_cast<int>(domains[property.free_vars[i].domain].constants.size());
        if (sizes[i] == 0) return out;  // empty domain: no groundings
        total *= sizes[i];
    }
    out.reserve(total);
    std::vector<int> subst(k, 0);
    while (true) {
        out.push_back({&property, subst});
        // odometer increment, last variable fastest
        int pos = static_cast<int>(k) - 1;
        while (pos >= 0 && ++subst[pos] == sizes[pos]) subst[pos--] = 0;
        if (pos < 0) break;
    }
    return out;
}

static void collect_atoms(const Spec& spec, const Formula& f, std::span<const int> subst,
                          std::vector<GroundAtom>& out) {
    auto resolve = [&](int schema, const std::vector<Arg>& args) {
        GroundAtom atom;
        atom.schema = schema;
        atom.args.reserve(args.size());
        for (const Arg& a : args) atom.args.push_back(a.is_var ? subst[a.index] : a.index);
        out.push_back(std::move(atom));
    };
    switch (f.kind) {
        case Formula::Kind::Atom:
            resolve(f.schema, f.args);
            break;
        case Formula::Kind::Connective:
            for (const auto& c : f.children) collect_atoms(spec, *c, subst, out);
            break;
        case Formula::Kind::SoftEq:
            if (!f.lhs.is_constant()) resolve(f.lhs.schema, f.lhs.args);
            if (!f.rhs.is_constant()) resolve(f.rhs.schema, f.rhs.args);
            break;
        case Formula::Kind::SoftIneq:
            if (!f.term.is_constant()) resolve(f.term.schema, f.term.args);
            break;
        case Formula::Kind::HybridProduct:
            collect_atoms(spec, *f.cont_part, subst, out);
            collect_atoms(spec, *f.sym_part, subst, out);
            break;
    }
}

std::vector<GroundAtom> ground_atoms_of(const Spec& spec, const Property& property,
                                        std::span<const int> subst) {
    std::vector<GroundAtom> out;
    collect_atoms(spec, *property.formula, subst, out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

static double numeric_term_value(const Spec& spec, const NumericTerm& t,
                                 std::span<const int> subst, const World& world) {
    if (t.is_constant()) return t.value;
    std::vector<int> args(t.args.size());
    for (size_t i = 0; i < t.args.size(); ++i)
        args[i] = t.args[i].is_var ? subst[t.args[i].index] : t.args[i].index;
    (void)spec;
    return world.value(world.table()->id_of(t.schema, args));
}

double soft_term_value(const Spec& spec, const Formula& node, std::span<const int> subst,
                       const World& world) {
    if (node.kind == Formula::Kind::SoftEq)
        return soft_eq_value(numeric_term_value(spec, node.lhs, subst, world),
                             numeric_term_value(spec, node.rhs, subst, world));
    if (node.kind == Formula::Kind::SoftIneq)
        return soft_ineq_value(numeric_term_value(spec, node.term, subst, world), node.tau,
                               node.dir, node.softness);
    throw ContractViolation("soft_term_value called on a non-soft node");
}

bool eval_symbolic(const Spec& spec, const Formula& f, std::span<const int> subst,
                   const World& world) {
    switch (f.kind) {
        case Formula::Kind::Atom: {
            std::vector<int> args(f.args.size());
            for (size_t i = 0; i < f.args.size(); ++i)
                args[i] = f.args[i].is_var ? subst[f.args[i].index] : f.args[i].index;
            return world.truth(world.table()->id_of(f.schema, args));
        }
        case Formula::Kind::Connective:
            switch (f.conn) {
                case Conn::Not:
                    return !eval_symbolic(spec, *f.children[0], subst, world);
                case Conn::And:
                    for (const auto& c : f.children)
                        if (!eval_symbolic(spec, *c, subst, world)) return false;
                    return true;
                case Conn::Or:
                    for (const auto& c : f.children)
                        if (eval_symbolic(spec, *c, subst, world)) return true;
                    return false;
                case Conn::Implies:
                    return !eval_symbolic(spec, *f.children[0], subst, world) ||
                           eval_symbolic(spec, *f.children[1], subst, world);
                case Conn::Iff: {
                    const bool first = eval_symbolic(spec, *f.children[0], subst, world);
                    for (size_t i = 1; i < f.children.size(); ++i)
                        if (eval_symbolic(spec, *f.children[i], subst, world) != first)
                            return false;
                    return true;
                }
            }
            return false;
        default:
            throw ContractViolation("symbolic evaluation of a non-symbolic formula");
    }
}

double ground_value(const Spec& spec, const Property& property, std::span<const int> subst,
                    const World& world) {
    const Formula& f = *property.formula;
    switch (classify(f)) {
        case FormulaClass::Symbolic:
            return eval_symbolic(spec, f, subst, world) ? 1.0 : 0.0;
        case FormulaClass::Continuous:
            return soft_term_value(spec, f, subst, world);
        case FormulaClass::Hybrid:
            if (!eval_symbolic(spec, *f.sym_part, subst, world)) return 0.0;
            return soft_term_value(spec, *f.cont_part, subst, world);
    }
    return 0.0;
}

double hybrid_formula_value(const Spec& spec, const GroundProperty& g, const World& world) {
    const FormulaClass cls = classify(*g.property->formula);
    if (cls == FormulaClass::Symbolic)
        throw ContractViolation("hybrid_formula_value called on a symbolic property");
    return ground_value(spec, *g.property, g.subst, world);
}

long count_true_groundings(const Spec& spec, const Property& property, const World& world) {
    if (classify(*property.formula) != FormulaClass::Symbolic)
        throw ContractViolation("count_true_groundings needs a symbolic property");
    long count = 0;
    for (const GroundProperty& g : ground_formula(spec.domains, property))
        if (eval_symbolic(spec, *property.formula, g.subst, world)) ++count;
    return count;
}

}  // namespace hmlnv
