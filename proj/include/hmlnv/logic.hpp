#pragma once

// First-order layer: domains, predicates, formulas over symbolic and
// sub-symbolic (continuous-valued) atoms, grounding, and world evaluation.
//
// A model assigns every ground atom a value: {0,1} for symbolic predicates,
// a real number for sub-symbolic ones.  Formulas come in three flavours:
//   * symbolic     - classical connectives over symbolic atoms, value in {0,1}
//   * continuous   - a soft equality / soft inequality over sub-symbolic terms
//   * hybrid       - (continuous) * (symbolic), zero when the symbolic part is
//                    false, otherwise the continuous value
// Soft terms are penalties: 0 when perfectly satisfied, increasingly negative
// as the constraint is violated.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmlnv/errors.hpp"

namespace hmlnv {

// ---------------------------------------------------------------------------
// Vocabulary

struct Domain {
    std::string name;
    std::vector<std::string> constants;  // declaration order

    // Index of a constant, -1 if absent.
    int index_of(const std::string& c) const {
        for (size_t i = 0; i < constants.size(); ++i)
            if (constants[i] == c) return static_cast<int>(i);
        return -1;
    }
};

enum class AtomKind : uint8_t {
    Symbolic,     // boolean-valued ground atoms
    SubSymbolic,  // real-valued ground atoms (distances, scores, ...)
};

struct PredicateSchema {
    std::string name;
    std::vector<int> arg_domains;  // indices into Spec::domains
    AtomKind kind = AtomKind::Symbolic;

    int arity() const { return static_cast<int>(arg_domains.size()); }
};

// ---------------------------------------------------------------------------
// Formulas
//
// Formula atoms refer to predicate schemas by index and carry arguments that
// are either variables (index into the owning property's free-variable list)
// or constants (index into the argument position's domain).

struct Arg {
    bool is_var = true;
    int index = 0;  // variable slot or constant index, depending on is_var

    static Arg var(int i) { return {true, i}; }
    static Arg constant(int i) { return {false, i}; }
    bool operator==(const Arg&) const = default;
};

enum class Conn : uint8_t { Not, And, Or, Implies, Iff };
enum class IneqDir : uint8_t { Less, Greater };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// One side of a soft equality: either a sub-symbolic atom or a literal number.
struct NumericTerm {
    int schema = -1;  // -1 => constant
    std::vector<Arg> args;
    double value = 0.0;  // used when schema < 0

    bool is_constant() const { return schema < 0; }
    bool operator==(const NumericTerm&) const = default;
};

struct Formula {
    enum class Kind : uint8_t { Atom, Connective, SoftEq, SoftIneq, HybridProduct };
    Kind kind = Kind::Atom;

    // Kind::Atom -- a symbolic predicate applied to arguments.
    int schema = -1;
    std::vector<Arg> args;

    // Kind::Connective
    Conn conn = Conn::Not;
    std::vector<FormulaPtr> children;  // 1 for Not, 2+ for the rest

    // Kind::SoftEq -- -(lhs - rhs)^2
    NumericTerm lhs, rhs;

    // Kind::SoftIneq -- -ln(1 + exp(±a (term - tau)))
    NumericTerm term;
    double tau = 0.0;
    IneqDir dir = IneqDir::Less;
    double softness = 1.0;

    // Kind::HybridProduct -- (continuous) * (symbolic)
    FormulaPtr cont_part, sym_part;

    static FormulaPtr atom(int schema, std::vector<Arg> args);
    static FormulaPtr lnot(FormulaPtr f);
    static FormulaPtr connective(Conn c, std::vector<FormulaPtr> children);
    static FormulaPtr soft_eq(NumericTerm lhs, NumericTerm rhs);
    static FormulaPtr soft_ineq(NumericTerm term, double tau, IneqDir dir, double softness);
    static FormulaPtr product(FormulaPtr cont, FormulaPtr sym);
};

bool formula_equal(const Formula& a, const Formula& b);

// Whether a formula evaluates to {0,1} (pure symbolic), to a real (pure
// continuous soft term), or is a hybrid product of the two.
enum class FormulaClass : uint8_t { Symbolic, Continuous, Hybrid };
FormulaClass classify(const Formula& f);

// ---------------------------------------------------------------------------
// Properties (weighted formulas)

struct FreeVar {
    std::string name;
    int domain = 0;
    bool operator==(const FreeVar&) const = default;
};

struct Property {
    int id = 0;              // position in Spec::properties
    double init_weight = 0;  // weight written in the spec file
    FormulaPtr formula;
    std::vector<FreeVar> free_vars;  // order of first occurrence
};

// ---------------------------------------------------------------------------
// The parsed specification

struct Spec {
    std::vector<Domain> domains;
    std::vector<PredicateSchema> schemas;
    std::vector<Property> properties;

    // Options from `option` lines; recognised: metric, softness.
    std::string metric = "euclidean";
    double default_softness = 1.0;

    int domain_index(const std::string& name) const;
    int schema_index(const std::string& name) const;
};

bool spec_equal(const Spec& a, const Spec& b);

// ---------------------------------------------------------------------------
// Ground atoms and worlds

struct GroundAtom {
    int schema = 0;
    std::vector<int> args;  // constant indices per argument position
    auto operator<=>(const GroundAtom&) const = default;
};

// Deterministic dense id space over all ground atoms of a spec.  Ids are
// assigned schema-by-schema in declaration order, arguments enumerated
// lexicographically by constant index, so id arithmetic is a mixed-radix
// positional code and needs no hashing.
class AtomTable {
public:
    AtomTable() = default;
    explicit AtomTable(const Spec& spec);

    int size() const { return total_; }
    int id_of(const GroundAtom& atom) const;
    int id_of(int schema, std::span<const int> args) const;
    GroundAtom atom_of(int id) const;
    AtomKind kind_of(int id) const;
    int schema_of(int id) const;
    std::string name_of(int id, const Spec& spec) const;

    // Id range [first, last) covered by one predicate.
    std::pair<int, int> schema_range(int schema) const;

private:
    struct SchemaBlock {
        int offset = 0;
        std::vector<int> radix;    // domain sizes per argument
        std::vector<int> strides;  // mixed-radix strides
        AtomKind kind = AtomKind::Symbolic;
    };
    std::vector<SchemaBlock> blocks_;
    int total_ = 0;
};

// A (possibly partial) assignment of values to ground atoms.  Symbolic atoms
// store 0/1; sub-symbolic atoms store reals.
class World {
public:
    World() = default;
    explicit World(const AtomTable* table)
        : table_(table),
          values_(table->size(), 0.0),
          assigned_(table->size(), 0) {}

    const AtomTable* table() const { return table_; }

    void set(int atom_id, double v) {
        values_[atom_id] = v;
        assigned_[atom_id] = 1;
    }
    void clear(int atom_id) { assigned_[atom_id] = 0; }
    bool has(int atom_id) const { return assigned_[atom_id] != 0; }

    double value(int atom_id) const {
        if (!assigned_[atom_id]) throw EvalError("unassigned ground atom in world");
        return values_[atom_id];
    }
    bool truth(int atom_id) const { return value(atom_id) != 0.0; }

private:
    const AtomTable* table_ = nullptr;
    std::vector<double> values_;
    std::vector<char> assigned_;
};

// ---------------------------------------------------------------------------
// Grounding

// One grounding of a property: the substitution assigns a constant index to
// each free variable (by position).
struct GroundProperty {
    const Property* property = nullptr;
    std::vector<int> subst;
};

// All groundings of a property, free variables enumerated lexicographically
// by constant index (first variable slowest).
std::vector<GroundProperty> ground_formula(const std::vector<Domain>& domains,
                                           const Property& property);

// Ground atoms mentioned by one grounding, in syntactic (left-to-right) order.
std::vector<GroundAtom> ground_atoms_of(const Spec& spec, const Property& property,
                                        std::span<const int> subst);

// ---------------------------------------------------------------------------
// Evaluation

// Soft equality: zero iff both sides agree, negative quadratic otherwise.
inline double soft_eq_value(double lhs, double rhs) {
    const double d = lhs - rhs;
    return -(d * d);
}

// Soft inequality: log-sigmoid penalty, ~0 deep inside the feasible side,
// -a*violation deep outside, exactly -ln 2 at the threshold.
// Written via log1p(exp(-|z|)) so large violations do not overflow.
inline double soft_ineq_value(double term, double tau, IneqDir dir, double softness) {
    const double z = (dir == IneqDir::Less) ? softness * (term - tau)
                                            : softness * (tau - term);
    if (z > 0) return -(z + std::log1p(std::exp(-z)));
    return -std::log1p(std::exp(z));
}

// Value of a soft-term node under a substitution (node must be SoftEq/SoftIneq).
double soft_term_value(const Spec& spec, const Formula& node, std::span<const int> subst,
                       const World& world);

// Truth of a symbolic formula (contract: classify(f) == Symbolic).
bool eval_symbolic(const Spec& spec, const Formula& f, std::span<const int> subst,
                   const World& world);

// Value of one grounding of a property: 0/1 for symbolic formulas, the soft
// term for continuous ones, and their product for hybrids.
double ground_value(const Spec& spec, const Property& property, std::span<const int> subst,
                    const World& world);

// Value of a hybrid/continuous grounding (contract violation for symbolic).
double hybrid_formula_value(const Spec& spec, const GroundProperty& g, const World& world);

// Number of true groundings of a symbolic property under a total world.
long count_true_groundings(const Spec& spec, const Property& property, const World& world);

}  // namespace hmlnv
