#include "hmlnv/encode.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>

namespace hmlnv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// A boolean expression that is either a constant or (possibly negated)
// variable of the MILP.
struct Lit {
    int var = -1;
    bool neg = false;
    bool is_const = false;
    bool const_val = false;

    static Lit constant(bool v) { return {-1, false, true, v}; }
    static Lit of(int var, bool neg = false) { return {var, neg, false, false}; }
    Lit operator!() const {
        if (is_const) return constant(!const_val);
        return {var, !neg, false, false};
    }
};

// Simplified ground formula retained for the completion heuristic.
struct GNode {
    enum class Kind : uint8_t { AtomVar, Not, And, Or, Implies, Iff };
    Kind kind;
    int var = -1;            // atom variable or Tseitin auxiliary
    std::vector<int> kids;   // pool indices
};

struct PlBlock {
    int z_var = -1;          // variable the function is evaluated on
    int g_var = -1;
    int lam0 = -1;           // first lambda var (contiguous)
    int seg0 = -1;           // first adjacency binary (contiguous)
    PiecewiseSpec pl;
    // when z is a difference variable: z = atoms[0] - atoms[1]
    std::vector<int> diff_atom_vars;
};

struct ProductEntry {
    int p_var = -1;
    int block = -1;  // PlBlock index
    Lit lit;
};

// Everything the completion hook needs, shared with the returned problem.
struct Guts {
    std::vector<GNode> pool;
    std::vector<int> roots;            // root pool node per encoded grounding (-1 folded)
    std::vector<Lit> root_lits;        // root literal per grounding (const when folded)
    std::vector<PlBlock> blocks;
    std::vector<ProductEntry> products;
    std::vector<int> decision;         // query binaries
    std::optional<std::pair<long, bool>> force;
    // atom var -> (block indices keyed directly on that var)
    std::map<int, std::vector<int>> blocks_on_atom;
};

class Encoder {
public:
    Encoder(const GroundModel& model, const MapOptions& opts)
        : model_(model), opts_(opts), guts_(std::make_shared<Guts>()) {
        d_max_ = opts.d_max_override > 0 ? opts.d_max_override : model.d_max;
    }

    MapEncoding run() {
        MapEncoding enc;
        enc.fixed = World(&model_.table);
        fixed_ = &enc.fixed;

        for (int id : model_.partition.evidence) enc.fixed.set(id, model_.base.value(id));
        if (opts_.fix_subsymbolic)
            for (int id : model_.partition.subsymbolic)
                enc.fixed.set(id, model_.base.value(id));
        if (opts_.clamp_query) {
            if (!opts_.observed)
                throw ContractViolation("clamping query atoms needs an observed world");
            for (int id : model_.partition.query) enc.fixed.set(id, opts_.observed->value(id));
            enc.n_free_query = 0;
        } else {
            enc.n_free_query = static_cast<int>(model_.partition.query.size());
        }

        atom_var_.assign(model_.table.size(), -1);

        // Free continuous atoms whose every use has a fixed symbolic context
        // separate from the rest of the problem: their optimum is a
        // breakpoint of the summed piecewise objective, so they can be fixed
        // up front and folded away like any other fixed atom.
        presolve_separable();

        // encode groundings in model order
        guts_->roots.assign(model_.groundings.size(), -1);
        guts_->root_lits.assign(model_.groundings.size(), Lit::constant(false));
        for (size_t gi = 0; gi < model_.groundings.size(); ++gi) encode_grounding(gi);

        // forced grounding
        if (opts_.force) {
            const auto [gidx, target] = *opts_.force;
            if (gidx < 0 || gidx >= static_cast<long>(model_.groundings.size()))
                throw ContractViolation("forced grounding index out of range");
            const GroundingEntry& g = model_.groundings[gidx];
            if (classify(*model_.property_of(g).formula) == FormulaClass::Continuous)
                throw ContractViolation(
                    "a purely continuous grounding has no symbolic part to force");
            // root_lits holds the symbolic part for hybrid groundings
            const Lit lit = guts_->root_lits[gidx];
            if (lit.is_const) {
                if (lit.const_val != target) enc.trivially_infeasible = true;
            } else {
                // val(lit) = target
                RowAccum row;
                row.add_lit(lit, 1.0);
                problem_.add_row(std::move(row.terms), RowSense::EQ,
                                 (target ? 1.0 : 0.0) - row.shift, "force");
            }
            guts_->force = opts_.force;
        }

        // atoms never mentioned by any live formula keep a default value
        for (int id : model_.partition.query)
            if (!enc.fixed.has(id) && atom_var_[id] < 0) enc.untouched.push_back({id, 0.0});
        for (int id : model_.partition.subsymbolic)
            if (!enc.fixed.has(id) && atom_var_[id] < 0)
                enc.untouched.push_back({id, model_.base.value(id)});

        problem_.decision_vars = guts_->decision;
        problem_.branch_priority = guts_->decision;
        for (const PlBlock& b : guts_->blocks)
            for (size_t s = 0; s + 1 < b.pl.x.size(); ++s)
                problem_.branch_priority.push_back(b.seg0 + static_cast<int>(s));
        install_completion();

        enc.problem = std::move(problem_);
        enc.atom_var = std::move(atom_var_);
        return enc;
    }

private:
    // ------------------------------------------------------------ variables

    int query_var(int atom_id) {
        int& v = atom_var_[atom_id];
        if (v < 0) {
            v = problem_.add_var("b_" + model_.table.name_of(atom_id, *model_.spec), true, 0,
                                 1);
            sanitize(problem_.vars[v].name);
            guts_->decision.push_back(v);
        }
        return v;
    }

    int subsym_var(int atom_id) {
        int& v = atom_var_[atom_id];
        if (v < 0) {
            v = problem_.add_var("d_" + model_.table.name_of(atom_id, *model_.spec), false, 0,
                                 d_max_);
            sanitize(problem_.vars[v].name);
        }
        return v;
    }

    static void sanitize(std::string& name) {
        for (char& c : name)
            if (c == '(' || c == ')' || c == ',' || c == ' ') c = '_';
    }

    // ------------------------------------------------------- row assembly

    struct RowAccum {
        std::vector<std::pair<int, double>> terms;
        double shift = 0;  // constant accumulated on the left-hand side

        void add(int var, double c) {
            if (c != 0) terms.push_back({var, c});
        }
        void add_lit(const Lit& l, double c) {
            if (l.is_const) {
                shift += l.const_val ? c : 0;
                return;
            }
            if (l.neg) {
                shift += c;
                add(l.var, -c);
            } else {
                add(l.var, c);
            }
        }
    };

    void le(RowAccum row, double rhs) {
        problem_.add_row(std::move(row.terms), RowSense::LE, rhs - row.shift);
    }
    void eq(RowAccum row, double rhs) {
        problem_.add_row(std::move(row.terms), RowSense::EQ, rhs - row.shift);
    }

    // ---------------------------------------------------------- presolve

    // Three-valued evaluation under the fixed atoms: 1 true, 0 false,
    // -1 undetermined.  Mirrors the constant folding build_sym performs.
    int try_eval_sym(const Formula& f, std::span<const int> subst) {
        switch (f.kind) {
            case Formula::Kind::Atom: {
                std::vector<int> args(f.args.size());
                for (size_t i = 0; i < f.args.size(); ++i)
                    args[i] = f.args[i].is_var ? subst[f.args[i].index] : f.args[i].index;
                const int id = model_.table.id_of(f.schema, args);
                if (!fixed_->has(id)) return -1;
                return fixed_->truth(id) ? 1 : 0;
            }
            case Formula::Kind::Connective:
                switch (f.conn) {
                    case Conn::Not: {
                        const int v = try_eval_sym(*f.children[0], subst);
                        return v < 0 ? -1 : 1 - v;
                    }
                    case Conn::And: {
                        bool open = false;
                        for (const auto& c : f.children) {
                            const int v = try_eval_sym(*c, subst);
                            if (v == 0) return 0;
                            if (v < 0) open = true;
                        }
                        return open ? -1 : 1;
                    }
                    case Conn::Or: {
                        bool open = false;
                        for (const auto& c : f.children) {
                            const int v = try_eval_sym(*c, subst);
                            if (v == 1) return 1;
                            if (v < 0) open = true;
                        }
                        return open ? -1 : 0;
                    }
                    case Conn::Implies: {
                        const int a = try_eval_sym(*f.children[0], subst);
                        const int b = try_eval_sym(*f.children[1], subst);
                        if (a == 0 || b == 1) return 1;
                        if (a == 1 && b == 0) return 0;
                        return -1;
                    }
                    case Conn::Iff: {
                        const int a = try_eval_sym(*f.children[0], subst);
                        const int b = try_eval_sym(*f.children[1], subst);
                        if (a < 0 || b < 0) return -1;
                        return a == b ? 1 : 0;
                    }
                }
                throw ContractViolation("unreachable connective");
            default:
                throw ContractViolation("symbolic evaluation on a non-symbolic node");
        }
    }

    void presolve_separable() {
        struct AtomUse {
            bool coupled = false;
            // fn key -> (accumulated weight, the function itself)
            std::map<std::string, std::pair<double, std::function<double(double)>>> fns;
        };
        std::map<int, AtomUse> uses;

        auto term_atom = [&](const NumericTerm& t, std::span<const int> subst) -> int {
            if (t.is_constant()) return -1;
            std::vector<int> args(t.args.size());
            for (size_t i = 0; i < t.args.size(); ++i)
                args[i] = t.args[i].is_var ? subst[t.args[i].index] : t.args[i].index;
            const int id = model_.table.id_of(t.schema, args);
            return fixed_->has(id) ? -1 : id;
        };
        auto term_value = [&](const NumericTerm& t, std::span<const int> subst) {
            if (t.is_constant()) return t.value;
            std::vector<int> args(t.args.size());
            for (size_t i = 0; i < t.args.size(); ++i)
                args[i] = t.args[i].is_var ? subst[t.args[i].index] : t.args[i].index;
            return fixed_->value(model_.table.id_of(t.schema, args));
        };

        auto add_soft = [&](const Formula& f, std::span<const int> subst, double w) {
            if (f.kind == Formula::Kind::SoftIneq) {
                const int id = term_atom(f.term, subst);
                if (id < 0) return;
                const double tau = f.tau, a = f.softness;
                const IneqDir dir = f.dir;
                auto& slot = uses[id].fns["iq:" + std::to_string(tau) + ":" +
                                         std::to_string(a) + ":" +
                                         std::to_string(static_cast<int>(dir))];
                slot.first += w;
                slot.second = [tau, a, dir](double z) {
                    return soft_ineq_value(z, tau, dir, a);
                };
                return;
            }
            const int id1 = term_atom(f.lhs, subst);
            const int id2 = term_atom(f.rhs, subst);
            if (id1 >= 0 && id2 >= 0) {
                uses[id1].coupled = true;
                uses[id2].coupled = true;
                return;
            }
            if (id1 < 0 && id2 < 0) return;
            const int id = id1 >= 0 ? id1 : id2;
            const double c = id1 >= 0 ? term_value(f.rhs, subst) : term_value(f.lhs, subst);
            auto& slot = uses[id].fns["eqc:" + std::to_string(c)];
            slot.first += w;
            slot.second = [c](double z) { return soft_eq_value(z, c); };
        };
        auto mark_coupled = [&](const Formula& f, std::span<const int> subst) {
            if (f.kind == Formula::Kind::SoftIneq) {
                const int id = term_atom(f.term, subst);
                if (id >= 0) uses[id].coupled = true;
                return;
            }
            for (const NumericTerm* t : {&f.lhs, &f.rhs}) {
                const int id = term_atom(*t, subst);
                if (id >= 0) uses[id].coupled = true;
            }
        };

        for (const GroundingEntry& g : model_.groundings) {
            const Formula& f = *model_.property_of(g).formula;
            switch (classify(f)) {
                case FormulaClass::Symbolic:
                    break;
                case FormulaClass::Continuous:
                    add_soft(f, g.subst, g.weight);
                    break;
                case FormulaClass::Hybrid: {
                    const int sv = try_eval_sym(*f.sym_part, g.subst);
                    if (sv == 0) break;
                    if (sv == 1)
                        add_soft(*f.cont_part, g.subst, g.weight);
                    else
                        mark_coupled(*f.cont_part, g.subst);
                    break;
                }
            }
        }

        for (auto& [id, use] : uses) {
            if (use.coupled || use.fns.empty()) continue;
            std::vector<std::pair<double, const PiecewiseSpec*>> pls;
            std::vector<double> cands;
            for (auto& [key, wf] : use.fns) {
                auto it = presolve_pl_.find(key);
                if (it == presolve_pl_.end())
                    it = presolve_pl_
                             .emplace(key, piecewise_linearize(wf.second, 0.0, d_max_,
                                                               opts_.segments))
                             .first;
                pls.push_back({wf.first, &it->second});
                for (double x : it->second.x) cands.push_back(x);
            }
            std::sort(cands.begin(), cands.end());
            cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
            double best = cands.front();
            double best_val = kNegInf;
            for (double z : cands) {
                double v = 0;
                for (const auto& [w, pl] : pls) v += w * piecewise_value(*pl, z);
                if (v > best_val) {
                    best_val = v;
                    best = z;
                }
            }
            fixed_->set(id, best);
        }
    }

    // ----------------------------------------------------- formula folding

    // Fold fixed atoms; emit a pool node for what's left.
    // Result: constant literal or a literal over a variable.
    Lit build_sym(const Formula& f, std::span<const int> subst, int& pool_node) {
        pool_node = -1;
        switch (f.kind) {
            case Formula::Kind::Atom: {
                std::vector<int> args(f.args.size());
                for (size_t i = 0; i < f.args.size(); ++i)
                    args[i] = f.args[i].is_var ? subst[f.args[i].index] : f.args[i].index;
                const int id = model_.table.id_of(f.schema, args);
                if (fixed_->has(id)) return Lit::constant(fixed_->truth(id));
                const int v = query_var(id);
                guts_->pool.push_back({GNode::Kind::AtomVar, v, {}});
                pool_node = static_cast<int>(guts_->pool.size()) - 1;
                return Lit::of(v);
            }
            case Formula::Kind::Connective:
                return build_conn(f, subst, pool_node);
            default:
                throw ContractViolation("symbolic build on a non-symbolic node");
        }
    }

    Lit build_conn(const Formula& f, std::span<const int> subst, int& pool_node) {
        std::vector<Lit> lits;
        std::vector<int> nodes;
        for (const auto& child : f.children) {
            int node = -1;
            Lit l = build_sym(*child, subst, node);
            lits.push_back(l);
            nodes.push_back(node);
        }
        switch (f.conn) {
            case Conn::Not: {
                pool_node = nodes[0];  // negation rides on the literal
                if (pool_node >= 0) {
                    guts_->pool.push_back({GNode::Kind::Not, -1, {pool_node}});
                    pool_node = static_cast<int>(guts_->pool.size()) - 1;
                }
                return !lits[0];
            }
            case Conn::And: {
                std::vector<Lit> live;
                std::vector<int> live_nodes;
                for (size_t i = 0; i < lits.size(); ++i) {
                    if (lits[i].is_const) {
                        if (!lits[i].const_val) return Lit::constant(false);
                        continue;  // true conjunct drops out
                    }
                    live.push_back(lits[i]);
                    live_nodes.push_back(nodes[i]);
                }
                if (live.empty()) return Lit::constant(true);
                if (live.size() == 1) {
                    pool_node = live_nodes[0];
                    return live[0];
                }
                return tseitin_and(live, live_nodes, pool_node);
            }
            case Conn::Or: {
                std::vector<Lit> live;
                std::vector<int> live_nodes;
                for (size_t i = 0; i < lits.size(); ++i) {
                    if (lits[i].is_const) {
                        if (lits[i].const_val) return Lit::constant(true);
                        continue;
                    }
                    live.push_back(lits[i]);
                    live_nodes.push_back(nodes[i]);
                }
                if (live.empty()) return Lit::constant(false);
                if (live.size() == 1) {
                    pool_node = live_nodes[0];
                    return live[0];
                }
                return tseitin_or(live, live_nodes, pool_node);
            }
            case Conn::Implies: {
                // a => b  ==  !a v b
                std::vector<Lit> ors{!lits[0], lits[1]};
                std::vector<int> or_nodes{nodes[0] >= 0 ? negate_node(nodes[0]) : -1,
                                          nodes[1]};
                std::vector<Lit> live;
                std::vector<int> live_nodes;
                for (size_t i = 0; i < ors.size(); ++i) {
                    if (ors[i].is_const) {
                        if (ors[i].const_val) return Lit::constant(true);
                        continue;
                    }
                    live.push_back(ors[i]);
                    live_nodes.push_back(or_nodes[i]);
                }
                if (live.empty()) return Lit::constant(false);
                if (live.size() == 1) {
                    pool_node = live_nodes[0];
                    return live[0];
                }
                return tseitin_or(live, live_nodes, pool_node);
            }
            case Conn::Iff: {
                const Lit a = lits[0], b = lits[1];
                if (a.is_const && b.is_const)
                    return Lit::constant(a.const_val == b.const_val);
                if (a.is_const) {
                    pool_node = a.const_val ? nodes[1] : negate_node(nodes[1]);
                    return a.const_val ? b : !b;
                }
                if (b.is_const) {
                    pool_node = b.const_val ? nodes[0] : negate_node(nodes[0]);
                    return b.const_val ? a : !a;
                }
                return tseitin_iff(a, b, nodes[0], nodes[1], pool_node);
            }
        }
        throw ContractViolation("unreachable connective");
    }

    int negate_node(int node) {
        if (node < 0) return -1;
        guts_->pool.push_back({GNode::Kind::Not, -1, {node}});
        return static_cast<int>(guts_->pool.size()) - 1;
    }

    Lit tseitin_and(const std::vector<Lit>& lits, const std::vector<int>& nodes,
                    int& pool_node) {
        const int b = problem_.add_var("t" + std::to_string(aux_count_++), true, 0, 1);
        for (const Lit& l : lits) {  // b <= l_i
            RowAccum row;
            row.add(b, 1.0);
            row.add_lit(l, -1.0);
            le(std::move(row), 0);
        }
        RowAccum row;  // sum l_i - b <= k-1
        row.add(b, -1.0);
        for (const Lit& l : lits) row.add_lit(l, 1.0);
        le(std::move(row), static_cast<double>(lits.size()) - 1);
        guts_->pool.push_back({GNode::Kind::And, b, nodes});
        pool_node = static_cast<int>(guts_->pool.size()) - 1;
        return Lit::of(b);
    }

    Lit tseitin_or(const std::vector<Lit>& lits, const std::vector<int>& nodes,
                   int& pool_node) {
        const int b = problem_.add_var("t" + std::to_string(aux_count_++), true, 0, 1);
        for (const Lit& l : lits) {  // l_i <= b
            RowAccum row;
            row.add(b, -1.0);
            row.add_lit(l, 1.0);
            le(std::move(row), 0);
        }
        RowAccum row;  // b <= sum l_i
        row.add(b, 1.0);
        for (const Lit& l : lits) row.add_lit(l, -1.0);
        le(std::move(row), 0);
        guts_->pool.push_back({GNode::Kind::Or, b, nodes});
        pool_node = static_cast<int>(guts_->pool.size()) - 1;
        return Lit::of(b);
    }

    Lit tseitin_iff(const Lit& a, const Lit& c, int node_a, int node_c, int& pool_node) {
        const int b = problem_.add_var("t" + std::to_string(aux_count_++), true, 0, 1);
        {
            RowAccum row;  // b >= a + c - 1
            row.add(b, -1.0);
            row.add_lit(a, 1.0);
            row.add_lit(c, 1.0);
            le(std::move(row), 1);
        }
        {
            RowAccum row;  // b >= 1 - a - c
            row.add(b, -1.0);
            row.add_lit(a, -1.0);
            row.add_lit(c, -1.0);
            le(std::move(row), -1);
        }
        {
            RowAccum row;  // b <= 1 - a + c
            row.add(b, 1.0);
            row.add_lit(a, 1.0);
            row.add_lit(c, -1.0);
            le(std::move(row), 1);
        }
        {
            RowAccum row;  // b <= 1 + a - c
            row.add(b, 1.0);
            row.add_lit(a, -1.0);
            row.add_lit(c, 1.0);
            le(std::move(row), 1);
        }
        guts_->pool.push_back({GNode::Kind::Iff, b, {node_a, node_c}});
        pool_node = static_cast<int>(guts_->pool.size()) - 1;
        return Lit::of(b);
    }

    // ------------------------------------------------------- soft terms

    // Either a constant (all inputs fixed) or a PL block index.
    struct ContResult {
        bool is_const = false;
        double value = 0;
        int block = -1;
    };

    int term_var_or_fixed(const NumericTerm& t, std::span<const int> subst, bool& is_fixed,
                          double& fixed_value) {
        if (t.is_constant()) {
            is_fixed = true;
            fixed_value = t.value;
            return -1;
        }
        std::vector<int> args(t.args.size());
        for (size_t i = 0; i < t.args.size(); ++i)
            args[i] = t.args[i].is_var ? subst[t.args[i].index] : t.args[i].index;
        const int id = model_.table.id_of(t.schema, args);
        if (fixed_->has(id)) {
            is_fixed = true;
            fixed_value = fixed_->value(id);
            return -1;
        }
        is_fixed = false;
        return subsym_var(id);
    }

    ContResult build_soft(const Formula& f, std::span<const int> subst) {
        if (f.kind == Formula::Kind::SoftIneq) {
            bool fx;
            double fv;
            const int v = term_var_or_fixed(f.term, subst, fx, fv);
            if (fx) return {true, soft_ineq_value(fv, f.tau, f.dir, f.softness), -1};
            const double tau = f.tau, a = f.softness;
            const IneqDir dir = f.dir;
            return {false, 0,
                    pl_block(v, 0.0, d_max_,
                             [tau, a, dir](double z) { return soft_ineq_value(z, tau, dir, a); },
                             "iq:" + std::to_string(tau) + ":" + std::to_string(a) + ":" +
                                 std::to_string(static_cast<int>(dir)),
                             {})};
        }
        if (f.kind != Formula::Kind::SoftEq)
            throw ContractViolation("soft build on a non-soft node");
        bool fx1, fx2;
        double v1, v2;
        const int var1 = term_var_or_fixed(f.lhs, subst, fx1, v1);
        const int var2 = term_var_or_fixed(f.rhs, subst, fx2, v2);
        if (fx1 && fx2) return {true, soft_eq_value(v1, v2), -1};
        if (fx1 || fx2) {
            const int v = fx1 ? var2 : var1;
            const double c = fx1 ? v1 : v2;
            return {false, 0,
                    pl_block(v, 0.0, d_max_,
                             [c](double z) { return soft_eq_value(z, c); },
                             "eqc:" + std::to_string(c), {})};
        }
        // both free: a difference variable feeds the parabola
        int z;
        auto it = diff_vars_.find({var1, var2});
        if (it != diff_vars_.end()) {
            z = it->second;
        } else {
            z = problem_.add_var("z" + std::to_string(diff_count_++), false, -d_max_, d_max_);
            RowAccum row;  // z - var1 + var2 = 0
            row.add(z, 1.0);
            row.add(var1, -1.0);
            row.add(var2, 1.0);
            eq(std::move(row), 0);
            diff_vars_[{var1, var2}] = z;
        }
        return {false, 0,
                pl_block(z, -d_max_, d_max_, [](double d) { return soft_eq_value(d, 0.0); },
                         "eqd", {var1, var2})};
    }

    int pl_block(int z_var, double zlo, double zhi, const std::function<double(double)>& f,
                 const std::string& fkey, std::vector<int> diff_atoms) {
        const auto key = std::make_pair(z_var, fkey);
        auto it = block_cache_.find(key);
        if (it != block_cache_.end()) return it->second;

        PlBlock blk;
        blk.z_var = z_var;
        blk.pl = piecewise_linearize(f, zlo, zhi, opts_.segments);
        blk.diff_atom_vars = std::move(diff_atoms);
        const int S = static_cast<int>(blk.pl.x.size()) - 1;
        const int bi = static_cast<int>(guts_->blocks.size());

        double ylo = blk.pl.y[0], yhi = blk.pl.y[0];
        for (double y : blk.pl.y) {
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
        blk.g_var = problem_.add_var("g" + std::to_string(bi), false, ylo, yhi);
        blk.lam0 = problem_.vars.size();
        for (int i = 0; i <= S; ++i)
            problem_.add_var("l" + std::to_string(bi) + "_" + std::to_string(i), false, 0, 1);
        blk.seg0 = problem_.vars.size();
        for (int i = 0; i < S; ++i)
            problem_.add_var("u" + std::to_string(bi) + "_" + std::to_string(i), true, 0, 1);

        {
            RowAccum row;  // sum lambda = 1
            for (int i = 0; i <= S; ++i) row.add(blk.lam0 + i, 1.0);
            eq(std::move(row), 1);
        }
        {
            RowAccum row;  // z = sum lambda x_i
            row.add(z_var, 1.0);
            for (int i = 0; i <= S; ++i) row.add(blk.lam0 + i, -blk.pl.x[i]);
            eq(std::move(row), 0);
        }
        {
            RowAccum row;  // g = sum lambda y_i
            row.add(blk.g_var, 1.0);
            for (int i = 0; i <= S; ++i) row.add(blk.lam0 + i, -blk.pl.y[i]);
            eq(std::move(row), 0);
        }
        {
            RowAccum row;  // one active segment
            for (int i = 0; i < S; ++i) row.add(blk.seg0 + i, 1.0);
            eq(std::move(row), 1);
        }
        for (int i = 0; i <= S; ++i) {  // lambda_i <= u_{i-1} + u_i
            RowAccum row;
            row.add(blk.lam0 + i, 1.0);
            if (i > 0) row.add(blk.seg0 + i - 1, -1.0);
            if (i < S) row.add(blk.seg0 + i, -1.0);
            le(std::move(row), 0);
        }

        guts_->blocks.push_back(blk);
        guts_->blocks_on_atom[z_var].push_back(bi);
        block_cache_[key] = bi;
        return bi;
    }

    // product variable p = g * lit, shared across groundings
    int product_var(int block, const Lit& lit) {
        const auto key = std::make_tuple(block, lit.var, lit.neg);
        auto it = product_cache_.find(key);
        if (it != product_cache_.end()) return it->second;
        const PlBlock& blk = guts_->blocks[block];
        double gl = blk.pl.y[0], gh = blk.pl.y[0];
        for (double y : blk.pl.y) {
            gl = std::min(gl, y);
            gh = std::max(gh, y);
        }
        const int p = problem_.add_var("p" + std::to_string(product_count_++), false,
                                       std::min(0.0, gl), std::max(0.0, gh));
        {
            RowAccum row;  // p <= gh b
            row.add(p, 1.0);
            row.add_lit(lit, -gh);
            le(std::move(row), 0);
        }
        {
            RowAccum row;  // p >= gl b
            row.add(p, -1.0);
            row.add_lit(lit, gl);
            le(std::move(row), 0);
        }
        {
            RowAccum row;  // p <= g - gl (1 - b)
            row.add(p, 1.0);
            row.add(blk.g_var, -1.0);
            row.add_lit(lit, -gl);
            le(std::move(row), -gl);
        }
        {
            RowAccum row;  // p >= g - gh (1 - b)
            row.add(p, -1.0);
            row.add(blk.g_var, 1.0);
            row.add_lit(lit, gh);
            le(std::move(row), gh);
        }
        guts_->products.push_back({p, block, lit});
        product_cache_[key] = p;
        return p;
    }

    // --------------------------------------------------------- groundings

    void encode_grounding(size_t gi) {
        const GroundingEntry& ge = model_.groundings[gi];
        const Property& prop = model_.property_of(ge);
        const double w = ge.weight;
        const Formula& f = *prop.formula;

        switch (classify(f)) {
            case FormulaClass::Symbolic: {
                int node = -1;
                const Lit lit = build_sym(f, ge.subst, node);
                guts_->roots[gi] = node;
                guts_->root_lits[gi] = lit;
                add_obj_lit(lit, w);
                return;
            }
            case FormulaClass::Continuous: {
                const ContResult c = build_soft(f, ge.subst);
                if (c.is_const)
                    problem_.obj_offset += w * c.value;
                else
                    problem_.vars[guts_->blocks[c.block].g_var].obj += w;
                guts_->root_lits[gi] = Lit::constant(true);
                return;
            }
            case FormulaClass::Hybrid: {
                int node = -1;
                const Lit lit = build_sym(*f.sym_part, ge.subst, node);
                guts_->roots[gi] = node;
                guts_->root_lits[gi] = lit;
                if (lit.is_const && !lit.const_val) return;  // symbolic part false
                const ContResult c = build_soft(*f.cont_part, ge.subst);
                if (lit.is_const) {  // true: plain continuous contribution
                    if (c.is_const)
                        problem_.obj_offset += w * c.value;
                    else
                        problem_.vars[guts_->blocks[c.block].g_var].obj += w;
                    return;
                }
                if (c.is_const) {  // fixed soft value scales the literal
                    add_obj_lit(lit, w * c.value);
                    return;
                }
                const int p = product_var(c.block, lit);
                problem_.vars[p].obj += w;
                return;
            }
        }
    }

    void add_obj_lit(const Lit& lit, double w) {
        if (w == 0) return;
        if (lit.is_const) {
            if (lit.const_val) problem_.obj_offset += w;
            return;
        }
        if (lit.neg) {
            problem_.obj_offset += w;
            problem_.vars[lit.var].obj -= w;
        } else {
            problem_.vars[lit.var].obj += w;
        }
    }

    // -------------------------------------------------------- completion

    void install_completion() {
        auto guts = guts_;
        std::vector<double> objs(problem_.vars.size());
        for (size_t j = 0; j < problem_.vars.size(); ++j) objs[j] = problem_.vars[j].obj;
        problem_.completion = [guts, objs](std::vector<double>& x) -> bool {
            // evaluate the retained formula pool bottom-up
            std::vector<char> val(guts->pool.size(), 0);
            for (size_t i = 0; i < guts->pool.size(); ++i) {
                const GNode& nd = guts->pool[i];
                bool v = false;
                switch (nd.kind) {
                    case GNode::Kind::AtomVar:
                        v = x[nd.var] > 0.5;
                        break;
                    case GNode::Kind::Not:
                        v = !val[nd.kids[0]];
                        break;
                    case GNode::Kind::And: {
                        v = true;
                        for (int k : nd.kids) v = v && val[k];
                        break;
                    }
                    case GNode::Kind::Or: {
                        v = false;
                        for (int k : nd.kids) v = v || val[k];
                        break;
                    }
                    case GNode::Kind::Implies:
                        v = !val[nd.kids[0]] || val[nd.kids[1]];
                        break;
                    case GNode::Kind::Iff:
                        v = val[nd.kids[0]] == val[nd.kids[1]];
                        break;
                }
                val[i] = v;
                if (nd.var >= 0 && nd.kind != GNode::Kind::AtomVar) x[nd.var] = v ? 1.0 : 0.0;
            }

            // forced grounding must come out right
            if (guts->force) {
                const Lit lit = guts->root_lits[guts->force->first];
                bool lv;
                if (lit.is_const) lv = lit.const_val;
                else lv = (lit.neg ? x[lit.var] < 0.5 : x[lit.var] > 0.5);
                if (lv != guts->force->second) return false;
            }

            auto lit_value = [&](const Lit& l) {
                if (l.is_const) return l.const_val ? 1.0 : 0.0;
                return l.neg ? 1.0 - x[l.var] : x[l.var];
            };

            // marginal objective coefficient of each block's g
            std::vector<double> coef(guts->blocks.size(), 0.0);
            for (size_t bi = 0; bi < guts->blocks.size(); ++bi)
                coef[bi] = objs[guts->blocks[bi].g_var];
            for (const ProductEntry& pe : guts->products)
                coef[pe.block] += objs[pe.p_var] * lit_value(pe.lit);

            // per-variable choice over the union of its blocks' breakpoints
            for (const auto& [zv, blist] : guts->blocks_on_atom) {
                bool is_diff = false;
                for (int bi : blist)
                    if (!guts->blocks[bi].diff_atom_vars.empty()) is_diff = true;
                if (is_diff) continue;  // handled after atoms are settled
                std::vector<double> cands;
                for (int bi : blist)
                    for (double bp : guts->blocks[bi].pl.x) cands.push_back(bp);
                std::sort(cands.begin(), cands.end());
                cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
                double best = cands.front(), best_val = kNegInf;
                for (double z : cands) {
                    double v = 0;
                    for (int bi : blist)
                        v += coef[bi] * piecewise_value(guts->blocks[bi].pl, z);
                    if (v > best_val) {
                        best_val = v;
                        best = z;
                    }
                }
                x[zv] = best;
            }

            // difference variables follow their atoms
            for (const PlBlock& blk : guts->blocks)
                if (!blk.diff_atom_vars.empty())
                    x[blk.z_var] = x[blk.diff_atom_vars[0]] - x[blk.diff_atom_vars[1]];

            // settle lambdas, segments, g, products
            for (size_t bi = 0; bi < guts->blocks.size(); ++bi) {
                const PlBlock& blk = guts->blocks[bi];
                const int S = static_cast<int>(blk.pl.x.size()) - 1;
                double z = x[blk.z_var];
                z = std::min(std::max(z, blk.pl.x.front()), blk.pl.x.back());
                int seg = 0;
                while (seg + 1 < S && z > blk.pl.x[seg + 1]) ++seg;
                const double w = blk.pl.x[seg + 1] - blk.pl.x[seg];
                const double t = (w == 0) ? 0.0 : (z - blk.pl.x[seg]) / w;
                for (int i = 0; i <= S; ++i) x[blk.lam0 + i] = 0;
                x[blk.lam0 + seg] = 1 - t;
                x[blk.lam0 + seg + 1] += t;
                for (int i = 0; i < S; ++i) x[blk.seg0 + i] = 0;
                x[blk.seg0 + seg] = 1;
                x[blk.g_var] = blk.pl.y[seg] + t * (blk.pl.y[seg + 1] - blk.pl.y[seg]);
            }
            for (const ProductEntry& pe : guts->products)
                x[pe.p_var] = x[guts->blocks[pe.block].g_var] * lit_value(pe.lit);
            return true;
        };
    }

    const GroundModel& model_;
    const MapOptions& opts_;
    std::shared_ptr<Guts> guts_;
    MilpProblem problem_;
    World* fixed_ = nullptr;
    std::vector<int> atom_var_;
    double d_max_ = 0;
    int aux_count_ = 0;
    int diff_count_ = 0;
    int product_count_ = 0;
    std::map<std::pair<int, int>, int> diff_vars_;
    std::map<std::pair<int, std::string>, int> block_cache_;
    std::map<std::tuple<int, int, bool>, int> product_cache_;
    std::map<std::string, PiecewiseSpec> presolve_pl_;
};

}  // namespace

MapEncoding encode_map(const GroundModel& model, const MapOptions& opts) {
    Encoder enc(model, opts);
    return enc.run();
}

World decode_world(const GroundModel& model, const MapEncoding& enc,
                   const std::vector<double>& x) {
    World w = enc.fixed;
    for (int id = 0; id < model.table.size(); ++id) {
        const int v = enc.atom_var[id];
        if (v < 0) continue;
        if (model.table.kind_of(id) == AtomKind::Symbolic)
            w.set(id, x[v] > 0.5 ? 1.0 : 0.0);
        else
            w.set(id, x[v]);
    }
    for (const auto& [id, value] : enc.untouched) w.set(id, value);
    return w;
}

MapOutcome solve_map(const GroundModel& model, const MapOptions& opts,
                     const MilpLimits& limits) {
    const MapEncoding enc = encode_map(model, opts);
    MapOutcome out;
    out.n_free_query = enc.n_free_query;
    if (enc.trivially_infeasible) {
        out.status = MilpStatus::Infeasible;
        out.objective = kNegInf;
        return out;
    }
    const MilpResult res = solve_milp(enc.problem, limits);
    out.status = res.status;
    out.nodes = res.nodes;
    if (res.status == MilpStatus::Infeasible ||
        (res.status == MilpStatus::ResourceLimit && res.x.empty())) {
        out.objective = kNegInf;
        return out;
    }
    out.objective = res.obj;
    out.world = decode_world(model, enc, res.x);
    return out;
}

}  // namespace hmlnv
