#include "hmlnv/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>

namespace hmlnv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Node {
    long id = 0;
    double bound = 0;   // parent LP bound (root: +inf until solved)
    int fix_var = -1;   // bound change vs parent
    double fix_lo = 0, fix_hi = 0;
    int parent = -1;
};

struct NodeOrder {
    const std::vector<Node>* pool;
    // best bound first, then oldest id (deterministic)
    bool operator()(long a, long b) const {
        const Node& na = (*pool)[a];
        const Node& nb = (*pool)[b];
        if (na.bound != nb.bound) return na.bound < nb.bound;
        return na.id > nb.id;
    }
};

}  // namespace

MilpResult solve_milp(const MilpProblem& problem, const MilpLimits& limits) {
    const int n = static_cast<int>(problem.vars.size());
    MilpResult res;
    res.obj = kNegInf;

    if (n == 0) {  // fully folded problem
        res.status = MilpStatus::Optimal;
        res.obj = problem.obj_offset;
        res.root_relaxation = problem.obj_offset;
        return res;
    }

    LpModel lp;
    for (const MilpVar& v : problem.vars) lp.add_var(v.lo, v.hi, v.obj);
    lp.rows = problem.rows;

    // branch order: explicit priorities, then remaining integral vars
    std::vector<int> branch_order;
    std::vector<char> listed(n, 0);
    for (int v : problem.branch_priority) {
        if (v < 0 || v >= n) throw ContractViolation("branch priority names unknown variable");
        if (!listed[v] && problem.vars[v].integral) {
            branch_order.push_back(v);
            listed[v] = 1;
        }
    }
    for (int v = 0; v < n; ++v)
        if (problem.vars[v].integral && !listed[v]) branch_order.push_back(v);

    const auto t0 = std::chrono::steady_clock::now();
    auto out_of_time = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >
               limits.max_seconds;
    };

    std::vector<Node> pool;
    pool.push_back({0, std::numeric_limits<double>::infinity(), -1, 0, 0, -1});
    std::priority_queue<long, std::vector<long>, NodeOrder> open(NodeOrder{&pool});
    open.push(0);
    long next_id = 1;

    double incumbent = kNegInf;
    std::vector<double> incumbent_x;
    bool any_feasible_lp = false;
    bool hit_limit = false;
    double best_open_bound = std::numeric_limits<double>::infinity();

    std::vector<double> lo(n), hi(n), trial;

    while (!open.empty()) {
        if (res.nodes >= limits.max_nodes || out_of_time()) {
            hit_limit = true;
            break;
        }
        const long idx = open.top();
        open.pop();
        const Node& node = pool[idx];
        if (node.bound <= incumbent + limits.gap) continue;  // pruned late

        // materialize bounds along the ancestor chain (nearest fix wins)
        for (int j = 0; j < n; ++j) {
            lo[j] = problem.vars[j].lo;
            hi[j] = problem.vars[j].hi;
        }
        std::vector<long> chain;
        for (long a = idx; a >= 0; a = pool[a].parent) chain.push_back(a);
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            const Node& a = pool[*it];
            if (a.fix_var >= 0) {
                lo[a.fix_var] = std::max(lo[a.fix_var], a.fix_lo);
                hi[a.fix_var] = std::min(hi[a.fix_var], a.fix_hi);
            }
        }

        ++res.nodes;
        const LpSolution sol = solve_lp(lp, lo, hi);
        if (sol.status == LpStatus::IterLimit)
            throw ResourceError("simplex iteration limit inside branch-and-bound");
        if (sol.status == LpStatus::Unbounded)
            throw ResourceError("unbounded relaxation inside branch-and-bound");
        if (sol.status == LpStatus::Infeasible) continue;
        any_feasible_lp = true;
        if (res.nodes == 1) res.root_relaxation = sol.obj + problem.obj_offset;

        if (sol.obj <= incumbent + limits.gap) continue;

        // first fractional integral variable in branch order
        int frac_var = -1;
        for (int v : branch_order) {
            const double f = sol.x[v] - std::floor(sol.x[v]);
            if (f > limits.int_tol && f < 1 - limits.int_tol) {
                frac_var = v;
                break;
            }
        }

        if (frac_var < 0) {
            // integral: candidate incumbent
            if (sol.obj > incumbent) {
                incumbent = sol.obj;
                incumbent_x = sol.x;
                for (int v : branch_order) incumbent_x[v] = std::round(incumbent_x[v]);
            }
            continue;
        }

        // repair heuristic: round the decision binaries, complete the rest
        if (problem.completion) {
            trial = sol.x;
            for (int v : problem.decision_vars) trial[v] = std::round(trial[v]);
            if (problem.completion(trial)) {
                double val = 0;
                for (int j = 0; j < n; ++j) val += problem.vars[j].obj * trial[j];
                if (val > incumbent) {
                    incumbent = val;
                    incumbent_x = trial;
                }
            }
        }

        const double split = sol.x[frac_var];
        const double down = std::floor(split);
        Node left{next_id++, sol.obj, frac_var, problem.vars[frac_var].lo, down,
                  static_cast<int>(idx)};
        Node right{next_id++, sol.obj, frac_var, down + 1, problem.vars[frac_var].hi,
                   static_cast<int>(idx)};
        pool.push_back(left);
        open.push(static_cast<long>(pool.size()) - 1);
        pool.push_back(right);
        open.push(static_cast<long>(pool.size()) - 1);
    }

    best_open_bound = incumbent;
    if (hit_limit) {
        // remaining open nodes still bound the optimum
        while (!open.empty()) {
            best_open_bound = std::max(best_open_bound, pool[open.top()].bound);
            break;  // top of the heap has the largest bound
        }
    }

    if (incumbent == kNegInf) {
        res.status = hit_limit ? MilpStatus::ResourceLimit : MilpStatus::Infeasible;
        if (!any_feasible_lp && !hit_limit) res.status = MilpStatus::Infeasible;
        return res;
    }
    res.status = hit_limit ? MilpStatus::ResourceLimit : MilpStatus::Optimal;
    res.obj = incumbent + problem.obj_offset;
    res.x = std::move(incumbent_x);
    (void)best_open_bound;
    return res;
}

// ---------------------------------------------------------------------------
// Piecewise linearization

PiecewiseSpec piecewiselinearize_impl(const std::function<double(double)>& f, double lo,
                                      double hi, int segments) {
    if (!(hi >= lo)) throw ContractViolation("piecewise range is empty");
    if (segments < 1) throw ContractViolation("piecewise needs at least one segment");
    PiecewiseSpec pl;
    pl.x.resize(segments + 1);
    pl.y.resize(segments + 1);
    if (hi == lo) {
        // degenerate interval: a single repeated breakpoint
        pl.x.assign(2, lo);
        pl.y.assign(2, f(lo));
        pl.max_error = 0;
        return pl;
    }
    for (int i = 0; i <= segments; ++i) {
        pl.x[i] = lo + (hi - lo) * (static_cast<double>(i) / segments);
        pl.y[i] = f(pl.x[i]);
    }
    pl.x.back() = hi;  // exact endpoint despite rounding
    // probe each segment for the worst interpolation error
    double worst = 0;
    constexpr int kProbes = 16;
    for (int i = 0; i < segments; ++i) {
        for (int k = 1; k < kProbes; ++k) {
            const double t = static_cast<double>(k) / kProbes;
            const double z = pl.x[i] + t * (pl.x[i + 1] - pl.x[i]);
            const double interp = pl.y[i] + t * (pl.y[i + 1] - pl.y[i]);
            worst = std::max(worst, std::fabs(f(z) - interp));
        }
    }
    pl.max_error = worst;
    return pl;
}

PiecewiseSpec piecewise_linearize(const std::function<double(double)>& f, double lo,
                                  double hi, int segments) {
    return piecewiselinearize_impl(f, lo, hi, segments);
}

double piecewise_value(const PiecewiseSpec& pl, double z) {
    if (z <= pl.x.front()) return pl.y.front();
    if (z >= pl.x.back()) return pl.y.back();
    // breakpoints are few; linear scan keeps this trivially correct
    for (size_t i = 0; i + 1 < pl.x.size(); ++i) {
        if (z <= pl.x[i + 1]) {
            const double w = pl.x[i + 1] - pl.x[i];
            if (w == 0) return pl.y[i];
            const double t = (z - pl.x[i]) / w;
            return pl.y[i] + t * (pl.y[i + 1] - pl.y[i]);
        }
    }
    return pl.y.back();
}

// ---------------------------------------------------------------------------
// LP text export

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void append_terms(std::string& out, const std::vector<std::pair<int, double>>& terms,
                  const std::vector<MilpVar>& vars) {
    bool first = true;
    for (const auto& [v, c] : terms) {
        if (c == 0) continue;
        if (first) {
            if (c < 0) out += "- ";
            first = false;
        } else {
            out += (c < 0) ? " - " : " + ";
        }
        out += fmt_g(std::fabs(c));
        out += " ";
        out += vars[v].name;
    }
    if (first) out += "0";  // all-zero expression
}

}  // namespace

std::string export_lp_format(const MilpProblem& problem) {
    std::string out;
    if (problem.obj_offset != 0)
        out += "\\ objective constant " + fmt_g(problem.obj_offset) + "\n";
    out += "Maximize\n obj: ";
    std::vector<std::pair<int, double>> obj_terms;
    for (size_t j = 0; j < problem.vars.size(); ++j)
        if (problem.vars[j].obj != 0)
            obj_terms.push_back({static_cast<int>(j), problem.vars[j].obj});
    append_terms(out, obj_terms, problem.vars);
    out += "\nSubject To\n";
    for (size_t i = 0; i < problem.rows.size(); ++i) {
        const LinearRow& row = problem.rows[i];
        out += " ";
        out += row.name.empty() ? ("c" + std::to_string(i)) : row.name;
        out += ": ";
        append_terms(out, row.terms, problem.vars);
        switch (row.sense) {
            case RowSense::LE: out += " <= "; break;
            case RowSense::GE: out += " >= "; break;
            case RowSense::EQ: out += " = "; break;
        }
        out += fmt_g(row.rhs);
        out += "\n";
    }
    out += "Bounds\n";
    for (const MilpVar& v : problem.vars) {
        out += " ";
        if (std::isfinite(v.lo) && std::isfinite(v.hi)) {
            if (v.lo == v.hi)
                out += v.name + " = " + fmt_g(v.lo);
            else
                out += fmt_g(v.lo) + " <= " + v.name + " <= " + fmt_g(v.hi);
        } else if (std::isfinite(v.lo)) {
            out += v.name + " >= " + fmt_g(v.lo);
        } else if (std::isfinite(v.hi)) {
            out += v.name + " <= " + fmt_g(v.hi);
        } else {
            out += v.name + " free";
        }
        out += "\n";
    }
    bool any_binary = false;
    for (const MilpVar& v : problem.vars)
        if (v.integral) any_binary = true;
    if (any_binary) {
        out += "Binary\n";
        for (const MilpVar& v : problem.vars)
            if (v.integral) out += " " + v.name + "\n";
    }
    out += "End\n";
    return out;
}

}  // namespace hmlnv
