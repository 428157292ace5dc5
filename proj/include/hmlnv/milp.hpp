#pragma once

// Mixed-integer layer on top of the LP core: best-bound branch-and-bound over
// the integral variables, an optional completion heuristic that turns a
// node's fractional solution into a full feasible incumbent, piecewise-linear
// approximation of univariate functions, and CPLEX-LP text export.

#include <functional>
#include <optional>

#include "hmlnv/lp.hpp"

namespace hmlnv {

struct MilpVar {
    std::string name;
    bool integral = false;
    double lo = 0, hi = 0;
    double obj = 0;
};

struct MilpProblem {
    std::vector<MilpVar> vars;
    std::vector<LinearRow> rows;
    double obj_offset = 0;  // constant folded out of the objective

    // Branching preference; empty means every integral variable in index
    // order.  Variables not listed are appended in index order.
    std::vector<int> branch_priority;

    // Optional repair heuristic: receives a vector whose listed decision
    // binaries are integral, completes the rest to a feasible point (true) or
    // gives up (false).  Must produce globally feasible assignments.
    std::function<bool(std::vector<double>&)> completion;
    std::vector<int> decision_vars;  // binaries the heuristic needs integral

    int add_var(std::string name, bool integral, double lo, double hi, double obj = 0) {
        vars.push_back({std::move(name), integral, lo, hi, obj});
        return static_cast<int>(vars.size()) - 1;
    }
    void add_row(std::vector<std::pair<int, double>> terms, RowSense sense, double rhs,
                 std::string name = {}) {
        rows.push_back({std::move(name), std::move(terms), sense, rhs});
    }
};

enum class MilpStatus : uint8_t { Optimal, Infeasible, ResourceLimit };

struct MilpResult {
    MilpStatus status = MilpStatus::Infeasible;
    double obj = 0;       // includes obj_offset
    std::vector<double> x;
    long nodes = 0;
    double root_relaxation = 0;  // LP bound at the root, includes obj_offset
};

struct MilpLimits {
    long max_nodes = 2'000'000;
    double max_seconds = 1e18;
    double int_tol = 1e-6;   // integrality tolerance
    double gap = 1e-9;       // absolute bound-vs-incumbent pruning gap
};

MilpResult solve_milp(const MilpProblem& problem, const MilpLimits& limits = {});

// ---------------------------------------------------------------------------
// Piecewise-linear approximation of a univariate function on [lo, hi] with
// equal-width segments; max_error is the largest |f - interpolant| observed
// on a dense probe grid.

struct PiecewiseSpec {
    std::vector<double> x;  // breakpoints, ascending, segments+1 of them
    std::vector<double> y;  // f at the breakpoints
    double max_error = 0;
};

PiecewiseSpec piecewise_linearize(const std::function<double(double)>& f, double lo,
                                  double hi, int segments);

// Interpolant value at z (clamped to [x.front(), x.back()]).
double piecewise_value(const PiecewiseSpec& pl, double z);

// ---------------------------------------------------------------------------
// CPLEX LP text: sections Maximize / Subject To / Bounds / Binary / End,
// variables in declaration order, fixed "%.12g" number formatting.  Output is
// byte-stable for identical problems.

std::string export_lp_format(const MilpProblem& problem);

}  // namespace hmlnv
