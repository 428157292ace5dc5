#pragma once

// Linear programming: a self-contained bounded-variable primal simplex
// (maximization), dense explicit basis inverse.  Built for the moderate-size
// relaxations the branch-and-bound search produces; not a general-purpose
// large-scale code.

#include <span>
#include <string>
#include <vector>

#include "hmlnv/errors.hpp"

namespace hmlnv {

enum class RowSense : uint8_t { LE, GE, EQ };

struct LinearRow {
    std::string name;
    std::vector<std::pair<int, double>> terms;  // (variable, coefficient)
    RowSense sense = RowSense::LE;
    double rhs = 0;
};

struct LpModel {
    int n = 0;  // structural variable count
    std::vector<double> obj, lo, hi;
    std::vector<LinearRow> rows;

    int add_var(double lo_, double hi_, double obj_ = 0) {
        lo.push_back(lo_);
        hi.push_back(hi_);
        obj.push_back(obj_);
        return n++;
    }
    void add_row(std::vector<std::pair<int, double>> terms, RowSense sense, double rhs,
                 std::string name = {}) {
        rows.push_back({std::move(name), std::move(terms), sense, rhs});
    }
};

enum class LpStatus : uint8_t { Optimal, Infeasible, Unbounded, IterLimit };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double obj = 0;
    std::vector<double> x;  // structural variables only
    long iterations = 0;
};

// Solve with the model's own bounds, or with per-node overrides (same length
// as the structural variable vector).
LpSolution solve_lp(const LpModel& model);
LpSolution solve_lp(const LpModel& model, std::span<const double> lo,
                    std::span<const double> hi);

}  // namespace hmlnv
