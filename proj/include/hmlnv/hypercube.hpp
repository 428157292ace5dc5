#pragma once

// Hypercube decomposition of the grounding space, and the table of weights
// shared across every grounding that projects out of the same cube.
//
// A hypercube is a list of constant subsets, each drawn from one domain.  Its
// projection on a formula substitutes every variable from the subset of that
// variable's domain, so a cube stands for a block of groundings that share a
// weight.  Recursive refinement grows a partition of at most `alpha` cubes by
// repeatedly splitting the cube whose grounding values vary the most along
// the constant whose conditional means spread the most.

#include <span>
#include <string>
#include <vector>

#include "hmlnv/logic.hpp"

namespace hmlnv {

struct CubeSet {
    int domain = 0;
    std::vector<int> constants;  // ascending

    bool contains(int c) const {
        for (int x : constants)
            if (x == c) return true;
        return false;
    }
    bool operator==(const CubeSet&) const = default;
};

struct Hypercube {
    int id = 0;
    std::vector<CubeSet> sets;

    // True when a substitution for the property's free variables lies inside
    // this cube (every variable's constant in its domain's subset; a missing
    // slot for a used domain means the grounding is outside).
    bool contains(const Property& property, std::span<const int> subst) const;

    // Unique slot for a domain, -1 when absent, -2 when ambiguous.
    int slot_of_domain(int domain) const;
};

// Combine two cubes: sets that overlap (same domain, shared constants) are
// replaced by their intersections, sets disjoint from everything on the other
// side pass through.  Result order: a's sets (intersected where applicable),
// then b's untouched sets.
Hypercube merge_cubes(const Hypercube& a, const Hypercube& b);

// All groundings of `property` with every variable drawn from the cube's
// subset for its domain.  Missing or ambiguous slots are configuration
// errors; an empty subset yields no groundings.
std::vector<GroundProperty> project_cube(const Hypercube& h,
                                         const std::vector<Domain>& domains,
                                         const Property& property);

// Variance-guided recursive refinement over a fully observed world.
// Starts from the single all-constants cube and stops at `alpha` cubes or
// when no split separates the conditional means.
std::vector<Hypercube> refine_cubes(const Spec& spec, const World& observed, int alpha);

// ---------------------------------------------------------------------------
// Shared weights

// One weight per (property, cube) pair plus a per-property fallback for
// groundings no cube covers (e.g. the off-block pairs of a repeated domain).
// Parameters are indexed densely: property p owns slots
// [p*(n_cubes+1), (p+1)*(n_cubes+1)), the last one being the fallback.
class WeightTable {
public:
    WeightTable() = default;
    WeightTable(const Spec& spec, std::vector<Hypercube> cubes, double init = 0.0);

    int n_cubes() const { return static_cast<int>(cubes_.size()); }
    int n_params() const { return static_cast<int>(params_.size()); }
    const std::vector<Hypercube>& cubes() const { return cubes_; }

    // Parameter slot of a grounding: cube weight when exactly one cube
    // contains the substitution, fallback otherwise.
    int param_of(const Property& property, std::span<const int> subst) const;
    int param_index(int property, int cube) const;   // cube == n_cubes() => fallback
    double weight_of(const Property& property, std::span<const int> subst) const;

    double param(int i) const { return params_[i]; }
    void set_param(int i, double v) { params_[i] = v; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    std::string to_json(const Spec& spec) const;
    static WeightTable from_json(const Spec& spec, const std::string& text);

private:
    std::vector<Hypercube> cubes_;
    std::vector<double> params_;  // [property][cube..., fallback]
    int n_properties_ = 0;
};

}  // namespace hmlnv
