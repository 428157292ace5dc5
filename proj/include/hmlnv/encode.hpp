#pragma once

// MAP inference as a MILP.  Free symbolic atoms become binaries, free
// sub-symbolic atoms become bounded continuous variables, every connective of
// a non-constant ground formula gets an auxiliary binary with the usual
// linear clause rows, soft terms are piecewise-linearized, and hybrid
// products are McCormick-linearized against the formula's root literal.
// Ground formulas fully determined by fixed atoms fold into the objective
// constant.

#include <optional>

#include "hmlnv/milp.hpp"
#include "hmlnv/model.hpp"

namespace hmlnv {

struct MapOptions {
    // Fix sub-symbolic atoms at their observed values (the constrained
    // evidence regime used by verification and the model-side MAP).
    bool fix_subsymbolic = false;

    // Also clamp free query atoms to their values in *observed.
    bool clamp_query = false;
    const World* observed = nullptr;

    // Piecewise segments per soft term.
    int segments = 16;

    // Range of free sub-symbolic variables; <= 0 uses the largest observed
    // value in the model.
    double d_max_override = -1;

    // Force one grounding's symbolic formula to a truth value (index into
    // model.groundings).
    std::optional<std::pair<long, bool>> force;
};

struct MapEncoding {
    MilpProblem problem;
    std::vector<int> atom_var;              // atom id -> variable, -1 if none
    World fixed;                            // values of every fixed atom
    std::vector<std::pair<int, double>> untouched;  // free atoms no formula uses
    int n_free_query = 0;                   // unclamped symbolic query atoms
    bool trivially_infeasible = false;      // forcing contradicts the folding
};

MapEncoding encode_map(const GroundModel& model, const MapOptions& opts = {});

// Read a solver assignment back into a total world.
World decode_world(const GroundModel& model, const MapEncoding& enc,
                   const std::vector<double>& x);

struct MapOutcome {
    MilpStatus status = MilpStatus::Infeasible;
    double objective = 0;  // -inf when infeasible
    World world;
    long nodes = 0;
    int n_free_query = 0;
};

// encode + solve + decode in one step.
MapOutcome solve_map(const GroundModel& model, const MapOptions& opts = {},
                     const MilpLimits& limits = {});

}  // namespace hmlnv
