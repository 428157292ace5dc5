#pragma once

// The ground probabilistic model: every property grounded out, each grounding
// tied to its shared weight, atom ids split into evidence / sub-symbolic /
// query.  The log-score of a world is sum_i w_i * s_i(world) where s_i is the
// grounding's value (0/1 for symbolic, the soft value otherwise); the model
// is the log-linear distribution that score induces.
//
// Exact enumeration routines below are deliberately brute force; they are the
// reference the optimizing code paths are checked against.

#include <functional>

#include "hmlnv/data.hpp"
#include "hmlnv/hypercube.hpp"
#include "hmlnv/logic.hpp"

namespace hmlnv {

struct GroundingEntry {
    int property = 0;
    std::vector<int> subst;
    double weight = 0;  // resolved shared weight
    int param = -1;     // weight-table parameter slot, -1 when untabled
};

struct AtomPartition {
    std::vector<int> evidence;     // symbolic atoms fixed by observed literals
    std::vector<int> subsymbolic;  // real-valued atoms (values from embeddings)
    std::vector<int> query;        // free symbolic atoms
};

struct GroundModel {
    const Spec* spec = nullptr;
    AtomTable table;
    std::vector<GroundingEntry> groundings;  // property order, lexicographic subst
    AtomPartition partition;
    World base;         // evidence + sub-symbolic values; query atoms unassigned
    double d_max = 0;   // largest observed sub-symbolic value

    const Property& property_of(const GroundingEntry& g) const {
        return spec->properties[g.property];
    }
};

// Ground every property and resolve weights: from the weight table when one
// is given, from the property's spec weight otherwise.
GroundModel build_ground_model(const Spec& spec, const Evidence& evidence,
                               const EmbeddingStore& store,
                               const WeightTable* weights = nullptr);

// Atom partition only (evidence literals vs sub-symbolic vs free).
AtomPartition partition_atoms(const Spec& spec, const AtomTable& table,
                              const Evidence& evidence);

// log P up to the log partition constant.  The world must agree with the
// model's evidence atoms (contract violation otherwise).
double log_score(const GroundModel& model, const World& world);

// Per-grounding values s_i(world), aligned with model.groundings.
std::vector<double> grounding_values(const GroundModel& model, const World& world);

// ---------------------------------------------------------------------------
// Exact reference computations (enumerate the 2^|query| symbolic completions;
// sub-symbolic atoms stay at their observed values).  `cap` bounds |query|.

// Highest-scoring completion; fills *argmax when given.
double exact_map(const GroundModel& model, World* argmax = nullptr, int cap = 25);

// ln sum_worlds exp(score), over query completions.
double exact_log_partition(const GroundModel& model, int cap = 25);

// ln P(event | evidence): -inf when no completion satisfies the event.
double exact_conditional_log_prob(const GroundModel& model,
                                  const std::function<bool(const World&)>& event,
                                  int cap = 25);

// Visit every query completion (the shared scratch world is reused).
void for_each_completion(const GroundModel& model,
                         const std::function<void(const World&)>& visit, int cap = 25);

}  // namespace hmlnv
