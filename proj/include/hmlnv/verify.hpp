#pragma once
// Verification of test embeddings against a specification model.
//
// For a sampled grounding f of a property, both embeddings stores induce a
// conditional distribution over the free query atoms (symbolic evidence and
// all continuous atoms are fixed).  Two conditioned MAP solves give
// M+ = max score subject to the symbolic part of f being true and M- the
// same with f false; with n = 2^|free query| completions,
//
//   ln P(f | E)  <=  Omega_U = M+ - M- + ln n
//   ln P(f | E)  >=  Omega_L = -M- - 2 ln n
//
// (log-sum-exp sandwich max x_i <= ln sum e^{x_i} <= max + ln n applied to
// the conditional ratio).  Since the symbolic evidence is identical across
// the two stores, the ln n terms cancel in every compared difference.
// Welch's t-test then compares the sample of specification bounds against
// the test bounds; the property verifies when neither the upper- nor the
// lower-bound sample separates at level gamma.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hmlnv/hypercube.hpp"
#include "hmlnv/learning.hpp"
#include "hmlnv/model.hpp"
#include "hmlnv/stats.hpp"

namespace hmlnv {

struct VerifyConfig {
    double gamma = 0.05;
    std::optional<double> delta_u;  // optional gate: mean |U* - U^| <= delta_u
    std::optional<double> delta_l;  //                mean |L* - L^| <= delta_l
    std::uint64_t seed = 0;
    int min_samples = 8;  // top up with extra per-cube draws when short
    int window = 0;       // per-sample sub-model size per sampled domain (0 = full model)
    MilpLimits limits;
};

struct BoundPair {
    double m_plus = 0;   // MAP value with the grounding's symbolic part forced true
    double m_minus = 0;  // ... forced false
    double omega_u = 0;
    double omega_l = 0;
    double log_n = 0;    // ln 2^|free query atoms|
    bool degenerate = false;  // one side infeasible
};

// Both conditioned MAP solves for one grounding (index into model.groundings).
// The model must already fix every continuous atom and the symbolic evidence;
// an infeasible side comes back as -inf and marks the pair degenerate.
BoundPair map_bounds(const GroundModel& model, long grounding,
                     const MilpLimits& limits = {});

// One uniformly sampled grounding per cube with a nonempty projection,
// deterministic in (seed, cube id).  When fewer than min_samples cubes
// project, extra distinct draws are added round-robin across the cubes.
std::vector<std::pair<int, std::vector<int>>> sample_groundings(
    const std::vector<Hypercube>& cubes, const std::vector<Domain>& domains,
    const Property& property, std::uint64_t seed, int min_samples = 0);

struct SampleBounds {
    int cube = 0;
    std::vector<int> subst;
    std::string label;  // substitution constants, comma separated
    BoundPair spec_side;
    BoundPair test_side;
};

struct VerificationReport {
    int property_index = 0;
    std::string property;  // rendered formula
    std::vector<SampleBounds> samples;  // non-degenerate samples only
    int excluded = 0;                   // samples dropped for an infeasible side
    WelchResult upper, lower;
    double mu_u = 0;  // mean |Omega_U* - Omega_U^|
    double mu_l = 0;
    bool vacuous = false;  // fewer than two usable samples
    bool pass = false;
};

// Verify one property: sample groundings from the weight table's cubes,
// compute bound pairs under both stores, and compare with Welch's test.
// `model` is the full specification-side ground model (spec embeddings).
// With cfg.window > 0 each sample's bounds are computed on a small
// deterministic sub-model around the sampled constants instead of `model`.
VerificationReport verify_property(const GroundModel& model, int property,
                                   const Evidence& evidence,
                                   const WeightTable& weights,
                                   const EmbeddingStore& spec_emb,
                                   const EmbeddingStore& test_emb,
                                   const VerifyConfig& cfg);

std::vector<VerificationReport> verify_all(const Spec& spec,
                                           const Evidence& evidence,
                                           const WeightTable& weights,
                                           const EmbeddingStore& spec_emb,
                                           const EmbeddingStore& test_emb,
                                           const VerifyConfig& cfg);

// Deterministic JSON rendering (no timing or environment fields).
std::string report_to_json(const VerificationReport& report);
std::string reports_to_json(const std::vector<VerificationReport>& reports,
                            const VerifyConfig& cfg);

}  // namespace hmlnv
