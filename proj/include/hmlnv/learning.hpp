#pragma once
// Weight learning for ground models.
//
// The learner follows a Rao-Blackwellized likelihood view: continuous atoms
// are summed out analytically where we can enumerate (exact mode, used by
// tests), and approximated by MAP assignments in the practical path.  The
// MAP-based gradient for parameter i is
//
//     grad_i = s_i(MAP_free) - s_i(MAP_pinned)
//
// where MAP_free fixes only the evidence atoms (continuous and query atoms
// are jointly optimized) and MAP_pinned additionally fixes the continuous
// atoms at their observed values.  Both are computed by the MILP solver.
// When `data_clamp_query` is set, MAP_free also pins the query atoms to
// their observed values; with no continuous atoms at all this turns the
// update into the classic voted-perceptron step
// s_i(observed) - s_i(MAP).

#include <optional>
#include <span>
#include <vector>

#include "hmlnv/hypercube.hpp"
#include "hmlnv/milp.hpp"
#include "hmlnv/model.hpp"

namespace hmlnv {

enum class GradientMethod { MapApprox, Exact };

struct LearnConfig {
  double learning_rate = 0.01;
  int epochs = 100;
  int alpha = 200;  // hypercube refinement cap
  GradientMethod method = GradientMethod::MapApprox;
  bool data_clamp_query = false;  // pin observed query atoms in MAP_free
  std::optional<double> gradient_clip;  // per-component clamp
  std::optional<double> l2;             // weight decay strength
  std::vector<double> value_grid;       // grid for Exact gradients
  int segments = 16;                    // piecewise segments for MAP mode
  double weight_abort = 1e6;            // divergence guard
  MilpLimits limits;
};

struct GradientReport {
  std::vector<double> grad;  // one entry per weight-table parameter
  double map_free_objective = 0.0;    // evidence-only MAP value
  double map_pinned_objective = 0.0;  // evidence + continuous-fixed MAP value
};

// MAP-approximated gradient on a table-built ground model.  `observed`
// must assign every ground atom (it supplies the pinned continuous values
// and, when clamping, the query values).
GradientReport rb_gradient(const GroundModel& model, const World& observed,
                           const LearnConfig& cfg);

// Exact Rao-Blackwellized log-likelihood ln P(y_obs | evidence) with the
// continuous atoms marginalized over `grid` (each continuous atom ranges
// over the grid values; query atoms are summed over jointly).  Intended for
// tiny models; throws ResourceError past ~2^24 enumerated worlds.
double exact_rb_loglik(const GroundModel& model, const World& observed,
                       std::span<const double> grid);

// Exact gradient of exact_rb_loglik with respect to the weight-table
// parameters: E[s_i | y_obs] - E[s_i].
std::vector<double> exact_rb_gradient(const GroundModel& model,
                                      const World& observed,
                                      std::span<const double> grid);

struct EpochStat {
  int epoch = 0;
  double map_free_objective = 0.0;
  double map_pinned_objective = 0.0;
  double grad_norm = 0.0;  // infinity norm of the raw gradient
};

struct LearnResult {
  WeightTable weights;
  std::vector<EpochStat> curve;
};

// Full learning loop: refine hypercubes on the observed world, start all
// shared weights at zero, and run `epochs` gradient-ascent steps, rebuilding
// the ground model with the updated weights each epoch.  Aborts with
// ResourceError if any weight exceeds cfg.weight_abort in magnitude.
LearnResult learn_weights(const Spec& spec, const Evidence& evidence,
                          const EmbeddingStore& store, const World& observed,
                          const LearnConfig& cfg);

}  // namespace hmlnv
