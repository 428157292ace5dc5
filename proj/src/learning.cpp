#include "hmlnv/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "hmlnv/encode.hpp"
#include "hmlnv/errors.hpp"

namespace hmlnv {

namespace {

// Streaming log-sum-exp accumulator.
class LogSum {
public:
    void push(double x) {
        if (x == -std::numeric_limits<double>::infinity()) return;
        if (x <= max_) {
            sum_ += std::exp(x - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        }
    }
    double value() const {
        if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
        return max_ + std::log(sum_);
    }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

int param_count(const GroundModel& model) {
    int n = 0;
    for (const auto& g : model.groundings) {
        if (g.param < 0)
            throw ContractViolation(
                "gradient computation needs a ground model built from a weight table");
        n = std::max(n, g.param + 1);
    }
    return n;
}

World solved_world(const GroundModel& model, const MapOptions& opts,
                   const MilpLimits& limits, const char* which, double* objective) {
    MapOutcome out = solve_map(model, opts, limits);
    if (out.status == MilpStatus::Infeasible)
        throw ConfigError(std::string(which) +
                          " MAP is infeasible; the evidence contradicts itself");
    if (!std::isfinite(out.objective))
        throw ResourceError(std::string(which) +
                            " MAP hit the solver limit before finding any incumbent");
    *objective = out.objective;
    return std::move(out.world);
}

// Walk every assignment of grid values to the continuous atoms.  `body` runs
// once per combination with the scratch world updated in place.
template <typename F>
void for_each_grid_assignment(const std::vector<int>& subsym,
                              std::span<const double> grid, World& w, F&& body) {
    if (subsym.empty()) {
        body();
        return;
    }
    std::vector<std::size_t> idx(subsym.size(), 0);
    for (;;) {
        for (std::size_t i = 0; i < subsym.size(); ++i) w.set(subsym[i], grid[idx[i]]);
        body();
        std::size_t k = subsym.size();
        while (k > 0 && ++idx[k - 1] == grid.size()) idx[--k] = 0;
        if (k == 0) return;
    }
}

void check_enumeration_size(const GroundModel& model, std::span<const double> grid) {
    const auto& part = model.partition;
    if (!part.subsymbolic.empty() && grid.empty())
        throw ConfigError("a value grid is required to marginalize continuous atoms");
    double total = std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(part.query.size(), 60)));
    for (std::size_t i = 0; i < part.subsymbolic.size(); ++i)
        total *= static_cast<double>(grid.size());
    if (part.query.size() > 22 || total > double(1 << 22))
        throw ResourceError("exact likelihood enumeration is too large");
}

}  // namespace

GradientReport rb_gradient(const GroundModel& model, const World& observed,
                           const LearnConfig& cfg) {
    GradientReport rep;
    if (cfg.method == GradientMethod::Exact) {
        rep.grad = exact_rb_gradient(model, observed, cfg.value_grid);
        return rep;
    }

    MapOptions free_opts;
    free_opts.segments = cfg.segments;
    if (cfg.data_clamp_query) {
        free_opts.clamp_query = true;
        free_opts.observed = &observed;
    }
    World w_free = solved_world(model, free_opts, cfg.limits, "the evidence-only",
                                &rep.map_free_objective);

    MapOptions pin_opts;
    pin_opts.fix_subsymbolic = true;
    pin_opts.segments = cfg.segments;
    World w_pin = solved_world(model, pin_opts, cfg.limits, "the continuous-pinned",
                               &rep.map_pinned_objective);

    std::vector<double> v_free = grounding_values(model, w_free);
    std::vector<double> v_pin = grounding_values(model, w_pin);
    rep.grad.assign(param_count(model), 0.0);
    for (std::size_t i = 0; i < model.groundings.size(); ++i)
        rep.grad[model.groundings[i].param] += v_free[i] - v_pin[i];
    return rep;
}

double exact_rb_loglik(const GroundModel& model, const World& observed,
                       std::span<const double> grid) {
    check_enumeration_size(model, grid);
    const auto& part = model.partition;

    World w = model.base;
    LogSum num, den;
    const std::size_t n_query = part.query.size();
    const std::uint64_t n_masks = std::uint64_t(1) << n_query;
    for_each_grid_assignment(part.subsymbolic, grid, w, [&] {
        for (int a : part.query) w.set(a, observed.value(a) != 0.0 ? 1.0 : 0.0);
        num.push(log_score(model, w));
        for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
            for (std::size_t j = 0; j < n_query; ++j)
                w.set(part.query[j], (mask >> j) & 1 ? 1.0 : 0.0);
            den.push(log_score(model, w));
        }
    });
    return num.value() - den.value();
}

std::vector<double> exact_rb_gradient(const GroundModel& model,
                                      const World& observed,
                                      std::span<const double> grid) {
    check_enumeration_size(model, grid);
    const auto& part = model.partition;
    const int n_params = param_count(model);
    const std::size_t n_query = part.query.size();
    const std::uint64_t n_masks = std::uint64_t(1) << n_query;

    // First pass: both normalizers.
    World w = model.base;
    LogSum num, den;
    for_each_grid_assignment(part.subsymbolic, grid, w, [&] {
        for (int a : part.query) w.set(a, observed.value(a) != 0.0 ? 1.0 : 0.0);
        num.push(log_score(model, w));
        for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
            for (std::size_t j = 0; j < n_query; ++j)
                w.set(part.query[j], (mask >> j) & 1 ? 1.0 : 0.0);
            den.push(log_score(model, w));
        }
    });
    const double log_num = num.value();
    const double log_den = den.value();

    // Second pass: probability-weighted expectations of each parameter's
    // summed grounding values, conditional (numerator) and free (denominator).
    std::vector<double> e_cond(n_params, 0.0), e_free(n_params, 0.0);
    auto accumulate = [&](std::vector<double>& acc, double log_z) {
        const double p = std::exp(log_score(model, w) - log_z);
        std::vector<double> vals = grounding_values(model, w);
        for (std::size_t i = 0; i < model.groundings.size(); ++i)
            acc[model.groundings[i].param] += p * vals[i];
    };
    for_each_grid_assignment(part.subsymbolic, grid, w, [&] {
        for (int a : part.query) w.set(a, observed.value(a) != 0.0 ? 1.0 : 0.0);
        accumulate(e_cond, log_num);
        for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
            for (std::size_t j = 0; j < n_query; ++j)
                w.set(part.query[j], (mask >> j) & 1 ? 1.0 : 0.0);
            accumulate(e_free, log_den);
        }
    });

    std::vector<double> grad(n_params);
    for (int i = 0; i < n_params; ++i) grad[i] = e_cond[i] - e_free[i];
    return grad;
}

LearnResult learn_weights(const Spec& spec, const Evidence& evidence,
                          const EmbeddingStore& store, const World& observed,
                          const LearnConfig& cfg) {
    if (cfg.epochs < 0) throw ConfigError("epoch count must be non-negative");
    if (cfg.alpha < 1) throw ConfigError("the hypercube cap must be at least 1");

    std::vector<Hypercube> cubes = refine_cubes(spec, observed, cfg.alpha);
    LearnResult res{WeightTable(spec, std::move(cubes), 0.0), {}};

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        GroundModel model = build_ground_model(spec, evidence, store, &res.weights);
        GradientReport rep = rb_gradient(model, observed, cfg);

        double gnorm = 0.0;
        for (double g : rep.grad) gnorm = std::max(gnorm, std::fabs(g));

        auto& params = res.weights.params();
        for (std::size_t i = 0; i < rep.grad.size(); ++i) {
            double g = rep.grad[i];
            if (cfg.gradient_clip)
                g = std::clamp(g, -*cfg.gradient_clip, *cfg.gradient_clip);
            if (cfg.l2) g -= *cfg.l2 * params[i];
            params[i] += cfg.learning_rate * g;
            if (std::fabs(params[i]) > cfg.weight_abort)
                throw ResourceError("weight " + std::to_string(i) +
                                    " diverged past " + std::to_string(cfg.weight_abort) +
                                    " at epoch " + std::to_string(epoch));
        }
        res.curve.push_back(
            {epoch, rep.map_free_objective, rep.map_pinned_objective, gnorm});
    }
    return res;
}

}  // namespace hmlnv
