#include "hmlnv/model.hpp"

#include <algorithm>
#include <cmath>

namespace hmlnv {

AtomPartition partition_atoms(const Spec& spec, const AtomTable& table,
                              const Evidence& evidence) {
    std::vector<char> fixed(table.size(), 0);
    for (const auto& [atom, value] : evidence.literals) {
        (void)value;
        fixed[table.id_of(atom)] = 1;
    }
    for (int schema : evidence.closed_world) {
        const auto [first, last] = table.schema_range(schema);
        for (int id = first; id < last; ++id) fixed[id] = 1;
    }
    AtomPartition part;
    for (int id = 0; id < table.size(); ++id) {
        if (table.kind_of(id) == AtomKind::SubSymbolic)
            part.subsymbolic.push_back(id);
        else if (fixed[id])
            part.evidence.push_back(id);
        else
            part.query.push_back(id);
    }
    return part;
}

GroundModel build_ground_model(const Spec& spec, const Evidence& evidence,
                               const EmbeddingStore& store, const WeightTable* weights) {
    GroundModel m;
    m.spec = &spec;
    m.table = AtomTable(spec);
    m.partition = partition_atoms(spec, m.table, evidence);
    m.base = World(&m.table);
    apply_evidence(evidence, m.table, m.base);
    m.d_max = assign_subsymbolic(spec, store, m.table, m.base);

    for (const Property& p : spec.properties) {
        for (const GroundProperty& g : ground_formula(spec.domains, p)) {
            GroundingEntry e;
            e.property = p.id;
            e.subst = g.subst;
            if (weights) {
                e.param = weights->param_of(p, e.subst);
                e.weight = weights->param(e.param);
            } else {
                e.weight = p.init_weight;
            }
            m.groundings.push_back(std::move(e));
        }
    }
    return m;
}

double log_score(const GroundModel& model, const World& world) {
    for (int id : model.partition.evidence)
        if (world.truth(id) != model.base.truth(id))
            throw ContractViolation("world contradicts an evidence atom");
    double score = 0;
    for (const GroundingEntry& g : model.groundings)
        score += g.weight * ground_value(*model.spec, model.property_of(g), g.subst, world);
    return score;
}

std::vector<double> grounding_values(const GroundModel& model, const World& world) {
    std::vector<double> vals;
    vals.reserve(model.groundings.size());
    for (const GroundingEntry& g : model.groundings)
        vals.push_back(ground_value(*model.spec, model.property_of(g), g.subst, world));
    return vals;
}

void for_each_completion(const GroundModel& model,
                         const std::function<void(const World&)>& visit, int cap) {
    const std::vector<int>& query = model.partition.query;
    if (static_cast<int>(query.size()) > cap)
        throw ResourceError("exact enumeration over " + std::to_string(query.size()) +
                            " query atoms exceeds the cap of " + std::to_string(cap));
    World w = model.base;
    const uint64_t total = uint64_t{1} << query.size();
    for (uint64_t mask = 0; mask < total; ++mask) {
        for (size_t i = 0; i < query.size(); ++i)
            w.set(query[i], (mask >> i) & 1 ? 1.0 : 0.0);
        visit(w);
    }
}

double exact_map(const GroundModel& model, World* argmax, int cap) {
    double best = -std::numeric_limits<double>::infinity();
    for_each_completion(
        model,
        [&](const World& w) {
            const double s = log_score(model, w);
            if (s > best) {
                best = s;
                if (argmax) *argmax = w;
            }
        },
        cap);
    return best;
}

double exact_log_partition(const GroundModel& model, int cap) {
    // streaming log-sum-exp
    double max_seen = -std::numeric_limits<double>::infinity();
    std::vector<double> scores;
    for_each_completion(
        model,
        [&](const World& w) {
            const double s = log_score(model, w);
            scores.push_back(s);
            max_seen = std::max(max_seen, s);
        },
        cap);
    double acc = 0;
    for (double s : scores) acc += std::exp(s - max_seen);
    return max_seen + std::log(acc);
}

double exact_conditional_log_prob(const GroundModel& model,
                                  const std::function<bool(const World&)>& event, int cap) {
    double max_all = -std::numeric_limits<double>::infinity();
    std::vector<double> all, hit;
    for_each_completion(
        model,
        [&](const World& w) {
            const double s = log_score(model, w);
            all.push_back(s);
            max_all = std::max(max_all, s);
            if (event(w)) hit.push_back(s);
        },
        cap);
    if (hit.empty()) return -std::numeric_limits<double>::infinity();
    double num = 0, den = 0;
    for (double s : hit) num += std::exp(s - max_all);
    for (double s : all) den += std::exp(s - max_all);
    return std::log(num) - std::log(den);
}

}  // namespace hmlnv
