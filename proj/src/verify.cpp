#include "hmlnv/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <utility>

#include "json.hpp"

#include "hmlnv/encode.hpp"
#include "hmlnv/errors.hpp"
#include "hmlnv/spec.hpp"

namespace hmlnv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BoundPair map_bounds(const GroundModel& model, long grounding,
                     const MilpLimits& limits) {
    MapOptions plus;
    plus.fix_subsymbolic = true;
    plus.force = {{grounding, true}};
    MapOptions minus = plus;
    minus.force = {{grounding, false}};

    MapOutcome op = solve_map(model, plus, limits);
    MapOutcome om = solve_map(model, minus, limits);

    BoundPair b;
    b.log_n = std::log(2.0) * std::max(op.n_free_query, om.n_free_query);
    b.m_plus = op.status == MilpStatus::Infeasible ? -kInf : op.objective;
    b.m_minus = om.status == MilpStatus::Infeasible ? -kInf : om.objective;
    b.degenerate = !std::isfinite(b.m_plus) || !std::isfinite(b.m_minus);
    if (b.m_plus == -kInf) {
        b.omega_u = b.omega_l = -kInf;  // the property cannot hold at all
    } else if (b.m_minus == -kInf) {
        b.omega_u = b.omega_l = kInf;   // the property holds everywhere
    } else {
        b.omega_u = b.m_plus - b.m_minus + b.log_n;
        b.omega_l = -b.m_minus - 2.0 * b.log_n;
    }
    return b;
}

std::vector<std::pair<int, std::vector<int>>> sample_groundings(
    const std::vector<Hypercube>& cubes, const std::vector<Domain>& domains,
    const Property& property, std::uint64_t seed, int min_samples) {
    struct CubeDraw {
        int id = 0;
        std::vector<const CubeSet*> slots;  // one per free variable
        std::uint64_t count = 0;
        std::mt19937_64 eng;
        std::set<std::uint64_t> used;
    };

    std::vector<CubeDraw> pool;
    for (const Hypercube& h : cubes) {
        CubeDraw d;
        d.id = h.id;
        d.count = 1;
        bool ok = true;
        for (const FreeVar& v : property.free_vars) {
            const int slot = h.slot_of_domain(v.domain);
            if (slot == -2)
                throw ConfigError("hypercube has several subsets of domain " +
                                  domains[v.domain].name);
            if (slot < 0) {
                ok = false;
                break;
            }
            d.slots.push_back(&h.sets[slot]);
            d.count *= d.slots.back()->constants.size();
        }
        if (!ok || d.count == 0) continue;
        d.eng.seed(seed ^ (0x9e3779b97f4a7c15ULL * std::uint64_t(h.id + 1)));
        pool.push_back(std::move(d));
    }

    std::vector<std::pair<int, std::vector<int>>> out;
    auto draw = [&](CubeDraw& d) -> bool {
        if (d.used.size() >= d.count) return false;
        std::uniform_int_distribution<std::uint64_t> dist(0, d.count - 1);
        std::uint64_t idx = dist(d.eng);
        while (d.used.count(idx)) idx = (idx + 1) % d.count;  // deterministic probe
        d.used.insert(idx);
        std::vector<int> subst(d.slots.size());
        for (std::size_t i = d.slots.size(); i-- > 0;) {
            const auto& cs = d.slots[i]->constants;
            subst[i] = cs[idx % cs.size()];
            idx /= cs.size();
        }
        out.emplace_back(d.id, std::move(subst));
        return true;
    };

    for (CubeDraw& d : pool) draw(d);
    bool progressed = true;
    while (static_cast<int>(out.size()) < min_samples && progressed) {
        progressed = false;
        for (CubeDraw& d : pool) {
            if (static_cast<int>(out.size()) >= min_samples) break;
            progressed = draw(d) || progressed;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Windowed sub-models

namespace {

// Constant index maps between the full spec and a windowed copy.
struct Window {
    Spec sub;
    std::vector<std::vector<int>> to_full;  // [domain][sub index] -> full index
    std::vector<std::vector<int>> to_sub;   // [domain][full index] -> sub index or -1
};

void collect_formula_constants(const Spec& spec, const Formula& f,
                               const Property& prop,
                               std::vector<std::set<int>>& need) {
    auto take_args = [&](int schema, const std::vector<Arg>& args) {
        for (std::size_t i = 0; i < args.size(); ++i)
            if (!args[i].is_var)
                need[spec.schemas[schema].arg_domains[i]].insert(args[i].index);
    };
    switch (f.kind) {
        case Formula::Kind::Atom:
            take_args(f.schema, f.args);
            break;
        case Formula::Kind::Connective:
            for (const auto& c : f.children) collect_formula_constants(spec, *c, prop, need);
            break;
        case Formula::Kind::SoftEq:
            if (!f.lhs.is_constant()) take_args(f.lhs.schema, f.lhs.args);
            if (!f.rhs.is_constant()) take_args(f.rhs.schema, f.rhs.args);
            break;
        case Formula::Kind::SoftIneq:
            if (!f.term.is_constant()) take_args(f.term.schema, f.term.args);
            break;
        case Formula::Kind::HybridProduct:
            collect_formula_constants(spec, *f.cont_part, prop, need);
            collect_formula_constants(spec, *f.sym_part, prop, need);
            break;
    }
}

FormulaPtr remap_formula(const Formula& f, const std::vector<std::vector<int>>& to_sub,
                         const Spec& spec) {
    auto remap_args = [&](int schema, const std::vector<Arg>& args) {
        std::vector<Arg> out = args;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!out[i].is_var)
                out[i].index = to_sub[spec.schemas[schema].arg_domains[i]][out[i].index];
        return out;
    };
    switch (f.kind) {
        case Formula::Kind::Atom:
            return Formula::atom(f.schema, remap_args(f.schema, f.args));
        case Formula::Kind::Connective: {
            std::vector<FormulaPtr> kids;
            for (const auto& c : f.children) kids.push_back(remap_formula(*c, to_sub, spec));
            return Formula::connective(f.conn, std::move(kids));
        }
        case Formula::Kind::SoftEq: {
            NumericTerm l = f.lhs, r = f.rhs;
            if (!l.is_constant()) l.args = remap_args(l.schema, l.args);
            if (!r.is_constant()) r.args = remap_args(r.schema, r.args);
            return Formula::soft_eq(std::move(l), std::move(r));
        }
        case Formula::Kind::SoftIneq: {
            NumericTerm t = f.term;
            if (!t.is_constant()) t.args = remap_args(t.schema, t.args);
            return Formula::soft_ineq(std::move(t), f.tau, f.dir, f.softness);
        }
        case Formula::Kind::HybridProduct:
            return Formula::product(remap_formula(*f.cont_part, to_sub, spec),
                                    remap_formula(*f.sym_part, to_sub, spec));
    }
    throw ContractViolation("unreachable formula kind");
}

Window build_window(const Spec& spec, const Property& prop,
                    const std::vector<int>& subst, int window,
                    std::mt19937_64& eng) {
    const int nd = static_cast<int>(spec.domains.size());
    std::vector<std::set<int>> need(nd);
    for (std::size_t i = 0; i < prop.free_vars.size(); ++i)
        need[prop.free_vars[i].domain].insert(subst[i]);
    for (const Property& p : spec.properties)
        collect_formula_constants(spec, *p.formula, p, need);

    Window w;
    w.to_full.resize(nd);
    w.to_sub.resize(nd);
    w.sub.metric = spec.metric;
    w.sub.default_softness = spec.default_softness;
    w.sub.schemas = spec.schemas;

    for (int d = 0; d < nd; ++d) {
        const int total = static_cast<int>(spec.domains[d].constants.size());
        std::vector<int> keep(need[d].begin(), need[d].end());
        if (total <= window) {
            keep.resize(total);
            for (int i = 0; i < total; ++i) keep[i] = i;
        } else if (static_cast<int>(keep.size()) < window) {
            std::vector<int> rest;
            for (int i = 0; i < total; ++i)
                if (!need[d].count(i)) rest.push_back(i);
            std::shuffle(rest.begin(), rest.end(), eng);
            for (int i = 0; static_cast<int>(keep.size()) < window; ++i)
                keep.push_back(rest[i]);
            std::sort(keep.begin(), keep.end());
        }
        w.to_full[d] = keep;
        w.to_sub[d].assign(total, -1);
        Domain sd;
        sd.name = spec.domains[d].name;
        for (std::size_t i = 0; i < keep.size(); ++i) {
            w.to_sub[d][keep[i]] = static_cast<int>(i);
            sd.constants.push_back(spec.domains[d].constants[keep[i]]);
        }
        w.sub.domains.push_back(std::move(sd));
    }

    for (const Property& p : spec.properties) {
        Property q;
        q.id = p.id;
        q.init_weight = p.init_weight;
        q.free_vars = p.free_vars;
        q.formula = remap_formula(*p.formula, w.to_sub, spec);
        w.sub.properties.push_back(std::move(q));
    }
    return w;
}

Evidence restrict_evidence(const Evidence& ev, const Spec& spec, const Window& w) {
    Evidence out;
    out.closed_world = ev.closed_world;
    for (const auto& [atom, val] : ev.literals) {
        GroundAtom a = atom;
        bool ok = true;
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            const int d = spec.schemas[a.schema].arg_domains[i];
            const int s = w.to_sub[d][a.args[i]];
            if (s < 0) {
                ok = false;
                break;
            }
            a.args[i] = s;
        }
        if (ok) out.literals.emplace_back(std::move(a), val);
    }
    return out;
}

// Weights of a windowed model come from the full-spec weight table, looked
// up through the constant maps.
void retie_weights(GroundModel& m, const Spec& full, const WeightTable& wt,
                   const Window& w) {
    std::vector<int> full_subst;
    for (auto& g : m.groundings) {
        const Property& fp = full.properties[g.property];
        full_subst.resize(g.subst.size());
        for (std::size_t i = 0; i < g.subst.size(); ++i)
            full_subst[i] = w.to_full[fp.free_vars[i].domain][g.subst[i]];
        g.weight = wt.weight_of(fp, full_subst);
        g.param = wt.param_of(fp, full_subst);
    }
}

long find_grounding(const GroundModel& m, int property, const std::vector<int>& subst) {
    for (std::size_t i = 0; i < m.groundings.size(); ++i)
        if (m.groundings[i].property == property && m.groundings[i].subst == subst)
            return static_cast<long>(i);
    throw ContractViolation("sampled grounding missing from the ground model");
}

void check_stores(const EmbeddingStore& a, const EmbeddingStore& b) {
    if (a.size() != b.size())
        throw ConfigError("specification and test stores hold different key sets");
    auto ia = a.all().begin();
    auto ib = b.all().begin();
    for (; ia != a.all().end(); ++ia, ++ib)
        if (ia->first != ib->first)
            throw ConfigError("embedding key mismatch between stores: '" + ia->first +
                              "' vs '" + ib->first + "'");
}

}  // namespace

VerificationReport verify_property(const GroundModel& model, int property,
                                   const Evidence& evidence,
                                   const WeightTable& weights,
                                   const EmbeddingStore& spec_emb,
                                   const EmbeddingStore& test_emb,
                                   const VerifyConfig& cfg) {
    check_stores(spec_emb, test_emb);
    const Spec& spec = *model.spec;
    const Property& prop = spec.properties[property];

    VerificationReport rep;
    rep.property_index = property;
    rep.property = render_formula(spec, prop);

    auto samples = sample_groundings(weights.cubes(), spec.domains, prop,
                                     cfg.seed, cfg.min_samples);

    std::optional<GroundModel> test_model;
    if (cfg.window <= 0)
        test_model.emplace(build_ground_model(spec, evidence, test_emb, &weights));

    std::vector<double> us, ut, ls, lt;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& [cube, subst] = samples[k];
        BoundPair bs, bt;
        if (cfg.window <= 0) {
            const long g = find_grounding(model, property, subst);
            bs = map_bounds(model, g, cfg.limits);
            bt = map_bounds(*test_model, g, cfg.limits);
        } else {
            std::mt19937_64 eng(cfg.seed ^ (0xd1342543de82ef95ULL * (k + 1)) ^
                                (std::uint64_t(property) << 32));
            Window w = build_window(spec, prop, subst, cfg.window, eng);
            Evidence sub_ev = restrict_evidence(evidence, spec, w);
            std::vector<int> sub_subst(subst.size());
            for (std::size_t i = 0; i < subst.size(); ++i)
                sub_subst[i] = w.to_sub[prop.free_vars[i].domain][subst[i]];

            GroundModel ms = build_ground_model(w.sub, sub_ev, spec_emb, nullptr);
            retie_weights(ms, spec, weights, w);
            GroundModel mt = build_ground_model(w.sub, sub_ev, test_emb, nullptr);
            retie_weights(mt, spec, weights, w);

            const long g = find_grounding(ms, property, sub_subst);
            bs = map_bounds(ms, g, cfg.limits);
            bt = map_bounds(mt, g, cfg.limits);
        }
        if (bs.degenerate || bt.degenerate) {
            ++rep.excluded;
            continue;
        }
        SampleBounds sb;
        sb.cube = cube;
        sb.subst = subst;
        for (std::size_t i = 0; i < subst.size(); ++i) {
            if (i) sb.label += ",";
            sb.label += spec.domains[prop.free_vars[i].domain].constants[subst[i]];
        }
        sb.spec_side = bs;
        sb.test_side = bt;
        rep.samples.push_back(std::move(sb));
        us.push_back(bs.omega_u);
        ut.push_back(bt.omega_u);
        ls.push_back(bs.omega_l);
        lt.push_back(bt.omega_l);
    }

    if (us.size() < 2) {
        rep.vacuous = true;
        rep.pass = true;  // nothing measurable separates the stores
        return rep;
    }
    rep.upper = welch_t_test(us, ut);
    rep.lower = welch_t_test(ls, lt);
    for (std::size_t i = 0; i < us.size(); ++i) {
        rep.mu_u += std::fabs(us[i] - ut[i]);
        rep.mu_l += std::fabs(ls[i] - lt[i]);
    }
    rep.mu_u /= static_cast<double>(us.size());
    rep.mu_l /= static_cast<double>(ls.size());

    rep.pass = rep.upper.p > cfg.gamma && rep.lower.p > cfg.gamma;
    if (cfg.delta_u) rep.pass = rep.pass && rep.mu_u <= *cfg.delta_u;
    if (cfg.delta_l) rep.pass = rep.pass && rep.mu_l <= *cfg.delta_l;
    return rep;
}

std::vector<VerificationReport> verify_all(const Spec& spec,
                                           const Evidence& evidence,
                                           const WeightTable& weights,
                                           const EmbeddingStore& spec_emb,
                                           const EmbeddingStore& test_emb,
                                           const VerifyConfig& cfg) {
    GroundModel model = build_ground_model(spec, evidence, spec_emb, &weights);
    std::vector<VerificationReport> out;
    for (std::size_t p = 0; p < spec.properties.size(); ++p)
        out.push_back(verify_property(model, static_cast<int>(p), evidence, weights,
                                      spec_emb, test_emb, cfg));
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::ordered_json report_json(const VerificationReport& r) {
    nlohmann::ordered_json samples = nlohmann::ordered_json::array();
    for (const auto& s : r.samples) {
        samples.push_back({{"cubeId", s.cube},
                           {"grounding", s.label},
                           {"uSpec", s.spec_side.omega_u},
                           {"lSpec", s.spec_side.omega_l},
                           {"uTest", s.test_side.omega_u},
                           {"lTest", s.test_side.omega_l}});
    }
    return nlohmann::ordered_json{{"property", r.property},
                                  {"propertyIndex", r.property_index},
                                  {"samples", std::move(samples)},
                                  {"excluded", r.excluded},
                                  {"vacuous", r.vacuous},
                                  {"tU", r.upper.t},
                                  {"tL", r.lower.t},
                                  {"dfU", r.upper.df},
                                  {"dfL", r.lower.df},
                                  {"pU", r.upper.p},
                                  {"pL", r.lower.p},
                                  {"muU", r.mu_u},
                                  {"muL", r.mu_l},
                                  {"pass", r.pass}};
}

}  // namespace

std::string report_to_json(const VerificationReport& report) {
    return report_json(report).dump(2) + "\n";
}

std::string reports_to_json(const std::vector<VerificationReport>& reports,
                            const VerifyConfig& cfg) {
    bool all = true;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        all = all && r.pass;
        arr.push_back(report_json(r));
    }
    return nlohmann::ordered_json{{"gamma", cfg.gamma},
                                  {"pass", all},
                                  {"properties", std::move(arr)}}
               .dump(2) +
           "\n";
}

}  // namespace hmlnv
