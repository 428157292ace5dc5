#include "hmlnv/hypercube.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace hmlnv {

bool Hypercube::contains(const Property& property, std::span<const int> subst) const {
    for (size_t i = 0; i < property.free_vars.size(); ++i) {
        const int slot = slot_of_domain(property.free_vars[i].domain);
        if (slot < 0) return false;
        if (!sets[slot].contains(subst[i])) return false;
    }
    return true;
}

int Hypercube::slot_of_domain(int domain) const {
    int found = -1;
    for (size_t i = 0; i < sets.size(); ++i) {
        if (sets[i].domain != domain) continue;
        if (found >= 0) return -2;
        found = static_cast<int>(i);
    }
    return found;
}

namespace {

bool sets_overlap(const CubeSet& a, const CubeSet& b) {
    if (a.domain != b.domain) return false;
    for (int c : a.constants)
        if (b.contains(c)) return true;
    return false;
}

CubeSet intersect(const CubeSet& a, const CubeSet& b) {
    CubeSet out;
    out.domain = a.domain;
    for (int c : a.constants)
        if (b.contains(c)) out.constants.push_back(c);
    return out;
}

}  // namespace

Hypercube merge_cubes(const Hypercube& a, const Hypercube& b) {
    Hypercube out;
    std::vector<char> b_used(b.sets.size(), 0);
    for (const CubeSet& sa : a.sets) {
        bool any = false;
        for (size_t j = 0; j < b.sets.size(); ++j) {
            if (!sets_overlap(sa, b.sets[j])) continue;
            any = true;
            b_used[j] = 1;
            CubeSet inter = intersect(sa, b.sets[j]);
            if (inter.constants.empty())
                throw ConfigError("degenerate merge: empty intersection");
            out.sets.push_back(std::move(inter));
        }
        if (!any) out.sets.push_back(sa);
    }
    for (size_t j = 0; j < b.sets.size(); ++j)
        if (!b_used[j]) out.sets.push_back(b.sets[j]);
    return out;
}

std::vector<GroundProperty> project_cube(const Hypercube& h,
                                         const std::vector<Domain>& domains,
                                         const Property& property) {
    (void)domains;
    const size_t k = property.free_vars.size();
    std::vector<const CubeSet*> slots(k);
    for (size_t i = 0; i < k; ++i) {
        const int slot = h.slot_of_domain(property.free_vars[i].domain);
        if (slot == -1)
            throw ConfigError("hypercube has no slot for the domain of variable '" +
                              property.free_vars[i].name + "'");
        if (slot == -2)
            throw ConfigError("hypercube has several slots for the domain of variable '" +
                              property.free_vars[i].name + "'");
        slots[i] = &h.sets[slot];
    }
    std::vector<GroundProperty> out;
    if (k == 0) {
        out.push_back({&property, {}});
        return out;
    }
    long total = 1;
    for (const CubeSet* s : slots) {
        if (s->constants.empty()) return out;
        total *= static_cast<long>(s->constants.size());
    }
    out.reserve(total);
    std::vector<size_t> pos(k, 0);
    while (true) {
        GroundProperty g;
        g.property = &property;
        g.subst.resize(k);
        for (size_t i = 0; i < k; ++i) g.subst[i] = slots[i]->constants[pos[i]];
        out.push_back(std::move(g));
        int p = static_cast<int>(k) - 1;
        while (p >= 0 && ++pos[p] == slots[p]->constants.size()) pos[p--] = 0;
        if (p < 0) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Refinement

namespace {

struct ValueRecord {
    const Property* property;
    std::vector<int> subst;
    double value;
};

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

// Values of the records inside a cube.
std::vector<double> values_inside(const Hypercube& cube, const std::vector<ValueRecord>& recs) {
    std::vector<double> vals;
    for (const ValueRecord& r : recs)
        if (cube.contains(*r.property, r.subst)) vals.push_back(r.value);
    return vals;
}

// Values of records inside the cube that mention `constant` in some variable
// of `domain` -- the constant's marginal slice.  (Pinning every variable of
// the domain instead would keep only diagonal groundings and miss any
// structure in properties that use a domain twice.)
std::vector<double> values_conditioned(const Hypercube& cube,
                                       const std::vector<ValueRecord>& recs, int domain,
                                       int constant) {
    std::vector<double> vals;
    for (const ValueRecord& r : recs) {
        if (!cube.contains(*r.property, r.subst)) continue;
        const auto& fv = r.property->free_vars;
        for (size_t i = 0; i < fv.size(); ++i) {
            if (fv[i].domain == domain && r.subst[i] == constant) {
                vals.push_back(r.value);
                break;
            }
        }
    }
    return vals;
}

struct SplitPlan {
    int slot = -1;
    std::vector<int> high;  // constants whose conditional mean beats the cube mean
    double spread = 0;
};

SplitPlan best_split(const Hypercube& cube, const std::vector<ValueRecord>& recs) {
    static constexpr double kTol = 1e-12;
    const std::vector<double> inside = values_inside(cube, recs);
    SplitPlan best;
    if (inside.size() < 2) return best;
    for (size_t slot = 0; slot < cube.sets.size(); ++slot) {
        const CubeSet& s = cube.sets[slot];
        if (s.constants.size() < 2) continue;
        // Constants whose marginal mean beats the average of marginals form
        // the high side.  The raw cube mean would be a biased baseline: a
        // grounding touching two constants appears in both marginals but only
        // once in the cube.
        std::vector<std::pair<int, double>> marginals;
        for (int c : s.constants) {
            const std::vector<double> cond = values_conditioned(cube, recs, s.domain, c);
            if (!cond.empty()) marginals.emplace_back(c, mean_of(cond));
        }
        if (marginals.size() < 2) continue;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        for (const auto& [c, m] : marginals) {
            lo = std::min(lo, m);
            hi = std::max(hi, m);
            sum += m;
        }
        const double spread = hi - lo;
        if (spread <= kTol) continue;
        const double baseline = sum / static_cast<double>(marginals.size());
        std::vector<int> high;
        for (const auto& [c, m] : marginals)
            if (m > baseline + kTol) high.push_back(c);
        if (high.empty() || high.size() == s.constants.size()) continue;
        if (spread > best.spread) {
            best.slot = static_cast<int>(slot);
            best.high = std::move(high);
            best.spread = spread;
        }
    }
    return best;
}

}  // namespace

std::vector<Hypercube> refine_cubes(const Spec& spec, const World& observed, int alpha) {
    if (alpha < 1) throw ContractViolation("refinement needs alpha >= 1");

    // Ground everything once; refinement only reads values.
    std::vector<ValueRecord> recs;
    for (const Property& p : spec.properties)
        for (const GroundProperty& g : ground_formula(spec.domains, p))
            recs.push_back({&p, g.subst, ground_value(spec, p, g.subst, observed)});

    Hypercube root;
    root.sets.reserve(spec.domains.size());
    for (size_t d = 0; d < spec.domains.size(); ++d) {
        CubeSet s;
        s.domain = static_cast<int>(d);
        s.constants.resize(spec.domains[d].constants.size());
        for (size_t c = 0; c < s.constants.size(); ++c) s.constants[c] = static_cast<int>(c);
        root.sets.push_back(std::move(s));
    }

    std::vector<Hypercube> cubes{root};
    std::vector<char> splittable{1};
    while (static_cast<int>(cubes.size()) < alpha) {
        // most varied splittable cube first
        int pick = -1;
        double pick_var = 0;
        for (size_t i = 0; i < cubes.size(); ++i) {
            if (!splittable[i]) continue;
            const double v = variance_of(values_inside(cubes[i], recs));
            if (v > pick_var && v > 1e-12) {  // ties keep the earliest cube
                pick = static_cast<int>(i);
                pick_var = v;
            }
        }
        if (pick < 0) break;
        const SplitPlan plan = best_split(cubes[pick], recs);
        if (plan.slot < 0) {
            splittable[pick] = 0;
            continue;
        }
        Hypercube hi = cubes[pick], lo = cubes[pick];
        hi.sets[plan.slot].constants = plan.high;
        auto& lo_set = lo.sets[plan.slot].constants;
        lo_set.erase(std::remove_if(lo_set.begin(), lo_set.end(),
                                    [&](int c) {
                                        return std::find(plan.high.begin(), plan.high.end(),
                                                         c) != plan.high.end();
                                    }),
                     lo_set.end());
        cubes.erase(cubes.begin() + pick);
        splittable.erase(splittable.begin() + pick);
        cubes.push_back(std::move(hi));
        splittable.push_back(1);
        cubes.push_back(std::move(lo));
        splittable.push_back(1);
    }
    for (size_t i = 0; i < cubes.size(); ++i) cubes[i].id = static_cast<int>(i);
    return cubes;
}

// ---------------------------------------------------------------------------
// WeightTable

WeightTable::WeightTable(const Spec& spec, std::vector<Hypercube> cubes, double init)
    : cubes_(std::move(cubes)), n_properties_(static_cast<int>(spec.properties.size())) {
    for (size_t i = 0; i < cubes_.size(); ++i) cubes_[i].id = static_cast<int>(i);
    params_.assign(static_cast<size_t>(n_properties_) * (cubes_.size() + 1), init);
}

int WeightTable::param_index(int property, int cube) const {
    return property * (n_cubes() + 1) + cube;
}

int WeightTable::param_of(const Property& property, std::span<const int> subst) const {
    int found = -1;
    for (const Hypercube& h : cubes_) {
        if (!h.contains(property, subst)) continue;
        if (found >= 0) return param_index(property.id, n_cubes());  // overlap: fallback
        found = h.id;
    }
    return param_index(property.id, found >= 0 ? found : n_cubes());
}

double WeightTable::weight_of(const Property& property, std::span<const int> subst) const {
    return params_[param_of(property, subst)];
}

std::string WeightTable::to_json(const Spec& spec) const {
    nlohmann::ordered_json j;
    j["cubes"] = nlohmann::ordered_json::array();
    for (const Hypercube& h : cubes_) {
        nlohmann::ordered_json jc;
        jc["id"] = h.id;
        jc["sets"] = nlohmann::ordered_json::array();
        for (const CubeSet& s : h.sets) {
            nlohmann::ordered_json js;
            js["domain"] = spec.domains[s.domain].name;
            js["constants"] = nlohmann::ordered_json::array();
            for (int c : s.constants) js["constants"].push_back(spec.domains[s.domain].constants[c]);
            jc["sets"].push_back(std::move(js));
        }
        j["cubes"].push_back(std::move(jc));
    }
    j["weights"] = nlohmann::ordered_json::array();
    for (int p = 0; p < n_properties_; ++p) {
        nlohmann::ordered_json jw;
        jw["property"] = p;
        jw["cube_weights"] = nlohmann::ordered_json::array();
        for (int c = 0; c < n_cubes(); ++c) jw["cube_weights"].push_back(params_[param_index(p, c)]);
        jw["fallback"] = params_[param_index(p, n_cubes())];
        j["weights"].push_back(std::move(jw));
    }
    return j.dump(2) + "\n";
}

WeightTable WeightTable::from_json(const Spec& spec, const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad weight file: ") + e.what());
    }
    std::vector<Hypercube> cubes;
    for (const auto& jc : j.at("cubes")) {
        Hypercube h;
        h.id = jc.at("id").get<int>();
        for (const auto& js : jc.at("sets")) {
            CubeSet s;
            const std::string dname = js.at("domain").get<std::string>();
            s.domain = spec.domain_index(dname);
            if (s.domain < 0) throw ConfigError("weight file names unknown domain '" + dname + "'");
            for (const auto& jconst : js.at("constants")) {
                const int c = spec.domains[s.domain].index_of(jconst.get<std::string>());
                if (c < 0)
                    throw ConfigError("weight file names unknown constant in domain '" +
                                      dname + "'");
                s.constants.push_back(c);
            }
            std::sort(s.constants.begin(), s.constants.end());
            h.sets.push_back(std::move(s));
        }
        cubes.push_back(std::move(h));
    }
    WeightTable out(spec, std::move(cubes));
    for (const auto& jw : j.at("weights")) {
        const int p = jw.at("property").get<int>();
        if (p < 0 || p >= static_cast<int>(spec.properties.size()))
            throw ConfigError("weight file names unknown property index");
        const auto& cw = jw.at("cube_weights");
        if (static_cast<int>(cw.size()) != out.n_cubes())
            throw ConfigError("weight file cube count mismatch");
        for (int c = 0; c < out.n_cubes(); ++c)
            out.set_param(out.param_index(p, c), cw[c].get<double>());
        out.set_param(out.param_index(p, out.n_cubes()), jw.at("fallback").get<double>());
    }
    return out;
}

}  // namespace hmlnv
