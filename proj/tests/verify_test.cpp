#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "hmlnv/data.hpp"
#include "hmlnv/errors.hpp"
#include "hmlnv/hypercube.hpp"
#include "hmlnv/model.hpp"
#include "hmlnv/spec.hpp"
#include "hmlnv/verify.hpp"

using namespace hmlnv;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Hypercube full_cube(const Spec& spec) {
    Hypercube h;
    h.id = 0;
    for (size_t d = 0; d < spec.domains.size(); ++d) {
        CubeSet s;
        s.domain = static_cast<int>(d);
        for (size_t c = 0; c < spec.domains[d].constants.size(); ++c)
            s.constants.push_back(static_cast<int>(c));
        h.sets.push_back(std::move(s));
    }
    return h;
}

// Purely syntactic truth evaluation of a grounded symbolic formula; the
// reference route shares nothing with the grounding-value code.
bool eval_sym(const AtomTable& table, const Formula& f,
              const std::vector<int>& subst, const World& w) {
    switch (f.kind) {
        case Formula::Kind::Atom: {
            GroundAtom a;
            a.schema = f.schema;
            for (const Arg& arg : f.args)
                a.args.push_back(arg.is_var ? subst[arg.index] : arg.index);
            return w.truth(table.id_of(a.schema, a.args));
        }
        case Formula::Kind::Connective: {
            auto kid = [&](size_t i) { return eval_sym(table, *f.children[i], subst, w); };
            switch (f.conn) {
                case Conn::Not: return !kid(0);
                case Conn::And: {
                    for (size_t i = 0; i < f.children.size(); ++i)
                        if (!kid(i)) return false;
                    return true;
                }
                case Conn::Or: {
                    for (size_t i = 0; i < f.children.size(); ++i)
                        if (kid(i)) return true;
                    return false;
                }
                case Conn::Implies: return !kid(0) || kid(1);
                case Conn::Iff: return kid(0) == kid(1);
            }
            break;
        }
        default: break;  // continuous kinds never reach this helper
    }
    REQUIRE(false);
    return false;
}

// Positive weights keep every world's score nonnegative, which is what makes
// the lower bound valid (the worse conditioned optimum stays above -ln n).
std::string random_positive_spec(std::mt19937_64& rng) {
    static const char* shapes[] = {
        "P(x)",
        "!Q(x)",
        "P(x) ^ Q(x)",
        "P(x) v Q(y)",
        "E(x, y) => P(y)",
        "P(x) <=> Q(x)",
        "(P(x) v Q(y)) ^ !E(y, x)",
        "P(A) v Q(x)",
    };
    std::uniform_real_distribution<double> wdist(0.1, 1.5);
    std::ostringstream s;
    s << "domain Node = {A, B}\n"
         "predicate P(Node)\n"
         "predicate Q(Node)\n"
         "predicate E(Node, Node)\n";
    const int nf = 2 + static_cast<int>(rng() % 3);
    for (int i = 0; i < nf; ++i) {
        char w[32];
        std::snprintf(w, sizeof w, "%.3f", wdist(rng));
        s << w << "  " << shapes[rng() % 8] << "\n";
    }
    return s.str();
}

}  // namespace

TEST_CASE("bound pairs sandwich the exact conditional log probability") {
    std::mt19937_64 rng(9090);
    int degenerate_seen = 0, normal_seen = 0;
    for (int rep = 0; rep < 25; ++rep) {
        const Spec spec = parse_spec_text(random_positive_spec(rng));
        const Evidence ev =
            rep % 2 ? parse_evidence_text("P(A)\n!Q(B)\n", spec) : Evidence{};
        const GroundModel m = build_ground_model(spec, ev, EmbeddingStore{});
        REQUIRE(m.partition.query.size() <= 10);

        for (long g = 0; g < static_cast<long>(m.groundings.size()); ++g) {
            const GroundingEntry& ge = m.groundings[g];
            const Formula& f = *spec.properties[ge.property].formula;
            const BoundPair b = map_bounds(m, g);
            const double lnp = exact_conditional_log_prob(m, [&](const World& w) {
                return eval_sym(m.table, f, ge.subst, w);
            });

            if (b.degenerate) {
                ++degenerate_seen;
                if (b.m_plus == -kInf) {
                    CHECK(lnp == -kInf);  // the property can never hold
                } else {
                    CHECK(std::fabs(lnp) < 1e-9);  // ... or it always holds
                }
                continue;
            }
            ++normal_seen;
            CHECK(b.log_n ==
                  doctest::Approx(std::log(2.0) * m.partition.query.size()));
            CHECK(b.omega_l - 1e-6 <= lnp);
            CHECK(lnp <= b.omega_u + 1e-6);
        }
    }
    // The evidence reps must have produced one-sided (infeasible) forcings.
    CHECK(degenerate_seen > 0);
    CHECK(normal_seen > 100);
}

TEST_CASE("bound differences across stores reduce to conditioned map differences") {
    const Spec spec = parse_spec_text(
        "domain Node = {A, B, C}\n"
        "predicate Same(Node, Node)\n"
        "subsymbolic Dist(Node, Node)\n"
        "1.2  (Dist(x, y) < 0.6) * (Same(x, y))\n"
        "0.4  Same(x, y)\n");
    EmbeddingStore se, te;
    se.put("A", {0.0});
    se.put("B", {0.3});
    se.put("C", {1.1});
    te.put("A", {0.0});
    te.put("B", {0.9});
    te.put("C", {0.2});
    const GroundModel ms = build_ground_model(spec, Evidence{}, se);
    const GroundModel mt = build_ground_model(spec, Evidence{}, te);
    REQUIRE(ms.groundings.size() == mt.groundings.size());

    for (long g = 0; g < static_cast<long>(ms.groundings.size()); ++g) {
        const BoundPair bs = map_bounds(ms, g);
        const BoundPair bt = map_bounds(mt, g);
        REQUIRE(!bs.degenerate);
        REQUIRE(!bt.degenerate);
        CHECK(bs.log_n == bt.log_n);  // same free atoms, so ln n cancels below
        const double du = std::fabs(bs.omega_u - bt.omega_u);
        const double dl = std::fabs(bs.omega_l - bt.omega_l);
        CHECK(std::fabs(du - std::fabs((bs.m_plus - bs.m_minus) -
                                       (bt.m_plus - bt.m_minus))) < 1e-9);
        CHECK(std::fabs(dl - std::fabs(bt.m_minus - bs.m_minus)) < 1e-9);
    }
}

TEST_CASE("grounding sampler is deterministic, distinct, and tops up") {
    const Spec spec = parse_spec_text(
        "domain Node = {A, B, C, D}\n"
        "predicate R(Node, Node)\n"
        "1  R(x, y)\n");
    const Property& prop = spec.properties[0];

    Hypercube c0, c1;
    c0.id = 0;
    c0.sets.push_back(CubeSet{0, {0, 1}});
    c1.id = 1;
    c1.sets.push_back(CubeSet{0, {2, 3}});
    const std::vector<Hypercube> cubes = {c0, c1};

    auto one = sample_groundings(cubes, spec.domains, prop, 7, 0);
    REQUIRE(one.size() == 2);  // one draw per projecting cube
    CHECK(one[0].first == 0);
    CHECK(one[1].first == 1);
    for (const auto& [cid, sub] : one) {
        REQUIRE(sub.size() == 2);
        for (int c : sub) CHECK((cid == 0 ? c <= 1 : c >= 2));
    }
    CHECK(sample_groundings(cubes, spec.domains, prop, 7, 0) == one);

    auto six = sample_groundings(cubes, spec.domains, prop, 7, 6);
    REQUIRE(six.size() == 6);
    std::set<std::pair<int, std::vector<int>>> uniq(six.begin(), six.end());
    CHECK(uniq.size() == 6);
    CHECK(sample_groundings(cubes, spec.domains, prop, 11, 6) != six);

    // Top-up stops once both projections are exhausted: 2x2 pairs per cube.
    auto all = sample_groundings(cubes, spec.domains, prop, 7, 100);
    CHECK(all.size() == 8);
    std::set<std::pair<int, std::vector<int>>> every(all.begin(), all.end());
    CHECK(every.size() == 8);

    Hypercube empty_cube;
    empty_cube.id = 5;
    empty_cube.sets.push_back(CubeSet{0, {}});
    auto capped = sample_groundings({c0, empty_cube}, spec.domains, prop, 7, 100);
    CHECK(capped.size() == 4);
    for (const auto& [cid, sub] : capped) CHECK(cid == 0);

    Hypercube dup;
    dup.id = 6;
    dup.sets.push_back(CubeSet{0, {0}});
    dup.sets.push_back(CubeSet{0, {1}});
    CHECK_THROWS_AS(sample_groundings({dup}, spec.domains, prop, 1, 0), ConfigError);
}

TEST_CASE("identical stores pass and a negative delta gate still rejects") {
    const Spec spec = parse_spec_text(
        "domain Node = {A, B, C, D}\n"
        "predicate Same(Node, Node)\n"
        "subsymbolic Dist(Node, Node)\n"
        "1.5  (Dist(x, y) < 0.6) * (Same(x, y))\n"
        "0.4  Same(x, y)\n");
    EmbeddingStore store;
    store.put("A", {0.0});
    store.put("B", {0.25});
    store.put("C", {1.0});
    store.put("D", {1.4});

    WeightTable wt(spec, {full_cube(spec)});
    for (size_t i = 0; i < wt.params().size(); ++i)
        wt.set_param(static_cast<int>(i), 0.5 + 0.25 * static_cast<double>(i));
    const GroundModel model = build_ground_model(spec, Evidence{}, store, &wt);

    VerifyConfig cfg;
    cfg.seed = 3;
    cfg.min_samples = 5;
    const VerificationReport rep =
        verify_property(model, 0, Evidence{}, wt, store, store, cfg);
    CHECK(rep.pass);
    CHECK(!rep.vacuous);
    CHECK(rep.excluded == 0);
    REQUIRE(rep.samples.size() >= 5);
    for (const auto& s : rep.samples) {
        CHECK(s.spec_side.omega_u == s.test_side.omega_u);
        CHECK(s.spec_side.omega_l == s.test_side.omega_l);
    }
    CHECK(rep.upper.p == doctest::Approx(1.0));
    CHECK(rep.lower.p == doctest::Approx(1.0));
    CHECK(rep.mu_u == 0.0);
    CHECK(rep.mu_l == 0.0);

    // Rendering is deterministic and carries the fields reports are built from.
    const std::string text = report_to_json(rep);
    CHECK(report_to_json(verify_property(model, 0, Evidence{}, wt, store, store,
                                         cfg)) == text);
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("pass") == true);
    CHECK(j.at("samples").size() == rep.samples.size());
    CHECK(j.contains("pU"));
    CHECK(j.contains("pL"));
    CHECK(j.contains("muU"));

    VerifyConfig strict = cfg;
    strict.delta_u = -1.0;  // impossible mean-gap budget: the gate must trip
    CHECK(!verify_property(model, 0, Evidence{}, wt, store, store, strict).pass);
}

TEST_CASE("a shifted test store fails verification, untouched properties pass") {
    const Spec spec = parse_spec_text(
        "domain Node = {A, B, C}\n"
        "domain Other = {X, Y, Z}\n"
        "predicate Same(Node, Other)\n"
        "subsymbolic Dist(Node, Other)\n"
        "1.5  (Dist(x, y) < 0.6) * (Same(x, y))\n"
        "0.4  Same(x, y)\n");
    EmbeddingStore se, te;
    const char* nodes[] = {"A", "B", "C"};
    const char* others[] = {"X", "Y", "Z"};
    const double npos[] = {0.0, 0.1, 0.2};
    const double spos[] = {0.3, 0.45, 0.5};
    for (int i = 0; i < 3; ++i) {
        se.put(nodes[i], {npos[i]});
        te.put(nodes[i], {npos[i]});
        se.put(others[i], {spos[i]});
        te.put(others[i], {spos[i] + 3.0});  // test embeddings drift far out
    }

    WeightTable wt(spec, {full_cube(spec)});
    for (size_t i = 0; i < wt.params().size(); ++i)
        wt.set_param(static_cast<int>(i), 1.0);
    const GroundModel model = build_ground_model(spec, Evidence{}, se, &wt);

    VerifyConfig cfg;
    cfg.seed = 17;
    cfg.min_samples = 6;
    const VerificationReport bad =
        verify_property(model, 0, Evidence{}, wt, se, te, cfg);
    CHECK(!bad.pass);
    CHECK(!bad.vacuous);
    CHECK(bad.mu_u > 0.5);
    CHECK((bad.upper.p <= cfg.gamma || bad.lower.p <= cfg.gamma));

    // Even the symbolic property fails under the drifted store: its
    // conditioned optima sit on the same model, so the soft terms shift them.
    // With agreeing stores everything passes and the aggregate says so.
    const auto clean = verify_all(spec, Evidence{}, wt, se, se, cfg);
    REQUIRE(clean.size() == 2);
    CHECK(clean[0].pass);
    CHECK(clean[1].pass);
    CHECK(nlohmann::json::parse(reports_to_json(clean, cfg)).at("pass") == true);

    const auto reports = verify_all(spec, Evidence{}, wt, se, te, cfg);
    REQUIRE(reports.size() == 2);
    CHECK(!reports[0].pass);
    const std::string all_text = reports_to_json(reports, cfg);
    CHECK(reports_to_json(verify_all(spec, Evidence{}, wt, se, te, cfg), cfg) ==
          all_text);
    const auto j = nlohmann::json::parse(all_text);
    CHECK(j.at("gamma") == cfg.gamma);
    CHECK(j.at("pass") == false);
    CHECK(j.at("properties").size() == 2);
}

TEST_CASE("windowed verification matches the full-model verdicts") {
    const Spec spec = parse_spec_text(
        "domain Node = {A, B, C}\n"
        "domain Other = {X, Y, Z}\n"
        "predicate Same(Node, Other)\n"
        "subsymbolic Dist(Node, Other)\n"
        "1.5  (Dist(x, y) < 0.6) * (Same(x, y))\n");
    EmbeddingStore se, te, shifted;
    const char* nodes[] = {"A", "B", "C"};
    const char* others[] = {"X", "Y", "Z"};
    const double npos[] = {0.0, 0.1, 0.2};
    const double spos[] = {0.3, 0.45, 0.5};
    for (int i = 0; i < 3; ++i) {
        se.put(nodes[i], {npos[i]});
        te.put(nodes[i], {npos[i]});
        shifted.put(nodes[i], {npos[i]});
        se.put(others[i], {spos[i]});
        te.put(others[i], {spos[i]});
        shifted.put(others[i], {spos[i] + 3.0});
    }

    WeightTable wt(spec, {full_cube(spec)});
    for (size_t i = 0; i < wt.params().size(); ++i)
        wt.set_param(static_cast<int>(i), 1.0);
    const GroundModel model = build_ground_model(spec, Evidence{}, se, &wt);

    VerifyConfig cfg;
    cfg.seed = 5;
    cfg.min_samples = 5;
    cfg.window = 2;
    const VerificationReport same =
        verify_property(model, 0, Evidence{}, wt, se, te, cfg);
    CHECK(same.pass);
    CHECK(same.mu_u == 0.0);
    for (const auto& s : same.samples) {
        CHECK(std::isfinite(s.spec_side.omega_u));
        CHECK(std::isfinite(s.spec_side.omega_l));
    }
    CHECK(report_to_json(verify_property(model, 0, Evidence{}, wt, se, te, cfg)) ==
          report_to_json(same));

    const VerificationReport drift =
        verify_property(model, 0, Evidence{}, wt, se, shifted, cfg);
    CHECK(!drift.pass);
    CHECK(drift.mu_u > 0.5);
}

TEST_CASE("degenerate and starved samplings verify vacuously") {
    // Forcing a tautology false is infeasible, so every sample is excluded.
    const Spec taut = parse_spec_text(
        "domain Node = {A, B}\n"
        "predicate P(Node)\n"
        "1  P(x) v !P(x)\n");
    WeightTable wt(taut, {full_cube(taut)});
    const GroundModel m = build_ground_model(taut, Evidence{}, EmbeddingStore{}, &wt);
    VerifyConfig cfg;
    cfg.min_samples = 2;
    const VerificationReport rep = verify_property(
        m, 0, Evidence{}, wt, EmbeddingStore{}, EmbeddingStore{}, cfg);
    CHECK(rep.vacuous);
    CHECK(rep.pass);
    CHECK(rep.excluded == 2);
    CHECK(rep.samples.empty());

    // A one-grounding property cannot yield the two samples the test needs.
    const Spec tiny = parse_spec_text(
        "domain Node = {A}\n"
        "predicate P(Node)\n"
        "1  P(x)\n");
    WeightTable tw(tiny, {full_cube(tiny)});
    const GroundModel tm =
        build_ground_model(tiny, Evidence{}, EmbeddingStore{}, &tw);
    const VerificationReport starved = verify_property(
        tm, 0, Evidence{}, tw, EmbeddingStore{}, EmbeddingStore{}, cfg);
    CHECK(starved.vacuous);
    CHECK(starved.pass);
    CHECK(starved.excluded == 0);
}
