#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "doctest.h"
#include "hmlnv/data.hpp"
#include "hmlnv/errors.hpp"
#include "hmlnv/model.hpp"
#include "hmlnv/spec.hpp"

using namespace hmlnv;

namespace {

Spec two_pred_spec() {
    return parse_spec_text(
        "domain Node = {A, B}\n"
        "predicate P(Node)\n"
        "predicate Q(Node)\n"
        "2     P(x)\n"
        "-0.5  P(x) ^ Q(x)\n");
}

// Independent reference: enumerate every query completion with a bit counter
// and take log_score directly.
double brute_force_map(const GroundModel& m) {
    const auto& q = m.partition.query;
    REQUIRE(q.size() <= 20);
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t bits = 0; bits < (1ull << q.size()); ++bits) {
        World w = m.base;
        for (size_t i = 0; i < q.size(); ++i) w.set(q[i], (bits >> i) & 1 ? 1.0 : 0.0);
        best = std::max(best, log_score(m, w));
    }
    return best;
}

}  // namespace

TEST_CASE("ground model layout and weight resolution") {
    const Spec spec = two_pred_spec();
    const GroundModel m = build_ground_model(spec, Evidence{}, EmbeddingStore{});

    REQUIRE(m.groundings.size() == 4);  // 2 per property
    CHECK(m.groundings[0].property == 0);
    CHECK(m.groundings[0].subst == std::vector<int>{0});
    CHECK(m.groundings[1].subst == std::vector<int>{1});
    CHECK(m.groundings[2].property == 1);
    CHECK(m.groundings[3].subst == std::vector<int>{1});

    // Weights come from the spec when no table is given.
    CHECK(m.groundings[0].weight == 2.0);
    CHECK(m.groundings[2].weight == -0.5);
    CHECK(m.groundings[0].param == -1);

    CHECK(m.partition.evidence.empty());
    CHECK(m.partition.subsymbolic.empty());
    CHECK(m.partition.query.size() == 4);
    CHECK(m.d_max == 0.0);
    for (int a : m.partition.query) CHECK(!m.base.has(a));
}

TEST_CASE("weight table overrides spec weights and reports the parameter") {
    const Spec spec = two_pred_spec();
    Hypercube all;
    all.sets.push_back({spec.domain_index("Node"), {0, 1}});
    const WeightTable wt(spec, {all}, 0.7);

    const GroundModel m = build_ground_model(spec, Evidence{}, EmbeddingStore{}, &wt);
    REQUIRE(m.groundings.size() == 4);
    for (const auto& g : m.groundings) CHECK(g.weight == 0.7);
    // property * (n_cubes + 1) + cube
    CHECK(m.groundings[0].param == 0);
    CHECK(m.groundings[2].param == 2);
}

TEST_CASE("log_score sums weighted grounding values") {
    const Spec spec = two_pred_spec();
    const Evidence ev = parse_evidence_text("P(A)\n", spec);
    const GroundModel m = build_ground_model(spec, ev, EmbeddingStore{});

    World w = m.base;
    CHECK(w.truth(m.table.id_of(GroundAtom{spec.schema_index("P"), {0}})));
    w.set(m.table.id_of(GroundAtom{spec.schema_index("P"), {1}}), 1.0);
    w.set(m.table.id_of(GroundAtom{spec.schema_index("Q"), {0}}), 1.0);
    w.set(m.table.id_of(GroundAtom{spec.schema_index("Q"), {1}}), 0.0);

    // 2*(P(A)+P(B)) - 0.5*|{x : P(x)^Q(x)}| = 4 - 0.5
    CHECK(log_score(m, w) == doctest::Approx(3.5).epsilon(1e-12));

    const auto vals = grounding_values(m, w);
    CHECK(vals == std::vector<double>{1.0, 1.0, 1.0, 0.0});

    // Evidence disagreement is a contract violation, not a score.
    World bad = w;
    bad.set(m.table.id_of(GroundAtom{spec.schema_index("P"), {0}}), 0.0);
    CHECK_THROWS_AS((void)log_score(m, bad), ContractViolation);
}

TEST_CASE("exact_map agrees with bit-counter enumeration") {
    const Spec spec = parse_spec_text(
        "domain Node = {A, B, C}\n"
        "predicate P(Node)\n"
        "predicate E(Node, Node)\n"
        "1.5   P(x)\n"
        "-2    P(x) ^ P(y)\n"
        "0.7   E(x, y) => P(y)\n");
    const GroundModel m = build_ground_model(spec, Evidence{}, EmbeddingStore{});
    REQUIRE(m.partition.query.size() == 12);

    World argmax(&m.table);
    const double got = exact_map(m, &argmax);
    CHECK(got == doctest::Approx(brute_force_map(m)).epsilon(1e-12));
    CHECK(log_score(m, argmax) == doctest::Approx(got).epsilon(1e-12));
}

TEST_CASE("evidence and closed world shrink the query partition") {
    const Spec spec = parse_spec_text(
        "domain Node = {A, B}\n"
        "predicate P(Node)\n"
        "predicate E(Node, Node)\n"
        "subsymbolic Dist(Node, Node)\n"
        "1  E(x, y) => P(y)\n"
        "1  (Dist(x, y) < 0.5)\n");
    const Evidence ev = parse_evidence_text("P(A)\nE(A, B)\nclosedworld E\n", spec);
    EmbeddingStore s;
    s.put("A", {0.0, 0.0});
    s.put("B", {3.0, 4.0});
    const GroundModel m = build_ground_model(spec, ev, s);

    CHECK(m.partition.evidence.size() == 5);   // P(A) + all four E atoms
    CHECK(m.partition.subsymbolic.size() == 4);
    CHECK(m.partition.query.size() == 1);      // P(B)
    CHECK(m.d_max == doctest::Approx(5.0));    // euclidean |(3,4)|
    CHECK(m.base.value(m.table.id_of(GroundAtom{spec.schema_index("Dist"), {0, 1}})) ==
          doctest::Approx(5.0));
    CHECK_FALSE(m.base.truth(m.table.id_of(GroundAtom{spec.schema_index("E"), {1, 0}})));
}

TEST_CASE("log partition and conditionals on a one-atom model") {
    const Spec spec = parse_spec_text(
        "domain N = {A}\n"
        "predicate P(N)\n"
        "1  P(x)\n");
    const GroundModel m = build_ground_model(spec, Evidence{}, EmbeddingStore{});
    const int p = m.table.id_of(GroundAtom{spec.schema_index("P"), {0}});

    // ln(e^1 + e^0)
    CHECK(exact_log_partition(m) ==
          doctest::Approx(1.31326168751822283405).epsilon(1e-15));

    const double lp_true =
        exact_conditional_log_prob(m, [&](const World& w) { return w.truth(p); });
    const double lp_false =
        exact_conditional_log_prob(m, [&](const World& w) { return !w.truth(p); });
    CHECK(lp_true == doctest::Approx(1.0 - 1.31326168751822283405).epsilon(1e-12));
    CHECK(lp_false == doctest::Approx(-1.31326168751822283405).epsilon(1e-12));
    CHECK(std::exp(lp_true) + std::exp(lp_false) == doctest::Approx(1.0).epsilon(1e-12));

    const double impossible =
        exact_conditional_log_prob(m, [](const World&) { return false; });
    CHECK(std::isinf(impossible));
    CHECK(impossible < 0);
}

TEST_CASE("completion enumeration visits every assignment and honours the cap") {
    const Spec spec = two_pred_spec();
    const GroundModel m = build_ground_model(spec, Evidence{}, EmbeddingStore{});

    int visits = 0;
    for_each_completion(m, [&](const World& w) {
        ++visits;
        for (int a : m.partition.query) CHECK(w.has(a));
    });
    CHECK(visits == 16);

    CHECK_THROWS_AS(for_each_completion(m, [](const World&) {}, 3), ResourceError);
    CHECK_THROWS_AS((void)exact_map(m, nullptr, 3), ResourceError);
    CHECK_THROWS_AS((void)exact_log_partition(m, 3), ResourceError);
}

TEST_CASE("soft grounding values flow from the embeddings") {
    const Spec spec = parse_spec_text(
        "domain Node = {A, B}\n"
        "subsymbolic Dist(Node, Node)\n"
        "1  (Dist(x, y) < 0.5)\n");
    EmbeddingStore s;
    s.put("A", {0.0});
    s.put("B", {0.2});
    const GroundModel m = build_ground_model(spec, Evidence{}, s);

    const auto vals = grounding_values(m, m.base);
    REQUIRE(vals.size() == 4);
    // Diagonal pairs at distance 0, off–diagonal at 0.2.
    CHECK(vals[0] == doctest::Approx(soft_ineq_value(0.0, 0.5, IneqDir::Less, 1.0)));
    CHECK(vals[1] == doctest::Approx(soft_ineq_value(0.2, 0.5, IneqDir::Less, 1.0)));
    CHECK(vals[1] == doctest::Approx(-0.554355244468527118808).epsilon(1e-15));
}
