#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hmlnv/data.hpp"
#include "hmlnv/spec.hpp"

using namespace hmlnv;

namespace {

Spec pair_spec() {
    return parse_spec_text(
        "domain Node = {A, B, C}\n"
        "predicate Edge(Node, Node)\n"
        "subsymbolic Dist(Node, Node)\n"
        "option metric euclidean\n"
        "1  (Dist(x, y) < 0.5)\n");
}

Spec session_spec() {
    return parse_spec_text(
        "domain Student = {S1, S2}\n"
        "domain Problem = {P1, P2}\n"
        "predicate Success(Student, Problem)\n"
        "subsymbolic Dist(Student, Problem, Student, Problem)\n"
        "1  (Dist(s1, p1, s2, p2) < 0.5)\n");
}

}  // namespace

TEST_CASE("embedding store basics") {
    EmbeddingStore s;
    s.put("A", {1.0, 2.0});
    CHECK(s.has("A"));
    CHECK_FALSE(s.has("B"));
    CHECK(s.get("A") == std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS((void)s.get("B"), ConfigError);
}

TEST_CASE("euclidean and cosine distances") {
    Spec spec = pair_spec();
    EmbeddingStore s;
    s.put("A", {0.0, 3.0});
    s.put("B", {4.0, 0.0});
    CHECK(embedding_distance(spec, s, "A", "B") == doctest::Approx(5.0));
    CHECK(embedding_distance(spec, s, "A", "A") == 0.0);
    spec.metric = "cosine";
    // orthogonal vectors: distance 1 - 0 = 1
    CHECK(embedding_distance(spec, s, "A", "B") == doctest::Approx(1.0));
    CHECK(embedding_distance(spec, s, "A", "A") == doctest::Approx(0.0));
}

TEST_CASE("subsymbolic atoms split their arguments into two halves") {
    const Spec spec = pair_spec();
    EmbeddingStore s;
    s.put("A", {0.0, 0.0});
    s.put("B", {1.0, 0.0});
    s.put("C", {0.0, 2.0});
    const int dist = spec.schema_index("Dist");
    CHECK(eval_subsymbolic_atom(spec, s, GroundAtom{dist, {0, 1}}) ==
          doctest::Approx(1.0));
    CHECK(eval_subsymbolic_atom(spec, s, GroundAtom{dist, {1, 2}}) ==
          doctest::Approx(std::sqrt(5.0)));

    AtomTable table(spec);
    World w(&table);
    const double dmax = assign_subsymbolic(spec, s, table, w);
    CHECK(dmax == doctest::Approx(std::sqrt(5.0)));
    CHECK(w.value(table.id_of(GroundAtom{dist, {2, 2}})) == 0.0);
}

TEST_CASE("four-argument subsymbolic atoms join half keys with a bar") {
    const Spec spec = session_spec();
    EmbeddingStore s;
    s.put("S1|P1", {0.0});
    s.put("S1|P2", {2.0});
    s.put("S2|P1", {6.0});
    s.put("S2|P2", {3.0});
    const int dist = spec.schema_index("Dist");
    CHECK(embedding_key(spec, GroundAtom{dist, {0, 0, 1, 1}}, false) == "S1|P1");
    CHECK(embedding_key(spec, GroundAtom{dist, {0, 0, 1, 1}}, true) == "S2|P2");
    CHECK(eval_subsymbolic_atom(spec, s, GroundAtom{dist, {0, 1, 1, 0}}) ==
          doctest::Approx(4.0));
}

TEST_CASE("embedding CSV loads keys and numeric tails") {
    const char* path = "embeddings_test_tmp.csv";
    {
        std::ofstream f(path);
        f << "A,0.5,1.5\n"
          << "S1,P2,-1.0,2.25\n"   // multi-field key joins with '|'
          << "\n"                   // blank lines skipped
          << "B,3,4\n";
    }
    const EmbeddingStore s = load_embeddings(path);
    std::remove(path);
    CHECK(s.size() == 3);
    CHECK(s.get("A") == std::vector<double>{0.5, 1.5});
    CHECK(s.get("S1|P2") == std::vector<double>{-1.0, 2.25});
    CHECK(s.get("B") == std::vector<double>{3.0, 4.0});
}

TEST_CASE("evidence parsing: literals, negation, closed world") {
    const Spec spec = pair_spec();
    const Evidence ev = parse_evidence_text(
        "// edges\n"
        "Edge(A, B)\n"
        "!Edge(B, A)\n"
        "closedworld Edge\n",
        spec);
    REQUIRE(ev.literals.size() == 2);
    CHECK(ev.literals[0].second);
    CHECK_FALSE(ev.literals[1].second);
    REQUIRE(ev.closed_world.size() == 1);
    CHECK(ev.closed_world[0] == spec.schema_index("Edge"));

    AtomTable table(spec);
    World w(&table);
    apply_evidence(ev, table, w);
    const int edge = spec.schema_index("Edge");
    CHECK(w.truth(table.id_of(GroundAtom{edge, {0, 1}})));
    CHECK_FALSE(w.truth(table.id_of(GroundAtom{edge, {1, 0}})));
    // closed world: unlisted atoms exist and are false
    CHECK(w.has(table.id_of(GroundAtom{edge, {2, 2}})));
    CHECK_FALSE(w.truth(table.id_of(GroundAtom{edge, {2, 2}})));
}

TEST_CASE("evidence rejects unknown names and conflicts") {
    const Spec spec = pair_spec();
    CHECK_THROWS_AS(parse_evidence_text("Eddge(A, B)\n", spec), ParseError);
    CHECK_THROWS_AS(parse_evidence_text("Edge(A, Z)\n", spec), ParseError);
    CHECK_THROWS_AS(parse_evidence_text("Edge(A)\n", spec), ParseError);
    const Evidence conflict = parse_evidence_text("Edge(A, B)\n!Edge(A, B)\n", spec);
    AtomTable table(spec);
    World w(&table);
    CHECK_THROWS_AS(apply_evidence(conflict, table, w), ConfigError);
}

TEST_CASE("evidence on subsymbolic predicates is rejected") {
    const Spec spec = pair_spec();
    CHECK_THROWS_AS(parse_evidence_text("Dist(A, B)\n", spec), ParseError);
}
