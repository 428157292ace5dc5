#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "hmlnv/data.hpp"
#include "hmlnv/datagen.hpp"
#include "hmlnv/errors.hpp"
#include "hmlnv/spec.hpp"

using namespace hmlnv;

namespace {

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// Mean pairwise embedding distance, split by whether the labels agree.
std::pair<double, double> intra_inter(const HomophilyData& d) {
    double ds = 0, dd = 0;
    int ns = 0, nd = 0;
    const int n = static_cast<int>(d.labels.size());
    for (int i = 0; i < n; ++i) {
        const auto& vi = d.spec_embeddings.get("N" + std::to_string(i));
        for (int j = i + 1; j < n; ++j) {
            const auto& vj = d.spec_embeddings.get("N" + std::to_string(j));
            if (d.labels[i] == d.labels[j]) {
                ds += dist(vi, vj);
                ++ns;
            } else {
                dd += dist(vi, vj);
                ++nd;
            }
        }
    }
    return {ds / ns, dd / nd};
}

int component_count(int nodes, const std::vector<std::pair<int, int>>& edges) {
    std::vector<int> root(nodes);
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](int x) {
        while (root[x] != x) x = root[x] = root[root[x]];
        return x;
    };
    for (const auto& [i, j] : edges) root[find(i)] = find(j);
    std::set<int> reps;
    for (int i = 0; i < nodes; ++i) reps.insert(find(i));
    return static_cast<int>(reps.size());
}

}  // namespace

TEST_CASE("homophily generator is a pure function of its config") {
    HomophilyConfig cfg;
    cfg.nodes = 12;
    cfg.classes = 3;
    cfg.p_in = 0.6;
    cfg.p_out = 0.05;
    cfg.seed = 42;
    const HomophilyData a = gen_homophily(cfg);
    const HomophilyData b = gen_homophily(cfg);

    CHECK(a.edges == b.edges);
    CHECK(a.labels == b.labels);
    CHECK(embeddings_to_csv(a.spec_embeddings) == embeddings_to_csv(b.spec_embeddings));
    CHECK(embeddings_to_csv(a.test_clean) == embeddings_to_csv(b.test_clean));
    CHECK(embeddings_to_csv(a.test_noisy) == embeddings_to_csv(b.test_noisy));
    CHECK(evidence_to_text(a.spec, a.neighbors) == evidence_to_text(b.spec, b.neighbors));

    HomophilyConfig other = cfg;
    other.seed = 43;
    CHECK(embeddings_to_csv(gen_homophily(other).spec_embeddings) !=
          embeddings_to_csv(a.spec_embeddings));

    for (int i = 0; i < cfg.nodes; ++i) CHECK(a.labels[i] == i % cfg.classes);
    CHECK(a.neighbors.literals.size() == 2 * a.edges.size());  // both directions
    CHECK(a.neighbors.closed_world.size() == 1);
    CHECK(a.class_labels.literals.size() == static_cast<size_t>(cfg.nodes));
    // The three draws are independent: spec vs clean test differ.
    CHECK(embeddings_to_csv(a.spec_embeddings) != embeddings_to_csv(a.test_clean));

    // Rendered evidence parses back to the same literals.
    const Evidence round =
        parse_evidence_text(evidence_to_text(a.spec, a.neighbors), a.spec);
    CHECK(round.literals.size() == a.neighbors.literals.size());
    CHECK(round.closed_world == a.neighbors.closed_world);
}

TEST_CASE("homophily block structure and noise controls") {
    HomophilyConfig cfg;
    cfg.nodes = 9;
    cfg.classes = 3;
    cfg.p_in = 1.0;
    cfg.p_out = 0.0;
    cfg.noise_sigma = 0.0;
    cfg.seed = 5;
    const HomophilyData hard = gen_homophily(cfg);
    // All intra-class pairs and nothing else: one component per class.
    CHECK(hard.edges.size() == 3 * 3);  // 3 classes x C(3,2)
    for (const auto& [i, j] : hard.edges) CHECK(hard.labels[i] == hard.labels[j]);
    CHECK(component_count(cfg.nodes, hard.edges) == cfg.classes);
    // Zero added covariance leaves the noisy draw equal to the clean one.
    CHECK(embeddings_to_csv(hard.test_noisy) == embeddings_to_csv(hard.test_clean));

    HomophilyConfig mixed;
    mixed.nodes = 30;
    mixed.classes = 3;
    mixed.p_in = 0.6;
    mixed.p_out = 0.05;
    mixed.seed = 7;
    const HomophilyData d = gen_homophily(mixed);
    int intra = 0, inter = 0;
    for (const auto& [i, j] : d.edges)
        (d.labels[i] == d.labels[j] ? intra : inter) += 1;
    CHECK(intra > inter);

    const auto [same_mean, diff_mean] = intra_inter(d);
    CHECK(same_mean < diff_mean);  // embeddings cluster around class centroids

    HomophilyConfig noisy = mixed;
    noisy.noise_sigma = 1.0;
    const HomophilyData nd = gen_homophily(noisy);
    CHECK(embeddings_to_csv(nd.test_noisy) != embeddings_to_csv(nd.test_clean));

    HomophilyConfig bad = mixed;
    bad.p_out = 0.9;  // above p_in
    CHECK_THROWS_AS(gen_homophily(bad), ConfigError);
    bad = mixed;
    bad.nodes = 0;
    CHECK_THROWS_AS(gen_homophily(bad), ConfigError);
    bad = mixed;
    bad.noise_sigma = -0.1;
    CHECK_THROWS_AS(gen_homophily(bad), ConfigError);
}

TEST_CASE("irt generator determinism and prerequisite structure") {
    IrtConfig cfg;
    cfg.problems = 10;
    cfg.students = 6;
    cfg.concepts = 2;
    cfg.seed = 7;
    const IrtData a = gen_irt(cfg);
    const IrtData b = gen_irt(cfg);
    CHECK(problems_to_csv(a) == problems_to_csv(b));
    CHECK(attempts_to_csv(a.base.log) == attempts_to_csv(b.base.log));
    CHECK(embeddings_to_csv(a.base.knowledge) == embeddings_to_csv(b.base.knowledge));
    CHECK(evidence_to_text(a.spec, a.prerequisites) ==
          evidence_to_text(b.spec, b.prerequisites));

    for (int p = 0; p < cfg.problems; ++p) CHECK(a.concept_of[p] == p % cfg.concepts);

    // PreRequisite(x, y) means x is the strictly easier same-concept problem,
    // which makes the relation a strict (total per concept) order.
    std::set<std::pair<int, int>> rel;
    for (const auto& [atom, val] : a.prerequisites.literals) {
        REQUIRE(val);
        rel.insert({atom.args[0], atom.args[1]});
    }
    size_t expected = 0;
    for (int x = 0; x < cfg.problems; ++x)
        for (int y = 0; y < cfg.problems; ++y)
            if (x != y && a.concept_of[x] == a.concept_of[y] &&
                a.difficulty[x] < a.difficulty[y])
                ++expected;
    CHECK(rel.size() == expected);
    for (const auto& [x, y] : rel) {
        CHECK(x != y);
        CHECK(!rel.count({y, x}));
        CHECK(a.concept_of[x] == a.concept_of[y]);
        CHECK(a.difficulty[x] < a.difficulty[y]);
        for (const auto& [y2, z] : rel)
            if (y2 == y) CHECK(rel.count({x, z}));  // transitive
    }
}

TEST_CASE("irt orderings permute and sort by difficulty as named") {
    IrtConfig cfg;
    cfg.problems = 9;
    cfg.students = 5;
    cfg.concepts = 3;
    cfg.seed = 11;
    const IrtData d = gen_irt(cfg);

    std::vector<int> iota(cfg.problems);
    std::iota(iota.begin(), iota.end(), 0);
    for (const IrtVariant* v :
         {&d.base, &d.exchangeable, &d.preserving, &d.violating}) {
        REQUIRE(v->order.size() == static_cast<size_t>(cfg.students));
        for (const auto& o : v->order) {
            std::vector<int> sorted = o;
            std::sort(sorted.begin(), sorted.end());
            CHECK(sorted == iota);  // every ordering is a permutation
        }
        REQUIRE(v->log.size() == static_cast<size_t>(cfg.students * cfg.problems));
        for (int s = 0; s < cfg.students; ++s)
            for (int t = 0; t < cfg.problems; ++t) {
                const IrtAttempt& at = v->log[s * cfg.problems + t];
                CHECK(at.student == s);
                CHECK(at.position == t);
                CHECK(at.problem == v->order[s][t]);
            }
    }

    CHECK(d.exchangeable.order != d.base.order);  // redrawn curriculum
    for (int s = 0; s < cfg.students; ++s) {
        // Difficulty-sorted variants keep each slot's concept from the base.
        for (int t = 0; t < cfg.problems; ++t) {
            CHECK(d.concept_of[d.preserving.order[s][t]] ==
                  d.concept_of[d.base.order[s][t]]);
            CHECK(d.concept_of[d.violating.order[s][t]] ==
                  d.concept_of[d.base.order[s][t]]);
        }
        for (int c = 0; c < cfg.concepts; ++c) {
            std::vector<double> pres, viol;
            for (int t = 0; t < cfg.problems; ++t) {
                if (d.concept_of[d.preserving.order[s][t]] == c)
                    pres.push_back(d.difficulty[d.preserving.order[s][t]]);
                if (d.concept_of[d.violating.order[s][t]] == c)
                    viol.push_back(d.difficulty[d.violating.order[s][t]]);
            }
            CHECK(std::is_sorted(pres.begin(), pres.end()));
            CHECK(std::is_sorted(viol.rbegin(), viol.rend()));
        }
    }

    // Replayed knowledge embeddings are exactly the running tally of the log.
    for (const IrtVariant* v : {&d.base, &d.preserving, &d.violating}) {
        std::vector<std::vector<double>> tally(
            cfg.students, std::vector<double>(cfg.concepts, 0.0));
        for (const IrtAttempt& at : v->log)
            tally[at.student][d.concept_of[at.problem]] +=
                at.correct ? cfg.replay_up : -cfg.replay_down;
        for (int s = 0; s < cfg.students; ++s)
            CHECK(v->knowledge.get("S" + std::to_string(s)) == tally[s]);
    }
    CHECK(embeddings_to_csv(d.preserving.knowledge) !=
          embeddings_to_csv(d.violating.knowledge));
}

TEST_CASE("csv renderings carry headers and one row per record") {
    IrtConfig cfg;
    cfg.problems = 4;
    cfg.students = 3;
    cfg.seed = 2;
    const IrtData d = gen_irt(cfg);

    const std::string attempts = attempts_to_csv(d.base.log);
    CHECK(attempts.rfind("student,position,problem,correct\n", 0) == 0);
    CHECK(std::count(attempts.begin(), attempts.end(), '\n') ==
          1 + static_cast<long>(d.base.log.size()));

    const std::string problems = problems_to_csv(d);
    CHECK(problems.rfind("problem,concept,difficulty\n", 0) == 0);
    CHECK(std::count(problems.begin(), problems.end(), '\n') == 1 + cfg.problems);

    const std::string emb = embeddings_to_csv(d.base.knowledge);
    CHECK(std::count(emb.begin(), emb.end(), '\n') == cfg.students);
    CHECK(emb.rfind("S0,", 0) == 0);
}
