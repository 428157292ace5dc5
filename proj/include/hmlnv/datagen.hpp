#pragma once
// Synthetic benchmark generators.  Everything is a pure function of the
// config (seed included), so repeated runs emit identical bytes.
//
// gen_homophily: stochastic-block-model graph whose node embeddings cluster
// around class centroids.  Three embedding draws come out: the specification
// draw, an independent clean test draw (same centroids, fresh noise), and a
// noisy test draw (clean test + Gaussian(0, noise_sigma * I)).
//
// gen_irt: item-response simulation.  Problems carry a latent concept and a
// difficulty; a student's response is Bernoulli(sigmoid(skill - difficulty))
// and the attempted concept's skill grows by eta after every attempt.
// Orderings: the base curriculum is a per-student random permutation;
// "exchangeable" redraws it, "preserving" sorts each concept's slots easiest
// first, "violating" hardest first.  Per-student knowledge embeddings replay
// the response log: a correct answer raises the replayed concept skill by
// replay_up, a wrong one lowers it by replay_down (the replay consumes the
// responses the way a sequence model would, so embeddings depend on the
// ordering through the responses it produced).

#include <cstdint>
#include <string>
#include <vector>

#include "hmlnv/data.hpp"
#include "hmlnv/logic.hpp"

namespace hmlnv {

struct HomophilyConfig {
    int nodes = 60;
    int classes = 3;
    double p_in = 0.1;
    double p_out = 0.01;
    int embed_dim = 4;
    double noise_sigma = 1.0;  // added covariance scale for the noisy draw
    std::uint64_t seed = 0;
};

struct HomophilyData {
    Spec spec;  // Node/Label domains, Neighbor + Class predicates, Dist
    std::vector<std::pair<int, int>> edges;  // undirected, i < j
    std::vector<int> labels;                 // node -> class index
    Evidence neighbors;   // Neighbor literals (both directions), closed world
    Evidence class_labels;  // Class literals, closed world (for learning)
    EmbeddingStore spec_embeddings;
    EmbeddingStore test_clean;
    EmbeddingStore test_noisy;
};

HomophilyData gen_homophily(const HomophilyConfig& cfg);

struct IrtConfig {
    int problems = 50;
    int students = 1000;
    int concepts = 2;
    double eta = 0.1;
    double replay_up = 0.1;
    double replay_down = 0.05;
    std::uint64_t seed = 0;
};

struct IrtAttempt {
    int student = 0;
    int position = 0;
    int problem = 0;
    bool correct = false;
};

struct IrtVariant {
    std::string name;
    std::vector<std::vector<int>> order;  // per student, problems in sequence
    std::vector<IrtAttempt> log;          // student-major, position order
    EmbeddingStore knowledge;             // final replayed per-concept skills
};

struct IrtData {
    Spec spec;  // Student/Problem domains, Correct + PreRequisite, Dist
    std::vector<int> concept_of;     // problem -> concept
    std::vector<double> difficulty;  // problem -> difficulty
    Evidence prerequisites;          // same concept, easier first; closed world
    IrtVariant base;                 // the specification ordering
    IrtVariant exchangeable;
    IrtVariant preserving;
    IrtVariant violating;
};

IrtData gen_irt(const IrtConfig& cfg);

// CSV renderings used by the gen-data command (and handy for tests).
std::string embeddings_to_csv(const EmbeddingStore& store);
std::string evidence_to_text(const Spec& spec, const Evidence& ev);
std::string attempts_to_csv(const std::vector<IrtAttempt>& log);
std::string problems_to_csv(const IrtData& data);

}  // namespace hmlnv
