#include "hmlnv/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "hmlnv/errors.hpp"
#include "hmlnv/spec.hpp"

namespace hmlnv {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t member = 0) {
    std::uint64_t z = seed + kGolden * (purpose + 1) + 0xbf58476d1ce4e5b9ULL * (member + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return std::mt19937_64(z ^ (z >> 31));
}

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------------------
// Homophily graphs

HomophilyData gen_homophily(const HomophilyConfig& cfg) {
    if (cfg.nodes < 1 || cfg.classes < 1 || cfg.embed_dim < 1)
        throw ConfigError("homophily generator needs positive sizes");
    if (!(0.0 <= cfg.p_out && cfg.p_out <= cfg.p_in && cfg.p_in <= 1.0))
        throw ConfigError("edge probabilities need 0 <= pOut <= pIn <= 1");
    if (cfg.noise_sigma < 0) throw ConfigError("noise scale must be non-negative");

    HomophilyData out;

    std::ostringstream spec_text;
    spec_text << "domain Node = {";
    for (int i = 0; i < cfg.nodes; ++i) spec_text << (i ? ", N" : "N") << i;
    spec_text << "}\ndomain Label = {";
    for (int c = 0; c < cfg.classes; ++c) spec_text << (c ? ", L" : "L") << c;
    spec_text << "}\n"
              << "predicate Neighbor(Node, Node)\n"
              << "predicate Class(Node, Label)\n"
              << "subsymbolic Dist(Node, Node)\n"
              << "option metric euclidean\n"
              << "\n"
              << "1  Class(x1, c) ^ Neighbor(x1, x2) => Class(x2, c)\n"
              << "1  (Dist(x1, x2) < 0.5) * (Class(x1, c) <=> Class(x2, c))\n";
    out.spec = parse_spec_text(spec_text.str());

    out.labels.resize(cfg.nodes);
    for (int i = 0; i < cfg.nodes; ++i) out.labels[i] = i % cfg.classes;

    auto edge_eng = stream(cfg.seed, 1);
    const int neighbor_schema = out.spec.schema_index("Neighbor");
    const int class_schema = out.spec.schema_index("Class");
    for (int i = 0; i < cfg.nodes; ++i) {
        for (int j = i + 1; j < cfg.nodes; ++j) {
            const double p = out.labels[i] == out.labels[j] ? cfg.p_in : cfg.p_out;
            if (std::bernoulli_distribution(p)(edge_eng)) out.edges.emplace_back(i, j);
        }
    }
    for (const auto& [i, j] : out.edges) {
        out.neighbors.literals.push_back({GroundAtom{neighbor_schema, {i, j}}, true});
        out.neighbors.literals.push_back({GroundAtom{neighbor_schema, {j, i}}, true});
    }
    out.neighbors.closed_world.push_back(neighbor_schema);

    for (int i = 0; i < cfg.nodes; ++i)
        out.class_labels.literals.push_back(
            {GroundAtom{class_schema, {i, out.labels[i]}}, true});
    out.class_labels.closed_world.push_back(class_schema);

    const double clean_sd = std::sqrt(0.1);
    const double noise_sd = std::sqrt(cfg.noise_sigma);
    auto draw = [&](std::uint64_t purpose, EmbeddingStore& store) {
        auto eng = stream(cfg.seed, purpose);
        std::normal_distribution<double> noise(0.0, clean_sd);
        for (int i = 0; i < cfg.nodes; ++i) {
            std::vector<double> v(cfg.embed_dim, 0.0);
            v[out.labels[i] % cfg.embed_dim] = 2.0;  // class centroid
            for (double& x : v) x += noise(eng);
            store.put("N" + std::to_string(i), std::move(v));
        }
    };
    draw(2, out.spec_embeddings);
    draw(3, out.test_clean);

    auto noisy_eng = stream(cfg.seed, 4);
    std::normal_distribution<double> extra(0.0, noise_sd);
    for (const auto& [key, vec] : out.test_clean.all()) {
        std::vector<double> v = vec;
        if (cfg.noise_sigma > 0)
            for (double& x : v) x += extra(noisy_eng);
        out.test_noisy.put(key, std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Item-response simulation

namespace {

// Sort each concept's slots in the base ordering by difficulty.
std::vector<int> reorder_by_difficulty(const std::vector<int>& base,
                                       const std::vector<int>& concept_of,
                                       const std::vector<double>& difficulty,
                                       int concepts, bool ascending) {
    std::vector<int> result = base;
    for (int c = 0; c < concepts; ++c) {
        std::vector<int> slots, probs;
        for (std::size_t t = 0; t < base.size(); ++t)
            if (concept_of[base[t]] == c) {
                slots.push_back(static_cast<int>(t));
                probs.push_back(base[t]);
            }
        std::stable_sort(probs.begin(), probs.end(), [&](int a, int b) {
            return ascending ? difficulty[a] < difficulty[b]
                             : difficulty[a] > difficulty[b];
        });
        for (std::size_t k = 0; k < slots.size(); ++k) result[slots[k]] = probs[k];
    }
    return result;
}

}  // namespace

IrtData gen_irt(const IrtConfig& cfg) {
    if (cfg.problems < 1 || cfg.students < 1 || cfg.concepts < 1)
        throw ConfigError("item-response generator needs positive counts");

    IrtData out;

    std::ostringstream spec_text;
    spec_text << "domain Student = {";
    for (int s = 0; s < cfg.students; ++s) spec_text << (s ? ", S" : "S") << s;
    spec_text << "}\ndomain Problem = {";
    for (int p = 0; p < cfg.problems; ++p) spec_text << (p ? ", P" : "P") << p;
    spec_text << "}\n"
              << "predicate Correct(Student, Problem)\n"
              << "predicate PreRequisite(Problem, Problem)\n"
              << "subsymbolic Dist(Student, Student)\n"
              << "option metric euclidean\n"
              << "\n"
              << "1  Correct(s, p1) ^ PreRequisite(p1, p2) => Correct(s, p2)\n"
              << "1  (Dist(s1, s2) < 0.5) * (Correct(s1, p) <=> Correct(s2, p))\n";
    out.spec = parse_spec_text(spec_text.str());

    out.concept_of.resize(cfg.problems);
    for (int p = 0; p < cfg.problems; ++p) out.concept_of[p] = p % cfg.concepts;

    auto diff_eng = stream(cfg.seed, 10);
    std::normal_distribution<double> unit(0.0, 1.0);
    out.difficulty.resize(cfg.problems);
    for (int p = 0; p < cfg.problems; ++p) out.difficulty[p] = unit(diff_eng);

    const int prereq_schema = out.spec.schema_index("PreRequisite");
    for (int a = 0; a < cfg.problems; ++a)
        for (int b = 0; b < cfg.problems; ++b)
            if (a != b && out.concept_of[a] == out.concept_of[b] &&
                out.difficulty[a] < out.difficulty[b])
                out.prerequisites.literals.push_back(
                    {GroundAtom{prereq_schema, {a, b}}, true});
    out.prerequisites.closed_world.push_back(prereq_schema);

    // Latent ability per (student, concept).
    auto skill_eng = stream(cfg.seed, 11);
    std::vector<std::vector<double>> ability(cfg.students,
                                             std::vector<double>(cfg.concepts));
    for (auto& row : ability)
        for (double& v : row) v = unit(skill_eng);

    // Base + exchangeable orderings are per-student shuffles.
    auto make_orders = [&](std::uint64_t purpose) {
        std::vector<std::vector<int>> orders(cfg.students);
        for (int s = 0; s < cfg.students; ++s) {
            orders[s].resize(cfg.problems);
            for (int p = 0; p < cfg.problems; ++p) orders[s][p] = p;
            auto eng = stream(cfg.seed, purpose, s);
            std::shuffle(orders[s].begin(), orders[s].end(), eng);
        }
        return orders;
    };

    auto run_variant = [&](std::string name, std::uint64_t purpose,
                           std::vector<std::vector<int>> orders) {
        IrtVariant v;
        v.name = std::move(name);
        v.order = std::move(orders);
        for (int s = 0; s < cfg.students; ++s) {
            auto eng = stream(cfg.seed, purpose, s);
            std::vector<double> skill = ability[s];
            std::vector<double> replay(cfg.concepts, 0.0);
            for (int t = 0; t < cfg.problems; ++t) {
                const int p = v.order[s][t];
                const int c = out.concept_of[p];
                const bool correct = std::bernoulli_distribution(
                    sigmoid(skill[c] - out.difficulty[p]))(eng);
                v.log.push_back({s, t, p, correct});
                skill[c] += cfg.eta;
                replay[c] += correct ? cfg.replay_up : -cfg.replay_down;
            }
            v.knowledge.put("S" + std::to_string(s), std::move(replay));
        }
        return v;
    };

    out.base = run_variant("base", 20, make_orders(12));
    out.exchangeable = run_variant("exchangeable", 21, make_orders(13));
    out.preserving =
        run_variant("preserving", 22, [&] {
            auto orders = make_orders(12);  // same slots as the base ordering
            for (auto& o : orders)
                o = reorder_by_difficulty(o, out.concept_of, out.difficulty,
                                          cfg.concepts, true);
            return orders;
        }());
    out.violating =
        run_variant("violating", 23, [&] {
            auto orders = make_orders(12);
            for (auto& o : orders)
                o = reorder_by_difficulty(o, out.concept_of, out.difficulty,
                                          cfg.concepts, false);
            return orders;
        }());
    return out;
}

// ---------------------------------------------------------------------------
// Text renderings

std::string embeddings_to_csv(const EmbeddingStore& store) {
    std::string out;
    for (const auto& [key, vec] : store.all()) {
        out += key;
        for (double v : vec) {
            out += ',';
            out += fmt(v);
        }
        out += '\n';
    }
    return out;
}

std::string evidence_to_text(const Spec& spec, const Evidence& ev) {
    std::string out;
    for (const auto& [atom, val] : ev.literals) {
        if (!val) out += '!';
        out += spec.schemas[atom.schema].name;
        out += '(';
        for (std::size_t i = 0; i < atom.args.size(); ++i) {
            if (i) out += ", ";
            out += spec.domains[spec.schemas[atom.schema].arg_domains[i]]
                       .constants[atom.args[i]];
        }
        out += ")\n";
    }
    for (int s : ev.closed_world) {
        out += "closedworld ";
        out += spec.schemas[s].name;
        out += '\n';
    }
    return out;
}

std::string attempts_to_csv(const std::vector<IrtAttempt>& log) {
    std::string out = "student,position,problem,correct\n";
    for (const auto& a : log) {
        out += "S" + std::to_string(a.student) + "," + std::to_string(a.position) +
               ",P" + std::to_string(a.problem) + "," + (a.correct ? "1" : "0") + "\n";
    }
    return out;
}

std::string problems_to_csv(const IrtData& data) {
    std::string out = "problem,concept,difficulty\n";
    for (std::size_t p = 0; p < data.difficulty.size(); ++p)
        out += "P" + std::to_string(p) + ",K" + std::to_string(data.concept_of[p]) +
               "," + fmt(data.difficulty[p]) + "\n";
    return out;
}

}  // namespace hmlnv
