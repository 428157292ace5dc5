#pragma once

// Ground data: embedding stores (vectors per entity), observed literals, and
// the evaluation of sub-symbolic atoms from embeddings.
//
// Embedding CSV rows are `key[,key2,...],v1,...,vd`: every leading field that
// is not a number is part of the entity key (multi-field keys are joined with
// '|'), the numeric tail is the vector.
//
// Evidence files hold one literal per line, `!` for negation, with
// `closedworld <Predicate>` closing a predicate (unlisted atoms false):
//
//   Neighbor(N1, N2)
//   !Class(N1, C2)
//   closedworld Neighbor

#include <map>
#include <string>
#include <vector>

#include "hmlnv/logic.hpp"

namespace hmlnv {

class EmbeddingStore {
public:
    void put(const std::string& key, std::vector<double> vec);
    bool has(const std::string& key) const { return vecs_.count(key) != 0; }
    const std::vector<double>& get(const std::string& key) const;
    size_t size() const { return vecs_.size(); }
    const std::map<std::string, std::vector<double>>& all() const { return vecs_; }

private:
    std::map<std::string, std::vector<double>> vecs_;
};

EmbeddingStore load_embeddings(const std::string& path);

// Distance between two stored vectors under the spec's metric
// ("euclidean" or "cosine"; cosine distance is 1 - cos similarity).
double embedding_distance(const Spec& spec, const EmbeddingStore& store,
                          const std::string& key_a, const std::string& key_b);

// Ground-atom key: constants of one half of the argument tuple joined by '|'.
std::string embedding_key(const Spec& spec, const GroundAtom& atom, bool second_half);

// Value of one sub-symbolic ground atom (arity must be even: the two halves
// of the argument tuple name the two embedded entities).
double eval_subsymbolic_atom(const Spec& spec, const EmbeddingStore& store,
                             const GroundAtom& atom);

// Assign every sub-symbolic ground atom in the table; returns the largest
// value seen (0 when there are none), used as the default solver range.
double assign_subsymbolic(const Spec& spec, const EmbeddingStore& store,
                          const AtomTable& table, World& world);

// ---------------------------------------------------------------------------
// Observed literals

struct Evidence {
    std::vector<std::pair<GroundAtom, bool>> literals;  // file order
    std::vector<int> closed_world;                      // schema indices
};

Evidence load_evidence(const std::string& path, const Spec& spec);
Evidence parse_evidence_text(const std::string& text, const Spec& spec);

// Set evidence literals in a world; closed-world predicates get their
// unlisted atoms set false.  Conflicting duplicate literals are an error.
void apply_evidence(const Evidence& ev, const AtomTable& table, World& world);

}  // namespace hmlnv
