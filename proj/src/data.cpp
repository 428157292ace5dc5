#include "hmlnv/data.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hmlnv {

void EmbeddingStore::put(const std::string& key, std::vector<double> vec) {
    vecs_[key] = std::move(vec);
}

const std::vector<double>& EmbeddingStore::get(const std::string& key) const {
    auto it = vecs_.find(key);
    if (it == vecs_.end()) throw ConfigError("no embedding for key '" + key + "'");
    return it->second;
}

namespace {

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    for (std::string& f : fields) {
        size_t a = f.find_first_not_of(" \t");
        size_t b = f.find_last_not_of(" \t");
        f = (a == std::string::npos) ? std::string() : f.substr(a, b - a + 1);
    }
    return fields;
}

}  // namespace

EmbeddingStore load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open embeddings file: " + path);
    EmbeddingStore store;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> fields = split_csv(line);
        // leading non-numeric fields are the key, the numeric tail the vector
        size_t first_value = 0;
        double tmp;
        while (first_value < fields.size() && !parse_double(fields[first_value], tmp))
            ++first_value;
        if (first_value == 0 || first_value == fields.size())
            throw ParseError("embedding row needs a key and at least one value", lineno, 1);
        std::string key = fields[0];
        for (size_t i = 1; i < first_value; ++i) key += "|" + fields[i];
        std::vector<double> vec;
        vec.reserve(fields.size() - first_value);
        for (size_t i = first_value; i < fields.size(); ++i) {
            double v;
            if (!parse_double(fields[i], v))
                throw ParseError("malformed embedding value '" + fields[i] + "'", lineno, 1);
            vec.push_back(v);
        }
        store.put(key, std::move(vec));
    }
    return store;
}

double embedding_distance(const Spec& spec, const EmbeddingStore& store,
                          const std::string& key_a, const std::string& key_b) {
    const std::vector<double>& u = store.get(key_a);
    const std::vector<double>& v = store.get(key_b);
    if (u.size() != v.size())
        throw ConfigError("embedding dimension mismatch between '" + key_a + "' and '" +
                          key_b + "'");
    if (spec.metric == "euclidean") {
        double s = 0;
        for (size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
        return std::sqrt(s);
    }
    // cosine distance
    double dot = 0, nu = 0, nv = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0 || nv == 0)
        throw ConfigError("cosine distance undefined for zero vector ('" + key_a + "', '" +
                          key_b + "')");
    return 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::string embedding_key(const Spec& spec, const GroundAtom& atom, bool second_half) {
    const PredicateSchema& schema = spec.schemas[atom.schema];
    const size_t half = atom.args.size() / 2;
    const size_t begin = second_half ? half : 0;
    const size_t end = second_half ? atom.args.size() : half;
    std::string key;
    for (size_t i = begin; i < end; ++i) {
        if (i != begin) key += "|";
        key += spec.domains[schema.arg_domains[i]].constants[atom.args[i]];
    }
    return key;
}

double eval_subsymbolic_atom(const Spec& spec, const EmbeddingStore& store,
                             const GroundAtom& atom) {
    const PredicateSchema& schema = spec.schemas[atom.schema];
    if (schema.kind != AtomKind::SubSymbolic)
        throw ContractViolation("eval_subsymbolic_atom on a symbolic predicate");
    if (schema.arity() % 2 != 0)
        throw ConfigError("sub-symbolic predicate '" + schema.name +
                          "' needs an even arity (two entity tuples)");
    return embedding_distance(spec, store, embedding_key(spec, atom, false),
                              embedding_key(spec, atom, true));
}

double assign_subsymbolic(const Spec& spec, const EmbeddingStore& store,
                          const AtomTable& table, World& world) {
    double max_seen = 0.0;
    for (size_t s = 0; s < spec.schemas.size(); ++s) {
        if (spec.schemas[s].kind != AtomKind::SubSymbolic) continue;
        const auto [first, last] = table.schema_range(static_cast<int>(s));
        for (int id = first; id < last; ++id) {
            const double v = eval_subsymbolic_atom(spec, store, table.atom_of(id));
            world.set(id, v);
            if (v > max_seen) max_seen = v;
        }
    }
    return max_seen;
}

// ---------------------------------------------------------------------------
// Evidence

namespace {

// Pred(C1, C2) with optional leading '!'
std::pair<GroundAtom, bool> parse_literal(const std::string& text, const Spec& spec,
                                          int lineno) {
    std::string s = text;
    bool value = true;
    size_t pos = 0;
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos < s.size() && s[pos] == '!') {
        value = false;
        ++pos;
    }
    const size_t open = s.find('(', pos);
    const size_t close = s.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw ParseError("malformed literal '" + text + "'", lineno, 1);
    std::string name = s.substr(pos, open - pos);
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back())))
        name.pop_back();
    const int schema = spec.schema_index(name);
    if (schema < 0) throw ParseError("unknown predicate '" + name + "'", lineno, 1);
    if (spec.schemas[schema].kind != AtomKind::Symbolic)
        throw ParseError("evidence literal on sub-symbolic predicate '" + name + "'", lineno,
                         1);
    GroundAtom atom;
    atom.schema = schema;
    std::stringstream args(s.substr(open + 1, close - open - 1));
    std::string field;
    while (std::getline(args, field, ',')) {
        size_t a = field.find_first_not_of(" \t");
        size_t b = field.find_last_not_of(" \t");
        if (a == std::string::npos)
            throw ParseError("empty argument in '" + text + "'", lineno, 1);
        field = field.substr(a, b - a + 1);
        const int pos_idx = static_cast<int>(atom.args.size());
        if (pos_idx >= spec.schemas[schema].arity())
            throw ParseError("too many arguments for '" + name + "'", lineno, 1);
        const int dom = spec.schemas[schema].arg_domains[pos_idx];
        const int c = spec.domains[dom].index_of(field);
        if (c < 0)
            throw ParseError("constant '" + field + "' not in domain '" +
                                 spec.domains[dom].name + "'",
                             lineno, 1);
        atom.args.push_back(c);
    }
    if (static_cast<int>(atom.args.size()) != spec.schemas[schema].arity())
        throw ParseError("wrong argument count for '" + name + "'", lineno, 1);
    return {std::move(atom), value};
}

}  // namespace

Evidence parse_evidence_text(const std::string& text, const Spec& spec) {
    Evidence ev;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;
        if (line[start] == '#' || line.compare(start, 2, "//") == 0) continue;
        const size_t stop = line.find_last_not_of(" \t\r");
        std::string body = line.substr(start, stop - start + 1);
        if (body.rfind("closedworld", 0) == 0) {
            std::string name = body.substr(11);
            const size_t a = name.find_first_not_of(" \t");
            if (a == std::string::npos)
                throw ParseError("closedworld needs a predicate name", lineno, 1);
            name = name.substr(a);
            const int schema = spec.schema_index(name);
            if (schema < 0) throw ParseError("unknown predicate '" + name + "'", lineno, 1);
            if (spec.schemas[schema].kind != AtomKind::Symbolic)
                throw ParseError("closedworld on sub-symbolic predicate '" + name + "'",
                                 lineno, 1);
            ev.closed_world.push_back(schema);
            continue;
        }
        ev.literals.push_back(parse_literal(body, spec, lineno));
    }
    return ev;
}

Evidence load_evidence(const std::string& path, const Spec& spec) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open evidence file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_evidence_text(buf.str(), spec);
}

void apply_evidence(const Evidence& ev, const AtomTable& table, World& world) {
    for (const auto& [atom, value] : ev.literals) {
        const int id = table.id_of(atom);
        if (world.has(id) && world.truth(id) != value)
            throw ConfigError("conflicting evidence literals for atom id " +
                              std::to_string(id));
        world.set(id, value ? 1.0 : 0.0);
    }
    for (int schema : ev.closed_world) {
        const auto [first, last] = table.schema_range(schema);
        for (int id = first; id < last; ++id)
            if (!world.has(id)) world.set(id, 0.0);
    }
}

}  // namespace hmlnv
