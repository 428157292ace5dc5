// Python bindings for the main operations: parsing, grounding, MAP solving,
// weight learning, and verification.  Thin wrappers over the C++ API; JSON
// artifacts cross the boundary as strings.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hmlnv/datagen.hpp"
#include "hmlnv/encode.hpp"
#include "hmlnv/learning.hpp"
#include "hmlnv/pipeline.hpp"
#include "hmlnv/spec.hpp"
#include "hmlnv/verify.hpp"

namespace py = pybind11;
using namespace hmlnv;

namespace {

struct Session {
    Spec spec;
    Evidence evidence;
    EmbeddingStore store;
};

Session make_session(const std::string& spec_text, const std::string& evidence_text,
                     const std::map<std::string, std::vector<double>>& embeddings) {
    Session s;
    s.spec = parse_spec_text(spec_text);
    s.evidence = parse_evidence_text(evidence_text, s.spec);
    for (const auto& [k, v] : embeddings) s.store.put(k, v);
    return s;
}

}  // namespace

PYBIND11_MODULE(_hmlnv, m) {
    m.doc() = "hybrid Markov logic specification learning and verification";

    py::register_exception<ParseError>(m, "SpecParseError");
    py::register_exception<ConfigError>(m, "SpecConfigError");
    py::register_exception<ResourceError>(m, "SpecResourceError");

    m.def("render_spec",
          [](const std::string& text) { return render_spec(parse_spec_text(text)); },
          py::arg("spec_text"), "Parse a spec and return its canonical rendering.");

    m.def(
        "ground_stats",
        [](const std::string& spec_text, const std::string& evidence_text,
           const std::map<std::string, std::vector<double>>& embeddings) {
            Session s = make_session(spec_text, evidence_text, embeddings);
            GroundModel model = build_ground_model(s.spec, s.evidence, s.store);
            py::dict d;
            d["atoms"] = model.table.size();
            d["evidence"] = model.partition.evidence.size();
            d["subsymbolic"] = model.partition.subsymbolic.size();
            d["query"] = model.partition.query.size();
            d["groundings"] = model.groundings.size();
            d["d_max"] = model.d_max;
            return d;
        },
        py::arg("spec_text"), py::arg("evidence_text"), py::arg("embeddings"),
        "Ground a spec against evidence and embeddings; returns size statistics.");

    m.def(
        "solve_map",
        [](const std::string& spec_text, const std::string& evidence_text,
           const std::map<std::string, std::vector<double>>& embeddings,
           bool fix_subsymbolic) {
            Session s = make_session(spec_text, evidence_text, embeddings);
            GroundModel model = build_ground_model(s.spec, s.evidence, s.store);
            MapOptions opts;
            opts.fix_subsymbolic = fix_subsymbolic;
            MapOutcome res = solve_map(model, opts);
            py::dict d;
            d["objective"] = res.objective;
            d["feasible"] = res.status != MilpStatus::Infeasible;
            py::dict world;
            for (int id = 0; id < model.table.size(); ++id)
                world[py::str(model.table.name_of(id, s.spec))] = res.world.value(id);
            d["world"] = world;
            return d;
        },
        py::arg("spec_text"), py::arg("evidence_text"), py::arg("embeddings"),
        py::arg("fix_subsymbolic") = false,
        "MAP assignment of the ground model; returns objective and world.");

    m.def(
        "learn",
        [](const std::string& spec_text, const std::string& evidence_text,
           const std::map<std::string, std::vector<double>>& embeddings, int epochs,
           double lr, int alpha) {
            Session s = make_session(spec_text, evidence_text, embeddings);
            GroundModel model = build_ground_model(s.spec, s.evidence, s.store);
            World observed = model.base;
            for (int id : model.partition.query) observed.set(id, 0.0);
            LearnConfig cfg;
            cfg.epochs = epochs;
            cfg.learning_rate = lr;
            cfg.alpha = alpha;
            LearnResult res = learn_weights(s.spec, s.evidence, s.store, observed, cfg);
            return res.weights.to_json(s.spec);
        },
        py::arg("spec_text"), py::arg("evidence_text"), py::arg("embeddings"),
        py::arg("epochs") = 100, py::arg("lr") = 0.01, py::arg("alpha") = 200,
        "Learn shared weights; returns the weight table as JSON text.");

    m.def(
        "verify",
        [](const std::string& spec_text, const std::string& evidence_text,
           const std::map<std::string, std::vector<double>>& spec_embeddings,
           const std::map<std::string, std::vector<double>>& test_embeddings,
           const std::string& weights_json, double gamma, std::uint64_t seed,
           int window, int min_samples) {
            Spec spec = parse_spec_text(spec_text);
            Evidence ev = parse_evidence_text(evidence_text, spec);
            EmbeddingStore se, te;
            for (const auto& [k, v] : spec_embeddings) se.put(k, v);
            for (const auto& [k, v] : test_embeddings) te.put(k, v);
            WeightTable wt = WeightTable::from_json(spec, weights_json);
            VerifyConfig cfg;
            cfg.gamma = gamma;
            cfg.seed = seed;
            cfg.window = window;
            cfg.min_samples = min_samples;
            auto reports = verify_all(spec, ev, wt, se, te, cfg);
            return reports_to_json(reports, cfg);
        },
        py::arg("spec_text"), py::arg("evidence_text"), py::arg("spec_embeddings"),
        py::arg("test_embeddings"), py::arg("weights_json"), py::arg("gamma") = 0.05,
        py::arg("seed") = 0, py::arg("window") = 0, py::arg("min_samples") = 8,
        "Verify test embeddings against the specification model; returns report JSON.");

    m.def(
        "gen_homophily_files",
        [](const std::string& out_dir, int nodes, int classes, double noise_sigma,
           std::uint64_t seed) {
            RunOptions opt;
            opt.command = "gen-data";
            opt.dataset = "homophily";
            opt.out = out_dir;
            opt.nodes = nodes;
            opt.classes = classes;
            opt.noise_sigma = noise_sigma;
            opt.seed = seed;
            std::ostringstream so, se;
            const int code = run_command(opt, so, se);
            if (code != 0) throw ConfigError(se.str());
            return so.str();
        },
        py::arg("out_dir"), py::arg("nodes") = 60, py::arg("classes") = 3,
        py::arg("noise_sigma") = 1.0, py::arg("seed") = 0,
        "Write the homophily benchmark files into a directory.");
}
