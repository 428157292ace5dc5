#include "hmlnv/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "hmlnv/datagen.hpp"
#include "hmlnv/encode.hpp"
#include "hmlnv/learning.hpp"
#include "hmlnv/spec.hpp"
#include "hmlnv/verify.hpp"

namespace hmlnv {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw ConfigError("cannot create " + target.parent_path().string());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw ConfigError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw ConfigError("cannot move " + tmp.string() + " into place");
}

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string out_path(const RunOptions& opt, const std::string& name) {
    if (opt.out.empty()) throw ConfigError("--out is required for this command");
    return (fs::path(opt.out) / name).string();
}

void need(const std::string& value, const char* flag) {
    if (value.empty()) throw ConfigError(std::string("missing required flag ") + flag);
}

// ---------------------------------------------------------------- ground

int run_ground(const RunOptions& opt, std::ostream& out) {
    need(opt.spec, "--spec");
    need(opt.evidence, "--evidence");
    need(opt.embeddings, "--embeddings");
    const Spec spec = load_spec(opt.spec);
    const Evidence ev = load_evidence(opt.evidence, spec);
    const EmbeddingStore store = load_embeddings(opt.embeddings);
    const GroundModel model = build_ground_model(spec, ev, store);

    ordered_json j;
    j["atoms"]["total"] = model.table.size();
    j["atoms"]["evidence"] = model.partition.evidence.size();
    j["atoms"]["subsymbolic"] = model.partition.subsymbolic.size();
    j["atoms"]["query"] = model.partition.query.size();
    j["dMax"] = model.d_max;
    j["groundings"] = model.groundings.size();
    j["properties"] = ordered_json::array();
    for (size_t p = 0; p < spec.properties.size(); ++p) {
        size_t n = 0;
        for (const auto& g : model.groundings)
            if (g.property == static_cast<int>(p)) ++n;
        ordered_json pj;
        pj["index"] = p;
        pj["formula"] = render_formula(spec, spec.properties[p]);
        pj["groundings"] = n;
        j["properties"].push_back(pj);
    }
    const std::string text = j.dump(2) + "\n";
    if (opt.out.empty()) {
        out << text;
    } else {
        write_file(out_path(opt, "ground.json"), text);
        out << "wrote " << out_path(opt, "ground.json") << "\n";
    }
    return 0;
}

// ----------------------------------------------------------------- learn

int run_learn(const RunOptions& opt, std::ostream& out) {
    need(opt.spec, "--spec");
    need(opt.evidence, "--evidence");
    need(opt.embeddings, "--embeddings");
    const Spec spec = load_spec(opt.spec);
    const Evidence ev = load_evidence(opt.evidence, spec);
    const EmbeddingStore store = load_embeddings(opt.embeddings);

    // The observed world: evidence + embedding values, unobserved query
    // atoms closed to false.
    const GroundModel model = build_ground_model(spec, ev, store);
    World observed = model.base;
    for (int id : model.partition.query) observed.set(id, 0.0);

    LearnConfig cfg;
    cfg.learning_rate = opt.lr;
    cfg.epochs = opt.epochs;
    cfg.alpha = opt.alpha;
    cfg.segments = opt.segments;
    const LearnResult res = learn_weights(spec, ev, store, observed, cfg);

    write_file(out_path(opt, "weights.json"), res.weights.to_json(spec));
    std::string csv = "epoch,mapFree,mapPinned,gradNorm\n";
    for (const EpochStat& s : res.curve)
        csv += std::to_string(s.epoch) + "," + fmt_g(s.map_free_objective) + "," +
               fmt_g(s.map_pinned_objective) + "," + fmt_g(s.grad_norm) + "\n";
    write_file(out_path(opt, "curve.csv"), csv);
    out << "learned " << res.weights.n_params() << " parameters over "
        << res.weights.n_cubes() << " cubes in " << opt.epochs << " epochs\n";
    return 0;
}

// ---------------------------------------------------------------- verify

int run_verify(const RunOptions& opt, std::ostream& out) {
    need(opt.spec, "--spec");
    need(opt.evidence, "--evidence");
    need(opt.embeddings, "--embeddings");
    need(opt.test_embeddings, "--test-embeddings");
    need(opt.weights, "--weights");
    const Spec spec = load_spec(opt.spec);
    const Evidence ev = load_evidence(opt.evidence, spec);
    const EmbeddingStore spec_emb = load_embeddings(opt.embeddings);
    const EmbeddingStore test_emb = load_embeddings(opt.test_embeddings);
    const WeightTable weights = WeightTable::from_json(spec, read_file(opt.weights));

    VerifyConfig cfg;
    cfg.gamma = opt.gamma;
    cfg.seed = opt.seed;
    cfg.window = opt.window;
    cfg.min_samples = opt.min_samples;
    cfg.delta_u = opt.delta_u;
    cfg.delta_l = opt.delta_l;
    const auto reports = verify_all(spec, ev, weights, spec_emb, test_emb, cfg);

    write_file(out_path(opt, "report.json"), reports_to_json(reports, cfg));

    // Bound distributions, one row per sampled grounding and store.
    std::string csv = "propertyIndex,cubeId,grounding,store,omegaU,omegaL\n";
    for (const auto& rep : reports)
        for (const SampleBounds& s : rep.samples) {
            const std::string base = std::to_string(rep.property_index) + "," +
                                     std::to_string(s.cube) + ",\"" + s.label + "\",";
            csv += base + "spec," + fmt_g(s.spec_side.omega_u) + "," +
                   fmt_g(s.spec_side.omega_l) + "\n";
            csv += base + "test," + fmt_g(s.test_side.omega_u) + "," +
                   fmt_g(s.test_side.omega_l) + "\n";
        }
    write_file(out_path(opt, "bounds.csv"), csv);

    bool all_pass = true;
    for (const auto& rep : reports) {
        all_pass = all_pass && rep.pass;
        out << "property " << rep.property_index << ": "
            << (rep.pass ? "pass" : "FAIL") << " (pU=" << fmt_g(rep.upper.p)
            << ", pL=" << fmt_g(rep.lower.p) << ", samples=" << rep.samples.size()
            << ")\n";
    }
    out << (all_pass ? "verification passed\n" : "verification FAILED\n");
    return all_pass ? 0 : 1;
}

// -------------------------------------------------------------- gen-data

Evidence concat(const Evidence& a, const Evidence& b) {
    Evidence e = a;
    e.literals.insert(e.literals.end(), b.literals.begin(), b.literals.end());
    for (int s : b.closed_world)
        if (std::find(e.closed_world.begin(), e.closed_world.end(), s) ==
            e.closed_world.end())
            e.closed_world.push_back(s);
    return e;
}

int run_gen_data(const RunOptions& opt, std::ostream& out) {
    if (opt.dataset == "homophily") {
        HomophilyConfig cfg;
        cfg.nodes = opt.nodes;
        cfg.classes = opt.classes;
        cfg.p_in = opt.p_in;
        cfg.p_out = opt.p_out;
        cfg.embed_dim = opt.embed_dim;
        cfg.noise_sigma = opt.noise_sigma;
        cfg.seed = opt.seed;
        const HomophilyData d = gen_homophily(cfg);
        write_file(out_path(opt, "spec.hmln"), render_spec(d.spec));
        write_file(out_path(opt, "neighbors.txt"), evidence_to_text(d.spec, d.neighbors));
        write_file(out_path(opt, "labels.txt"), evidence_to_text(d.spec, d.class_labels));
        write_file(out_path(opt, "train.txt"),
                   evidence_to_text(d.spec, concat(d.neighbors, d.class_labels)));
        write_file(out_path(opt, "spec_embeddings.csv"),
                   embeddings_to_csv(d.spec_embeddings));
        write_file(out_path(opt, "test_clean.csv"), embeddings_to_csv(d.test_clean));
        write_file(out_path(opt, "test_noisy.csv"), embeddings_to_csv(d.test_noisy));
        out << "homophily data: " << d.edges.size() << " edges over " << opt.nodes
            << " nodes in " << opt.out << "\n";
        return 0;
    }
    if (opt.dataset == "irt") {
        IrtConfig cfg;
        cfg.problems = opt.problems;
        cfg.students = opt.students;
        cfg.concepts = opt.concepts;
        cfg.eta = opt.eta;
        cfg.replay_up = opt.replay_up;
        cfg.replay_down = opt.replay_down;
        cfg.seed = opt.seed;
        const IrtData d = gen_irt(cfg);
        write_file(out_path(opt, "spec.hmln"), render_spec(d.spec));
        write_file(out_path(opt, "prerequisites.txt"),
                   evidence_to_text(d.spec, d.prerequisites));
        write_file(out_path(opt, "problems.csv"), problems_to_csv(d));
        for (const IrtVariant* v : {&d.base, &d.exchangeable, &d.preserving, &d.violating}) {
            write_file(out_path(opt, v->name + "_attempts.csv"), attempts_to_csv(v->log));
            write_file(out_path(opt, v->name + "_knowledge.csv"),
                       embeddings_to_csv(v->knowledge));
        }
        out << "irt data: " << d.base.log.size() << " attempts in " << opt.out << "\n";
        return 0;
    }
    throw ConfigError("unknown --dataset '" + opt.dataset + "' (homophily or irt)");
}

// ------------------------------------------------------------ export-milp

int run_export_milp(const RunOptions& opt, std::ostream& out) {
    need(opt.spec, "--spec");
    need(opt.evidence, "--evidence");
    need(opt.embeddings, "--embeddings");
    const Spec spec = load_spec(opt.spec);
    const Evidence ev = load_evidence(opt.evidence, spec);
    const EmbeddingStore store = load_embeddings(opt.embeddings);
    const WeightTable* wt = nullptr;
    WeightTable table;
    if (!opt.weights.empty()) {
        table = WeightTable::from_json(spec, read_file(opt.weights));
        wt = &table;
    }
    const GroundModel model = build_ground_model(spec, ev, store, wt);

    MapOptions free_opts;
    free_opts.segments = opt.segments;
    write_file(out_path(opt, "map_free.lp"),
               export_lp_format(encode_map(model, free_opts).problem));
    MapOptions pin_opts;
    pin_opts.fix_subsymbolic = true;
    pin_opts.segments = opt.segments;
    write_file(out_path(opt, "map_pinned.lp"),
               export_lp_format(encode_map(model, pin_opts).problem));
    out << "wrote map_free.lp and map_pinned.lp to " << opt.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- report

int run_report(const RunOptions& opt, std::ostream& out) {
    std::string path = opt.report;
    if (path.empty() && !opt.out.empty())
        path = (fs::path(opt.out) / "report.json").string();
    if (path.empty()) throw ConfigError("report needs --report or --out");

    ordered_json j = ordered_json::parse(read_file(path));

    out << "  #  samples  excl        pU        pL  verdict  property\n";
    int failed = 0;
    for (const auto& p : j.at("properties")) {
        const bool pass = p.at("pass").get<bool>();
        const bool vacuous = p.value("vacuous", false);
        if (!pass) ++failed;
        char line[128];
        std::snprintf(line, sizeof line, "%3d  %7zu  %4d  %8.4f  %8.4f  %-7s  ",
                      p.at("propertyIndex").get<int>(), p.at("samples").size(),
                      p.at("excluded").get<int>(), p.at("pU").get<double>(),
                      p.at("pL").get<double>(),
                      !pass      ? "FAIL"
                      : vacuous ? "pass*"
                                : "pass");
        out << line << p.at("property").get<std::string>() << "\n";
    }
    if (failed == 0)
        out << "all properties verified\n";
    else
        out << failed << " propert" << (failed == 1 ? "y" : "ies")
            << " FAILED verification\n";
    return 0;
}

}  // namespace

int run_command(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        if (opt.command == "ground") return run_ground(opt, out);
        if (opt.command == "learn") return run_learn(opt, out);
        if (opt.command == "verify") return run_verify(opt, out);
        if (opt.command == "gen-data") return run_gen_data(opt, out);
        if (opt.command == "export-milp") return run_export_milp(opt, out);
        if (opt.command == "report") return run_report(opt, out);
        err << "error: unknown command '" << opt.command << "'\n";
        return 2;
    } catch (const ResourceError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace hmlnv
