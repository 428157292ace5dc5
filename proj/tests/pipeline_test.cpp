#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "hmlnv/data.hpp"
#include "hmlnv/datagen.hpp"
#include "hmlnv/hypercube.hpp"
#include "hmlnv/pipeline.hpp"
#include "hmlnv/spec.hpp"

using namespace hmlnv;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = 0;
    std::string out;
    std::string err;
};

RunResult run(const RunOptions& opt) {
    std::ostringstream out, err;
    RunResult r;
    r.code = run_command(opt, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hmlnv_pipe_" + name);
    fs::remove_all(p);
    return p;
}

std::set<std::string> dir_names(const fs::path& p) {
    std::set<std::string> names;
    if (fs::exists(p))
        for (const auto& e : fs::directory_iterator(p))
            names.insert(e.path().filename().string());
    return names;
}

// Small homophily corpus most cases below share.
RunOptions gen_opts(const fs::path& dir) {
    RunOptions o;
    o.command = "gen-data";
    o.dataset = "homophily";
    o.nodes = 8;
    o.classes = 2;
    o.p_in = 0.9;
    o.p_out = 0.05;
    o.embed_dim = 2;
    o.noise_sigma = 1.0;
    o.seed = 3;
    o.out = dir.string();
    return o;
}

}  // namespace

TEST_CASE("gen-data writes the full corpus deterministically") {
    const fs::path d1 = fresh_dir("gen1"), d2 = fresh_dir("gen2");
    CHECK(run(gen_opts(d1)).code == 0);
    CHECK(run(gen_opts(d2)).code == 0);

    const std::set<std::string> expect = {
        "spec.hmln",       "neighbors.txt", "labels.txt",     "train.txt",
        "spec_embeddings.csv", "test_clean.csv", "test_noisy.csv"};
    CHECK(dir_names(d1) == expect);
    for (const std::string& name : expect)
        CHECK(read_file((d1 / name).string()) == read_file((d2 / name).string()));

    // The rendered spec must parse back.
    const Spec spec = parse_spec_text(read_file((d1 / "spec.hmln").string()));
    CHECK(spec.properties.size() == 2);
    CHECK(spec.domains[0].constants.size() == 8);

    RunOptions irt;
    irt.command = "gen-data";
    irt.dataset = "irt";
    irt.problems = 6;
    irt.students = 4;
    irt.concepts = 2;
    irt.seed = 9;
    irt.out = fresh_dir("gen_irt").string();
    CHECK(run(irt).code == 0);
    const auto names = dir_names(irt.out);
    CHECK(names.count("spec.hmln"));
    CHECK(names.count("prerequisites.txt"));
    CHECK(names.count("problems.csv"));
    for (const char* v : {"base", "exchangeable", "preserving", "violating"}) {
        CHECK(names.count(std::string(v) + "_attempts.csv"));
        CHECK(names.count(std::string(v) + "_knowledge.csv"));
    }

    RunOptions bogus = irt;
    bogus.dataset = "mystery";
    bogus.out = fresh_dir("gen_bogus").string();
    const RunResult r = run(bogus);
    CHECK(r.code == 2);
    CHECK(r.err.find("error:") == 0);
    CHECK(dir_names(bogus.out).empty());  // nothing half-written
}

TEST_CASE("ground reports the model shape, to file or stream") {
    const fs::path data = fresh_dir("ground_data");
    REQUIRE(run(gen_opts(data)).code == 0);

    RunOptions g;
    g.command = "ground";
    g.spec = (data / "spec.hmln").string();
    g.evidence = (data / "train.txt").string();
    g.embeddings = (data / "spec_embeddings.csv").string();
    const RunResult streamed = run(g);  // no --out: JSON goes to the stream
    CHECK(streamed.code == 0);
    const auto js = nlohmann::json::parse(streamed.out);
    CHECK(js.at("atoms").at("total").get<int>() > 0);
    CHECK(js.at("atoms").at("subsymbolic").get<int>() == 64);
    CHECK(js.at("atoms").at("query").get<int>() == 0);  // train.txt closes Class
    CHECK(js.at("groundings").get<int>() > 0);
    CHECK(js.at("properties").size() == 2);

    const fs::path outd = fresh_dir("ground_out");
    g.out = outd.string();
    CHECK(run(g).code == 0);
    CHECK(dir_names(outd) == std::set<std::string>{"ground.json"});
    CHECK(nlohmann::json::parse(read_file((outd / "ground.json").string())) == js);

    // With only the neighbor evidence the Class atoms stay free.
    g.evidence = (data / "neighbors.txt").string();
    g.out.clear();
    const auto open = nlohmann::json::parse(run(g).out);
    CHECK(open.at("atoms").at("query").get<int>() == 16);
}

TEST_CASE("learn produces weights and a curve, zero epochs stay zero") {
    const fs::path data = fresh_dir("learn_data");
    REQUIRE(run(gen_opts(data)).code == 0);

    RunOptions l;
    l.command = "learn";
    l.spec = (data / "spec.hmln").string();
    l.evidence = (data / "train.txt").string();
    l.embeddings = (data / "spec_embeddings.csv").string();
    l.alpha = 4;
    l.epochs = 3;
    l.lr = 0.05;
    const fs::path w1 = fresh_dir("learn_out1"), w2 = fresh_dir("learn_out2");
    l.out = w1.string();
    const RunResult r = run(l);
    CHECK(r.code == 0);
    CHECK(dir_names(w1) == std::set<std::string>{"curve.csv", "weights.json"});

    const Spec spec = parse_spec_text(read_file(l.spec));
    const WeightTable wt =
        WeightTable::from_json(spec, read_file((w1 / "weights.json").string()));
    CHECK(wt.n_cubes() >= 1);
    bool moved = false;
    for (double p : wt.params()) moved = moved || p != 0.0;
    CHECK(moved);

    const std::string curve = read_file((w1 / "curve.csv").string());
    CHECK(curve.rfind("epoch,mapFree,mapPinned,gradNorm\n", 0) == 0);
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 1 + l.epochs);

    // Identical bytes on a rerun.
    l.out = w2.string();
    CHECK(run(l).code == 0);
    CHECK(read_file((w1 / "weights.json").string()) ==
          read_file((w2 / "weights.json").string()));
    CHECK(read_file((w1 / "curve.csv").string()) ==
          read_file((w2 / "curve.csv").string()));

    RunOptions frozen = l;
    frozen.epochs = 0;
    frozen.out = fresh_dir("learn_zero").string();
    CHECK(run(frozen).code == 0);
    const WeightTable zero = WeightTable::from_json(
        spec, read_file((fs::path(frozen.out) / "weights.json").string()));
    for (double p : zero.params()) CHECK(p == 0.0);
    const std::string flat =
        read_file((fs::path(frozen.out) / "curve.csv").string());
    CHECK(std::count(flat.begin(), flat.end(), '\n') == 1);  // header only
}

TEST_CASE("verify pipeline passes against itself and fails a drifted store") {
    const fs::path data = fresh_dir("verify_data");
    REQUIRE(run(gen_opts(data)).code == 0);

    RunOptions l;
    l.command = "learn";
    l.spec = (data / "spec.hmln").string();
    l.evidence = (data / "train.txt").string();
    l.embeddings = (data / "spec_embeddings.csv").string();
    l.alpha = 4;
    l.epochs = 3;
    l.lr = 0.05;
    l.out = fresh_dir("verify_weights").string();
    REQUIRE(run(l).code == 0);

    RunOptions v;
    v.command = "verify";
    v.spec = l.spec;
    v.evidence = (data / "neighbors.txt").string();
    v.embeddings = l.embeddings;
    v.test_embeddings = l.embeddings;  // the spec store verifies itself
    v.weights = (fs::path(l.out) / "weights.json").string();
    v.min_samples = 5;
    v.seed = 4;
    const fs::path pass_dir = fresh_dir("verify_pass");
    v.out = pass_dir.string();
    const RunResult ok = run(v);
    CHECK(ok.code == 0);
    CHECK(ok.out.find("verification passed") != std::string::npos);
    CHECK(dir_names(pass_dir) == std::set<std::string>{"bounds.csv", "report.json"});
    const auto rj = nlohmann::json::parse(read_file((pass_dir / "report.json").string()));
    CHECK(rj.at("pass") == true);
    const std::string bounds = read_file((pass_dir / "bounds.csv").string());
    CHECK(bounds.rfind("propertyIndex,cubeId,grounding,store,omegaU,omegaL\n", 0) == 0);

    // Byte-identical on a rerun with the same seed.
    const fs::path again = fresh_dir("verify_pass2");
    v.out = again.string();
    REQUIRE(run(v).code == 0);
    CHECK(read_file((again / "report.json").string()) ==
          read_file((pass_dir / "report.json").string()));
    CHECK(read_file((again / "bounds.csv").string()) == bounds);

    // Shift every test embedding far away: verification must fail with code 1
    // but still write its artifacts.
    EmbeddingStore shifted = load_embeddings(l.embeddings);
    EmbeddingStore far;
    for (const auto& [key, vec] : shifted.all()) {
        std::vector<double> v2 = vec;
        for (double& x : v2) x += 4.0 * (key.back() % 3 + 1);
        far.put(key, v2);
    }
    const fs::path fail_dir = fresh_dir("verify_fail");
    const std::string far_csv = (fail_dir / "far.csv").string();
    write_file(far_csv, embeddings_to_csv(far));
    v.test_embeddings = far_csv;
    v.out = fail_dir.string();
    const RunResult bad = run(v);
    CHECK(bad.code == 1);
    CHECK(bad.out.find("verification FAILED") != std::string::npos);
    const auto fj = nlohmann::json::parse(read_file((fail_dir / "report.json").string()));
    CHECK(fj.at("pass") == false);

    // The report command renders both verdicts.
    RunOptions rep;
    rep.command = "report";
    rep.report = (pass_dir / "report.json").string();
    const RunResult shown = run(rep);
    CHECK(shown.code == 0);
    CHECK(shown.out.find("all properties verified") != std::string::npos);
    rep.report = (fail_dir / "report.json").string();
    const RunResult shown_bad = run(rep);
    CHECK(shown_bad.code == 0);  // rendering a failed report is not an error
    CHECK(shown_bad.out.find("FAIL") != std::string::npos);
    rep.report.clear();
    rep.out = fail_dir.string();  // falls back to <out>/report.json
    CHECK(run(rep).out == shown_bad.out);
}

TEST_CASE("input problems exit with code 2 and leave no partial files") {
    RunOptions bad;
    bad.command = "frobnicate";
    RunResult r = run(bad);
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown command") != std::string::npos);

    bad.command = "learn";  // missing every required flag
    r = run(bad);
    CHECK(r.code == 2);
    CHECK(r.err.find("--spec") != std::string::npos);

    const fs::path data = fresh_dir("err_data");
    REQUIRE(run(gen_opts(data)).code == 0);
    RunOptions v;
    v.command = "verify";
    v.spec = (data / "spec.hmln").string();
    v.evidence = (data / "neighbors.txt").string();
    v.embeddings = (data / "spec_embeddings.csv").string();
    v.test_embeddings = (data / "no_such_file.csv").string();
    v.weights = (data / "missing_weights.json").string();
    const fs::path outd = fresh_dir("err_out");
    v.out = outd.string();
    r = run(v);
    CHECK(r.code == 2);
    CHECK(r.err.find("error:") == 0);
    CHECK(dir_names(outd).empty());  // failed before anything was written

    RunOptions rep;
    rep.command = "report";
    rep.report = (outd / "report.json").string();
    CHECK(run(rep).code == 2);
    rep.report.clear();
    CHECK(run(rep).code == 2);  // neither --report nor --out given
}

TEST_CASE("a diverging learning rate hits the resource guard with exit 3") {
    const fs::path data = fresh_dir("abort_data");
    REQUIRE(run(gen_opts(data)).code == 0);

    RunOptions l;
    l.command = "learn";
    l.spec = (data / "spec.hmln").string();
    l.evidence = (data / "train.txt").string();
    l.embeddings = (data / "spec_embeddings.csv").string();
    l.alpha = 2;
    l.epochs = 50;
    l.lr = 1e30;  // every surviving gradient step lands beyond the abort bound
    const fs::path outd = fresh_dir("abort_out");
    l.out = outd.string();
    const RunResult r = run(l);
    CHECK(r.code == 3);
    CHECK(r.err.find("error:") == 0);
    CHECK(dir_names(outd).empty());  // aborted before any artifact was written
}

TEST_CASE("export-milp writes both conditioned programs") {
    const fs::path data = fresh_dir("export_data");
    REQUIRE(run(gen_opts(data)).code == 0);

    RunOptions e;
    e.command = "export-milp";
    e.spec = (data / "spec.hmln").string();
    e.evidence = (data / "neighbors.txt").string();
    e.embeddings = (data / "spec_embeddings.csv").string();
    e.segments = 4;
    const fs::path outd = fresh_dir("export_out");
    e.out = outd.string();
    CHECK(run(e).code == 0);
    CHECK(dir_names(outd) == std::set<std::string>{"map_free.lp", "map_pinned.lp"});

    const std::string free_lp = read_file((outd / "map_free.lp").string());
    const std::string pinned_lp = read_file((outd / "map_pinned.lp").string());
    for (const std::string* lp : {&free_lp, &pinned_lp}) {
        CHECK(lp->find("Maximize") != std::string::npos);
        CHECK(lp->find("Subject To") != std::string::npos);
        CHECK(lp->rfind("End\n") == lp->size() - 4);
    }
    CHECK(free_lp != pinned_lp);  // free model carries the piecewise blocks
    CHECK(free_lp.find("Binary") != std::string::npos);

    const fs::path outd2 = fresh_dir("export_out2");
    e.out = outd2.string();
    CHECK(run(e).code == 0);
    CHECK(read_file((outd2 / "map_free.lp").string()) == free_lp);
}
