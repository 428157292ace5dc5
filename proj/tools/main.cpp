// hmln: ground / learn / verify specification models over embeddings.

#include <iostream>

#include "CLI11.hpp"

#include "hmlnv/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hybrid Markov logic specification learning and verification"};
    app.require_subcommand(1);

    hmlnv::RunOptions opt;

    auto add_model_flags = [&](CLI::App* c, bool spec_required) {
        c->add_option("--spec", opt.spec, "specification file")->required(spec_required);
        c->add_option("--evidence", opt.evidence, "observed literal file");
        c->add_option("--embeddings", opt.embeddings, "embedding CSV");
        c->add_option("--seed", opt.seed, "RNG seed");
        c->add_option("--out", opt.out, "output directory");
    };

    CLI::App* ground = app.add_subcommand("ground", "grounding statistics");
    add_model_flags(ground, true);

    CLI::App* learn = app.add_subcommand("learn", "learn shared weights");
    add_model_flags(learn, true);
    learn->add_option("--alpha", opt.alpha, "hypercube cap");
    learn->add_option("--lr", opt.lr, "learning rate");
    learn->add_option("--epochs", opt.epochs, "gradient steps");
    learn->add_option("--segments", opt.segments, "piecewise segments");

    CLI::App* verify = app.add_subcommand("verify", "verify test embeddings");
    add_model_flags(verify, true);
    verify->add_option("--test-embeddings", opt.test_embeddings, "test embedding CSV")
        ->required();
    verify->add_option("--weights", opt.weights, "learned weight table")->required();
    verify->add_option("--gamma", opt.gamma, "significance level");
    verify->add_option("--window", opt.window, "per-sample sub-model size");
    verify->add_option("--min-samples", opt.min_samples, "minimum bound samples");
    verify->add_option("--delta-u", [&](const std::vector<std::string>& v) {
        opt.delta_u = std::stod(v.at(0));
        return true;
    }, "upper mean-difference gate");
    verify->add_option("--delta-l", [&](const std::vector<std::string>& v) {
        opt.delta_l = std::stod(v.at(0));
        return true;
    }, "lower mean-difference gate");

    CLI::App* gen = app.add_subcommand("gen-data", "synthesize benchmark data");
    gen->add_option("--dataset", opt.dataset, "homophily | irt")->required();
    gen->add_option("--out", opt.out, "output directory")->required();
    gen->add_option("--seed", opt.seed, "RNG seed");
    gen->add_option("--nodes", opt.nodes, "homophily: node count");
    gen->add_option("--classes", opt.classes, "homophily: class count");
    gen->add_option("--p-in", opt.p_in, "homophily: intra-class edge probability");
    gen->add_option("--p-out", opt.p_out, "homophily: inter-class edge probability");
    gen->add_option("--embed-dim", opt.embed_dim, "homophily: embedding dimension");
    gen->add_option("--noise-sigma", opt.noise_sigma, "homophily: noise scale");
    gen->add_option("--problems", opt.problems, "irt: problem count");
    gen->add_option("--students", opt.students, "irt: student count");
    gen->add_option("--concepts", opt.concepts, "irt: concept count");
    gen->add_option("--eta", opt.eta, "irt: skill growth per attempt");
    gen->add_option("--replay-up", opt.replay_up, "irt: replay gain on correct");
    gen->add_option("--replay-down", opt.replay_down, "irt: replay drop on wrong");

    CLI::App* exp = app.add_subcommand("export-milp", "write MAP problems as LP files");
    add_model_flags(exp, true);
    exp->add_option("--weights", opt.weights, "learned weight table");
    exp->add_option("--segments", opt.segments, "piecewise segments");

    CLI::App* report = app.add_subcommand("report", "summarize a verification report");
    report->add_option("--report", opt.report, "report JSON path");
    report->add_option("--out", opt.out, "directory holding report.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    opt.command = app.get_subcommands().at(0)->get_name();
    return hmlnv::run_command(opt, std::cout, std::cerr);
}
