#pragma once

// The command layer behind the CLI binary: each command loads its inputs,
// runs the corresponding library routine, and writes its artifacts into the
// --out directory.  Files are written to a temporary sibling and renamed into
// place, so an interrupted run never leaves a partial file behind.
//
// Exit codes: 0 success, 1 verification failed (verify only), 2 input error,
// 3 resource limit.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace hmlnv {

struct RunOptions {
    std::string command;  // ground | learn | verify | gen-data | export-milp | report

    std::string spec;
    std::string evidence;
    std::string embeddings;
    std::string test_embeddings;
    std::string weights;
    std::string out;     // output directory, created when missing
    std::string report;  // existing report JSON (report command)

    int alpha = 200;
    double lr = 0.01;
    double gamma = 0.05;
    std::uint64_t seed = 0;
    int epochs = 100;
    int segments = 16;

    // verify
    int window = 0;  // per-sample sub-model size, 0 = full model
    int min_samples = 8;
    std::optional<double> delta_u, delta_l;

    // gen-data
    std::string dataset;  // homophily | irt
    int nodes = 60;
    int classes = 3;
    double p_in = 0.1;
    double p_out = 0.01;
    int embed_dim = 4;
    double noise_sigma = 1.0;
    int problems = 50;
    int students = 1000;
    int concepts = 2;
    double eta = 0.1;
    double replay_up = 0.1;
    double replay_down = 0.05;
};

// Runs one command.  Human-readable progress goes to `out`, diagnostics to
// `err`; returns the process exit code.
int run_command(const RunOptions& opt, std::ostream& out, std::ostream& err);

// Atomic write: parent directories created, content lands under a temporary
// name and is renamed over `path`.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace hmlnv
