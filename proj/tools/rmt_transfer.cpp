// rmt-transfer: runs one experiment from a JSON config and writes CSV or JSON.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rmt_transfer/errors.hpp"
#include "rmt_transfer/harness.hpp"

namespace {

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const rmt::ConfigError*>(&e) || dynamic_cast<const rmt::DomainError*>(&e) ||
        dynamic_cast<const rmt::ShapeError*>(&e))
        return 2;
    if (dynamic_cast<const rmt::RegimeError*>(&e) || dynamic_cast<const rmt::DegenerateError*>(&e) ||
        dynamic_cast<const rmt::ConvergenceError*>(&e))
        return 3;
    if (dynamic_cast<const rmt::IoError*>(&e)) return 4;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-matrix transfer learning experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    int threads = 1;
    bool fixed_source = false;
    bool json = false;

    const char* kinds[][2] = {{"sweep-alpha", "accuracy versus alpha, theory and Monte Carlo"},
                              {"distribution", "class-conditional score histograms with Gaussian overlay"},
                              {"optimal-curve", "alpha* versus beta for a list of dimensions"},
                              {"real-data", "plug-in transfer between two dataset files"},
                              {"multi-source", "mixture of several source classifiers"},
                              {"identity-suite", "deterministic-equivalent identity checks"}};
    for (const auto& k : kinds) {
        CLI::App* sub = app.add_subcommand(k[0], k[1]);
        sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_path, "output file (default: config 'output' or stdout)");
        sub->add_option("--threads", threads, "maximum worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--fixed-source", fixed_source, "condition on one pre-trained source classifier");
        sub->add_flag("--json", json, "write a JSON object instead of CSV");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string kind = app.get_subcommands().front()->get_name();
    try {
        const rmt::ExperimentConfig config = rmt::load_config(config_path, kind);
        rmt::RunOptions options;
        options.threads = threads;
        options.fixed_source = fixed_source;
        const rmt::ResultTable table = rmt::run_experiment(config, options);
        const std::string text = json ? rmt::to_json(table) : rmt::to_csv(table);

        const std::string target = out_path.empty() ? config.output : out_path;
        if (target.empty() || target == "-") {
            std::cout << text;
            std::cout.flush();
        } else {
            std::ofstream f(target, std::ios::binary);
            if (!f) throw rmt::IoError("cannot open output file '" + target + "'");
            f << text;
            if (!f) throw rmt::IoError("failed writing output file '" + target + "'");
        }
    } catch (const std::exception& e) {
        std::cerr << "rmt-transfer: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return 0;
}
