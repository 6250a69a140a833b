#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rmt_transfer/gmm_data.hpp"
#include "rmt_transfer/theory.hpp"

namespace rmt {

struct SourceTask {
    double beta;
    double norm_mu;
    int N;
    double gamma_tilde;
};

struct ExperimentConfig {
    std::string kind;
    int p = 0;
    int n = 0;
    int N = 0;
    double norm_mu = 1.0;
    double norm_perp = 1.0;
    double beta = 0.5;
    double gamma = 1.0;
    double gamma_tilde = 1.0;
    MixingMode mixing = MixingMode::Additive;
    std::vector<double> alphas;
    std::vector<double> betas;
    std::vector<std::uint64_t> seeds{1};
    int trials = 1;
    std::string output;
    T3Variant t3_variant = T3Variant::SourceAveraged;
    std::vector<int> p_list;
    std::string source_path;
    std::string target_path;
    std::vector<SourceTask> sources;
    int bins = 40;
    int test_points = 0;  // 0 selects max(10 n, 10^4)
    double delta_offset = 0.0;
    bool fixed_source = false;
    std::string canonical;  // normalised JSON text, hashed into the output metadata

    ProblemSpec problem(double beta_value) const;
    int test_size() const;
};

// Strict: unknown keys, wrong types and keys foreign to the kind raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const std::string& kind_hint = "");
ExperimentConfig load_config(const std::string& path, const std::string& kind_hint = "");

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::pair<std::string, std::string>> metadata;

    void add_row(std::vector<Cell> row);
    std::size_t column(const std::string& name) const;
    const std::string& meta(const std::string& key) const;
};

std::string to_csv(const ResultTable& table);
std::string to_json(const ResultTable& table);

struct RunOptions {
    int threads = 1;
    bool fixed_source = false;
};

ResultTable run_sweep_alpha(const ExperimentConfig& config, const RunOptions& options = {});
ResultTable run_distribution(const ExperimentConfig& config, const RunOptions& options = {});
ResultTable run_optimal_curve(const ExperimentConfig& config, const RunOptions& options = {});
ResultTable run_real_data(const ExperimentConfig& config, const RunOptions& options = {});
ResultTable run_multi_source(const ExperimentConfig& config, const RunOptions& options = {});
ResultTable run_identity_suite(const ExperimentConfig& config, const RunOptions& options = {});
ResultTable run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Plug-in transfer on one task pair: estimate on (source, pool), train on a
// size-n subsample of the pool, evaluate alpha in {0, 1, plug-in} on test.
struct TransferOutcome {
    double beta_hat;
    double alpha_star;
    bool no_transfer;
    double acc_zero;
    double acc_one;
    double acc_star;
};

TransferOutcome run_transfer_pipeline(const LabeledDataset& source, const LabeledDataset& pool,
                                      const LabeledDataset& test, int n, double gamma, double gamma_tilde,
                                      RandomSource& rng, T3Variant variant = T3Variant::SourceAveraged);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace rmt
