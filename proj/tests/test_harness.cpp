#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "json.hpp"
#include "rmt_transfer/dataset_io.hpp"
#include "rmt_transfer/errors.hpp"
#include "rmt_transfer/harness.hpp"
#include "rmt_transfer/rng.hpp"

using namespace rmt;

namespace {

const char* kSweep = R"({"kind": "sweep-alpha", "p": 200, "n": 40, "N": 400, "norm_mu": 1.0, "norm_perp": 1.0,
  "mixing": "spherical", "alpha_grid": [0, 1, 2], "beta_grid": [0.0, 0.7], "seeds": [3, 4], "trials": 2,
  "test_points": 500})";

std::filesystem::path temp_dir() {
    const auto d = std::filesystem::temp_directory_path() / "rmt_harness_test";
    std::filesystem::create_directories(d);
    return d;
}

std::string write_file(const std::string& name, const std::string& text) {
    const auto path = (temp_dir() / name).string();
    std::ofstream(path, std::ios::binary) << text;
    return path;
}

double cell_double(const ResultTable& t, std::size_t row, const std::string& col) {
    return std::get<double>(t.rows[row][t.column(col)]);
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RMT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, StrictKeys) {
    EXPECT_NO_THROW(parse_config(kSweep));
    EXPECT_THROW(parse_config(R"({"kind": "sweep-alpha", "p": 10, "n": 5, "N": 5, "alpha_grid": [0], "typo": 1})"),
                 ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "identity-suite", "p": 10, "n": 5, "N": 5, "alpha_grid": [0]})"),
                 ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "nope"})"), ConfigError);
    EXPECT_THROW(parse_config("{not json"), ConfigError);
    EXPECT_THROW(parse_config(kSweep, "distribution"), ConfigError);
}

TEST(Config, Validation) {
    const std::string base = R"({"kind": "sweep-alpha", "p": 10, "n": 5, "N": 5, )";
    EXPECT_THROW(parse_config(base + R"("alpha_grid": [0], "trials": 0})"), ConfigError);
    EXPECT_THROW(parse_config(base + R"("alpha_grid": []})"), ConfigError);
    EXPECT_THROW(parse_config(base + R"("alpha_grid": {"min": 0, "max": 1, "step": 0}})"), ConfigError);
    EXPECT_THROW(parse_config(base + R"("alpha_grid": [0], "seeds": []})"), ConfigError);
    EXPECT_THROW(parse_config(base + R"("alpha_grid": [0], "mixing": "other"})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "optimal-curve", "p_list": [100], "beta_grid": []})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"kind": "sweep-alpha", "p": 10, "n": 5, "alpha_grid": [0]})"), ConfigError);
}

TEST(Config, RangeGridAndDefaults) {
    const ExperimentConfig c =
        parse_config(R"({"kind": "sweep-alpha", "p": 10, "n": 5, "N": 5, "alpha_grid": {"min": -2, "max": 6, "step": 0.25}})");
    ASSERT_EQ(c.alphas.size(), 33u);
    EXPECT_EQ(c.alphas.front(), -2.0);
    EXPECT_EQ(c.alphas[9], 0.25);
    EXPECT_EQ(c.alphas.back(), 6.0);
    EXPECT_EQ(c.test_size(), 10000);
    EXPECT_EQ(c.t3_variant, T3Variant::SourceAveraged);
}

TEST(ResultTable, CsvHeaderAndMetadata) {
    const ResultTable t = run_sweep_alpha(parse_config(kSweep));
    const std::string csv = to_csv(t);
    EXPECT_EQ(csv.rfind("beta,point,alpha,theory_accuracy,empirical_mean,empirical_stderr,status\n", 0), 0u);
    EXPECT_NE(csv.find("# config_hash="), std::string::npos);
    EXPECT_NE(csv.find("# seeds=3;4\n"), std::string::npos);
    EXPECT_NE(csv.find("# t3_variant=source-averaged\n"), std::string::npos);
    const auto j = nlohmann::json::parse(to_json(t));
    EXPECT_EQ(j["rows"].size(), t.rows.size());
    EXPECT_EQ(j["metadata"]["seeds"], "3;4");
}

TEST(SweepAlpha, RowsAndZeroAlignment) {
    const ResultTable t = run_sweep_alpha(parse_config(kSweep));
    ASSERT_EQ(t.rows.size(), 2u * (3u + 4u));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& se = t.rows[i][t.column("empirical_stderr")];
        if (std::holds_alternative<double>(se)) EXPECT_GE(std::get<double>(se), 0.0);
    }
    // beta = 0: flat benefit, accuracy(alpha*) = accuracy(0).
    double star = 0, zero = 0;
    for (std::size_t i = 0; i < 7; ++i) {
        const auto& point = std::get<std::string>(t.rows[i][t.column("point")]);
        if (point == "alpha_star") star = cell_double(t, i, "theory_accuracy");
        if (point == "alpha_zero") zero = cell_double(t, i, "theory_accuracy");
    }
    EXPECT_EQ(star, zero);
}

TEST(SweepAlpha, ReproducibleAndThreadInvariant) {
    const ExperimentConfig c = parse_config(kSweep);
    const std::string serial = to_csv(run_sweep_alpha(c, {1, false}));
    EXPECT_EQ(serial, to_csv(run_sweep_alpha(c, {1, false})));
    EXPECT_EQ(serial, to_csv(run_sweep_alpha(c, {3, false})));
}

TEST(SweepAlpha, FixedSourceMode) {
    const ResultTable t = run_sweep_alpha(parse_config(kSweep), {1, true});
    EXPECT_EQ(t.meta("fixed_source"), "true");
}

TEST(Distribution, CentredHistogramWithoutSignal) {
    const ResultTable t = run_distribution(parse_config(
        R"({"kind": "distribution", "p": 100, "n": 50, "N": 200, "norm_mu": 0, "norm_perp": 0, "alpha_grid": [0],
            "beta_grid": [0.5], "trials": 10, "test_points": 400, "bins": 10})"));
    std::size_t summaries = 0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (std::get<std::string>(t.rows[i][t.column("record")]) != "summary") continue;
        ++summaries;
        EXPECT_EQ(cell_double(t, i, "theory_mean"), 0.0);
        EXPECT_LE(std::abs(cell_double(t, i, "empirical_mean")), 4.0 * cell_double(t, i, "mean_stderr"));
    }
    EXPECT_EQ(summaries, 2u);
    EXPECT_EQ(t.rows.size(), 2u * (1u + 10u));
}

TEST(OptimalCurve, VanishesAtZeroAlignmentAndGrowsWithDimension) {
    // Under the default variance closed form the high-dimensional curve lies
    // above the low-dimensional one up to moderate alignment only.
    const ResultTable t = run_optimal_curve(parse_config(
        R"({"kind": "optimal-curve", "p_list": [100, 2000], "mixing": "spherical", "beta_grid": [0, 0.5, 0.7]})"));
    ASSERT_EQ(t.rows.size(), 6u);
    EXPECT_EQ(cell_double(t, 0, "alpha_star"), 0.0);
    EXPECT_EQ(cell_double(t, 3, "alpha_star"), 0.0);
    EXPECT_GT(cell_double(t, 4, "alpha_star"), cell_double(t, 1, "alpha_star"));
    EXPECT_GT(cell_double(t, 5, "alpha_star"), cell_double(t, 2, "alpha_star"));
    for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_EQ(std::get<std::int64_t>(t.rows[i][t.column("monotone")]), 1);
}

TEST(OptimalCurve, ScaledNoiseVarianceAmplifiesAtHighAlignment) {
    const std::string cfg = R"({"kind": "optimal-curve", "p_list": [100, 2000], "mixing": "spherical",
        "beta_grid": [0.9], "t3_variant": ")";
    const ResultTable main = run_optimal_curve(parse_config(cfg + R"(scaled-noise"})"));
    EXPECT_GT(cell_double(main, 1, "alpha_star"), cell_double(main, 0, "alpha_star"));
    // The simulation-matched variant reverses the order at this end of the curve.
    const ResultTable avg = run_optimal_curve(parse_config(cfg + R"(source-averaged"})"));
    EXPECT_LT(cell_double(avg, 1, "alpha_star"), cell_double(avg, 0, "alpha_star"));
}

TEST(RealData, SyntheticPairRecoversAlignment) {
    RandomSource r(77);
    const MeanPair m = make_orthogonal_means(100, 1.0, 1.0, r);
    const auto src = (temp_dir() / "src.csv").string();
    const auto tgt = (temp_dir() / "tgt.bin").string();
    write_dataset_csv(sample_class_data(8000, m.mu, r), src);
    write_dataset_binary(sample_class_data(16000, mu_beta(m, 0.8, MixingMode::SphericalInterp), r), tgt);
    const std::string cfg = write_file("real.json", R"({"kind": "real-data", "source_path": "src.csv",
        "target_path": "tgt.bin", "n": 40, "seeds": [1, 2, 3]})");
    const ResultTable t = run_real_data(load_config(cfg));
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_NEAR(cell_double(t, 0, "beta_hat"), 0.8, 0.05);
    EXPECT_EQ(std::get<std::string>(t.rows[2][t.column("point")]), "alpha_star");
}

TEST(RealData, MissingFileIsIoError) {
    const std::string cfg = write_file("missing.json", R"({"kind": "real-data", "source_path": "none.csv",
        "target_path": "none.csv", "n": 4})");
    EXPECT_THROW(run_real_data(load_config(cfg)), IoError);
}

TEST(MultiSource, IdenticalSourcesAreSymmetric) {
    const ResultTable t = run_multi_source(parse_config(
        R"({"kind": "multi-source", "p": 200, "n": 40, "beta": 0.8, "mixing": "spherical", "test_points": 500,
            "sources": [{"beta": 0.8, "norm_mu": 1, "N": 1000}, {"beta": 0.8, "norm_mu": 1, "N": 1000}]})"));
    ASSERT_EQ(t.rows.size(), 4u);
    const std::string alpha = std::get<std::string>(t.rows[3][t.column("alpha")]);
    const auto sep = alpha.find(';');
    EXPECT_NEAR(std::stod(alpha.substr(0, sep)), std::stod(alpha.substr(sep + 1)), 1e-6);
}

TEST(IdentitySuite, NegativeControlFails) {
    const std::string base = R"({"kind": "identity-suite", "p": 100, "n": 50, "N": 200, "norm_mu": 0, "norm_perp": 0)";
    EXPECT_EQ(run_identity_suite(parse_config(base + "}")).meta("suite_pass"), "true");
    EXPECT_EQ(run_identity_suite(parse_config(base + R"(, "delta_offset": 0.1})")).meta("suite_pass"), "false");
}

TEST(Cli, ExitCodes) {
    const std::string good = write_file("cli_good.json", R"({"kind": "identity-suite", "p": 50, "n": 25, "N": 100})");
    const std::string bad = write_file("cli_bad.json", R"({"kind": "identity-suite", "p": 50, "n": 25, "N": 100, "x": 1})");
    const std::string io = write_file("cli_io.json", R"({"kind": "real-data", "source_path": "none.csv",
        "target_path": "none.csv", "n": 4})");
    const std::string out = (temp_dir() / "cli_out.csv").string();
    EXPECT_EQ(run_cli("identity-suite --config " + good + " --out " + out), 0);
    EXPECT_TRUE(std::filesystem::exists(out));
    EXPECT_EQ(run_cli("identity-suite --config " + bad), 2);
    EXPECT_EQ(run_cli("sweep-alpha --config " + good), 2);
    EXPECT_EQ(run_cli("real-data --config " + io), 4);
    EXPECT_EQ(run_cli("identity-suite"), 2);
}
