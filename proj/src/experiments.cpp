#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>

#include "rmt_transfer/dataset_io.hpp"
#include "rmt_transfer/det_equiv.hpp"
#include "rmt_transfer/errors.hpp"
#include "rmt_transfer/estimation.hpp"
#include "rmt_transfer/harness.hpp"
#include "rmt_transfer/multi_source.hpp"
#include "rmt_transfer/parallel.hpp"
#include "rmt_transfer/ridge.hpp"

namespace rmt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kFixedSourceStream = 0xF1ED000000000000ULL;
constexpr std::uint64_t kSplitStream = 0x5B117000000000ULL;
constexpr Eigen::Index kTestBlock = 2048;

std::uint64_t trial_stream(std::size_t group, int trial) {
    return (static_cast<std::uint64_t>(group + 1) << 32) | static_cast<std::uint32_t>(trial);
}

struct TrialId {
    std::uint64_t seed;
    int index;
};

std::vector<TrialId> enumerate_trials(const ExperimentConfig& c) {
    std::vector<TrialId> out;
    for (std::uint64_t s : c.seeds)
        for (int t = 0; t < c.trials; ++t) out.push_back({s, t});
    return out;
}

std::string join(const std::vector<std::uint64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
}

std::string join(const Eigen::VectorXd& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_double(v[i]);
    return s;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

ResultTable make_table(const ExperimentConfig& c, std::vector<std::string> columns) {
    ResultTable t;
    t.columns = std::move(columns);
    t.metadata = {{"kind", c.kind},
                  {"config_hash", hex64(fnv1a64(c.canonical))},
                  {"seeds", join(c.seeds)},
                  {"t3_variant", to_string(c.t3_variant)}};
    return t;
}

struct MeanStderr {
    double mean;
    double stderr_;
};

MeanStderr mean_stderr(const std::vector<double>& x) {
    if (x.empty()) return {kNaN, kNaN};
    const double n = static_cast<double>(x.size());
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    if (x.size() < 2) return {m, kNaN};
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return {m, std::sqrt(ss / (n - 1.0) / n)};
}

Cell num(double v) { return std::isfinite(v) ? Cell(v) : Cell(std::monostate{}); }

// Balanced test set drawn in column blocks; the draw order equals one call to
// sample_class_data with the full size.
class TestStream {
public:
    TestStream(int total, const Eigen::VectorXd& mean, RandomSource& rng) : total_(total), mean_(mean), rng_(rng) {}

    bool next(LabeledDataset& block) {
        if (pos_ >= total_) return false;
        const Eigen::Index count = std::min<Eigen::Index>(kTestBlock, total_ - pos_);
        const Eigen::Index negatives = (total_ + 1) / 2;
        Eigen::MatrixXd x(mean_.size(), count);
        rng_.fill_normal(x);
        Eigen::VectorXd y(count);
        for (Eigen::Index j = 0; j < count; ++j) {
            y[j] = pos_ + j < negatives ? -1.0 : 1.0;
            x.col(j) += y[j] * mean_;
        }
        pos_ += count;
        block = LabeledDataset(std::move(x), std::move(y));
        return true;
    }

private:
    Eigen::Index total_;
    Eigen::Index pos_ = 0;
    const Eigen::VectorXd& mean_;
    RandomSource& rng_;
};

// Accuracy of w0 + alpha * direction for every alpha, on a fresh test set.
std::vector<double> sweep_accuracies(const FineTuneDirections& d, const std::vector<double>& alphas,
                                     const Eigen::VectorXd& target_mean, int test_size, RandomSource& rng) {
    std::vector<std::int64_t> correct(alphas.size(), 0);
    TestStream stream(test_size, target_mean, rng);
    LabeledDataset block;
    while (stream.next(block)) {
        const Eigen::VectorXd s0 = block.features.transpose() * d.w0;
        const Eigen::VectorXd su = block.features.transpose() * d.direction;
        for (std::size_t a = 0; a < alphas.size(); ++a)
            for (Eigen::Index j = 0; j < s0.size(); ++j)
                correct[a] += ((s0[j] + alphas[a] * su[j] >= 0.0 ? 1.0 : -1.0) == block.labels[j]) ? 1 : 0;
    }
    std::vector<double> out(alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a) out[a] = static_cast<double>(correct[a]) / test_size;
    return out;
}

struct FixedSource {
    MeanPair means;
    LinearClassifier source;
};

FixedSource make_fixed_source(const ExperimentConfig& c) {
    RandomSource rng = RandomSource(c.seeds.front()).substream(kFixedSourceStream);
    FixedSource f;
    f.means = make_orthogonal_means(c.p, c.norm_mu, c.norm_perp, rng);
    f.source = train_ridge(sample_class_data(c.N, f.means.mu, rng), c.gamma_tilde);
    return f;
}

// Theory for one beta: source-averaged moments for a fresh source, or the
// arbitrary-source moments conditional on a fixed one.
struct BetaTheory {
    std::optional<MomentCoefficients> moments;
    std::optional<double> alpha_star;
    std::optional<double> alpha_worst;
    std::string error;
    std::string star_error;
    std::string worst_error;
};

BetaTheory beta_theory(const ExperimentConfig& c, double beta, const FixedSource* fixed) {
    BetaTheory t;
    try {
        const ProblemSpec spec = c.problem(beta);
        const ScalarContext ctx = build_context(spec);
        if (fixed) {
            const Eigen::VectorXd mb = mu_beta(fixed->means, beta, c.mixing);
            const SourceSummary src{fixed->source.weights.dot(mb), fixed->source.weights.squaredNorm()};
            t.moments = arbitrary_moments(ctx, spec, src);
            try {
                t.alpha_star = optimal_alpha_arbitrary(ctx, spec, src);
            } catch (const Error& e) {
                t.star_error = e.what();
            }
            try {
                t.alpha_worst = worst_alpha_arbitrary(ctx, spec, src);
            } catch (const Error& e) {
                t.worst_error = e.what();
            }
        } else {
            t.moments = ridge_moments(ctx, spec, c.t3_variant);
            try {
                t.alpha_star = optimal_alpha(ctx, spec, c.t3_variant).alpha;
            } catch (const Error& e) {
                t.star_error = e.what();
            }
            try {
                t.alpha_worst = worst_alpha(ctx, spec);
            } catch (const Error& e) {
                t.worst_error = e.what();
            }
        }
    } catch (const RegimeError& e) {
        t.error = e.what();
    }
    return t;
}

double accuracy_or_nan(const BetaTheory& t, double alpha, std::string& status) {
    if (!t.moments) {
        status = t.error;
        return kNaN;
    }
    try {
        return theoretical_accuracy(stats_at(*t.moments, alpha));
    } catch (const RegimeError& e) {
        status = e.what();
        return kNaN;
    }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::vector<Eigen::Index> sample_without_replacement(Eigen::Index population, Eigen::Index k, RandomSource& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(population));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(population - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

}  // namespace

ResultTable run_sweep_alpha(const ExperimentConfig& c, const RunOptions& o) {
    const bool fixed_mode = o.fixed_source || c.fixed_source;
    ResultTable table = make_table(c, {"beta", "point", "alpha", "theory_accuracy", "empirical_mean",
                                       "empirical_stderr", "status"});
    const std::vector<TrialId> trials = enumerate_trials(c);
    std::optional<FixedSource> fixed;
    if (fixed_mode) fixed = make_fixed_source(c);

    for (std::size_t bi = 0; bi < c.betas.size(); ++bi) {
        const double beta = c.betas[bi];
        const BetaTheory theory = beta_theory(c, beta, fixed ? &*fixed : nullptr);

        std::vector<double> alphas = c.alphas;
        std::vector<std::pair<std::string, std::string>> labels;  // point name, status
        for (std::size_t i = 0; i < c.alphas.size(); ++i) labels.push_back({"grid", ""});
        auto special = [&](const std::string& name, const std::optional<double>& a, const std::string& err) {
            alphas.push_back(a ? *a : kNaN);
            labels.push_back({name, a ? "" : err});
        };
        special("alpha_star", theory.alpha_star, theory.moments ? theory.star_error : theory.error);
        special("alpha_worst", theory.alpha_worst, theory.moments ? theory.worst_error : theory.error);
        special("alpha_zero", 0.0, "");
        special("alpha_one", 1.0, "");

        std::vector<double> eval_alphas;
        for (double a : alphas) eval_alphas.push_back(std::isfinite(a) ? a : 0.0);

        std::vector<std::vector<double>> acc(trials.size());
        parallel_for(trials.size(), o.threads, [&](std::size_t k) {
            RandomSource rng = RandomSource(trials[k].seed).substream(trial_stream(bi, trials[k].index));
            MeanPair means;
            LinearClassifier source;
            if (fixed) {
                means = fixed->means;
                source = fixed->source;
            } else {
                means = make_orthogonal_means(c.p, c.norm_mu, c.norm_perp, rng);
                source = train_ridge(sample_class_data(c.N, means.mu, rng), c.gamma_tilde);
            }
            const Eigen::VectorXd mb = mu_beta(means, beta, c.mixing);
            const LabeledDataset target = sample_class_data(c.n, mb, rng);
            const TargetResolvent q(target, c.gamma);
            acc[k] = sweep_accuracies(fine_tune_directions(source, q), eval_alphas, mb, c.test_size(), rng);
        });

        for (std::size_t a = 0; a < alphas.size(); ++a) {
            std::string status = labels[a].second;
            const bool defined = std::isfinite(alphas[a]);
            double th = kNaN;
            MeanStderr emp{kNaN, kNaN};
            if (defined) {
                th = accuracy_or_nan(theory, alphas[a], status);
                std::vector<double> col;
                for (const auto& row : acc) col.push_back(row[a]);
                emp = mean_stderr(col);
            }
            table.add_row({beta, labels[a].first, num(alphas[a]), num(th), num(emp.mean), num(emp.stderr_),
                           status.empty() ? Cell(std::string("ok")) : Cell(status)});
        }
    }
    table.metadata.push_back({"trials_per_seed", std::to_string(c.trials)});
    table.metadata.push_back({"test_size", std::to_string(c.test_size())});
    table.metadata.push_back({"fixed_source", fixed_mode ? "true" : "false"});
    return table;
}

ResultTable run_distribution(const ExperimentConfig& c, const RunOptions& o) {
    const bool fixed_mode = o.fixed_source || c.fixed_source;
    ResultTable table = make_table(
        c, {"beta", "alpha", "class", "record", "theory_mean", "empirical_mean", "mean_stderr", "theory_variance",
            "empirical_variance", "ks_statistic", "samples", "bin_lo", "bin_hi", "count", "density",
            "theory_density", "status"});
    const std::vector<TrialId> trials = enumerate_trials(c);
    std::optional<FixedSource> fixed;
    if (fixed_mode) fixed = make_fixed_source(c);
    const int test_size = c.test_size();
    const Eigen::Index negatives = (test_size + 1) / 2;

    for (std::size_t bi = 0; bi < c.betas.size(); ++bi) {
        const double beta = c.betas[bi];
        const BetaTheory theory = beta_theory(c, beta, fixed ? &*fixed : nullptr);

        // scores[k][a] holds the test scores of trial k for alpha a, negatives first.
        std::vector<std::vector<Eigen::VectorXd>> scores(trials.size());
        parallel_for(trials.size(), o.threads, [&](std::size_t k) {
            RandomSource rng = RandomSource(trials[k].seed).substream(trial_stream(bi, trials[k].index));
            MeanPair means;
            LinearClassifier source;
            if (fixed) {
                means = fixed->means;
                source = fixed->source;
            } else {
                means = make_orthogonal_means(c.p, c.norm_mu, c.norm_perp, rng);
                source = train_ridge(sample_class_data(c.N, means.mu, rng), c.gamma_tilde);
            }
            const Eigen::VectorXd mb = mu_beta(means, beta, c.mixing);
            const LabeledDataset target = sample_class_data(c.n, mb, rng);
            const TargetResolvent q(target, c.gamma);
            const FineTuneDirections d = fine_tune_directions(source, q);
            Eigen::VectorXd s0(test_size), su(test_size);
            TestStream stream(test_size, mb, rng);
            LabeledDataset block;
            Eigen::Index pos = 0;
            while (stream.next(block)) {
                s0.segment(pos, block.size()) = block.features.transpose() * d.w0;
                su.segment(pos, block.size()) = block.features.transpose() * d.direction;
                pos += block.size();
            }
            scores[k].resize(c.alphas.size());
            for (std::size_t a = 0; a < c.alphas.size(); ++a) scores[k][a] = s0 + c.alphas[a] * su;
        });

        for (std::size_t a = 0; a < c.alphas.size(); ++a) {
            const double alpha = c.alphas[a];
            std::string status;
            double m = kNaN, var = kNaN;
            if (theory.moments) {
                try {
                    const DecisionStats s = stats_at(*theory.moments, alpha);
                    m = s.m_alpha;
                    var = s.variance;
                } catch (const RegimeError& e) {
                    status = e.what();
                }
            } else {
                status = theory.error;
            }
            for (int cls : {-1, 1}) {
                const Eigen::Index begin = cls < 0 ? 0 : negatives;
                const Eigen::Index count = cls < 0 ? negatives : test_size - negatives;
                if (count == 0) continue;
                std::vector<double> pooled;
                std::vector<double> trial_means;
                pooled.reserve(static_cast<std::size_t>(count) * trials.size());
                for (const auto& tr : scores) {
                    const auto seg = tr[a].segment(begin, count);
                    pooled.insert(pooled.end(), seg.data(), seg.data() + count);
                    trial_means.push_back(seg.mean());
                }
                const double total = static_cast<double>(pooled.size());
                const double mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / total;
                double ss = 0.0;
                for (double v : pooled) ss += (v - mean) * (v - mean);
                const double emp_var = ss / (total - 1.0);
                const MeanStderr tm = mean_stderr(trial_means);
                const double th_mean = cls * m;
                std::sort(pooled.begin(), pooled.end());
                double ks = kNaN;
                if (std::isfinite(var)) {
                    ks = 0.0;
                    const double sd = std::sqrt(var);
                    for (std::size_t i = 0; i < pooled.size(); ++i) {
                        const double f = normal_cdf((pooled[i] - th_mean) / sd);
                        ks = std::max({ks, (i + 1) / total - f, f - i / total});
                    }
                }
                const Cell status_cell = status.empty() ? Cell(std::string("ok")) : Cell(status);
                table.add_row({beta, alpha, static_cast<std::int64_t>(cls), std::string("summary"), num(th_mean), mean,
                               num(tm.stderr_), num(var), emp_var, num(ks), static_cast<std::int64_t>(pooled.size()),
                               std::monostate{}, std::monostate{}, std::monostate{}, std::monostate{},
                               std::monostate{}, status_cell});
                const double lo = pooled.front();
                const double hi = pooled.back();
                const double width = hi > lo ? (hi - lo) / c.bins : 1.0;
                std::vector<std::int64_t> counts(static_cast<std::size_t>(c.bins), 0);
                for (double v : pooled) {
                    auto b = static_cast<std::size_t>(std::floor((v - lo) / width));
                    counts[std::min<std::size_t>(b, counts.size() - 1)] += 1;
                }
                for (int b = 0; b < c.bins; ++b) {
                    const double blo = lo + b * width;
                    const double bhi = b + 1 == c.bins ? std::max(hi, blo + width) : lo + (b + 1) * width;
                    const double mid = 0.5 * (blo + bhi);
                    double th_density = kNaN;
                    if (std::isfinite(var))
                        th_density = std::exp(-0.5 * (mid - th_mean) * (mid - th_mean) / var) /
                                     std::sqrt(2.0 * M_PI * var);
                    table.add_row({beta, alpha, static_cast<std::int64_t>(cls), std::string("bin"), num(th_mean),
                                   std::monostate{}, std::monostate{}, num(var), std::monostate{}, std::monostate{},
                                   std::monostate{}, blo, bhi, counts[static_cast<std::size_t>(b)],
                                   counts[static_cast<std::size_t>(b)] / (total * (bhi - blo)), num(th_density),
                                   status_cell});
                }
            }
        }
    }
    table.metadata.push_back({"trials_per_seed", std::to_string(c.trials)});
    table.metadata.push_back({"test_size", std::to_string(test_size)});
    table.metadata.push_back({"fixed_source", fixed_mode ? "true" : "false"});
    return table;
}

ResultTable run_optimal_curve(const ExperimentConfig& c, const RunOptions&) {
    ResultTable table = make_table(c, {"p", "beta", "alpha_star", "no_transfer", "monotone", "theory_accuracy_star",
                                       "theory_accuracy_zero", "theory_accuracy_one", "status"});
    for (int p : c.p_list) {
        double previous = -std::numeric_limits<double>::infinity();
        for (double beta : c.betas) {
            std::vector<Cell> row{static_cast<std::int64_t>(p), beta};
            try {
                const ProblemSpec spec =
                    ProblemSpec::from_norms(p, c.n, c.N, c.norm_mu, c.norm_perp, beta, c.mixing, c.gamma, c.gamma_tilde);
                const ScalarContext ctx = build_context(spec);
                const AlphaChoice a = optimal_alpha(ctx, spec, c.t3_variant);
                const bool monotone = a.alpha >= previous - 1e-12 * std::max(1.0, std::abs(previous));
                previous = a.alpha;
                const MomentCoefficients mc = ridge_moments(ctx, spec, c.t3_variant);
                row.insert(row.end(), {a.alpha, static_cast<std::int64_t>(a.no_transfer),
                                       static_cast<std::int64_t>(monotone),
                                       theoretical_accuracy(stats_at(mc, a.alpha)),
                                       theoretical_accuracy(stats_at(mc, 0.0)),
                                       theoretical_accuracy(stats_at(mc, 1.0)), std::string("ok")});
            } catch (const Error& e) {
                row.insert(row.end(), {std::monostate{}, std::monostate{}, std::monostate{}, std::monostate{},
                                       std::monostate{}, std::monostate{}, std::string(e.what())});
            }
            table.add_row(std::move(row));
        }
    }
    table.metadata.push_back({"n", std::to_string(c.n)});
    table.metadata.push_back({"N", std::to_string(c.N)});
    return table;
}

TransferOutcome run_transfer_pipeline(const LabeledDataset& source, const LabeledDataset& pool,
                                      const LabeledDataset& test, int n, double gamma, double gamma_tilde,
                                      RandomSource& rng, T3Variant variant) {
    if (n > pool.size()) throw DomainError("training subsample is larger than the target pool");
    const PluginResult plug = plugin_optimal_alpha(source, pool, gamma, gamma_tilde, n, variant);
    const LabeledDataset target = subset(pool, sample_without_replacement(pool.size(), n, rng));
    const LinearClassifier w_source = train_ridge(source, gamma_tilde);
    const TargetResolvent q(target, gamma);
    const FineTuneDirections d = fine_tune_directions(w_source, q);
    const Eigen::VectorXd s0 = test.features.transpose() * d.w0;
    const Eigen::VectorXd su = test.features.transpose() * d.direction;
    TransferOutcome out{};
    out.beta_hat = plug.estimate.beta_hat;
    out.alpha_star = plug.alpha;
    out.no_transfer = plug.no_transfer;
    out.acc_zero = accuracy_from_scores(s0, test.labels);
    out.acc_one = accuracy_from_scores(s0 + su, test.labels);
    out.acc_star = accuracy_from_scores(s0 + plug.alpha * su, test.labels);
    return out;
}

ResultTable run_real_data(const ExperimentConfig& c, const RunOptions& o) {
    const LabeledDataset raw_source = load_dataset(c.source_path);
    const LabeledDataset raw_target = load_dataset(c.target_path);
    if (raw_source.dim() != raw_target.dim()) throw IoError("source and target datasets have different dimensions");
    const Standardized std_data = standardize(raw_source, {raw_target});
    const LabeledDataset& source = std_data.train;
    const LabeledDataset& target = std_data.others.front();

    RandomSource split_rng = RandomSource(c.seeds.front()).substream(kSplitStream);
    const std::vector<Eigen::Index> order = sample_without_replacement(target.size(), target.size(), split_rng);
    const Eigen::Index pool_size = (target.size() + 1) / 2;
    const LabeledDataset pool = subset(target, {order.begin(), order.begin() + pool_size});
    const LabeledDataset test = subset(target, {order.begin() + pool_size, order.end()});
    if (test.size() == 0) throw DomainError("target dataset is too small to hold out a test half");
    if (c.n > pool.size()) throw ConfigError("n exceeds the target estimation pool (half the target file)");

    const PluginResult plug = plugin_optimal_alpha(source, pool, c.gamma, c.gamma_tilde, c.n, c.t3_variant);
    std::vector<TransferOutcome> outcomes(c.seeds.size());
    parallel_for(c.seeds.size(), o.threads, [&](std::size_t k) {
        RandomSource rng = RandomSource(c.seeds[k]).substream(1);
        outcomes[k] = run_transfer_pipeline(source, pool, test, c.n, c.gamma, c.gamma_tilde, rng, c.t3_variant);
    });

    ResultTable table = make_table(c, {"point", "alpha", "theory_accuracy", "empirical_mean", "empirical_stderr",
                                       "beta_hat", "norm_mu_hat", "norm_mu_beta_hat", "norm_perp_hat", "no_transfer",
                                       "status"});
    std::optional<MomentCoefficients> mc;
    std::string theory_status;
    try {
        mc = ridge_moments(build_context(plug.spec), plug.spec, c.t3_variant);
    } catch (const Error& e) {
        theory_status = e.what();
    }
    const EstimatedSpec& e = plug.estimate;
    auto add = [&](const std::string& name, double alpha, auto pick) {
        std::vector<double> acc;
        for (const auto& out : outcomes) acc.push_back(pick(out));
        const MeanStderr ms = mean_stderr(acc);
        double th = kNaN;
        std::string status = theory_status;
        if (mc) {
            try {
                th = theoretical_accuracy(stats_at(*mc, alpha));
            } catch (const Error& err) {
                status = err.what();
            }
        }
        table.add_row({name, alpha, num(th), ms.mean, num(ms.stderr_), e.beta_hat, e.norm_mu_hat, e.norm_mu_beta_hat,
                       e.norm_perp_hat, static_cast<std::int64_t>(plug.no_transfer),
                       status.empty() ? std::string("ok") : status});
    };
    add("alpha_zero", 0.0, [](const TransferOutcome& t) { return t.acc_zero; });
    add("alpha_one", 1.0, [](const TransferOutcome& t) { return t.acc_one; });
    add("alpha_star", plug.alpha, [](const TransferOutcome& t) { return t.acc_star; });
    table.metadata.push_back({"source_size", std::to_string(source.size())});
    table.metadata.push_back({"pool_size", std::to_string(pool.size())});
    table.metadata.push_back({"test_size", std::to_string(test.size())});
    table.metadata.push_back({"estimate_clamped", e.clamped ? "true" : "false"});
    return table;
}

ResultTable run_multi_source(const ExperimentConfig& c, const RunOptions& o) {
    const Eigen::Index T = static_cast<Eigen::Index>(c.sources.size());
    // Only the target side of this spec is used; N and gamma_tilde come from the first source.
    const ProblemSpec spec = ProblemSpec::from_norms(c.p, c.n, c.sources.front().N, c.norm_mu, c.norm_perp, c.beta,
                                                     c.mixing, c.gamma, c.sources.front().gamma_tilde);
    const double mb_norm = spec.norm_mu_beta;
    std::vector<double> along(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) {
        const SourceTask& s = c.sources[static_cast<std::size_t>(t)];
        if (std::abs(s.beta) * s.norm_mu > mb_norm * (1.0 + 1e-12))
            throw ConfigError("source " + std::to_string(t) + " needs |beta| * norm_mu <= ||mu_beta||");
        along[static_cast<std::size_t>(t)] = mb_norm > 0.0 ? s.beta * s.norm_mu * s.norm_mu / mb_norm : 0.0;
    }
    const ScalarContext ctx = build_context(spec);

    // Predicted summaries: E w_t = mu_t / lambda_R(t) and the ridge second moment.
    Eigen::VectorXd inner_pred(T);
    Eigen::MatrixXd gram_pred(T, T);
    std::vector<double> lambda_r(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) {
        const SourceTask& s = c.sources[static_cast<std::size_t>(t)];
        ProblemSpec st = spec;
        st.N = s.N;
        st.norm_mu = s.norm_mu;
        st.beta = s.beta;
        st.gamma_tilde = s.gamma_tilde;
        const ScalarContext ct = build_context(st);
        const SourceSummary sum = ridge_source_summary(ct, st);
        inner_pred[t] = sum.inner;
        gram_pred(t, t) = sum.norm_sq;
        lambda_r[static_cast<std::size_t>(t)] = ct.lambda_R;
    }
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index k = 0; k < T; ++k)
            if (t != k)
                gram_pred(t, k) = along[static_cast<std::size_t>(t)] * along[static_cast<std::size_t>(k)] /
                                  (lambda_r[static_cast<std::size_t>(t)] * lambda_r[static_cast<std::size_t>(k)]);

    std::optional<MultiAlphaSolution> predicted;
    std::string predicted_status;
    try {
        predicted = solve_multi_alpha(multi_source_coeffs(ctx, spec, inner_pred, gram_pred));
    } catch (const Error& e) {
        predicted_status = e.what();
    }

    struct TrialResult {
        bool solved = false;
        Eigen::VectorXd alpha;
        double residual = kNaN;
        double acc[4] = {kNaN, kNaN, kNaN, kNaN};
        double theory[4] = {kNaN, kNaN, kNaN, kNaN};
        std::string error;
    };
    const std::vector<TrialId> trials = enumerate_trials(c);
    std::vector<TrialResult> results(trials.size());
    parallel_for(trials.size(), o.threads, [&](std::size_t k) {
        RandomSource rng = RandomSource(trials[k].seed).substream(trial_stream(0, trials[k].index));
        Eigen::MatrixXd basis(c.p, T + 1);
        rng.fill_normal(basis);
        const Eigen::MatrixXd e = Eigen::HouseholderQR<Eigen::MatrixXd>(basis).householderQ() *
                                  Eigen::MatrixXd::Identity(c.p, T + 1);
        const Eigen::VectorXd mb = mb_norm * e.col(0);
        Eigen::MatrixXd w(c.p, T);
        for (Eigen::Index t = 0; t < T; ++t) {
            const SourceTask& s = c.sources[static_cast<std::size_t>(t)];
            const double a = along[static_cast<std::size_t>(t)];
            const Eigen::VectorXd mu_t = a * e.col(0) + std::sqrt(std::max(0.0, s.norm_mu * s.norm_mu - a * a)) * e.col(t + 1);
            w.col(t) = train_ridge(sample_class_data(s.N, mu_t, rng), s.gamma_tilde).weights;
        }
        const LabeledDataset target = sample_class_data(c.n, mb, rng);
        const TargetResolvent q(target, c.gamma);
        const Eigen::VectorXd w0 = q.ridge_solution();
        Eigen::MatrixXd u(c.p, T);
        for (Eigen::Index t = 0; t < T; ++t) u.col(t) = c.gamma * q.apply(w.col(t));

        TrialResult& r = results[k];
        std::optional<MultiSourceCoeffs> coeffs;
        try {
            coeffs = multi_source_coeffs(ctx, spec, w.transpose() * mb, w.transpose() * w);
            const MultiAlphaSolution sol = solve_multi_alpha(*coeffs);
            r.solved = true;
            r.alpha = sol.alpha;
            r.residual = sol.residual;
        } catch (const Error& err) {
            r.error = err.what();
        }
        std::vector<std::optional<Eigen::VectorXd>> points = {
            Eigen::VectorXd::Zero(T), Eigen::VectorXd::Ones(T),
            r.solved ? std::optional<Eigen::VectorXd>(r.alpha) : std::nullopt,
            predicted ? std::optional<Eigen::VectorXd>(predicted->alpha) : std::nullopt};
        std::vector<std::int64_t> correct(4, 0);
        TestStream stream(c.test_size(), mb, rng);
        LabeledDataset block;
        while (stream.next(block)) {
            const Eigen::VectorXd s0 = block.features.transpose() * w0;
            const Eigen::MatrixXd su = block.features.transpose() * u;
            for (std::size_t i = 0; i < 4; ++i) {
                if (!points[i]) continue;
                const Eigen::VectorXd s = s0 + su * *points[i];
                for (Eigen::Index j = 0; j < s.size(); ++j)
                    correct[i] += ((s[j] >= 0.0 ? 1.0 : -1.0) == block.labels[j]) ? 1 : 0;
            }
        }
        for (std::size_t i = 0; i < 4; ++i) {
            if (!points[i]) continue;
            r.acc[i] = static_cast<double>(correct[i]) / c.test_size();
            if (coeffs) {
                try {
                    r.theory[i] = normal_cdf(multi_objective(*coeffs, *points[i]));
                } catch (const Error&) {
                }
            }
        }
    });

    ResultTable table = make_table(c, {"point", "alpha", "theory_accuracy", "empirical_mean", "empirical_stderr",
                                       "max_residual", "failures", "status"});
    const char* names[4] = {"zeros", "ones", "solved", "predicted"};
    std::int64_t failures = 0;
    std::string first_error;
    Eigen::VectorXd mean_alpha = Eigen::VectorXd::Zero(T);
    double max_residual = 0.0;
    for (const auto& r : results) {
        if (r.solved) {
            mean_alpha += r.alpha;
            max_residual = std::max(max_residual, r.residual);
        } else {
            ++failures;
            if (first_error.empty()) first_error = r.error;
        }
    }
    const auto solved_count = static_cast<std::int64_t>(results.size()) - failures;
    if (solved_count > 0) mean_alpha /= static_cast<double>(solved_count);
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> acc, th;
        for (const auto& r : results) {
            if (std::isfinite(r.acc[i])) acc.push_back(r.acc[i]);
            if (std::isfinite(r.theory[i])) th.push_back(r.theory[i]);
        }
        const MeanStderr ms = mean_stderr(acc);
        const MeanStderr mt = mean_stderr(th);
        Cell alpha_cell = std::monostate{};
        Cell residual_cell = std::monostate{};
        Cell failures_cell = std::monostate{};
        std::string status = "ok";
        if (i == 0) alpha_cell = join(Eigen::VectorXd::Zero(T));
        if (i == 1) alpha_cell = join(Eigen::VectorXd::Ones(T));
        if (i == 2) {
            if (solved_count > 0) alpha_cell = join(mean_alpha);
            residual_cell = num(solved_count > 0 ? max_residual : kNaN);
            failures_cell = failures;
            if (failures > 0) status = first_error;
        }
        if (i == 3) {
            if (predicted) {
                alpha_cell = join(predicted->alpha);
                residual_cell = predicted->residual;
            } else {
                status = predicted_status;
            }
        }
        table.add_row({std::string(names[i]), alpha_cell, num(mt.mean), num(ms.mean), num(ms.stderr_), residual_cell,
                       failures_cell, status});
    }
    table.metadata.push_back({"sources", std::to_string(T)});
    table.metadata.push_back({"trials_per_seed", std::to_string(c.trials)});
    table.metadata.push_back({"test_size", std::to_string(c.test_size())});
    return table;
}

ResultTable run_identity_suite(const ExperimentConfig& c, const RunOptions&) {
    RandomSource rng = RandomSource(c.seeds.front()).substream(0);
    const MeanPair means = make_orthogonal_means(c.p, c.norm_mu, c.norm_perp, rng);
    const ProblemSpec spec = c.problem(c.beta);
    const std::vector<IdentityCheck> checks = evaluate_identities(spec, means, c.mixing, c.delta_offset);
    ResultTable table =
        make_table(c, {"name", "family", "closed_form", "explicit_value", "rel_error", "tolerance", "pass"});
    bool all = true;
    double worst = 0.0;
    for (const auto& k : checks) {
        table.add_row({k.name, k.family, k.closed_form, k.explicit_value, k.rel_error, k.tolerance,
                       static_cast<std::int64_t>(k.pass)});
        if (k.family != "supplementary") {
            all = all && k.pass;
            worst = std::max(worst, k.rel_error);
        }
    }
    table.metadata.push_back({"suite_pass", all ? "true" : "false"});
    table.metadata.push_back({"max_rel_error", format_double(worst)});
    table.metadata.push_back({"delta_offset", format_double(c.delta_offset)});
    return table;
}

ResultTable run_experiment(const ExperimentConfig& c, const RunOptions& o) {
    if (c.kind == "sweep-alpha") return run_sweep_alpha(c, o);
    if (c.kind == "distribution") return run_distribution(c, o);
    if (c.kind == "optimal-curve") return run_optimal_curve(c, o);
    if (c.kind == "real-data") return run_real_data(c, o);
    if (c.kind == "multi-source") return run_multi_source(c, o);
    if (c.kind == "identity-suite") return run_identity_suite(c, o);
    throw ConfigError("unknown experiment kind '" + c.kind + "'");
}

}  // namespace rmt
