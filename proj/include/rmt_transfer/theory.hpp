#pragma once

#include <string>

#include "rmt_transfer/gmm_data.hpp"

namespace rmt {

struct ProblemSpec {
    int p = 0;
    int n = 0;
    int N = 0;
    double norm_mu = 0.0;
    double norm_mu_beta = 0.0;
    double beta = 0.0;
    double gamma = 1.0;
    double gamma_tilde = 1.0;

    static ProblemSpec from_norms(int p, int n, int N, double norm_mu, double norm_perp, double beta,
                                  MixingMode mode, double gamma, double gamma_tilde);
    void validate() const;
};

struct ScalarContext {
    double eta;
    double eta_tilde;
    double delta_Q;
    double delta_R;
    double lambda_Q;
    double lambda_R;
    double h;
    double h_tilde;
};

// Nonnegative root of gamma d^2 + (1 + gamma - eta) d - eta = 0.
double delta_fixed_point(double eta, double gamma);
double fixed_point_residual(double delta, double eta, double gamma);

ScalarContext build_context(const ProblemSpec& spec);

// Placement of the source-noise term in the alpha^2 coefficient of nu.
// SourceAveraged averages the exact arbitrary-source coefficient over the
// ridge source including the second-order resolvent correction; it is the
// variant that matches simulated score variances and is the default.
// ScaledNoise keeps the source-noise term inside the ||mu||^2 / lambda_R^2
// factor and UnscaledNoise keeps it outside; both drop the correction.
enum class T3Variant { SourceAveraged, ScaledNoise, UnscaledNoise };

std::string to_string(T3Variant v);
T3Variant parse_t3_variant(const std::string& name);

// m(alpha) = m0 + slope alpha, nu(alpha) = T1 + alpha T2 + alpha^2 T3.
struct MomentCoefficients {
    double m0;
    double slope;
    double T1;
    double T2;
    double T3;
};

struct DecisionStats {
    double m_alpha;
    double nu_alpha;
    double variance;
};

MomentCoefficients ridge_moments(const ScalarContext& ctx, const ProblemSpec& spec,
                                   T3Variant variant = T3Variant::SourceAveraged);
DecisionStats stats_at(const MomentCoefficients& c, double alpha);

DecisionStats decision_stats(const ScalarContext& ctx, const ProblemSpec& spec, double alpha,
                             T3Variant variant = T3Variant::SourceAveraged);

// Gaussian upper tail, integral from x to infinity of the standard normal density.
double upper_tail(double x);
double theoretical_accuracy(const DecisionStats& stats);

struct AlphaChoice {
    double alpha;
    bool no_transfer;
};

AlphaChoice optimal_alpha(const ScalarContext& ctx, const ProblemSpec& spec,
                          T3Variant variant = T3Variant::SourceAveraged);
double worst_alpha(const ScalarContext& ctx, const ProblemSpec& spec);

// Any fixed source vector w, summarised by <w, mu_beta> and ||w||^2.
struct SourceSummary {
    double inner;
    double norm_sq;
};

MomentCoefficients arbitrary_moments(const ScalarContext& ctx, const ProblemSpec& spec, const SourceSummary& src);
DecisionStats decision_stats_arbitrary(const ScalarContext& ctx, const ProblemSpec& spec, const SourceSummary& src,
                                       double alpha);
double optimal_alpha_arbitrary(const ScalarContext& ctx, const ProblemSpec& spec, const SourceSummary& src);
double worst_alpha_arbitrary(const ScalarContext& ctx, const ProblemSpec& spec, const SourceSummary& src);

// Predicted <E w, mu_beta> and E||w||^2 of a ridge source trained on the source task.
SourceSummary ridge_source_summary(const ScalarContext& ctx, const ProblemSpec& spec);

}  // namespace rmt
