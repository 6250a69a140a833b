#include "rmt_transfer/theory.hpp"

#include <cmath>
#include <limits>

#include "rmt_transfer/errors.hpp"

namespace rmt {

namespace {

double sq(double x) { return x * x; }

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

ProblemSpec ProblemSpec::from_norms(int p, int n, int N, double norm_mu, double norm_perp, double beta,
                                    MixingMode mode, double gamma, double gamma_tilde) {
    ProblemSpec s;
    s.p = p;
    s.n = n;
    s.N = N;
    s.norm_mu = norm_mu;
    s.norm_mu_beta = std::sqrt(mu_beta_norm_sq(norm_mu, norm_perp, beta, mode));
    s.beta = beta;
    s.gamma = gamma;
    s.gamma_tilde = gamma_tilde;
    s.validate();
    return s;
}

void ProblemSpec::validate() const {
    if (p < 1 || n < 1 || N < 1) throw DomainError("p, n and N must be positive");
    if (!(norm_mu >= 0.0) || !std::isfinite(norm_mu) || !(norm_mu_beta >= 0.0) || !std::isfinite(norm_mu_beta))
        throw DomainError("mean norms must be finite and nonnegative");
    if (!std::isfinite(beta)) throw DomainError("beta must be finite");
    if (!positive_finite(gamma) || !positive_finite(gamma_tilde))
        throw DomainError("ridge parameters must be positive and finite");
    if (std::abs(beta) * norm_mu > norm_mu_beta * (1.0 + 1e-10))
        throw DomainError("|beta| * ||mu|| exceeds ||mu_beta||");
}

double delta_fixed_point(double eta, double gamma) {
    if (!positive_finite(gamma)) throw DomainError("gamma must be positive");
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("eta must be nonnegative");
    const double b = eta - gamma - 1.0;
    const double s = std::sqrt(b * b + 4.0 * eta * gamma);
    // Pick the cancellation-free form of the positive root.
    double d = b >= 0.0 ? (b + s) / (2.0 * gamma) : 2.0 * eta / (s - b);
    const double slope = 2.0 * gamma * d + 1.0 + gamma - eta;
    if (slope > 0.0) d -= fixed_point_residual(d, eta, gamma) / slope;
    return d < 0.0 ? 0.0 : d;
}

double fixed_point_residual(double delta, double eta, double gamma) {
    return gamma * delta * delta + (1.0 + gamma - eta) * delta - eta;
}

ScalarContext build_context(const ProblemSpec& spec) {
    spec.validate();
    ScalarContext c{};
    c.eta = static_cast<double>(spec.p) / spec.n;
    c.eta_tilde = static_cast<double>(spec.p) / spec.N;
    c.delta_Q = delta_fixed_point(c.eta, spec.gamma);
    c.delta_R = delta_fixed_point(c.eta_tilde, spec.gamma_tilde);
    c.lambda_Q = sq(spec.norm_mu_beta) + 1.0 + spec.gamma * (1.0 + c.delta_Q);
    c.lambda_R = sq(spec.norm_mu) + 1.0 + spec.gamma_tilde * (1.0 + c.delta_R);
    c.h = 1.0 - c.eta / sq(1.0 + spec.gamma * (1.0 + c.delta_Q));
    c.h_tilde = 1.0 - c.eta_tilde / sq(1.0 + spec.gamma_tilde * (1.0 + c.delta_R));
    if (!positive_finite(c.h)) throw RegimeError(RegimeError::Kind::NonPositiveH, "h is not positive");
    if (!positive_finite(c.h_tilde))
        throw RegimeError(RegimeError::Kind::NonPositiveHTilde, "source h is not positive");
    return c;
}

std::string to_string(T3Variant v) {
    switch (v) {
        case T3Variant::SourceAveraged: return "source-averaged";
        case T3Variant::ScaledNoise: return "scaled-noise";
        case T3Variant::UnscaledNoise: return "unscaled-noise";
    }
    return "unknown";
}

T3Variant parse_t3_variant(const std::string& name) {
    if (name == "source-averaged") return T3Variant::SourceAveraged;
    if (name == "scaled-noise") return T3Variant::ScaledNoise;
    if (name == "unscaled-noise") return T3Variant::UnscaledNoise;
    throw DomainError("unknown T3 variant '" + name + "'");
}

MomentCoefficients ridge_moments(const ScalarContext& ctx, const ProblemSpec& spec, T3Variant variant) {
    const double mu2 = sq(spec.norm_mu);
    const double mb2 = sq(spec.norm_mu_beta);
    const double b = spec.beta;
    const double g1 = spec.gamma * (1.0 + ctx.delta_Q);
    const double lq = ctx.lambda_Q;
    const double lr = ctx.lambda_R;
    const double h = ctx.h;
    const double ht = ctx.h_tilde;

    MomentCoefficients c{};
    c.m0 = mb2 / lq;
    c.slope = b * g1 * mu2 / (lr * lq);
    c.T1 = mb2 / (h * lq) * ((mb2 + 1.0) / lq - 2.0 * (1.0 - h)) + (1.0 - h) / h;
    c.T2 = 2.0 * b * g1 * mu2 / (lr * lq) * (1.0 - g1 / (h * lq));

    const double pre = sq(g1) / h;
    const double signal = b * b * mu2 / sq(lq);
    const double bracket = 1.0 + b * b * mu2 * mb2 / sq(lq) - 2.0 * b * b * mu2 / lq;
    const double source_noise = 1.0 - 2.0 * mu2 / lr;
    const double k = (1.0 - h) / ctx.eta;
    switch (variant) {
        case T3Variant::ScaledNoise:
            c.T3 = pre * mu2 / sq(lr) * (signal + k * (bracket + (1.0 - ht) * source_noise));
            break;
        case T3Variant::UnscaledNoise:
            c.T3 = pre * (mu2 / sq(lr) * (signal + k * bracket) + k * (1.0 - ht) * source_noise);
            break;
        case T3Variant::SourceAveraged:
            c.T3 = pre * (mu2 / sq(lr) * (signal + k * (bracket + (1.0 - ht) * (mu2 + 1.0) / ht)) +
                          k * (1.0 - ht) / ht * source_noise);
            break;
    }
    return c;
}

DecisionStats stats_at(const MomentCoefficients& c, double alpha) {
    DecisionStats s{};
    s.m_alpha = c.m0 + alpha * c.slope;
    s.nu_alpha = c.T1 + alpha * (c.T2 + alpha * c.T3);
    s.variance = s.nu_alpha - s.m_alpha * s.m_alpha;
    if (!positive_finite(s.variance))
        throw RegimeError(RegimeError::Kind::NonPositiveVariance, "predicted score variance is not positive");
    return s;
}

DecisionStats decision_stats(const ScalarContext& ctx, const ProblemSpec& spec, double alpha, T3Variant variant) {
    return stats_at(ridge_moments(ctx, spec, variant), alpha);
}

double upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double theoretical_accuracy(const DecisionStats& stats) {
    if (!positive_finite(stats.variance))
        throw RegimeError(RegimeError::Kind::NonPositiveVariance, "predicted score variance is not positive");
    // 1 - upper_tail(z) evaluated as the lower tail of -z, which keeps precision for z < 0.
    return upper_tail(-stats.m_alpha / std::sqrt(stats.variance));
}

AlphaChoice optimal_alpha(const ScalarContext& ctx, const ProblemSpec& spec, T3Variant variant) {
    if (spec.beta * spec.norm_mu == 0.0) return {0.0, true};
    const MomentCoefficients c = ridge_moments(ctx, spec, variant);
    const double mu2 = sq(spec.norm_mu);
    const double mb2 = sq(spec.norm_mu_beta);
    const double bg = spec.beta * spec.gamma * (1.0 + ctx.delta_Q) * mu2;
    const double num = ctx.lambda_R * c.T2 * mb2 - 2.0 * bg * c.T1;
    const double den = bg * c.T2 - 2.0 * ctx.lambda_R * c.T3 * mb2;
    if (den == 0.0 || !std::isfinite(num / den)) throw DegenerateError("optimal alpha has a zero denominator");
    return {num / den, false};
}

double worst_alpha(const ScalarContext& ctx, const ProblemSpec& spec) {
    const double bg = spec.beta * spec.gamma * (1.0 + ctx.delta_Q) * sq(spec.norm_mu);
    if (bg == 0.0) throw DegenerateError("worst alpha is undefined when beta * ||mu|| = 0");
    return -ctx.lambda_R * sq(spec.norm_mu_beta) / bg;
}

MomentCoefficients arbitrary_moments(const ScalarContext& ctx, const ProblemSpec& spec, const SourceSummary& src) {
    const double mb2 = sq(spec.norm_mu_beta);
    const double g1 = spec.gamma * (1.0 + ctx.delta_Q);
    const double lq = ctx.lambda_Q;
    const double h = ctx.h;
    const double s = src.inner;

    MomentCoefficients c{};
    c.m0 = mb2 / lq;
    c.slope = g1 * s / lq;
    c.T1 = mb2 / (h * lq) * ((mb2 + 1.0) / lq - 2.0 * (1.0 - h)) + (1.0 - h) / h;
    c.T2 = 2.0 * g1 * s / (h * lq) * ((mb2 + 1.0) / lq - (1.0 - h));
    c.T3 = sq(g1) / h *
           (s * s / sq(lq) + (1.0 - h) / ctx.eta * src.norm_sq + (1.0 - h) * s * s / (ctx.eta * lq) * (mb2 / lq - 2.0));
    return c;
}

DecisionStats decision_stats_arbitrary(const ScalarContext& ctx, const ProblemSpec& spec, const SourceSummary& src,
                                       double alpha) {
    return stats_at(arbitrary_moments(ctx, spec, src), alpha);
}

double optimal_alpha_arbitrary(const ScalarContext& ctx, const ProblemSpec& spec, const SourceSummary& src) {
    if (src.inner == 0.0) return 0.0;
    const double g1 = spec.gamma * (1.0 + ctx.delta_Q);
    const double lq = ctx.lambda_Q;
    const double num = ctx.eta * (1.0 + g1) * src.inner;
    const double den = g1 * (lq * sq(spec.norm_mu_beta) * src.norm_sq - (lq - ctx.eta) * sq(src.inner));
    if (den == 0.0 || !std::isfinite(num / den)) throw DegenerateError("optimal alpha has a zero denominator");
    return num / den;
}

double worst_alpha_arbitrary(const ScalarContext& ctx, const ProblemSpec& spec, const SourceSummary& src) {
    const double g1 = spec.gamma * (1.0 + ctx.delta_Q);
    if (src.inner == 0.0) throw DegenerateError("worst alpha is undefined for a source orthogonal to the target mean");
    return -sq(spec.norm_mu_beta) / (g1 * src.inner);
}

SourceSummary ridge_source_summary(const ScalarContext& ctx, const ProblemSpec& spec) {
    const double mu2 = sq(spec.norm_mu);
    const double lr = ctx.lambda_R;
    const double ht = ctx.h_tilde;
    SourceSummary s{};
    s.inner = spec.beta * mu2 / lr;
    s.norm_sq = mu2 / sq(lr) * (1.0 + (1.0 - ht) * (mu2 + 1.0) / ht) + (1.0 - ht) / ht * (1.0 - 2.0 * mu2 / lr);
    return s;
}

}  // namespace rmt
