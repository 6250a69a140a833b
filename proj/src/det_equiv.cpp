#include "rmt_transfer/det_equiv.hpp"

#include <algorithm>
#include <cmath>

#include "rmt_transfer/errors.hpp"

namespace rmt {

namespace {

double sq(double x) { return x * x; }

Eigen::MatrixXd spiked_inverse(const Eigen::VectorXd& v, double delta, double gamma) {
    const Eigen::Index p = v.size();
    Eigen::MatrixXd a = (v * v.transpose() + Eigen::MatrixXd::Identity(p, p)) / (1.0 + delta);
    a.diagonal().array() += gamma;
    return a.llt().solve(Eigen::MatrixXd::Identity(p, p));
}

double relative_error(double closed, double value) {
    const double scale = std::max(std::abs(closed), std::abs(value));
    return scale == 0.0 ? 0.0 : std::abs(closed - value) / scale;
}

// Scalars entering the closed forms, possibly with perturbed deltas.
struct ClosedScalars {
    double dq, dr, lq, lr, kq, kr;
};

ClosedScalars closed_scalars(const ProblemSpec& spec, const ScalarContext& ctx, double offset) {
    ClosedScalars s{};
    s.dq = ctx.delta_Q + offset;
    s.dr = ctx.delta_R + offset;
    s.lq = sq(spec.norm_mu_beta) + 1.0 + spec.gamma * (1.0 + s.dq);
    s.lr = sq(spec.norm_mu) + 1.0 + spec.gamma_tilde * (1.0 + s.dr);
    s.kq = (1.0 + s.dq) / (1.0 + spec.gamma * (1.0 + s.dq));
    s.kr = (1.0 + s.dr) / (1.0 + spec.gamma_tilde * (1.0 + s.dr));
    return s;
}

struct TraceValues {
    double q_sigma;
    double r_sigma;
    double rq_squared;
};

TraceValues explicit_traces(const ProblemSpec& spec, const ScalarContext& ctx, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& mb) {
    const Eigen::Index p = mu.size();
    const Eigen::MatrixXd q = spiked_inverse(mb, ctx.delta_Q, spec.gamma);
    const Eigen::MatrixXd r = spiked_inverse(mu, ctx.delta_R, spec.gamma_tilde);
    const Eigen::MatrixXd sb = mb * mb.transpose() + Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd s = mu * mu.transpose() + Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd sq_ = sb * q;
    const Eigen::MatrixXd sr = s * r;
    const Eigen::MatrixXd r2 = r * r;
    const Eigen::MatrixXd q2 = q * q;
    TraceValues t{};
    t.q_sigma = (sq_ * sq_).trace() / spec.n / sq(1.0 + ctx.delta_Q);
    t.r_sigma = (sr * sr).trace() / spec.N / sq(1.0 + ctx.delta_R);
    t.rq_squared = (r2 * q2).trace() / spec.N;
    return t;
}

}  // namespace

DetEquivMatrices det_equiv_matrices(const ProblemSpec& spec, const MeanPair& means, MixingMode mode) {
    if (means.mu.size() != spec.p || means.mu_perp.size() != spec.p) throw ShapeError("mean vectors must have length p");
    const ScalarContext ctx = build_context(spec);
    const Eigen::VectorXd mb = mu_beta(means, spec.beta, mode);
    return {spiked_inverse(mb, ctx.delta_Q, spec.gamma), spiked_inverse(means.mu, ctx.delta_R, spec.gamma_tilde)};
}

std::vector<IdentityCheck> evaluate_identities(const ProblemSpec& spec, const MeanPair& means, MixingMode mode,
                                               double delta_offset) {
    const ScalarContext ctx = build_context(spec);
    const DetEquivMatrices m = det_equiv_matrices(spec, means, mode);
    const Eigen::VectorXd& mu = means.mu;
    const Eigen::VectorXd mb = mu_beta(means, spec.beta, mode);
    if (relative_error(mb.squaredNorm(), sq(spec.norm_mu_beta)) > 1e-10 ||
        relative_error(mu.squaredNorm(), sq(spec.norm_mu)) > 1e-10)
        throw DomainError("mean vectors disagree with the norms of the problem spec");

    const ClosedScalars c = closed_scalars(spec, ctx, delta_offset);
    const double mu2 = sq(spec.norm_mu);
    const double mb2 = sq(spec.norm_mu_beta);
    const double b = spec.beta;
    const double eta = ctx.eta;
    const double eta_t = ctx.eta_tilde;
    const double n = spec.n;
    const double N = spec.N;

    std::vector<IdentityCheck> out;
    auto add = [&out](std::string name, std::string family, double closed, double value, double tol) {
        const double err = relative_error(closed, value);
        out.push_back({std::move(name), std::move(family), closed, value, err, tol, err <= tol});
    };

    const TraceValues tr = explicit_traces(spec, ctx, mu, mb);
    const double q_trace = eta / sq(1.0 + spec.gamma * (1.0 + c.dq));
    const double r_trace = eta_t / sq(1.0 + spec.gamma_tilde * (1.0 + c.dr));
    const double rq_trace = eta_t * sq(c.kr * c.kq);
    add("trace.q_sigma_beta", "trace", q_trace, tr.q_sigma, 1e-9);
    add("trace.r_sigma", "trace", r_trace, tr.r_sigma, 1e-9);
    add("trace.rq_squared", "trace", rq_trace, tr.rq_squared, 1e-9);

    const Eigen::MatrixXd& Q = m.Q_bar;
    const Eigen::MatrixXd& R = m.R_bar;
    const Eigen::MatrixXd Q2 = Q * Q;
    const Eigen::VectorXd Rmu = R * mu;
    add("relevant.mub_q_mub", "relevant", (1.0 + c.dq) * mb2 / c.lq, mb.dot(Q * mb), 1e-9);
    add("relevant.mub_q2_mub", "relevant", sq((1.0 + c.dq) / c.lq) * mb2, mb.dot(Q2 * mb), 1e-9);
    add("relevant.mu_r_mu", "relevant", (1.0 + c.dr) * mu2 / c.lr, mu.dot(Rmu), 1e-9);
    add("relevant.mu_r2_mu", "relevant", sq((1.0 + c.dr) / c.lr) * mu2, Rmu.squaredNorm(), 1e-9);
    add("relevant.mu_rq_mub", "relevant", (1.0 + c.dr) * (1.0 + c.dq) * b * mu2 / (c.lr * c.lq),
        Rmu.dot(Q * mb), 1e-9);
    add("relevant.mu_rq2_mub", "relevant", (1.0 + c.dr) / c.lr * sq((1.0 + c.dq) / c.lq) * b * mu2,
        Rmu.dot(Q2 * mb), 1e-9);
    add("relevant.mu_rq2r_mu", "relevant",
        sq((1.0 + c.dr) * (1.0 + c.dq) / ((1.0 + spec.gamma * (1.0 + c.dq)) * c.lr)) * mu2 *
            (1.0 + b * b * mu2 * mb2 / sq(c.lq) - 2.0 * b * b * mu2 / c.lq),
        Rmu.dot(Q2 * Rmu), 1e-9);

    const Eigen::Index p = spec.p;
    const Eigen::MatrixXd sb = mb * mb.transpose() + Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd s = mu * mu.transpose() + Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd qs = Q * sb;
    const Eigen::MatrixXd rs = R * s;
    add("commutativity.q_sigma_beta", "commutativity", 0.0, (qs - sb * Q).norm() / qs.norm(), 1e-10);
    out.back().rel_error = out.back().explicit_value;
    out.back().pass = out.back().rel_error <= out.back().tolerance;
    add("commutativity.r_sigma", "commutativity", 0.0, (rs - s * R).norm() / rs.norm(), 1e-10);
    out.back().rel_error = out.back().explicit_value;
    out.back().pass = out.back().rel_error <= out.back().tolerance;

    // The trace identities are limits. Q_bar and R_bar each carry one spiked
    // eigenvalue, which contributes an O(1/p) term; adding it back is exact.
    const double aq = 1.0 + spec.gamma * (1.0 + c.dq);
    const double ar = 1.0 + spec.gamma_tilde * (1.0 + c.dr);
    add("trace.q_sigma_beta.finite_p", "supplementary", q_trace + (sq((mb2 + 1.0) / c.lq) - 1.0 / sq(aq)) / n,
        tr.q_sigma, 1e-9);
    add("trace.r_sigma.finite_p", "supplementary", r_trace + (sq((mu2 + 1.0) / c.lr) - 1.0 / sq(ar)) / N,
        tr.r_sigma, 1e-9);
    const double sa = 1.0 - sq(1.0 - mu2 / c.lr);
    const double sbq = 1.0 - sq(1.0 - mb2 / c.lq);
    const double cos2 = (mu2 > 0.0 && mb2 > 0.0) ? b * b * mu2 / mb2 : 0.0;
    add("trace.rq_squared.finite_p", "supplementary", rq_trace + sq(c.kr * c.kq) * (-sa - sbq + sa * sbq * cos2) / N,
        tr.rq_squared, 1e-9);

    // Doubling p, n and N at fixed ratios should halve the limit error.
    if (delta_offset == 0.0 && std::abs(tr.q_sigma - q_trace) > 1e-13 * q_trace) {
        ProblemSpec big = spec;
        big.p *= 2;
        big.n *= 2;
        big.N *= 2;
        const ScalarContext ctx2 = build_context(big);
        Eigen::VectorXd mu_big = Eigen::VectorXd::Zero(big.p);
        Eigen::VectorXd mb_big = Eigen::VectorXd::Zero(big.p);
        mu_big.head(p) = mu;
        mb_big.head(p) = mb;
        const TraceValues tr2 = explicit_traces(big, ctx2, mu_big, mb_big);
        const double ratio = (tr.q_sigma - q_trace) / (tr2.q_sigma - q_trace);
        add("trace.q_sigma_beta.error_ratio_2p", "supplementary", 2.0, ratio, 0.05);
    }
    return out;
}

}  // namespace rmt
