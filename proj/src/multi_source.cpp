#include "rmt_transfer/multi_source.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "rmt_transfer/errors.hpp"

namespace rmt {

namespace {

constexpr int kMaxIterations = 100;
constexpr int kMaxHalvings = 40;

double radicand(const MultiSourceCoeffs& c, const Eigen::VectorXd& alpha) {
    return c.a2 + alpha.dot(c.v2) + alpha.dot(c.M_tilde * alpha);
}

struct NewtonRun {
    Eigen::VectorXd alpha;
    double residual;
    int iterations;
};

NewtonRun newton(const MultiSourceCoeffs& c, Eigen::VectorXd alpha, double tol) {
    Eigen::VectorXd f = stationarity_residual(c, alpha);
    double norm = f.norm();
    int it = 0;
    for (; it < kMaxIterations && norm > tol; ++it) {
        const Eigen::VectorXd r = c.v2 + 2.0 * c.M_tilde * alpha;
        const double l = c.a1 + alpha.dot(c.v1);
        const Eigen::MatrixXd jac = 2.0 * c.v1 * r.transpose() - r * c.v1.transpose() - 2.0 * l * c.M_tilde;
        const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(-f);
        if (!step.allFinite()) break;
        double t = 1.0;
        bool accepted = false;
        for (int k = 0; k < kMaxHalvings; ++k, t *= 0.5) {
            Eigen::VectorXd trial = alpha + t * step;
            Eigen::VectorXd ft = stationarity_residual(c, trial);
            if (ft.allFinite() && ft.norm() < norm) {
                alpha = std::move(trial);
                f = std::move(ft);
                norm = f.norm();
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return {alpha, norm, it};
}

}  // namespace

MultiSourceCoeffs multi_source_coeffs(const ScalarContext& ctx, const ProblemSpec& spec, const Eigen::VectorXd& inner,
                                      const Eigen::MatrixXd& gram) {
    const Eigen::Index t = inner.size();
    if (t < 1) throw DomainError("multi-source coefficients need at least one source");
    if (gram.rows() != t || gram.cols() != t) throw ShapeError("Gram matrix must be T x T");
    const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw DomainError("Gram matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12 * scale) throw DomainError("Gram matrix is not positive semidefinite");

    const double mb2 = spec.norm_mu_beta * spec.norm_mu_beta;
    const double g1 = spec.gamma * (1.0 + ctx.delta_Q);
    const double lq = ctx.lambda_Q;
    const double h = ctx.h;
    const double T1 = mb2 / (h * lq) * ((mb2 + 1.0) / lq - 2.0 * (1.0 - h)) + (1.0 - h) / h;

    MultiSourceCoeffs c;
    c.a1 = mb2 / lq;
    c.v1 = g1 / lq * inner;
    c.a2 = T1 - c.a1 * c.a1;
    c.v2 = g1 / lq * (2.0 * ((mb2 + 1.0) / (h * lq) - (1.0 - h) / h) - 2.0 * mb2 / lq) * inner;
    const double spike = 1.0 / (lq * lq) + (mb2 / lq - 2.0) / (ctx.eta * lq);
    c.M_tilde = g1 * g1 * (1.0 - h) / h * (0.5 * (gram + gram.transpose()) / ctx.eta + spike * inner * inner.transpose());
    if (!(c.a2 > 0.0) || !std::isfinite(c.a2))
        throw RegimeError(RegimeError::Kind::NonPositiveA2, "source-free score variance a2 is not positive");
    return c;
}

double multi_objective(const MultiSourceCoeffs& c, const Eigen::VectorXd& alpha) {
    const double q = radicand(c, alpha);
    if (!(q > 0.0)) throw RegimeError(RegimeError::Kind::NonPositiveVariance, "multi-source variance is not positive");
    return (c.a1 + alpha.dot(c.v1)) / std::sqrt(q);
}

Eigen::VectorXd stationarity_residual(const MultiSourceCoeffs& c, const Eigen::VectorXd& alpha) {
    const double l = c.a1 + alpha.dot(c.v1);
    return 2.0 * radicand(c, alpha) * c.v1 - l * (c.v2 + 2.0 * c.M_tilde * alpha);
}

double stationarity_tolerance(const MultiSourceCoeffs& c) { return 1e-8 * (1.0 + c.v1.norm()); }

MultiAlphaSolution solve_multi_alpha(const MultiSourceCoeffs& c) {
    const Eigen::Index t = c.sources();
    Eigen::LLT<Eigen::MatrixXd> llt(c.M_tilde);
    if (llt.info() != Eigen::Success || (llt.matrixL().toDenseMatrix().diagonal().array() <= 0.0).any())
        throw DegenerateError("multi-source quadratic form is not positive definite");

    std::vector<Eigen::VectorXd> seeds;
    seeds.push_back(Eigen::VectorXd::Zero(t));
    Eigen::VectorXd single(t);
    for (Eigen::Index k = 0; k < t; ++k) {
        // Scalar optimum of source k used alone.
        const double den = c.v1[k] * c.v2[k] - 2.0 * c.a1 * c.M_tilde(k, k);
        single[k] = den != 0.0 ? (c.a1 * c.v2[k] - 2.0 * c.a2 * c.v1[k]) / den : 0.0;
    }
    if (single.allFinite()) seeds.push_back(single);

    const double tol = stationarity_tolerance(c);
    const double base = multi_objective(c, Eigen::VectorXd::Zero(t));
    bool found = false;
    bool found_minimum = false;
    MultiAlphaSolution best{Eigen::VectorXd::Zero(t), std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity(), 0};
    NewtonRun closest{Eigen::VectorXd::Zero(t), std::numeric_limits<double>::infinity(), 0};
    for (const auto& seed : seeds) {
        NewtonRun run = newton(c, seed, tol);
        if (run.residual < closest.residual) closest = run;
        if (run.residual > tol) continue;
        const double obj = multi_objective(c, run.alpha);
        if (obj < base) {
            found_minimum = true;
            continue;
        }
        if (!found || obj > best.objective) best = {run.alpha, run.residual, obj, run.iterations};
        found = true;
    }
    if (found) return best;
    if (found_minimum) throw DegenerateError("the only stationary point is a minimum of the margin");
    throw ConvergenceError("multi-source Newton solver did not converge", closest.alpha, closest.residual);
}

}  // namespace rmt
