#pragma once

#include <Eigen/Dense>

#include "rmt_transfer/theory.hpp"

namespace rmt {

// Target margin of w = w0 + gamma Q sum_t alpha_t w_t:
//   g(alpha) = (a1 + alpha^T v1) / sqrt(a2 + alpha^T v2 + alpha^T M alpha).
struct MultiSourceCoeffs {
    double a1;
    Eigen::VectorXd v1;
    double a2;
    Eigen::VectorXd v2;
    Eigen::MatrixXd M_tilde;

    Eigen::Index sources() const { return v1.size(); }
};

// inner[t] = <w_t, mu_beta>, gram = W^T W.
MultiSourceCoeffs multi_source_coeffs(const ScalarContext& ctx, const ProblemSpec& spec, const Eigen::VectorXd& inner,
                                      const Eigen::MatrixXd& gram);

double multi_objective(const MultiSourceCoeffs& c, const Eigen::VectorXd& alpha);

// Gradient of g vanishes iff 2 q(alpha) v1 - l(alpha) (v2 + 2 M alpha) = 0,
// with l the numerator and q the radicand of g.
Eigen::VectorXd stationarity_residual(const MultiSourceCoeffs& c, const Eigen::VectorXd& alpha);
double stationarity_tolerance(const MultiSourceCoeffs& c);

struct MultiAlphaSolution {
    Eigen::VectorXd alpha;
    double residual;
    double objective;
    int iterations;
};

// Damped Newton from alpha = 0 and from the per-source scalar optima.
MultiAlphaSolution solve_multi_alpha(const MultiSourceCoeffs& c);

}  // namespace rmt
