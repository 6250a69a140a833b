#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmt_transfer/theory.hpp"

namespace rmt {

struct DetEquivMatrices {
    Eigen::MatrixXd Q_bar;  // ((mu_beta mu_beta^T + I) / (1 + delta_Q) + gamma I)^{-1}
    Eigen::MatrixXd R_bar;  // ((mu mu^T + I) / (1 + delta_R) + gamma_tilde I)^{-1}
};

// Explicit p x p matrices; intended for moderate p.
DetEquivMatrices det_equiv_matrices(const ProblemSpec& spec, const MeanPair& means, MixingMode mode);

struct IdentityCheck {
    std::string name;
    std::string family;  // "trace", "relevant", "commutativity" or "supplementary"
    double closed_form;
    double explicit_value;
    double rel_error;
    double tolerance;
    bool pass;
};

// Compares every closed form with its explicit-matrix value. delta_offset is
// added to delta_Q and delta_R on the closed-form side only (negative control).
std::vector<IdentityCheck> evaluate_identities(const ProblemSpec& spec, const MeanPair& means, MixingMode mode,
                                               double delta_offset = 0.0);

}  // namespace rmt
