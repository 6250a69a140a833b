#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rmt_transfer/rng.hpp"

namespace rmt {

// Features are stored one sample per column (p x m).
struct LabeledDataset {
    Eigen::MatrixXd features;
    Eigen::VectorXd labels;

    LabeledDataset() = default;
    LabeledDataset(Eigen::MatrixXd x, Eigen::VectorXd y);  // validates shape and labels

    Eigen::Index dim() const { return features.rows(); }
    Eigen::Index size() const { return features.cols(); }
    Eigen::Index count(double label) const;
};

struct MeanPair {
    Eigen::VectorXd mu;
    Eigen::VectorXd mu_perp;
};

enum class MixingMode { Additive, SphericalInterp };

MeanPair make_orthogonal_means(int p, double norm_mu, double norm_perp, RandomSource& rng);

// Additive: beta*mu + mu_perp. SphericalInterp: beta*mu + sqrt(1-beta^2)*mu_perp.
Eigen::VectorXd mu_beta(const MeanPair& means, double beta, MixingMode mode);

// Squared norm of mu_beta implied by the two norms, without building vectors.
double mu_beta_norm_sq(double norm_mu, double norm_perp, double beta, MixingMode mode);

// First ceil(m/2) columns carry label -1 and mean -class_mean, the rest +1 and +class_mean.
LabeledDataset sample_class_data(int m, const Eigen::VectorXd& class_mean, RandomSource& rng);

LabeledDataset subset(const LabeledDataset& data, const std::vector<Eigen::Index>& columns);

}  // namespace rmt
