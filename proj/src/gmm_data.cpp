#include "rmt_transfer/gmm_data.hpp"

#include <cmath>
#include <string>

#include "rmt_transfer/errors.hpp"

namespace rmt {

LabeledDataset::LabeledDataset(Eigen::MatrixXd x, Eigen::VectorXd y)
    : features(std::move(x)), labels(std::move(y)) {
    if (features.cols() != labels.size())
        throw ShapeError("dataset has " + std::to_string(features.cols()) + " columns but " +
                         std::to_string(labels.size()) + " labels");
    for (Eigen::Index i = 0; i < labels.size(); ++i)
        if (labels[i] != 1.0 && labels[i] != -1.0)
            throw DomainError("label at index " + std::to_string(i) + " is not -1 or +1");
}

Eigen::Index LabeledDataset::count(double label) const { return (labels.array() == label).count(); }

namespace {

Eigen::VectorXd random_direction(int p, RandomSource& rng) {
    Eigen::VectorXd v(p);
    rng.fill_normal(v);
    return v;
}

}  // namespace

MeanPair make_orthogonal_means(int p, double norm_mu, double norm_perp, RandomSource& rng) {
    if (p < 1) throw DomainError("dimension must be positive");
    if (norm_mu < 0 || norm_perp < 0) throw DomainError("mean norms must be nonnegative");
    if (p == 1 && norm_mu > 0 && norm_perp > 0)
        throw DomainError("two nonzero orthogonal vectors need p >= 2");

    MeanPair out{Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p)};
    Eigen::VectorXd u = random_direction(p, rng);
    u.normalize();
    Eigen::VectorXd v = random_direction(p, rng);
    // Two passes keep the residual inner product at rounding level.
    for (int pass = 0; pass < 2; ++pass) v -= u.dot(v) * u;
    v.normalize();
    if (norm_mu > 0) out.mu = norm_mu * u;
    if (norm_perp > 0) out.mu_perp = norm_perp * (norm_mu > 0 ? v : u);
    return out;
}

Eigen::VectorXd mu_beta(const MeanPair& means, double beta, MixingMode mode) {
    if (mode == MixingMode::Additive) return beta * means.mu + means.mu_perp;
    if (std::abs(beta) > 1.0) throw DomainError("spherical mixing needs |beta| <= 1");
    return beta * means.mu + std::sqrt(1.0 - beta * beta) * means.mu_perp;
}

double mu_beta_norm_sq(double norm_mu, double norm_perp, double beta, MixingMode mode) {
    if (mode == MixingMode::Additive) return beta * beta * norm_mu * norm_mu + norm_perp * norm_perp;
    if (std::abs(beta) > 1.0) throw DomainError("spherical mixing needs |beta| <= 1");
    return beta * beta * norm_mu * norm_mu + (1.0 - beta * beta) * norm_perp * norm_perp;
}

LabeledDataset sample_class_data(int m, const Eigen::VectorXd& class_mean, RandomSource& rng) {
    if (m < 1) throw DomainError("sample count must be positive");
    const Eigen::Index p = class_mean.size();
    const int negatives = (m + 1) / 2;
    Eigen::MatrixXd x(p, m);
    rng.fill_normal(x);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
        y[i] = i < negatives ? -1.0 : 1.0;
        x.col(i) += y[i] * class_mean;
    }
    return LabeledDataset(std::move(x), std::move(y));
}

LabeledDataset subset(const LabeledDataset& data, const std::vector<Eigen::Index>& columns) {
    Eigen::MatrixXd x(data.dim(), static_cast<Eigen::Index>(columns.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (columns[k] < 0 || columns[k] >= data.size()) throw ShapeError("subset index out of range");
        x.col(static_cast<Eigen::Index>(k)) = data.features.col(columns[k]);
        y[static_cast<Eigen::Index>(k)] = data.labels[columns[k]];
    }
    return LabeledDataset(std::move(x), std::move(y));
}

}  // namespace rmt
