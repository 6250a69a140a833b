#include "rmt_transfer/estimation.hpp"

#include <cmath>

#include "rmt_transfer/errors.hpp"

namespace rmt {

namespace {

struct ClassMoments {
    Eigen::VectorXd half_difference;
    double bias;
};

ClassMoments class_moments(const LabeledDataset& data) {
    const Eigen::Index plus = data.count(1.0);
    const Eigen::Index minus = data.size() - plus;
    if (plus == 0 || minus == 0) throw DomainError("estimation needs both classes in every dataset");
    Eigen::VectorXd sum_plus = Eigen::VectorXd::Zero(data.dim());
    Eigen::VectorXd sum_minus = Eigen::VectorXd::Zero(data.dim());
    for (Eigen::Index j = 0; j < data.size(); ++j) {
        if (data.labels[j] > 0)
            sum_plus += data.features.col(j);
        else
            sum_minus += data.features.col(j);
    }
    ClassMoments m;
    m.half_difference = 0.5 * (sum_plus / static_cast<double>(plus) - sum_minus / static_cast<double>(minus));
    m.bias = 0.25 * static_cast<double>(data.dim()) * (1.0 / plus + 1.0 / minus);
    return m;
}

}  // namespace

LabeledDataset StandardTransform::apply(const LabeledDataset& data) const {
    if (data.dim() != mean.size()) throw ShapeError("transform dimension does not match dataset");
    Eigen::MatrixXd x = (data.features.colwise() - mean).array().colwise() / scale.array();
    return LabeledDataset(std::move(x), data.labels);
}

StandardTransform fit_standardizer(const LabeledDataset& train) {
    if (train.size() == 0) throw DomainError("cannot standardize with an empty training set");
    StandardTransform t;
    t.mean = train.features.rowwise().mean();
    const Eigen::MatrixXd centered = train.features.colwise() - t.mean;
    t.scale = (centered.array().square().rowwise().sum() / static_cast<double>(train.size())).sqrt();
    for (Eigen::Index i = 0; i < t.scale.size(); ++i)
        if (!(t.scale[i] > 0.0)) t.scale[i] = 1.0;
    return t;
}

Standardized standardize(const LabeledDataset& train, const std::vector<LabeledDataset>& others) {
    Standardized s;
    s.transform = fit_standardizer(train);
    s.train = s.transform.apply(train);
    for (const auto& d : others) s.others.push_back(s.transform.apply(d));
    return s;
}

EstimatedSpec estimate_spec(const LabeledDataset& source, const LabeledDataset& target) {
    if (source.dim() != target.dim()) throw ShapeError("source and target dimensions differ");
    const ClassMoments s = class_moments(source);
    const ClassMoments t = class_moments(target);

    EstimatedSpec e;
    e.p = static_cast<int>(source.dim());
    e.source_size = static_cast<int>(source.size());
    e.target_size = static_cast<int>(target.size());
    e.raw_inner = s.half_difference.dot(t.half_difference);

    double mu2 = s.half_difference.squaredNorm() - s.bias;
    double mb2 = t.half_difference.squaredNorm() - t.bias;
    if (mu2 <= 0.0) {
        mu2 = 0.0;
        e.clamped = true;
    }
    if (mb2 < 0.0) {
        mb2 = 0.0;
        e.clamped = true;
    }
    e.beta_hat = mu2 > 0.0 ? e.raw_inner / mu2 : 0.0;
    double perp2 = mb2 - e.beta_hat * e.beta_hat * mu2;
    if (perp2 < 0.0) {
        // Keep |beta| ||mu|| <= ||mu_beta|| for the downstream spec.
        perp2 = 0.0;
        mb2 = e.beta_hat * e.beta_hat * mu2;
        e.clamped = true;
    }
    e.norm_mu_hat = std::sqrt(mu2);
    e.norm_mu_beta_hat = std::sqrt(mb2);
    e.norm_perp_hat = std::sqrt(perp2);
    return e;
}

PluginResult plugin_optimal_alpha(const LabeledDataset& source, const LabeledDataset& target, double gamma,
                                  double gamma_tilde, int target_train_size, T3Variant variant) {
    PluginResult r{};
    r.estimate = estimate_spec(source, target);
    r.spec.p = r.estimate.p;
    r.spec.n = target_train_size > 0 ? target_train_size : r.estimate.target_size;
    r.spec.N = r.estimate.source_size;
    r.spec.norm_mu = r.estimate.norm_mu_hat;
    r.spec.norm_mu_beta = r.estimate.norm_mu_beta_hat;
    r.spec.beta = r.estimate.beta_hat;
    r.spec.gamma = gamma;
    r.spec.gamma_tilde = gamma_tilde;
    r.spec.validate();
    if (r.estimate.clamped || std::abs(r.estimate.beta_hat) < 0.01) {
        r.alpha = 0.0;
        r.no_transfer = true;
        return r;
    }
    const AlphaChoice a = optimal_alpha(build_context(r.spec), r.spec, variant);
    r.alpha = a.alpha;
    r.no_transfer = a.no_transfer;
    return r;
}

}  // namespace rmt
