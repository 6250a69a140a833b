#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rmt_transfer/gmm_data.hpp"
#include "rmt_transfer/theory.hpp"

namespace rmt {

// Per-feature (x - mean) / scale; scale is the population std, or 1 for constant features.
struct StandardTransform {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    LabeledDataset apply(const LabeledDataset& data) const;
};

struct Standardized {
    LabeledDataset train;
    std::vector<LabeledDataset> others;
    StandardTransform transform;
};

StandardTransform fit_standardizer(const LabeledDataset& train);
Standardized standardize(const LabeledDataset& train, const std::vector<LabeledDataset>& others);

struct EstimatedSpec {
    int p = 0;
    int source_size = 0;
    int target_size = 0;
    double raw_inner = 0.0;  // <mu_hat_source, mu_hat_target>
    double norm_mu_hat = 0.0;
    double norm_mu_beta_hat = 0.0;
    double norm_perp_hat = 0.0;
    double beta_hat = 0.0;
    bool clamped = false;
};

// Half the difference of class means, with the noise bias p/4 (1/m+ + 1/m-)
// removed from squared norms.
EstimatedSpec estimate_spec(const LabeledDataset& source, const LabeledDataset& target);

struct PluginResult {
    double alpha;
    bool no_transfer;
    EstimatedSpec estimate;
    ProblemSpec spec;
};

// target_train_size is the n used for training when the target dataset is a
// larger estimation pool; 0 means the whole target dataset.
PluginResult plugin_optimal_alpha(const LabeledDataset& source, const LabeledDataset& target, double gamma,
                                  double gamma_tilde, int target_train_size = 0,
                                  T3Variant variant = T3Variant::SourceAveraged);

}  // namespace rmt
