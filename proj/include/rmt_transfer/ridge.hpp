#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmt_transfer/gmm_data.hpp"

namespace rmt {

struct LinearClassifier {
    Eigen::VectorXd weights;
};

enum class SolveRoute { Auto, Primal, Dual };

// Applies Q = (X X^T / n + gamma I)^{-1} for a fixed target dataset.
// Keeps a reference to the dataset, which must outlive the resolvent.
// The dual route uses Woodbury: Q v = (v - X (n gamma I + X^T X)^{-1} X^T v) / gamma.
class TargetResolvent {
public:
    TargetResolvent(const LabeledDataset& target, double gamma, SolveRoute route = SolveRoute::Auto);

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    // (1/n) Q X y, the target-only ridge solution.
    Eigen::VectorXd ridge_solution() const;

    double gamma() const { return gamma_; }
    SolveRoute route() const { return route_; }

private:
    const LabeledDataset* target_;
    double gamma_;
    SolveRoute route_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

LinearClassifier train_ridge(const LabeledDataset& data, double gamma, SolveRoute route = SolveRoute::Auto);

// w_alpha = w0 + alpha * direction, with direction = gamma Q w_source.
struct FineTuneDirections {
    Eigen::VectorXd w0;
    Eigen::VectorXd direction;
    LinearClassifier at(double alpha) const { return {w0 + alpha * direction}; }
};

FineTuneDirections fine_tune_directions(const LinearClassifier& source, const TargetResolvent& q);

LinearClassifier fine_tune(const LinearClassifier& source, const LabeledDataset& target, double gamma,
                           double alpha);

// The adapter a = (1/n) Q (X y - alpha X X^T w_source), so that w_alpha = alpha w_source + a.
Eigen::VectorXd fine_tune_adapter(const LinearClassifier& source, const LabeledDataset& target, double gamma,
                                  double alpha);

LinearClassifier fine_tune_multi(const std::vector<LinearClassifier>& sources, const Eigen::VectorXd& alphas,
                                 const LabeledDataset& target, double gamma);

Eigen::VectorXd decision_scores(const LinearClassifier& model, const LabeledDataset& data);

// sign(w^T x) with sign(0) = +1.
Eigen::VectorXd predict(const LinearClassifier& model, const LabeledDataset& data);

double empirical_accuracy(const LinearClassifier& model, const LabeledDataset& test);
double accuracy_from_scores(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

// One line, p comma-separated weights in coordinate order.
void save_classifier_csv(const LinearClassifier& model, const std::string& path);
LinearClassifier load_classifier_csv(const std::string& path);

}  // namespace rmt
