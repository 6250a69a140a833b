#include "rmt_transfer/ridge.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rmt_transfer/dataset_io.hpp"
#include "rmt_transfer/errors.hpp"

namespace rmt {

namespace {

void check_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("ridge parameter must be positive and finite");
}

// Lower-triangular Gram A^T A / scale + shift I, factored.
Eigen::LLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& a, bool transpose, double scale, double shift) {
    const Eigen::Index k = transpose ? a.cols() : a.rows();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, k);
    if (transpose)
        g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose(), 1.0 / scale);
    else
        g.selfadjointView<Eigen::Lower>().rankUpdate(a, 1.0 / scale);
    g.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(g.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) throw DegenerateError("positive definite factorization failed (non-finite input?)");
    return llt;
}

SolveRoute resolve(SolveRoute route, Eigen::Index p, Eigen::Index m) {
    if (route != SolveRoute::Auto) return route;
    return p > m ? SolveRoute::Dual : SolveRoute::Primal;
}

void check_dim(const Eigen::VectorXd& w, const LabeledDataset& data) {
    if (w.size() != data.dim())
        throw ShapeError("classifier has dimension " + std::to_string(w.size()) + " but data has " +
                         std::to_string(data.dim()));
}

}  // namespace

TargetResolvent::TargetResolvent(const LabeledDataset& target, double gamma, SolveRoute route)
    : target_(&target), gamma_(gamma), route_(resolve(route, target.dim(), target.size())) {
    check_gamma(gamma);
    if (target.size() < 1) throw DomainError("target dataset is empty");
    const double n = static_cast<double>(target.size());
    if (route_ == SolveRoute::Primal)
        llt_ = factor_gram(target.features, false, n, gamma);
    else
        llt_ = factor_gram(target.features, true, 1.0, n * gamma);
}

Eigen::VectorXd TargetResolvent::apply(const Eigen::VectorXd& v) const {
    if (v.size() != target_->dim()) throw ShapeError("vector dimension does not match target data");
    if (route_ == SolveRoute::Primal) return llt_.solve(v);
    const Eigen::MatrixXd& x = target_->features;
    Eigen::VectorXd t = llt_.solve(x.transpose() * v);
    return (v - x * t) / gamma_;
}

Eigen::VectorXd TargetResolvent::ridge_solution() const {
    const Eigen::MatrixXd& x = target_->features;
    const double n = static_cast<double>(target_->size());
    if (route_ == SolveRoute::Primal) return llt_.solve(x * target_->labels) / n;
    // (1/n) X (X^T X / n + gamma I)^{-1} y = X (X^T X + n gamma I)^{-1} y
    return x * llt_.solve(target_->labels);
}

LinearClassifier train_ridge(const LabeledDataset& data, double gamma, SolveRoute route) {
    TargetResolvent q(data, gamma, route);
    return {q.ridge_solution()};
}

FineTuneDirections fine_tune_directions(const LinearClassifier& source, const TargetResolvent& q) {
    return {q.ridge_solution(), q.gamma() * q.apply(source.weights)};
}

LinearClassifier fine_tune(const LinearClassifier& source, const LabeledDataset& target, double gamma,
                           double alpha) {
    check_dim(source.weights, target);
    TargetResolvent q(target, gamma);
    return fine_tune_directions(source, q).at(alpha);
}

Eigen::VectorXd fine_tune_adapter(const LinearClassifier& source, const LabeledDataset& target, double gamma,
                                  double alpha) {
    check_dim(source.weights, target);
    TargetResolvent q(target, gamma);
    const Eigen::MatrixXd& x = target.features;
    const double n = static_cast<double>(target.size());
    Eigen::VectorXd rhs = x * target.labels - alpha * (x * (x.transpose() * source.weights));
    return q.apply(rhs) / n;
}

LinearClassifier fine_tune_multi(const std::vector<LinearClassifier>& sources, const Eigen::VectorXd& alphas,
                                 const LabeledDataset& target, double gamma) {
    if (sources.empty()) throw DomainError("multi-source fine-tuning needs at least one source");
    if (static_cast<Eigen::Index>(sources.size()) != alphas.size())
        throw ShapeError("number of sources and scaling parameters differ");
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(target.dim());
    for (std::size_t t = 0; t < sources.size(); ++t) {
        check_dim(sources[t].weights, target);
        mix += alphas[static_cast<Eigen::Index>(t)] * sources[t].weights;
    }
    TargetResolvent q(target, gamma);
    return {q.ridge_solution() + gamma * q.apply(mix)};
}

Eigen::VectorXd decision_scores(const LinearClassifier& model, const LabeledDataset& data) {
    check_dim(model.weights, data);
    return data.features.transpose() * model.weights;
}

Eigen::VectorXd predict(const LinearClassifier& model, const LabeledDataset& data) {
    return decision_scores(model, data).unaryExpr([](double s) { return s >= 0.0 ? 1.0 : -1.0; });
}

double accuracy_from_scores(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    if (scores.size() == 0) throw DomainError("accuracy of an empty test set");
    if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        correct += ((scores[i] >= 0.0 ? 1.0 : -1.0) == labels[i]) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double empirical_accuracy(const LinearClassifier& model, const LabeledDataset& test) {
    if (test.size() == 0) throw DomainError("accuracy of an empty test set");
    return accuracy_from_scores(decision_scores(model, test), test.labels);
}

void save_classifier_csv(const LinearClassifier& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (Eigen::Index i = 0; i < model.weights.size(); ++i) {
        if (i) out << ',';
        out << format_double(model.weights[i]);
    }
    out << '\n';
    if (!out) throw IoError("write failed: " + path);
}

LinearClassifier load_classifier_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) values.push_back(parse_double(cell, path));
    if (values.empty()) throw IoError("no weights in " + path);
    LinearClassifier out{Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))};
    if (!out.weights.allFinite()) throw IoError("non-finite weight in " + path);
    return out;
}

}  // namespace rmt
