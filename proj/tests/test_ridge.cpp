#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "rmt_transfer/errors.hpp"
#include "rmt_transfer/gmm_data.hpp"
#include "rmt_transfer/ridge.hpp"
#include "rmt_transfer/rng.hpp"

using namespace rmt;

namespace {

LabeledDataset draw(int p, int m, std::uint64_t seed) {
    RandomSource r(seed);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    mean[0] = 1.0;
    return sample_class_data(m, mean, r);
}

// Direct oracle: solve (X X^T / n + gamma I) w = X y / n with a full-pivot LU.
Eigen::VectorXd direct_ridge(const LabeledDataset& d, double gamma) {
    const double n = static_cast<double>(d.size());
    const Eigen::MatrixXd a =
        d.features * d.features.transpose() / n + gamma * Eigen::MatrixXd::Identity(d.dim(), d.dim());
    return a.fullPivLu().solve(d.features * d.labels / n);
}

}  // namespace

TEST(Ridge, HandComputedTwoByTwo) {
    // X = [[1, -1], [0, 2]], y = (1, -1), gamma = 1:
    // X X^T / 2 + I = [[2, -1], [-1, 3]], X y / 2 = (1, -1), so w = (0.4, -0.2).
    Eigen::MatrixXd x(2, 2);
    x << 1, -1, 0, 2;
    Eigen::VectorXd y(2);
    y << 1, -1;
    const LabeledDataset d(x, y);
    for (SolveRoute route : {SolveRoute::Primal, SolveRoute::Dual}) {
        const LinearClassifier w = train_ridge(d, 1.0, route);
        EXPECT_NEAR(w.weights[0], 0.4, 1e-15);
        EXPECT_NEAR(w.weights[1], -0.2, 1e-15);
    }
}

TEST(Ridge, PrimalAndDualAgreeWithDirectSolve) {
    for (auto [p, m] : {std::pair{30, 80}, std::pair{80, 30}}) {
        const LabeledDataset d = draw(p, m, 100 + p);
        const Eigen::VectorXd oracle = direct_ridge(d, 0.3);
        const Eigen::VectorXd primal = train_ridge(d, 0.3, SolveRoute::Primal).weights;
        const Eigen::VectorXd dual = train_ridge(d, 0.3, SolveRoute::Dual).weights;
        EXPECT_LE((primal - oracle).norm(), 1e-10 * oracle.norm());
        EXPECT_LE((dual - oracle).norm(), 1e-10 * oracle.norm());
    }
}

TEST(Ridge, AutoRoutePicksDualWhenWide) {
    const LabeledDataset wide = draw(50, 10, 1);
    const LabeledDataset tall = draw(10, 50, 2);
    EXPECT_EQ(TargetResolvent(wide, 1.0).route(), SolveRoute::Dual);
    EXPECT_EQ(TargetResolvent(tall, 1.0).route(), SolveRoute::Primal);
}

TEST(Ridge, ResolventRoutesAgree) {
    const LabeledDataset d = draw(40, 25, 3);
    const TargetResolvent primal(d, 0.5, SolveRoute::Primal), dual(d, 0.5, SolveRoute::Dual);
    RandomSource r(4);
    Eigen::VectorXd v(40);
    for (auto& x : v) x = r.normal();
    EXPECT_LE((primal.apply(v) - dual.apply(v)).norm(), 1e-11 * v.norm());
}

TEST(Ridge, RejectsNonPositiveGamma) {
    const LabeledDataset d = draw(5, 5, 1);
    EXPECT_THROW(train_ridge(d, 0.0), Error);
    EXPECT_THROW(train_ridge(d, -1.0), Error);
}

TEST(FineTune, ZeroAlphaIsTargetRidge) {
    const LabeledDataset src = draw(30, 60, 5), tgt = draw(30, 20, 6);
    const LinearClassifier ws = train_ridge(src, 2.0);
    EXPECT_LE((fine_tune(ws, tgt, 0.1, 0.0).weights - train_ridge(tgt, 0.1).weights).norm(), 1e-12);
}

TEST(FineTune, EqualsScaledSourcePlusAdapter) {
    // w_alpha = w + alpha gamma Q w_source = alpha w_source + a.
    const LabeledDataset src = draw(30, 60, 7), tgt = draw(30, 20, 8);
    const LinearClassifier ws = train_ridge(src, 1.0);
    for (double alpha : {-1.0, 0.5, 3.0}) {
        const Eigen::VectorXd lhs = fine_tune(ws, tgt, 0.2, alpha).weights;
        const Eigen::VectorXd rhs = alpha * ws.weights + fine_tune_adapter(ws, tgt, 0.2, alpha);
        EXPECT_LE((lhs - rhs).norm(), 1e-10 * lhs.norm());
    }
}

TEST(FineTune, MultiWithOneSourceMatchesScalar) {
    const LabeledDataset src = draw(20, 60, 9), tgt = draw(20, 30, 10);
    const LinearClassifier ws = train_ridge(src, 1.0);
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 1.7);
    EXPECT_LE((fine_tune_multi({ws}, a, tgt, 0.5).weights - fine_tune(ws, tgt, 0.5, 1.7).weights).norm(), 1e-12);
    EXPECT_THROW(fine_tune_multi({ws, ws}, a, tgt, 0.5), ShapeError);
}

TEST(Predict, ZeroScoreIsPositive) {
    const LabeledDataset d = draw(4, 6, 11);
    const LinearClassifier zero{Eigen::VectorXd::Zero(4)};
    EXPECT_EQ(predict(zero, d), Eigen::VectorXd::Ones(6));
    EXPECT_DOUBLE_EQ(empirical_accuracy(zero, d), 0.5);
}

TEST(Predict, AccuracyFromScores) {
    Eigen::VectorXd s(4), y(4);
    s << -1, 2, 0, -0.5;
    y << -1, 1, -1, 1;
    EXPECT_DOUBLE_EQ(accuracy_from_scores(s, y), 0.5);
}

TEST(ClassifierCsv, RoundTripIsExact) {
    const LabeledDataset d = draw(15, 40, 12);
    const LinearClassifier w = train_ridge(d, 0.7);
    const auto path = (std::filesystem::temp_directory_path() / "rmt_classifier_roundtrip.csv").string();
    save_classifier_csv(w, path);
    EXPECT_EQ(load_classifier_csv(path).weights, w.weights);
    std::remove(path.c_str());
}
