#include <gtest/gtest.h>

#include <algorithm>

#include "rmt_transfer/det_equiv.hpp"
#include "rmt_transfer/rng.hpp"

using namespace rmt;

namespace {

ProblemSpec acceptance_spec() {
    return ProblemSpec::from_norms(200, 100, 400, 1.5, 1.0, 0.5, MixingMode::Additive, 1.0, 1.0);
}

MeanPair means_for(int p, double mu, double perp) {
    RandomSource r(7);
    return make_orthogonal_means(p, mu, perp, r);
}

const IdentityCheck& find(const std::vector<IdentityCheck>& rows, const std::string& name) {
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const IdentityCheck& c) { return c.name == name; });
    if (it == rows.end()) throw std::runtime_error("missing row " + name);
    return *it;
}

}  // namespace

TEST(DetEquiv, MatricesMatchTheirDefinitions) {
    const ProblemSpec s = acceptance_spec();
    const MeanPair m = means_for(s.p, s.norm_mu, 1.0);
    const ScalarContext c = build_context(s);
    const DetEquivMatrices d = det_equiv_matrices(s, m, MixingMode::Additive);
    const Eigen::VectorXd mb = mu_beta(m, s.beta, MixingMode::Additive);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(s.p, s.p);
    const Eigen::MatrixXd q =
        ((mb * mb.transpose() + id) / (1 + c.delta_Q) + s.gamma * id).fullPivLu().inverse();
    const Eigen::MatrixXd r =
        ((m.mu * m.mu.transpose() + id) / (1 + c.delta_R) + s.gamma_tilde * id).fullPivLu().inverse();
    EXPECT_LE((d.Q_bar - q).norm(), 1e-12 * q.norm());
    EXPECT_LE((d.R_bar - r).norm(), 1e-12 * r.norm());
}

TEST(DetEquiv, TraceEqualsDeltaWithoutSpike) {
    const ProblemSpec s = ProblemSpec::from_norms(150, 60, 300, 0.0, 0.0, 0.0, MixingMode::Additive, 0.7, 1.3);
    const DetEquivMatrices d = det_equiv_matrices(s, means_for(150, 0.0, 0.0), MixingMode::Additive);
    const ScalarContext c = build_context(s);
    EXPECT_NEAR(d.Q_bar.trace() / s.n, c.delta_Q, 1e-10);
    EXPECT_NEAR(d.R_bar.trace() / s.N, c.delta_R, 1e-10);
}

TEST(DetEquiv, RelevantAndCommutativityIdentitiesHold) {
    const ProblemSpec s = acceptance_spec();
    for (const auto& row : evaluate_identities(s, means_for(s.p, 1.5, 1.0), MixingMode::Additive))
        if (row.family == "relevant" || row.family == "commutativity") EXPECT_TRUE(row.pass) << row.name;
}

TEST(DetEquiv, CorrectedMixedQuadraticFormFrozen) {
    const ProblemSpec s = acceptance_spec();
    const auto rows = evaluate_identities(s, means_for(s.p, 1.5, 1.0), MixingMode::Additive);
    const IdentityCheck& r = find(rows, "relevant.mu_rq2r_mu");
    EXPECT_NEAR(r.explicit_value, 0.072767076345055, 1e-12);
    EXPECT_TRUE(r.pass);
}

TEST(DetEquiv, TraceIdentitiesCarryAnInverseDimensionGap) {
    // The limiting trace forms hold up to a rank-one spike term of order 1/p.
    const ProblemSpec s = acceptance_spec();
    const auto rows = evaluate_identities(s, means_for(s.p, 1.5, 1.0), MixingMode::Additive);
    for (const char* name : {"trace.q_sigma_beta", "trace.r_sigma", "trace.rq_squared"}) {
        const IdentityCheck& r = find(rows, name);
        EXPECT_GT(r.rel_error, 1e-4) << name;
        EXPECT_LT(r.rel_error, 5e-2) << name;
        EXPECT_TRUE(find(rows, std::string(name) + ".finite_p").pass) << name;
    }
    EXPECT_TRUE(find(rows, "trace.q_sigma_beta.error_ratio_2p").pass);
}

TEST(DetEquiv, ZeroMeansMakeEverythingExact) {
    const ProblemSpec s = ProblemSpec::from_norms(200, 100, 400, 0.0, 0.0, 0.5, MixingMode::Additive, 1.0, 1.0);
    for (const auto& row : evaluate_identities(s, means_for(200, 0.0, 0.0), MixingMode::Additive))
        if (row.family != "supplementary") EXPECT_TRUE(row.pass) << row.name << " " << row.rel_error;
}

TEST(DetEquiv, CorruptedDeltaFailsTheSuite) {
    const ProblemSpec s = acceptance_spec();
    const auto rows = evaluate_identities(s, means_for(s.p, 1.5, 1.0), MixingMode::Additive, 0.1);
    const auto failures = std::count_if(rows.begin(), rows.end(), [](const IdentityCheck& c) {
        return c.family == "relevant" && !c.pass;
    });
    EXPECT_GE(failures, 5);
}
