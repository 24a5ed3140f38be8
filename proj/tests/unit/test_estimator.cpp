#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ctlqr/errors.hpp"
#include "ctlqr/estimator.hpp"
#include "ctlqr/presets.hpp"
#include "ctlqr/riccati.hpp"
#include "support.hpp"

using namespace ctlqr;
using estimator::EstimatorState;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
Vector vec1(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST(Accumulate, ZeroRegressorOnlyAdvancesTime) {
    auto s = EstimatorState::make(2, 1, 2, 1.2, 1.0);
    estimator::accumulate(s, Vector::Zero(2), Vector::Zero(1), Eigen::Vector2d(0.3, -0.1), Eigen::Vector2d(1, 1), 0.2);
    EXPECT_EQ(s.gram.norm(), 0.0);
    EXPECT_EQ(s.cross.norm(), 0.0);
    EXPECT_EQ(s.noise_cross.norm(), 0.0);
    EXPECT_DOUBLE_EQ(s.elapsed, 0.2);
}

TEST(Accumulate, ScalarArithmetic) {
    auto s = EstimatorState::make(1, 1, 1, 1.2, 1.0);
    estimator::accumulate(s, vec1(1.0), vec1(0.0), vec1(0.5), vec1(0.0), 0.1);
    EXPECT_DOUBLE_EQ(s.gram(0, 0), 0.1);
    EXPECT_DOUBLE_EQ(s.cross(0, 0), 0.5);
    EXPECT_EQ(s.gram(1, 1), 0.0);
    EXPECT_EQ(s.cross(1, 0), 0.0);
}

TEST(Accumulate, ConstantRegressorSteps) {
    auto a = EstimatorState::make(2, 1, 1, 1.2, 1.0);
    auto b = a;
    const Vector x = Eigen::Vector2d(0.7, -1.3), u = vec1(0.4);
    estimator::accumulate(a, x, u, Eigen::Vector2d(0.1, 0.2), vec1(0.3), 0.05);
    estimator::accumulate(a, x, u, Eigen::Vector2d(-0.4, 0.6), vec1(-0.1), 0.15);
    estimator::accumulate(b, x, u, Eigen::Vector2d(-0.3, 0.8), vec1(0.2), 0.2);
    EXPECT_LT((a.gram - b.gram).norm(), 1e-15);
    EXPECT_LT((a.cross - b.cross).norm(), 1e-15);
    EXPECT_LT((a.noise_cross - b.noise_cross).norm(), 1e-15);
}

TEST(Accumulate, Errors) {
    auto s = EstimatorState::make(1, 1, 1, 1.2, 1.0);
    EXPECT_THROW(estimator::accumulate(s, vec1(1), vec1(0), vec1(0), vec1(0), 0.0), ValueError);
    EXPECT_THROW(estimator::accumulate(s, Vector::Zero(2), vec1(0), vec1(0), vec1(0), 0.1), DimensionError);
    EXPECT_THROW(EstimatorState::make(1, 1, 1, 1.0, 1.0), ValueError);
}

TEST(AccumulateLog, MatchesStepwise) {
    const auto [model, cost] = harness::x29a_preset();
    const auto sol = riccati::care_solve(model, cost);
    const auto path = sde::make_path(4, 3.0, 0.01, 4, 4);
    const auto log = sde::simulate(model, cost, {{0.0, sol.K, 0}}, Vector::Ones(4), path);
    auto bulk = EstimatorState::make(4, 2, 4, 1.2, 1.0);
    auto step = bulk;
    estimator::accumulate_log(bulk, log, path, 0, 120);
    estimator::accumulate_log(bulk, log, path, 120, log.steps());
    for (Eigen::Index k = 0; k < log.steps(); ++k) {
        estimator::accumulate(step, log.states.col(k), log.actions.col(k), log.states.col(k + 1) - log.states.col(k),
                              path.increments.col(k), log.dt);
    }
    EXPECT_LT((bulk.gram - step.gram).norm(), 1e-12 * step.gram.norm());
    EXPECT_LT((bulk.cross - step.cross).norm(), 1e-12 * step.cross.norm());
    EXPECT_LT((bulk.noise_cross - step.noise_cross).norm(), 1e-12 * step.noise_cross.norm());
    EXPECT_NEAR(bulk.elapsed, 3.0, 1e-12);
}

// Noiseless a = 1, b = 0 with u = 0: left-endpoint sums give sum x_k^2 (e^{dt} - 1) over
// sum x_k^2 dt, so the estimate is (e^{dt} - 1) / dt exactly.
TEST(LeastSquares, NoiselessScalarRecovery) {
    const auto model = DynamicsModel::make(scalar(1.0), scalar(0.0), scalar(0.0));
    const auto cost = CostSpec::make(scalar(1), scalar(1));
    for (double dt : {1e-3, 1e-6}) {
        const auto path = sde::make_path(1, 1.0, dt, 1, 1);
        const auto log = sde::simulate(model, cost, {{0.0, scalar(0.0), 0}}, vec1(1.0), path);
        auto s = EstimatorState::make(1, 1, 1, 1.2, 0.0);
        estimator::accumulate_log(s, log, path, 0, log.steps());
        const auto est = estimator::least_squares(s);
        EXPECT_NEAR(est.A_hat(0, 0), std::expm1(dt) / dt, 1e-9);
        EXPECT_EQ(est.B_hat(0, 0), 0.0);
        if (dt <= 1e-6) EXPECT_NEAR(est.A_hat(0, 0), 1.0, 1e-6);
        EXPECT_LE(std::abs(est.A_hat(0, 0) - 1.0), dt);
    }
}

TEST(LeastSquares, ZeroDataGivesZero) {
    const auto s = EstimatorState::make(3, 2, 3, 1.2, 1.0);
    const auto est = estimator::least_squares(s);
    EXPECT_EQ(est.A_hat.norm(), 0.0);
    EXPECT_EQ(est.B_hat.norm(), 0.0);
    EXPECT_EQ(est.A_hat.rows(), 3);
    EXPECT_EQ(est.B_hat.cols(), 2);
}

TEST(LeastSquares, ExactDataIdentity) {
    std::mt19937_64 rng(1);
    auto s = EstimatorState::make(3, 2, 3, 1.2, 1.0);
    const Matrix theta = ctlqr::testing::random_matrix(rng, 3, 5);
    const Matrix G = ctlqr::testing::random_matrix(rng, 5, 5);
    s.gram = G * G.transpose() + 0.1 * Matrix::Identity(5, 5);
    s.cross = s.gram * theta.transpose();
    const auto est = estimator::least_squares(s);
    EXPECT_LT((est.pair().stacked() - theta).norm(), 1e-10);
}

TEST(LeastSquares, RankDeficientIsMinimumNorm) {
    auto s = EstimatorState::make(1, 1, 1, 1.2, 1.0);
    // Collinear regressors u = -2 x.
    for (int k = 0; k < 10; ++k) {
        const double x = 1.0 + 0.1 * k;
        estimator::accumulate(s, vec1(x), vec1(-2.0 * x), vec1(0.01 * x), vec1(0.0), 0.01);
    }
    const auto est = estimator::least_squares(s);
    // Any theta with a - 2 b = 1 fits; the minimum-norm one is (1, -2) / 5.
    EXPECT_NEAR(est.A_hat(0, 0), 0.2, 1e-12);
    EXPECT_NEAR(est.B_hat(0, 0), -0.4, 1e-12);
}

TEST(RandomizationSigma, Examples) {
    EXPECT_EQ(estimator::randomization_sigma(0, 1.2, 1.0), 0.0);
    EXPECT_NEAR(estimator::randomization_sigma(1, 1.2, 1.0), 0.95545, 1e-5);
    EXPECT_NEAR(estimator::randomization_sigma(1, 1.2, 1.0), std::pow(1.0 / 1.2, 0.25), 1e-15);
    EXPECT_NEAR(estimator::randomization_sigma(4, 2.0, 1.0), 0.70711, 1e-5);
    EXPECT_NEAR(estimator::randomization_sigma(4, 2.0, 3.0), 3.0 * std::sqrt(0.5), 1e-14);
    EXPECT_THROW(estimator::randomization_sigma(-1, 1.2, 1.0), ValueError);
    EXPECT_THROW(estimator::randomization_sigma(1, 1.0, 1.0), ValueError);
}

TEST(RandomizationSigma, ScheduleModes) {
    auto s = EstimatorState::make(1, 1, 1, 1.2, 0.7, estimator::ScheduleMode::persistent);
    for (int n : {0, 1, 10, 30}) EXPECT_EQ(estimator::schedule_sigma(s, n), 0.7);
    s.mode = estimator::ScheduleMode::decaying;
    EXPECT_EQ(estimator::schedule_sigma(s, 5), estimator::randomization_sigma(5, 1.2, 0.7));
}

TEST(RandomizationMatrix, EntryMoments) {
    std::mt19937_64 rng(2);
    const double sigma = estimator::randomization_sigma(3, 1.2, 1.0);
    double s = 0.0, s2 = 0.0;
    long count = 0;
    while (count < 100000) {
        const Matrix G = estimator::randomization_matrix(rng, 4, 6, sigma);
        s += G.sum();
        s2 += G.squaredNorm();
        count += G.size();
    }
    const double mean = s / count;
    const double sd = std::sqrt(s2 / count - mean * mean);
    EXPECT_NEAR(sd / sigma, 1.0, 0.01);
    EXPECT_NEAR(mean, 0.0, 4.0 * sigma / std::sqrt(double(count)));
}

namespace {

// State whose least-squares answer is exactly the X-29A truth.
EstimatorState exact_state(const DynamicsModel& model, double sigma0) {
    auto s = EstimatorState::make(4, 2, 4, 1.2, sigma0);
    s.gram = Matrix::Identity(6, 6);
    s.cross = ParameterPair::of(model).stacked().transpose();
    return s;
}

}  // namespace

TEST(RandomizedEstimate, NoRandomizationIsLeastSquares) {
    const auto [model, cost] = harness::x29a_preset();
    const auto oracle = margin::StabilizationOracle::make(model, cost);
    std::mt19937_64 rng(3);
    const auto s = exact_state(model, 0.0);
    const auto est = estimator::randomized_estimate(s, 7, rng, oracle);
    const auto ls = estimator::least_squares(s);
    EXPECT_FALSE(est.projected);
    EXPECT_EQ(est.A_hat, ls.A_hat);
    EXPECT_EQ(est.B_hat, ls.B_hat);
    EXPECT_EQ(est.episode, 7);
}

TEST(RandomizedEstimate, EpisodeZeroHasNoPerturbation) {
    const auto [model, cost] = harness::x29a_preset();
    const auto oracle = margin::StabilizationOracle::make(model, cost);
    std::mt19937_64 rng(4);
    const auto s = exact_state(model, 5.0);
    const auto est = estimator::randomized_estimate(s, 0, rng, oracle);
    EXPECT_LT((est.pair().stacked() - ParameterPair::of(model).stacked()).norm(), 1e-14);
}

TEST(RandomizedEstimate, PerturbationHasScheduledSpread) {
    const auto [model, cost] = harness::x29a_preset();
    const auto oracle =
        margin::StabilizationOracle::make(model, cost, std::nullopt, std::nullopt, margin::OracleRule::closed_loop);
    std::mt19937_64 rng(5);
    const double sigma0 = 0.02;
    const auto s = exact_state(model, sigma0);
    const int n = 3;
    const double sigma = estimator::randomization_sigma(n, 1.2, sigma0);
    double s2 = 0.0;
    long count = 0;
    for (int k = 0; k < 800; ++k) {
        const auto est = estimator::randomized_estimate(s, n, rng, oracle);
        ASSERT_FALSE(est.projected);
        ASSERT_TRUE(margin::oracle_contains(oracle, est.pair()));
        s2 += (est.pair().stacked() - ParameterPair::of(model).stacked()).squaredNorm();
        count += 24;
    }
    EXPECT_NEAR(std::sqrt(s2 / count) / sigma, 1.0, 0.02);
}

TEST(RandomizedEstimate, LargeNoiseIsProjected) {
    const auto [model, cost] = harness::x29a_preset();
    const auto oracle = margin::StabilizationOracle::make(model, cost);
    std::mt19937_64 rng(6);
    const auto s = exact_state(model, 1.0);
    const auto est = estimator::randomized_estimate(s, 1, rng, oracle);
    EXPECT_TRUE(est.projected);
    EXPECT_TRUE(margin::oracle_contains(oracle, est.pair()));
}

TEST(EstimationError, Examples) {
    const auto [model, cost] = harness::x29a_preset();
    estimator::ParameterEstimate est{model.A, model.B, 0, false};
    EXPECT_EQ(estimator::estimation_error(est, model), 0.0);
    est.A_hat = model.A + 0.1 * Matrix::Identity(4, 4);
    EXPECT_NEAR(estimator::estimation_error(est, model), 0.1, 1e-14);
}

TEST(EstimationError, TriangleInequality) {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k) {
        const ParameterPair t1{ctlqr::testing::random_matrix(rng, 3, 3), ctlqr::testing::random_matrix(rng, 3, 2)};
        const ParameterPair t2{ctlqr::testing::random_matrix(rng, 3, 3), ctlqr::testing::random_matrix(rng, 3, 2)};
        const ParameterPair t3{ctlqr::testing::random_matrix(rng, 3, 3), ctlqr::testing::random_matrix(rng, 3, 2)};
        EXPECT_LE(parameter_distance(t1, t3), parameter_distance(t1, t2) + parameter_distance(t2, t3) + 1e-12);
    }
}

TEST(SelfNormalizedRatio, ZeroCases) {
    auto s = EstimatorState::make(2, 1, 2, 1.2, 1.0);
    EXPECT_EQ(estimator::self_normalized_ratio(s), 0.0);
    s.gram = Matrix::Identity(3, 3) * 5.0;
    EXPECT_EQ(estimator::self_normalized_ratio(s), 0.0);
}

TEST(SelfNormalizedRatio, HandComputed) {
    auto s = EstimatorState::make(1, 1, 1, 1.2, 1.0);
    s.gram = Eigen::Vector2d(3.0, 0.0).asDiagonal();
    s.noise_cross = Eigen::Vector2d(2.0, 0.0);
    // (1 + 3)^{-1/2} 2 = 1, squared 1, over 2 log(e + 3).
    EXPECT_NEAR(estimator::self_normalized_ratio(s), 1.0 / (2.0 * std::log(std::exp(1.0) + 3.0)), 1e-14);
}
