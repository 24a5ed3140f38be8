#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ctlqr/errors.hpp"
#include "ctlqr/matspec.hpp"
#include "support.hpp"

using namespace ctlqr;
using ctlqr::testing::random_hurwitz;
using ctlqr::testing::random_matrix;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix M(rows.size(), rows.begin()->size());
    Eigen::Index i = 0;
    for (auto r : rows) {
        Eigen::Index j = 0;
        for (double v : r) M(i, j++) = v;
        ++i;
    }
    return M;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(SpectralAbscissa, Diagonal) {
    EXPECT_NEAR(matspec::spectral_abscissa(mat({{-1, 0}, {0, -2}})), -1.0, 1e-14);
}

TEST(SpectralAbscissa, Rotation) {
    EXPECT_NEAR(matspec::spectral_abscissa(mat({{0, 1}, {-1, 0}})), 0.0, 1e-14);
}

TEST(SpectralAbscissa, RejectsBadInput) {
    EXPECT_THROW(matspec::spectral_abscissa(Matrix::Zero(2, 3)), DimensionError);
    Matrix M = Matrix::Identity(2, 2);
    M(0, 1) = std::nan("");
    EXPECT_THROW(matspec::spectral_abscissa(M), ValueError);
}

TEST(SpectralAbscissa, MatchesTriangularDiagonal) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix T = random_matrix(rng, 5, 5).triangularView<Eigen::Upper>();
        EXPECT_NEAR(matspec::spectral_abscissa(T), T.diagonal().maxCoeff(), 1e-8);
    }
}

TEST(JordanProfile, Identity) {
    const auto p = matspec::jordan_profile(Matrix::Identity(3, 3));
    EXPECT_EQ(p.m, 1);
    EXPECT_NEAR(p.similarity_cond, 1.0, 1e-12);
    EXPECT_NEAR(p.abscissa, 1.0, 1e-14);
    EXPECT_TRUE(p.diagonalizable);
    ASSERT_EQ(p.clusters.size(), 1u);
    EXPECT_EQ(p.clusters[0].multiplicity, 3);
}

TEST(JordanProfile, CanonicalBlock) {
    const auto p = matspec::jordan_profile(mat({{2, 1}, {0, 2}}));
    EXPECT_EQ(p.m, 2);
    EXPECT_EQ(p.block_sizes, std::vector<int>({2}));
    EXPECT_FALSE(p.diagonalizable);
}

TEST(JordanProfile, Nilpotent) {
    const auto p = matspec::jordan_profile(mat({{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}));
    EXPECT_EQ(p.m, 3);
    EXPECT_EQ(p.block_sizes, std::vector<int>({3}));
}

TEST(JordanProfile, DiagonalHasUnitCondition) {
    const auto p = matspec::jordan_profile(mat({{-3, 0, 0}, {0, 1.5, 0}, {0, 0, -0.2}}));
    EXPECT_EQ(p.m, 1);
    EXPECT_NEAR(p.similarity_cond, 1.0, 1e-12);
    EXPECT_NEAR(p.abscissa, 1.5, 1e-14);
}

TEST(JordanProfile, SimilarityReconstructsMatrix) {
    std::mt19937_64 rng(5);
    const Matrix M = random_matrix(rng, 5, 5);
    const auto p = matspec::jordan_profile(M);
    // P M P^{-1} must be block upper bidiagonal; check it reproduces M.
    const CMatrix J = p.similarity * M.cast<Complex>() * p.similarity_inv;
    const CMatrix back = p.similarity_inv * J * p.similarity;
    EXPECT_LT((back - M.cast<Complex>()).norm(), 1e-10);
    for (Eigen::Index i = 0; i < J.rows(); ++i)
        for (Eigen::Index j = 0; j < J.cols(); ++j)
            if (j != i && j != i + 1) EXPECT_LT(std::abs(J(i, j)), 1e-8) << i << "," << j;
}

TEST(JordanProfile, InvariantsOnRandomMatrices) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix M = random_matrix(rng, 6, 6);
        const auto p = matspec::jordan_profile(M);
        EXPECT_NEAR(p.abscissa, p.eigenvalues.real().maxCoeff(), 1e-12);
        EXPECT_GE(p.similarity_cond, 1.0);
        int total = 0;
        for (const auto& c : p.clusters) {
            int s = 0;
            for (int b : c.block_sizes) s += b;
            EXPECT_EQ(s, c.multiplicity);
            total += c.multiplicity;
        }
        EXPECT_EQ(total, 6);
        EXPECT_EQ(p.m, *std::max_element(p.block_sizes.begin(), p.block_sizes.end()));
    }
}

// Planted Jordan forms: integer eigenvalues, known blocks, well-conditioned similarity.
TEST(JordanProfile, RecoversPlantedBlocks) {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> eig(-3, 3);
    const std::vector<std::vector<int>> layouts = {
        {2, 1}, {3}, {2, 2}, {1, 1, 1}, {3, 1}, {2, 1, 1}, {4}, {2, 2, 1}, {3, 2}, {1, 1, 1, 1, 1},
    };
    for (int rep = 0; rep < 4; ++rep) {
        for (const auto& blocks : layouts) {
            int n = 0;
            for (int b : blocks) n += b;
            Matrix J = Matrix::Zero(n, n);
            std::vector<int> used_values;
            int at = 0;
            std::vector<std::pair<int, int>> expected;  // (value, size)
            for (int b : blocks) {
                int v;
                // Half the time reuse a value so one cluster holds several blocks.
                if (!used_values.empty() && eig(rng) > 0) {
                    v = used_values.back();
                } else {
                    v = eig(rng);
                }
                used_values.push_back(v);
                for (int k = 0; k < b; ++k) {
                    J(at + k, at + k) = v;
                    if (k + 1 < b) J(at + k, at + k + 1) = 1.0;
                }
                at += b;
                expected.emplace_back(v, b);
            }
            Matrix P = Matrix::Identity(n, n) + 0.3 * random_matrix(rng, n, n) / std::sqrt(double(n));
            const Matrix M = P.inverse() * J * P;

            std::vector<int> want;
            for (auto& e : expected) want.push_back(e.second);
            std::sort(want.begin(), want.end(), std::greater<>());

            const auto prof = matspec::jordan_profile(M);
            EXPECT_EQ(prof.block_sizes, want) << "layout size " << n << " rep " << rep;
            EXPECT_EQ(prof.m, want.front());
        }
    }
}

TEST(MatrixExp, ZeroTimeIsIdentity) {
    std::mt19937_64 rng(1);
    const Matrix M = random_matrix(rng, 4, 4, 3.0);
    EXPECT_LT((matspec::matrix_exp(M, 0.0) - Matrix::Identity(4, 4)).norm(), 1e-15);
}

TEST(MatrixExp, Scalar) {
    EXPECT_NEAR(matspec::matrix_exp(mat({{-1}}), 1.0)(0, 0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(matspec::matrix_exp(mat({{-1}}), 1.0)(0, 0), 0.367879, 1e-6);
}

TEST(MatrixExp, Nilpotent) {
    const Matrix E = matspec::matrix_exp(mat({{0, 1}, {0, 0}}), 1.0);
    EXPECT_LT((E - mat({{1, 1}, {0, 1}})).norm(), 1e-15);
}

TEST(MatrixExp, MatchesTaylorOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix M = random_matrix(rng, 5, 5);
        const double t = 0.5 + trial * 0.1;
        const Matrix a = matspec::matrix_exp(M, t);
        const Matrix b = ctlqr::testing::taylor_expm(M, t);
        EXPECT_LT((a - b).norm() / b.norm(), 1e-12);
    }
}

TEST(MatrixExp, Semigroup) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix M = random_matrix(rng, 4, 4);
        M *= 5.0 / linalg::op_norm(M) * std::uniform_real_distribution<double>(0.1, 1.0)(rng);
        const double s = ut(rng), t = ut(rng);
        const Matrix lhs = matspec::matrix_exp(M, s + t);
        const Matrix rhs = matspec::matrix_exp(M, s) * matspec::matrix_exp(M, t);
        EXPECT_LT((lhs - rhs).norm(), 1e-10 * std::max(1.0, lhs.norm()));
    }
}

TEST(MatrixExp, OverflowIsValueError) {
    EXPECT_THROW(matspec::matrix_exp(mat({{1000}}), 10.0), ValueError);
    EXPECT_THROW(matspec::matrix_exp(mat({{1}}), kInf), ValueError);
}

TEST(Lyapunov, NegativeIdentity) {
    const Matrix V = matspec::lyapunov_solve(-Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    EXPECT_LT((V - 0.5 * Matrix::Identity(2, 2)).norm(), 1e-10);
}

TEST(Lyapunov, DiagonalPerCoordinate) {
    const Matrix V = matspec::lyapunov_solve(mat({{-1, 0}, {0, -2}}), Matrix::Identity(2, 2));
    EXPECT_LT((V - mat({{0.5, 0}, {0, 0.25}})).norm(), 1e-12);
}

TEST(Lyapunov, ZeroForcing) {
    std::mt19937_64 rng(6);
    EXPECT_LT(matspec::lyapunov_solve(random_hurwitz(rng, 4), Matrix::Zero(4, 4)).norm(), 1e-15);
}

TEST(Lyapunov, Errors) {
    EXPECT_THROW(matspec::lyapunov_solve(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), InstabilityError);
    EXPECT_THROW(matspec::lyapunov_solve(-Matrix::Identity(2, 2), mat({{1, 1}, {0, 1}})), ValueError);
    EXPECT_THROW(matspec::lyapunov_solve(-Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DimensionError);
}

TEST(Lyapunov, ResidualAndKroneckerOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index n = 1 + trial % 7;
        const Matrix D = random_hurwitz(rng, n, 0.1 + 0.05 * (trial % 5));
        const Matrix G = random_matrix(rng, n, n);
        const Matrix S = G * G.transpose();
        const Matrix V = matspec::lyapunov_solve(D, S);
        const double res = (D.transpose() * V + V * D + S).norm();
        EXPECT_LE(res, 1e-10 * (1.0 + S.norm())) << "n=" << n;
        EXPECT_LT((V - V.transpose()).norm(), 1e-14 * (1.0 + V.norm()));
        const Matrix ref = ctlqr::testing::kron_lyapunov(D, S);
        EXPECT_LT((V - ref).norm() / (1.0 + ref.norm()), 1e-9);
        EXPECT_GE(linalg::lambda_min_sym(V), -1e-10 * (1.0 + V.norm()));
    }
}

TEST(Lyapunov, MatchesQuadrature) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 8; ++trial) {
        const Matrix D = random_hurwitz(rng, 3, 0.5 + 0.25 * trial);
        const Matrix G = random_matrix(rng, 3, 3);
        const Matrix S = G * G.transpose();
        const double alpha = matspec::spectral_abscissa(D);
        const Matrix ref = ctlqr::testing::quad_lyapunov(D, S, 40.0 / std::abs(alpha), 4000);
        const Matrix V = matspec::lyapunov_solve(D, S);
        EXPECT_LT((V - ref).norm() / ref.norm(), 1e-6);
    }
}

TEST(NoiseGramian, ZeroDrift) {
    EXPECT_NEAR(matspec::noise_gramian(mat({{0}}), mat({{1}}), 0.1)(0, 0), 0.1, 1e-15);
}

TEST(NoiseGramian, StationaryScalar) {
    EXPECT_NEAR(matspec::noise_gramian(mat({{-1}}), mat({{1}}), kInf)(0, 0), 0.5, 1e-14);
}

TEST(NoiseGramian, ZeroNoise) {
    std::mt19937_64 rng(9);
    const Matrix D = random_matrix(rng, 3, 3);
    EXPECT_LT(matspec::noise_gramian(D, Matrix::Zero(3, 2), 0.7).norm(), 1e-15);
    EXPECT_LT(matspec::noise_gramian(random_hurwitz(rng, 3), Matrix::Zero(3, 2), kInf).norm(), 1e-15);
}

TEST(NoiseGramian, Errors) {
    EXPECT_THROW(matspec::noise_gramian(mat({{1}}), mat({{1}}), kInf), InstabilityError);
    EXPECT_THROW(matspec::noise_gramian(mat({{-1}}), mat({{1}}), 0.0), ValueError);
    EXPECT_THROW(matspec::noise_gramian(mat({{-1}}), Matrix::Ones(2, 1), 1.0), DimensionError);
}

TEST(NoiseGramian, FiniteHorizonMatchesQuadrature) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix D = random_matrix(rng, 3, 3);
        const Matrix C = random_matrix(rng, 3, 2);
        const double h = 0.1 + 0.2 * trial;
        // The gramian is the transposed-drift Lyapunov integrand with S = C C^T.
        const Matrix ref = ctlqr::testing::quad_lyapunov(D.transpose(), C * C.transpose(), h, 400);
        const Matrix G = matspec::noise_gramian(D, C, h);
        EXPECT_LT((G - ref).norm() / ref.norm(), 1e-10);
    }
}

TEST(NoiseGramian, SymmetricPsdAndMonotone) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix D = random_matrix(rng, 4, 4);
        const Matrix C = random_matrix(rng, 4, 3);
        Matrix prev = Matrix::Zero(4, 4);
        for (double h : {0.01, 0.05, 0.1, 0.5, 1.0, 2.0}) {
            const Matrix G = matspec::noise_gramian(D, C, h);
            EXPECT_LT((G - G.transpose()).norm(), 1e-14 * (1.0 + G.norm()));
            EXPECT_GE(linalg::lambda_min_sym(G), -1e-10 * (1.0 + G.norm()));
            EXPECT_GE(linalg::lambda_min_sym(G - prev), -1e-10 * (1.0 + G.norm())) << "h=" << h;
            prev = G;
        }
    }
}

TEST(NoiseGramian, ConvergesToStationary) {
    std::mt19937_64 rng(13);
    const Matrix D = random_hurwitz(rng, 3, 1.0);
    const Matrix C = random_matrix(rng, 3, 3);
    const Matrix inf = matspec::noise_gramian(D, C, kInf);
    const Matrix fin = matspec::noise_gramian(D, C, 30.0);
    EXPECT_LT((inf - fin).norm() / inf.norm(), 1e-10);
}
