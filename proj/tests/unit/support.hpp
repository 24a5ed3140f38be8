#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "ctlqr/linalg.hpp"

namespace ctlqr::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) M(i, j) = nd(rng);
    return M;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.5) {
    const Matrix G = random_matrix(rng, n, n);
    return G * G.transpose() / double(n) + floor * Matrix::Identity(n, n);
}

// Shifts a random matrix so its spectral abscissa is -margin.
inline Matrix random_hurwitz(std::mt19937_64& rng, Eigen::Index n, double margin = 0.5) {
    Matrix M = random_matrix(rng, n, n);
    const double alpha = Eigen::EigenSolver<Matrix>(M, false).eigenvalues().real().maxCoeff();
    M.diagonal().array() -= alpha + margin;
    return M;
}

// Taylor series with scaling and squaring in long double; independent of the Pade path.
inline Matrix taylor_expm(const Matrix& M, double t) {
    using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    LMat X = (M * t).cast<long double>();
    const long double norm = X.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    while (norm / std::ldexp(1.0L, s) > 0.25L) ++s;
    X /= std::ldexp(1.0L, s);
    LMat term = LMat::Identity(M.rows(), M.cols());
    LMat sum = term;
    for (int k = 1; k < 40; ++k) {
        term = term * X / static_cast<long double>(k);
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum.cast<double>();
}

// Solves D^T V + V D + S = 0 through the n^2 x n^2 Kronecker system.
inline Matrix kron_lyapunov(const Matrix& D, const Matrix& S) {
    const Eigen::Index n = D.rows();
    Matrix L = Matrix::Zero(n * n, n * n);
    const Matrix I = Matrix::Identity(n, n);
    // vec(D^T V) = (I kron D^T) vec V, vec(V D) = (D^T kron I) vec V.
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            L.block(i * n, j * n, n, n) += I(i, j) * D.transpose();
            L.block(i * n, j * n, n, n) += D(j, i) * I;
        }
    const Vector vs = Eigen::Map<const Vector>(S.data(), n * n);
    const Vector vv = L.partialPivLu().solve(-vs);
    return Eigen::Map<const Matrix>(vv.data(), n, n);
}

// Composite Simpson rule for the integral over [0, T] of e^{D^T t} S e^{D t}.
inline Matrix quad_lyapunov(const Matrix& D, const Matrix& S, double T, int panels) {
    const double h = T / (2.0 * panels);
    const Matrix step = taylor_expm(D, h);
    Matrix E = Matrix::Identity(D.rows(), D.cols());
    Matrix acc = Matrix::Zero(D.rows(), D.cols());
    for (int k = 0; k <= 2 * panels; ++k) {
        const double w = (k == 0 || k == 2 * panels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        acc += w * E.transpose() * S * E;
        E = E * step;
    }
    return acc * h / 3.0;
}

}  // namespace ctlqr::testing
