#pragma once

#include <optional>

#include "ctlqr/linalg.hpp"

namespace ctlqr {

/// Linear Ito system dX = (A X + B U) dt + C dW.
struct DynamicsModel {
    Matrix A;  // d_X x d_X
    Matrix B;  // d_X x d_U
    Matrix C;  // d_X x d_W
    // Evidence of stabilizability: a gain with spectral_abscissa(A + B K0) < 0.
    std::optional<Matrix> stabilizing_gain;

    /// Validates dimensions and finiteness; if K0 is given it must stabilize (A, B).
    static DynamicsModel make(Matrix A, Matrix B, Matrix C, std::optional<Matrix> K0 = std::nullopt);

    Eigen::Index dx() const { return A.rows(); }
    Eigen::Index du() const { return B.cols(); }
    Eigen::Index dw() const { return C.cols(); }
    bool stabilizable() const { return stabilizing_gain.has_value(); }
};

/// An (A, B) pair: the truth's drift and input matrices, or an estimate of them.
struct ParameterPair {
    Matrix A;
    Matrix B;

    static ParameterPair of(const DynamicsModel& m) { return {m.A, m.B}; }

    /// [A, B] as one d_X x (d_X + d_U) block.
    Matrix stacked() const;
    static ParameterPair from_stacked(const Matrix& theta, Eigen::Index dx);
};

/// Quadratic running cost X^T Q X + U^T R U with Q, R symmetric positive definite.
struct CostSpec {
    Matrix Q;
    Matrix R;

    static CostSpec make(Matrix Q, Matrix R);
};

/// Psi(est) = ||A_est - A||_2 + ||B_est - B||_2.
double parameter_distance(const ParameterPair& est, const ParameterPair& truth);

}  // namespace ctlqr
