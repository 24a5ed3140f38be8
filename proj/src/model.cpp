#include "ctlqr/model.hpp"

#include <string>

#include "ctlqr/errors.hpp"
#include "ctlqr/matspec.hpp"

namespace ctlqr {

DynamicsModel DynamicsModel::make(Matrix A, Matrix B, Matrix C, std::optional<Matrix> K0) {
    linalg::require_square(A, "DynamicsModel: A");
    if (B.rows() != A.rows() || B.cols() == 0) {
        throw DimensionError("DynamicsModel: B must be d_X x d_U with d_U >= 1");
    }
    if (C.rows() != A.rows() || C.cols() == 0) {
        throw DimensionError("DynamicsModel: C must be d_X x d_W with d_W >= 1");
    }
    linalg::require_finite(A, "DynamicsModel: A");
    linalg::require_finite(B, "DynamicsModel: B");
    linalg::require_finite(C, "DynamicsModel: C");
    if (K0) {
        linalg::require_shape(*K0, B.cols(), A.rows(), "DynamicsModel: stabilizing gain");
        const double alpha = matspec::spectral_abscissa(A + B * *K0);
        if (!(alpha < 0.0)) {
            throw InstabilityError("DynamicsModel: supplied gain does not stabilize (alpha = " +
                                   std::to_string(alpha) + ")");
        }
    }
    return DynamicsModel{std::move(A), std::move(B), std::move(C), std::move(K0)};
}

Matrix ParameterPair::stacked() const {
    Matrix theta(A.rows(), A.cols() + B.cols());
    theta << A, B;
    return theta;
}

ParameterPair ParameterPair::from_stacked(const Matrix& theta, Eigen::Index dx) {
    if (theta.rows() != dx || theta.cols() <= dx) {
        throw DimensionError("ParameterPair: stacked matrix must be d_X x (d_X + d_U)");
    }
    return {theta.leftCols(dx), theta.rightCols(theta.cols() - dx)};
}

CostSpec CostSpec::make(Matrix Q, Matrix R) {
    linalg::require_square(Q, "CostSpec: Q");
    linalg::require_square(R, "CostSpec: R");
    linalg::require_finite(Q, "CostSpec: Q");
    linalg::require_finite(R, "CostSpec: R");
    if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm()) ||
        (R - R.transpose()).norm() > 1e-12 * (1.0 + R.norm())) {
        throw ValueError("CostSpec: Q and R must be symmetric");
    }
    if (!(linalg::lambda_min_sym(Q) > 0.0) || !(linalg::lambda_min_sym(R) > 0.0)) {
        throw ValueError("CostSpec: Q and R must be positive definite");
    }
    return CostSpec{linalg::symmetrize(Q), linalg::symmetrize(R)};
}

double parameter_distance(const ParameterPair& est, const ParameterPair& truth) {
    linalg::require_shape(est.A, truth.A.rows(), truth.A.cols(), "parameter_distance: A");
    linalg::require_shape(est.B, truth.B.rows(), truth.B.cols(), "parameter_distance: B");
    return linalg::op_norm(est.A - truth.A) + linalg::op_norm(est.B - truth.B);
}

}  // namespace ctlqr
