#pragma once

#include <complex>
#include <string_view>

#include <Eigen/Dense>

namespace ctlqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

namespace linalg {

// Spectral (operator 2-) norm.
double op_norm(const Matrix& M);
double op_norm(const CMatrix& M);
template <typename Derived>
double op_norm(const Eigen::MatrixBase<Derived>& M) {
    return op_norm(typename Derived::PlainObject(M));
}

bool all_finite(const Matrix& M);

void require_square(const Matrix& M, std::string_view what);
void require_finite(const Matrix& M, std::string_view what);
void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols, std::string_view what);

Matrix symmetrize(const Matrix& M);

double lambda_min_sym(const Matrix& S);
double lambda_max_sym(const Matrix& S);

/// Symmetric PSD square root via eigendecomposition (negative eigenvalues clamped to zero).
Matrix sqrt_psd(const Matrix& S);

/// Factor F with F F^T = S for symmetric PSD S; tolerates rank deficiency.
Matrix psd_factor(const Matrix& S);

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix with relative eigenvalue cutoff.
Matrix pinv_psd(const Matrix& S, double rel_cutoff);

}  // namespace linalg
}  // namespace ctlqr
