#include "ctlqr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctlqr/errors.hpp"

namespace ctlqr::linalg {

double op_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

double op_norm(const CMatrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(M);
    return svd.singularValues()(0);
}

bool all_finite(const Matrix& M) { return M.allFinite(); }

void require_square(const Matrix& M, std::string_view what) {
    if (M.rows() != M.cols() || M.rows() == 0) {
        throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " +
                             std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
    }
}

void require_finite(const Matrix& M, std::string_view what) {
    if (!M.allFinite()) throw ValueError(std::string(what) + ": non-finite entries");
}

void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
    if (M.rows() != rows || M.cols() != cols) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(M.rows()) + "x" +
                             std::to_string(M.cols()));
    }
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double lambda_min_sym(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

double lambda_max_sym(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

Matrix sqrt_psd(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
    Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Matrix psd_factor(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
    Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

Matrix pinv_psd(const Matrix& S, double rel_cutoff) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
    const Vector& ev = es.eigenvalues();
    const double top = ev.size() ? std::max(ev.maxCoeff(), 0.0) : 0.0;
    Vector inv = Vector::Zero(ev.size());
    if (top > 0.0) {
        const double cut = rel_cutoff * top;
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            if (ev(i) > cut) inv(i) = 1.0 / ev(i);
        }
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace ctlqr::linalg
