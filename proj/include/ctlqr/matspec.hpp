#pragma once

#include <limits>
#include <vector>

#include "ctlqr/linalg.hpp"

/// Spectral and structural analysis of small dense real matrices.
namespace ctlqr::matspec {

/// One group of numerically coincident eigenvalues together with its Jordan structure.
struct EigenCluster {
    Complex value;                 // cluster mean
    int multiplicity = 0;          // algebraic multiplicity
    std::vector<int> block_sizes;  // Jordan block sizes, descending; sums to multiplicity
};

struct SpectralProfile {
    CVector eigenvalues;
    double abscissa = 0.0;
    std::vector<EigenCluster> clusters;
    std::vector<int> block_sizes;  // all blocks, descending
    int m = 1;                     // largest block size
    double similarity_cond = 1.0;  // ||P||_2 ||P^{-1}||_2
    bool diagonalizable = true;
    // Set when similarity_cond exceeds 1e10; the margin derived from it is then very conservative.
    bool ill_conditioned = false;
    // M = P^{-1} J P. The columns of similarity_inv are Jordan chains (eigenvector first).
    CMatrix similarity;
    CMatrix similarity_inv;
};

inline constexpr double kDefaultClusterTol = 1e-6;
inline constexpr double kDefaultRankTol = 1e-8;

/// Largest real part over the eigenvalues of M (may be negative).
double spectral_abscissa(const Matrix& M);

/// Eigenvalue clusters, Jordan block sizes and a Jordan similarity transform of M.
///
/// Eigenvalues closer than tol_cluster * (1 + ||M||_2) are merged outright. Because a
/// Jordan block of size k splits under rounding by roughly eps^{1/k}, wider groups of
/// nearby eigenvalues are merged as well whenever the kernel chain of (M - mu I) at
/// their mean mu certifies an algebraic multiplicity at least the group size. Ranks use
/// the singular-value cutoff tol_rank * (1 + ||M||_2).
SpectralProfile jordan_profile(const Matrix& M, double tol_cluster = kDefaultClusterTol,
                               double tol_rank = kDefaultRankTol);

/// e^{M t} by scaling and squaring with a Pade approximant.
Matrix matrix_exp(const Matrix& M, double t);

/// Solves D^T V + V D + S = 0 for Hurwitz D and symmetric S (Bartels-Stewart).
/// V equals the integral of e^{D^T t} S e^{D t} over [0, inf).
Matrix lyapunov_solve(const Matrix& D, const Matrix& S);

/// Integral of e^{D s} C C^T e^{D^T s} over [0, h]; h may be +infinity when D is Hurwitz.
Matrix noise_gramian(const Matrix& D, const Matrix& C,
                     double h = std::numeric_limits<double>::infinity());

}  // namespace ctlqr::matspec
