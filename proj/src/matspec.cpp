#include "ctlqr/matspec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "ctlqr/errors.hpp"

namespace ctlqr::matspec {

namespace {

CMatrix null_space(const CMatrix& X, double cutoff) {
    Eigen::JacobiSVD<CMatrix> svd(X, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) ++rank;
    }
    return svd.matrixV().rightCols(X.cols() - rank);
}

// Orthonormal basis for the column span of X (relative cutoff).
CMatrix orth(const CMatrix& X, double rel_cutoff = 1e-9) {
    if (X.cols() == 0) return CMatrix(X.rows(), 0);
    Eigen::JacobiSVD<CMatrix> svd(X, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const double cut = rel_cutoff * (sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut) ++rank;
    }
    return svd.matrixU().leftCols(rank);
}

CMatrix hcat(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

// Nested orthonormal bases of ker A^k, k = 0..s, where s is the index at which the
// nullity stops growing. Uses ker A^k = { x : A x in ker A^{k-1} } so that no matrix
// power is ever formed.
struct KernelChain {
    std::vector<CMatrix> bases;
    int nullity() const { return static_cast<int>(bases.back().cols()); }
    int depth() const { return static_cast<int>(bases.size()) - 1; }
};

KernelChain kernel_chain(const CMatrix& A, double cutoff) {
    const Eigen::Index n = A.rows();
    KernelChain chain;
    chain.bases.emplace_back(n, 0);
    for (Eigen::Index k = 1; k <= n + 1; ++k) {
        const CMatrix& prev = chain.bases.back();
        const CMatrix proj = CMatrix::Identity(n, n) - prev * prev.adjoint();
        CMatrix next = null_space(proj * A, cutoff);
        if (next.cols() < prev.cols()) {
            throw NumericalError("jordan_profile: kernel dimension decreased; rank tolerance misconfigured");
        }
        if (next.cols() == prev.cols()) return chain;
        chain.bases.push_back(std::move(next));
    }
    throw NumericalError("jordan_profile: rank-stagnation scan did not terminate");
}

struct ClusterStructure {
    EigenCluster cluster;
    CMatrix chains;  // columns: Jordan chains, eigenvector first
};

ClusterStructure build_chains(const Matrix& M, Complex mu, const KernelChain& kc) {
    const Eigen::Index n = M.rows();
    const CMatrix A = M.cast<Complex>() - mu * CMatrix::Identity(n, n);
    const int s = kc.depth();

    std::vector<int> ge(static_cast<size_t>(s) + 2, 0);
    for (int k = 1; k <= s; ++k) {
        ge[static_cast<size_t>(k)] = static_cast<int>(kc.bases[static_cast<size_t>(k)].cols() -
                                                      kc.bases[static_cast<size_t>(k) - 1].cols());
    }

    ClusterStructure out;
    out.cluster.value = mu;
    out.cluster.multiplicity = kc.nullity();
    out.chains.resize(n, 0);

    CMatrix level(n, 0);  // all chain vectors sitting at the current level
    for (int k = s; k >= 1; --k) {
        const int exact = ge[static_cast<size_t>(k)] - ge[static_cast<size_t>(k) + 1];
        CMatrix carried = A * level;
        if (exact > 0) {
            const CMatrix& Nk = kc.bases[static_cast<size_t>(k)];
            const CMatrix span = orth(hcat(kc.bases[static_cast<size_t>(k) - 1], carried));
            const CMatrix rest = Nk - span * (span.adjoint() * Nk);
            Eigen::JacobiSVD<CMatrix> svd(rest, Eigen::ComputeThinU);
            if (svd.singularValues().size() < exact ||
                svd.singularValues()(exact - 1) < 1e-8) {
                throw NumericalError("jordan_profile: could not complete a Jordan chain basis");
            }
            const CMatrix tops = svd.matrixU().leftCols(exact);
            for (int j = 0; j < exact; ++j) {
                CMatrix chain(n, k);
                CVector v = tops.col(j);
                for (int c = k - 1; c >= 0; --c) {
                    chain.col(c) = v;
                    v = A * v;
                }
                out.chains = hcat(out.chains, chain);
                out.cluster.block_sizes.push_back(k);
            }
            level = hcat(carried, tops);
        } else {
            level = carried;
        }
    }
    return out;
}

bool certified(const Matrix& M, Complex mu, double cutoff, int size, KernelChain* chain) {
    const Eigen::Index n = M.rows();
    try {
        KernelChain kc = kernel_chain(M.cast<Complex>() - mu * CMatrix::Identity(n, n), cutoff);
        const bool ok = kc.nullity() >= size;
        if (chain) *chain = std::move(kc);
        return ok;
    } catch (const NumericalError&) {
        return false;
    }
}

}  // namespace

double spectral_abscissa(const Matrix& M) {
    linalg::require_square(M, "spectral_abscissa");
    linalg::require_finite(M, "spectral_abscissa");
    Eigen::EigenSolver<Matrix> es(M, false);
    if (es.info() != Eigen::Success) throw NumericalError("spectral_abscissa: eigensolver failed");
    return es.eigenvalues().real().maxCoeff();
}

SpectralProfile jordan_profile(const Matrix& M, double tol_cluster, double tol_rank) {
    linalg::require_square(M, "jordan_profile");
    linalg::require_finite(M, "jordan_profile");
    if (!(tol_cluster > 0.0) || !(tol_rank > 0.0)) {
        throw ValueError("jordan_profile: tolerances must be positive");
    }
    const Eigen::Index n = M.rows();
    Eigen::EigenSolver<Matrix> es(M, false);
    if (es.info() != Eigen::Success) throw NumericalError("jordan_profile: eigensolver failed");

    SpectralProfile prof;
    prof.eigenvalues = es.eigenvalues();
    prof.abscissa = prof.eigenvalues.real().maxCoeff();

    const double scale = 1.0 + linalg::op_norm(M);
    const double merge_radius = tol_cluster * scale;
    const double rank_cutoff = tol_rank * scale;
    const double search_radius = 1e-2 * scale;

    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const Complex& x = prof.eigenvalues(a);
        const Complex& y = prof.eigenvalues(b);
        return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag();
    });

    std::vector<bool> used(static_cast<size_t>(n), false);
    CMatrix basis(n, 0);

    auto mean_of = [&](const std::vector<Eigen::Index>& idx) {
        Complex s{0.0, 0.0};
        for (auto i : idx) s += prof.eigenvalues(i);
        return s / static_cast<double>(idx.size());
    };

    for (Eigen::Index seed : order) {
        if (used[static_cast<size_t>(seed)]) continue;
        const Complex lam = prof.eigenvalues(seed);

        // Single-linkage closure at the merge radius.
        std::vector<Eigen::Index> base{seed};
        for (size_t head = 0; head < base.size(); ++head) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (used[static_cast<size_t>(j)] ||
                    std::find(base.begin(), base.end(), j) != base.end()) {
                    continue;
                }
                if (std::abs(prof.eigenvalues(j) - prof.eigenvalues(base[head])) <= merge_radius) {
                    base.push_back(j);
                }
            }
        }

        std::vector<Eigen::Index> extra;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (used[static_cast<size_t>(j)] || std::find(base.begin(), base.end(), j) != base.end()) {
                continue;
            }
            if (std::abs(prof.eigenvalues(j) - lam) <= search_radius) extra.push_back(j);
        }
        std::sort(extra.begin(), extra.end(), [&](Eigen::Index a, Eigen::Index b) {
            return std::abs(prof.eigenvalues(a) - lam) < std::abs(prof.eigenvalues(b) - lam);
        });

        std::vector<Eigen::Index> members;
        KernelChain chain;
        bool found = false;
        for (size_t k = extra.size() + 1; k-- > 0;) {
            std::vector<Eigen::Index> trial = base;
            trial.insert(trial.end(), extra.begin(), extra.begin() + static_cast<std::ptrdiff_t>(k));
            if (certified(M, mean_of(trial), rank_cutoff, static_cast<int>(trial.size()), &chain)) {
                members = std::move(trial);
                found = true;
                break;
            }
        }

        if (found && chain.nullity() > static_cast<int>(members.size())) {
            throw NumericalError("jordan_profile: kernel larger than the eigenvalue cluster; "
                                 "cluster tolerance misconfigured");
        }

        if (!found) {
            // The merged group is not certified as one multiple eigenvalue: treat each
            // member as semisimple with its own best eigenvector.
            for (auto i : base) {
                used[static_cast<size_t>(i)] = true;
                const Complex li = prof.eigenvalues(i);
                const CMatrix Ai = M.cast<Complex>() - li * CMatrix::Identity(n, n);
                Eigen::JacobiSVD<CMatrix> svd(Ai, Eigen::ComputeFullV);
                basis = hcat(basis, svd.matrixV().rightCols(1));
                prof.clusters.push_back(EigenCluster{li, 1, {1}});
            }
            continue;
        }

        for (auto i : members) used[static_cast<size_t>(i)] = true;
        ClusterStructure cs = build_chains(M, mean_of(members), chain);
        basis = hcat(basis, cs.chains);
        prof.clusters.push_back(std::move(cs.cluster));
    }

    if (basis.cols() != n) {
        throw NumericalError("jordan_profile: assembled " + std::to_string(basis.cols()) +
                             " chain vectors for a " + std::to_string(n) + "x" + std::to_string(n) +
                             " matrix");
    }

    for (const auto& c : prof.clusters) {
        prof.block_sizes.insert(prof.block_sizes.end(), c.block_sizes.begin(), c.block_sizes.end());
    }
    std::sort(prof.block_sizes.begin(), prof.block_sizes.end(), std::greater<>());
    prof.m = prof.block_sizes.empty() ? 1 : prof.block_sizes.front();
    prof.diagonalizable = prof.m == 1;

    Eigen::JacobiSVD<CMatrix> svd(basis);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    prof.similarity_cond = smin > 0.0 ? std::max(1.0, sv(0) / smin)
                                      : std::numeric_limits<double>::infinity();
    prof.ill_conditioned = !(prof.similarity_cond <= 1e10);
    prof.similarity_inv = basis;
    prof.similarity = basis.partialPivLu().inverse();
    return prof;
}

Matrix matrix_exp(const Matrix& M, double t) {
    linalg::require_square(M, "matrix_exp");
    linalg::require_finite(M, "matrix_exp");
    if (!std::isfinite(t)) throw ValueError("matrix_exp: t must be finite");
    if (t == 0.0) return Matrix::Identity(M.rows(), M.cols());
    const Matrix Mt = M * t;
    Matrix out = Mt.exp();
    if (!out.allFinite()) throw ValueError("matrix_exp: overflow for ||M t|| = " +
                                           std::to_string(Mt.norm()));
    return out;
}

Matrix lyapunov_solve(const Matrix& D, const Matrix& S) {
    linalg::require_square(D, "lyapunov_solve");
    linalg::require_finite(D, "lyapunov_solve");
    linalg::require_shape(S, D.rows(), D.cols(), "lyapunov_solve: forcing");
    linalg::require_finite(S, "lyapunov_solve: forcing");
    if ((S - S.transpose()).norm() > 1e-9 * (1.0 + S.norm())) {
        throw ValueError("lyapunov_solve: forcing matrix is not symmetric");
    }
    const double alpha = spectral_abscissa(D);
    if (!(alpha < 0.0)) {
        throw InstabilityError("lyapunov_solve: spectral abscissa " + std::to_string(alpha) +
                               " is not negative");
    }

    // D = U T U^H, so T^H Y + Y T = -F with Y = U^H V U and F = U^H S U.
    const Eigen::Index n = D.rows();
    Eigen::ComplexSchur<Matrix> schur(D);
    if (schur.info() != Eigen::Success) throw NumericalError("lyapunov_solve: Schur decomposition failed");
    const CMatrix& T = schur.matrixT();
    const CMatrix& U = schur.matrixU();
    const CMatrix F = U.adjoint() * S.cast<Complex>() * U;
    const CMatrix TH = T.adjoint();

    CMatrix Y = CMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        CVector rhs = -F.col(j);
        for (Eigen::Index k = 0; k < j; ++k) rhs -= T(k, j) * Y.col(k);
        CMatrix L = TH;
        L.diagonal().array() += T(j, j);
        Y.col(j) = L.triangularView<Eigen::Lower>().solve(rhs);
    }
    const Matrix V = (U * Y * U.adjoint()).real();
    return linalg::symmetrize(V);
}

Matrix noise_gramian(const Matrix& D, const Matrix& C, double h) {
    linalg::require_square(D, "noise_gramian");
    if (C.rows() != D.rows()) {
        throw DimensionError("noise_gramian: C must have as many rows as D");
    }
    linalg::require_finite(C, "noise_gramian: C");
    if (std::isnan(h) || !(h > 0.0)) throw ValueError("noise_gramian: horizon must be positive");

    const Eigen::Index n = D.rows();
    const Matrix CC = C * C.transpose();
    if (std::isinf(h)) {
        // D V + V D^T + C C^T = 0.
        return lyapunov_solve(D.transpose(), CC);
    }

    // Van Loan on a short step where the block exponential is well conditioned:
    // exp([[-D, CC^T], [0, D^T]] s) = [[., G12], [0, G22]], gramian(s) = G22^T G12.
    // Then double: gramian(2s) = gramian(s) + e^{D s} gramian(s) e^{D^T s}.
    int doublings = 0;
    double s = h;
    const double dnorm = linalg::op_norm(D);
    while (s * dnorm > 0.5 && doublings < 60) {
        s *= 0.5;
        ++doublings;
    }
    Matrix H = Matrix::Zero(2 * n, 2 * n);
    H.topLeftCorner(n, n) = -D;
    H.topRightCorner(n, n) = CC;
    H.bottomRightCorner(n, n) = D.transpose();
    const Matrix E = matrix_exp(H, s);
    Matrix G = linalg::symmetrize(E.bottomRightCorner(n, n).transpose() * E.topRightCorner(n, n));
    Matrix Phi = E.bottomRightCorner(n, n).transpose();  // e^{D s}
    for (int k = 0; k < doublings; ++k) {
        G = linalg::symmetrize(G + Phi * G * Phi.transpose());
        Phi = Phi * Phi;
        if (!linalg::all_finite(G)) throw ValueError("noise_gramian: overflow");
    }
    return G;
}

}  // namespace ctlqr::matspec
