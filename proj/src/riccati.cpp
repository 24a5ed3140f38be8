#include "ctlqr/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctlqr/errors.hpp"
#include "ctlqr/matspec.hpp"

namespace ctlqr::riccati {

namespace {

void check_dims(const ParameterPair& ab, const CostSpec& cost, std::string_view what) {
    linalg::require_square(ab.A, what);
    if (ab.B.rows() != ab.A.rows()) throw DimensionError(std::string(what) + ": B has the wrong row count");
    linalg::require_shape(cost.Q, ab.A.rows(), ab.A.rows(), what);
    linalg::require_shape(cost.R, ab.B.cols(), ab.B.cols(), what);
}

// Everything g needs, with B R^{-1} B^T formed once.
struct Operator {
    const Matrix& A;
    const Matrix& Q;
    Matrix S;

    Matrix operator()(const Matrix& M) const {
        Matrix AM = A.transpose() * M;
        return AM + AM.transpose() - M * S * M + Q;
    }
};

Operator make_operator(const ParameterPair& ab, const CostSpec& cost) {
    const Eigen::LLT<Matrix> llt(cost.R);
    return Operator{ab.A, cost.Q, linalg::symmetrize(ab.B * llt.solve(ab.B.transpose()))};
}

Matrix gain_of(const ParameterPair& ab, const CostSpec& cost, const Matrix& M) {
    return -Eigen::LLT<Matrix>(cost.R).solve(ab.B.transpose() * M);
}

Matrix rk4_step(const Operator& g, const Matrix& M, double h) {
    const Matrix k1 = g(M);
    const Matrix k2 = g(M + 0.5 * h * k1);
    const Matrix k3 = g(M + 0.5 * h * k2);
    const Matrix k4 = g(M + h * k3);
    return M + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Newton-Kleinman sweeps from M. Returns the best iterate reached and its residual norm.
std::pair<Matrix, double> newton_kleinman(const ParameterPair& ab, const CostSpec& cost, const Operator& g,
                                          Matrix M, double target) {
    double res = g(M).norm();
    for (int it = 0; it < 50 && res > target; ++it) {
        const Matrix K = gain_of(ab, cost, M);
        const Matrix D = ab.A + ab.B * K;
        if (!(matspec::spectral_abscissa(D) < 0.0)) break;
        Matrix next;
        try {
            next = matspec::lyapunov_solve(D, linalg::symmetrize(cost.Q + K.transpose() * cost.R * K));
        } catch (const Error&) {
            break;
        }
        const double next_res = g(next).norm();
        if (!std::isfinite(next_res) || next_res >= res) break;
        M = next;
        res = next_res;
    }
    return {M, res};
}

}  // namespace

Matrix riccati_residual(const ParameterPair& ab, const CostSpec& cost, const Matrix& M) {
    check_dims(ab, cost, "riccati_residual");
    linalg::require_shape(M, ab.A.rows(), ab.A.rows(), "riccati_residual: M");
    return make_operator(ab, cost)(M);
}

Matrix riccati_residual(const DynamicsModel& model, const CostSpec& cost, const Matrix& M) {
    return riccati_residual(ParameterPair::of(model), cost, M);
}

RiccatiSolution care_solve_from(const ParameterPair& ab, const CostSpec& cost, const Matrix& M0,
                                const CareOptions& opts) {
    check_dims(ab, cost, "care_solve");
    linalg::require_finite(ab.A, "care_solve: A");
    linalg::require_finite(ab.B, "care_solve: B");
    linalg::require_shape(M0, ab.A.rows(), ab.A.rows(), "care_solve: initial matrix");
    if (!(opts.tol > 0.0) || !(opts.max_time > 0.0) || opts.max_steps < 1) {
        throw ValueError("care_solve: tol, max_time and max_steps must be positive");
    }

    const Operator g = make_operator(ab, cost);
    const double target = opts.tol * (1.0 + cost.Q.norm());
    const double switch_at = std::max(opts.newton_switch * (1.0 + cost.Q.norm()), target);
    const double rtol = 1e-8;

    Matrix M = linalg::symmetrize(M0);
    double res = g(M).norm();
    double t = 0.0;
    double h = 0.05 / (1.0 + linalg::op_norm(ab.A) + std::sqrt(linalg::op_norm(g.S) * linalg::op_norm(cost.Q)));
    double newton_gate = switch_at;
    long steps = 0;

    while (res > target) {
        if (++steps > opts.max_steps) {
            throw ConvergenceError("care_solve: residual " + std::to_string(res) + " above tolerance after " +
                                   std::to_string(opts.max_steps) + " steps");
        }
        if (t >= opts.max_time) {
            throw ConvergenceError("care_solve: residual " + std::to_string(res) + " above tolerance after time " +
                                   std::to_string(t));
        }
        if (opts.newton_refine && res <= newton_gate) {
            auto [Mn, rn] = newton_kleinman(ab, cost, g, M, target);
            if (rn < res) {
                M = std::move(Mn);
                res = rn;
                if (res <= target) break;
            }
            newton_gate = res / 100.0;  // retry only after the flow has made real progress
        }

        const double step = std::min(h, opts.max_time - t);
        const Matrix full = rk4_step(g, M, step);
        const Matrix half = rk4_step(g, rk4_step(g, M, 0.5 * step), 0.5 * step);
        const double err = (full - half).norm() / 15.0;
        const double scale = rtol * (1.0 + half.norm());
        if (!linalg::all_finite(half) || !std::isfinite(err) || err > scale) {
            h = 0.5 * step;
            if (h < 1e-14 * (1.0 + t)) throw ConvergenceError("care_solve: step size underflow");
            continue;
        }
        M = linalg::symmetrize(half + (half - full) / 15.0);
        t += step;
        res = g(M).norm();
        if (!std::isfinite(res) || M.norm() > 1e150) throw ConvergenceError("care_solve: Riccati flow diverged");
        if (err < 0.1 * scale) h = std::min(2.0 * step, 1.25 * h + step);
    }

    RiccatiSolution sol;
    sol.P = linalg::symmetrize(M);
    sol.K = gain_of(ab, cost, sol.P);
    sol.D = ab.A + ab.B * sol.K;
    sol.residual = g(sol.P).norm();
    sol.integrated_time = t;
    if (!(matspec::spectral_abscissa(sol.D) < 0.0)) {
        throw ConvergenceError("care_solve: converged matrix does not yield a stabilizing gain");
    }
    return sol;
}

RiccatiSolution care_solve(const ParameterPair& ab, const CostSpec& cost, const CareOptions& opts) {
    return care_solve_from(ab, cost, Matrix::Zero(ab.A.rows(), ab.A.rows()), opts);
}

RiccatiSolution care_solve(const DynamicsModel& model, const CostSpec& cost, const CareOptions& opts) {
    RiccatiSolution sol = care_solve(ParameterPair::of(model), cost, opts);
    sol.optimal_avg_cost = optimal_average_cost(sol, model.C);
    return sol;
}

double optimal_average_cost(const RiccatiSolution& sol, const Matrix& C) {
    if (C.rows() != sol.P.rows()) throw DimensionError("optimal_average_cost: C has the wrong row count");
    return (sol.P * C * C.transpose()).trace();
}

double exp_energy_bound(const Matrix& D) {
    return matspec::lyapunov_solve(D, Matrix::Identity(D.rows(), D.cols())).trace();
}

double perturbation_radius(double alpha, int m, double similarity_cond, double k_norm, double energy) {
    if (!(alpha < 0.0)) throw InstabilityError("perturbation_radius: closed loop is not stable");
    if (m < 1 || !(similarity_cond >= 1.0 - 1e-12) || !(energy > 0.0) || k_norm < 0.0) {
        throw ValueError("perturbation_radius: invalid argument");
    }
    const double g = -alpha;
    const double spectral = std::min(g, std::pow(g, m)) / (std::sqrt(double(m)) * similarity_cond);
    return std::min(spectral, 1.0 / (4.0 * energy)) / std::max(1.0, k_norm);
}

LipschitzBounds lipschitz_bounds(const DynamicsModel& truth, const CostSpec& cost, const RiccatiSolution& sol) {
    const double alpha = matspec::spectral_abscissa(sol.D);
    if (!(alpha < 0.0)) throw InstabilityError("lipschitz_bounds: optimal closed loop is not stable");
    const matspec::SpectralProfile prof = matspec::jordan_profile(sol.D);
    const double k_norm = linalg::op_norm(sol.K);

    LipschitzBounds out;
    out.kappa_star = perturbation_radius(alpha, prof.m, prof.similarity_cond, k_norm, exp_energy_bound(sol.D));

    const double p = linalg::op_norm(sol.P);
    const double b = linalg::op_norm(truth.B);
    const double lq = linalg::lambda_min_sym(cost.Q);
    const double lr = linalg::lambda_min_sym(cost.R);
    const double inner = std::max(1.0, 2.0 * (b + out.kappa_star) * p / lr);
    out.beta_star = 2.0 * p / lr * (1.0 + 4.0 * b / lq * p * inner);
    return out;
}

SuboptimalCost suboptimal_cost_identity(const DynamicsModel& model, const CostSpec& cost, const Matrix& K,
                                        const Vector& x0) {
    linalg::require_shape(K, model.du(), model.dx(), "suboptimal_cost_identity: K");
    if (x0.size() != model.dx()) throw DimensionError("suboptimal_cost_identity: x0 has the wrong size");
    const Matrix D = model.A + model.B * K;
    if (!(matspec::spectral_abscissa(D) < 0.0)) {
        throw InstabilityError("suboptimal_cost_identity: A + B K is not stable");
    }
    const RiccatiSolution opt = care_solve(ParameterPair::of(model), cost);
    const Matrix dK = K - opt.K;

    SuboptimalCost out;
    const Matrix V = matspec::lyapunov_solve(D, linalg::symmetrize(cost.Q + K.transpose() * cost.R * K));
    const Matrix W = matspec::lyapunov_solve(D, linalg::symmetrize(dK.transpose() * cost.R * dK));
    out.total_cost = x0.dot(V * x0);
    out.identity_rhs = x0.dot(opt.P * x0) + x0.dot(W * x0);
    return out;
}

}  // namespace ctlqr::riccati
