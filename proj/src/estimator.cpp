#include "ctlqr/estimator.hpp"

#include <cmath>

#include "ctlqr/errors.hpp"

namespace ctlqr::estimator {

EstimatorState EstimatorState::make(Eigen::Index dx, Eigen::Index du, Eigen::Index dw, double gamma, double sigma0,
                                    ScheduleMode mode) {
    if (dx < 1 || du < 1 || dw < 1) throw DimensionError("EstimatorState: dimensions must be positive");
    if (!(gamma > 1.0)) throw ValueError("EstimatorState: gamma must exceed 1");
    if (!(sigma0 >= 0.0)) throw ValueError("EstimatorState: sigma0 must be nonnegative");
    EstimatorState s;
    s.gram = Matrix::Zero(dx + du, dx + du);
    s.cross = Matrix::Zero(dx + du, dx);
    s.noise_cross = Matrix::Zero(dx + du, dw);
    s.gamma = gamma;
    s.sigma0 = sigma0;
    s.mode = mode;
    return s;
}

void accumulate(EstimatorState& state, const Vector& x, const Vector& u, const Vector& dx, const Vector& dw,
                double ds) {
    if (!(ds > 0.0)) throw ValueError("accumulate: ds must be positive");
    const Eigen::Index nx = state.dx();
    if (x.size() != nx || dx.size() != nx || u.size() != state.dz() - nx || dw.size() != state.noise_cross.cols()) {
        throw DimensionError("accumulate: vector sizes do not match the state");
    }
    Vector z(state.dz());
    z << x, u;
    state.gram.noalias() += ds * z * z.transpose();
    state.cross.noalias() += z * dx.transpose();
    state.noise_cross.noalias() += z * dw.transpose();
    state.elapsed += ds;
}

void accumulate_log(EstimatorState& state, const sde::TrajectoryLog& log, const sde::BrownianPath& path,
                    Eigen::Index k0, Eigen::Index k1) {
    if (k0 < 0 || k1 > log.steps() || k1 > path.steps() || k0 > k1) {
        throw ValueError("accumulate_log: step range outside the log");
    }
    const Eigen::Index nx = state.dx();
    if (log.states.rows() != nx || log.actions.rows() != state.dz() - nx ||
        path.dw() != state.noise_cross.cols()) {
        throw DimensionError("accumulate_log: log does not match the state");
    }
    const Eigen::Index len = k1 - k0;
    if (len == 0) return;
    Matrix Z(state.dz(), len);
    Z.topRows(nx) = log.states.middleCols(k0, len);
    Z.bottomRows(state.dz() - nx) = log.actions.middleCols(k0, len);
    const Matrix dX = log.states.middleCols(k0 + 1, len) - log.states.middleCols(k0, len);
    state.gram.noalias() += log.dt * Z * Z.transpose();
    state.cross.noalias() += Z * dX.transpose();
    state.noise_cross.noalias() += Z * path.increments.middleCols(k0, len).transpose();
    state.elapsed += static_cast<double>(len) * log.dt;
}

ParameterEstimate least_squares(const EstimatorState& state, double sv_cutoff) {
    if (!(sv_cutoff >= 0.0)) throw ValueError("least_squares: cutoff must be nonnegative");
    const Matrix theta = state.cross.transpose() * linalg::pinv_psd(state.gram, sv_cutoff);
    const ParameterPair ab = ParameterPair::from_stacked(theta, state.dx());
    return ParameterEstimate{ab.A, ab.B, state.n, false};
}

double randomization_sigma(int n, double gamma, double sigma0) {
    if (n < 0) throw ValueError("randomization_sigma: n must be nonnegative");
    if (!(gamma > 1.0)) throw ValueError("randomization_sigma: gamma must exceed 1");
    return sigma0 * std::pow(std::pow(gamma, -n) * n, 0.25);
}

double schedule_sigma(const EstimatorState& state, int n) {
    return state.mode == ScheduleMode::persistent ? state.sigma0 : randomization_sigma(n, state.gamma, state.sigma0);
}

Matrix randomization_matrix(std::mt19937_64& rng, Eigen::Index dx, Eigen::Index cols, double sigma) {
    Matrix G = Matrix::Zero(dx, cols);
    if (sigma == 0.0) return G;
    std::normal_distribution<double> nd(0.0, sigma);
    for (Eigen::Index i = 0; i < dx; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) G(i, j) = nd(rng);
    return G;
}

ParameterEstimate randomized_estimate(const EstimatorState& state, int n, std::mt19937_64& rng,
                                      const margin::StabilizationOracle& oracle, double sv_cutoff) {
    const ParameterEstimate ls = least_squares(state, sv_cutoff);
    const Matrix G = randomization_matrix(rng, state.dx(), state.dz(), schedule_sigma(state, n));
    const ParameterPair raw = ParameterPair::from_stacked(ParameterPair{ls.A_hat, ls.B_hat}.stacked() + G, state.dx());
    bool projected = false;
    const ParameterPair out = margin::oracle_project(oracle, raw, &projected);
    return ParameterEstimate{out.A, out.B, n, projected};
}

double estimation_error(const ParameterEstimate& est, const DynamicsModel& truth) {
    return parameter_distance(est.pair(), ParameterPair::of(truth));
}

double self_normalized_ratio(const EstimatorState& state) {
    const Eigen::Index m = state.dz();
    Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(state.gram));
    const Vector lam = es.eigenvalues().cwiseMax(0.0);
    const Matrix inv_sqrt = es.eigenvectors() * (1.0 + lam.array()).rsqrt().matrix().asDiagonal() *
                            es.eigenvectors().transpose();
    const double num = std::pow(linalg::op_norm(inv_sqrt * state.noise_cross), 2);
    const double den = static_cast<double>(m * state.noise_cross.cols()) * std::log(std::exp(1.0) + lam.maxCoeff());
    return num / den;
}

}  // namespace ctlqr::estimator
