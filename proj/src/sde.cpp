#include "ctlqr/sde.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ctlqr/errors.hpp"
#include "ctlqr/matspec.hpp"

namespace ctlqr::sde {

namespace {

constexpr double kExplosionNorm = 1e100;

Matrix draw_normals(std::uint64_t seed, std::uint64_t stream, Eigen::Index rows, Eigen::Index cols, double sd) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::mt19937_64 gen(seq);
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = sd * nd(gen);
    return out;
}

}  // namespace

Eigen::Index step_count(double horizon, double dt) {
    return static_cast<Eigen::Index>(std::ceil(horizon / dt - 1e-9));
}

Eigen::Index snap_up(double t, double dt) {
    return static_cast<Eigen::Index>(std::ceil(t / dt - 1e-9));
}

BrownianPath make_path(std::uint64_t seed, double horizon, double dt, Eigen::Index d_W, Eigen::Index aux_dim) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValueError("make_path: dt must be positive");
    if (!(horizon >= dt) || !std::isfinite(horizon)) throw ValueError("make_path: horizon must be at least dt");
    if (d_W < 1) throw ValueError("make_path: d_W must be positive");
    if (aux_dim < 0) aux_dim = d_W;
    BrownianPath p;
    p.dt = dt;
    p.horizon = horizon;
    p.seed = seed;
    const Eigen::Index n = step_count(horizon, dt);
    p.increments = draw_normals(seed, 0, d_W, n, std::sqrt(dt));
    p.aux = draw_normals(seed, 1, aux_dim, n, 1.0);
    return p;
}

StepOperator::StepOperator(const DynamicsModel& model, const Matrix& K, double dt, Scheme scheme) {
    linalg::require_shape(K, model.du(), model.dx(), "StepOperator: gain");
    const Eigen::Index n = model.dx();
    const Matrix D = model.A + model.B * K;
    if (scheme == Scheme::euler_maruyama) {
        phi_ = Matrix::Identity(n, n) + D * dt;
        mix_ = model.C;
        resid_.resize(n, 0);
        return;
    }
    phi_ = matspec::matrix_exp(D, dt);
    // Top-right block of exp([[D, I], [0, 0]] dt) is the integral of e^{D u} over [0, dt].
    Matrix H = Matrix::Zero(2 * n, 2 * n);
    H.topLeftCorner(n, n) = D;
    H.topRightCorner(n, n) = Matrix::Identity(n, n);
    const Matrix J = matspec::matrix_exp(H, dt).topRightCorner(n, n);
    // Step noise xi = int e^{D (dt - s)} C dW(s). Its covariance with the increment is J C, so
    // xi = (J C / dt) dW + independent remainder of covariance Qd - J C C^T J^T / dt.
    mix_ = J * model.C / dt;
    const Matrix Qd = matspec::noise_gramian(D, model.C, dt);
    const Matrix rest = linalg::symmetrize(Qd - dt * mix_ * mix_.transpose());
    resid_ = linalg::psd_factor(rest);
    if (resid_.norm() == 0.0) resid_.resize(n, 0);
}

void StepOperator::advance(const Vector& x, const Eigen::Ref<const Vector>& dw, const Eigen::Ref<const Vector>& aux,
                           Vector& out) const {
    out.noalias() = phi_ * x;
    out.noalias() += mix_ * dw;
    if (resid_.cols() > 0) out.noalias() += resid_ * aux;
}

Simulator::Simulator(const DynamicsModel& model, const CostSpec& cost, const Vector& x0, const BrownianPath& path,
                     Scheme scheme)
    : model_(model),
      cost_(cost),
      path_(path),
      scheme_(scheme),
      K_(Matrix::Zero(model.du(), model.dx())),
      op_(model, K_, path.dt, scheme) {
    if (x0.size() != model.dx()) throw DimensionError("Simulator: x0 has the wrong size");
    if (path.dw() != model.dw()) throw DimensionError("Simulator: path and C disagree on d_W");
    linalg::require_shape(cost.Q, model.dx(), model.dx(), "Simulator: Q");
    linalg::require_shape(cost.R, model.du(), model.du(), "Simulator: R");
    const Eigen::Index n = path.steps();
    log_.dt = path.dt;
    log_.times = Vector::LinSpaced(n + 1, 0.0, static_cast<double>(n) * path.dt);
    log_.states = Matrix::Zero(model.dx(), n + 1);
    log_.actions = Matrix::Zero(model.du(), n + 1);
    log_.gain_index.assign(static_cast<size_t>(n + 1), 0);
    log_.cost_integral = Vector::Zero(n + 1);
    log_.states.col(0) = x0;
}

void Simulator::set_gain(const Matrix& K, int index) {
    K_ = K;
    index_ = index;
    op_ = StepOperator(model_, K_, path_.dt, scheme_);
}

void Simulator::run_until(Eigen::Index target) {
    const Eigen::Index n = path_.steps();
    target = std::min(target, n);
    const bool needs_aux = scheme_ == Scheme::exact;
    if (needs_aux && path_.aux.rows() != model_.dx() && k_ < target) {
        throw DimensionError("Simulator: the exact scheme needs d_X auxiliary normals per step (path has " +
                             std::to_string(path_.aux.rows()) + ")");
    }
    const Eigen::Index dx = model_.dx();
    Vector x = log_.states.col(k_);
    Vector u(model_.du());
    Vector next(dx);
    const Vector no_aux = Vector::Zero(dx);
    for (; k_ < target; ++k_) {
        u.noalias() = K_ * x;
        log_.actions.col(k_) = u;
        log_.gain_index[static_cast<size_t>(k_)] = index_;
        const double c = x.dot(cost_.Q * x) + u.dot(cost_.R * u);
        log_.cost_integral(k_ + 1) = log_.cost_integral(k_) + c * path_.dt;
        if (needs_aux) {
            op_.advance(x, path_.increments.col(k_), path_.aux.col(k_), next);
        } else {
            op_.advance(x, path_.increments.col(k_), no_aux, next);
        }
        if (!next.allFinite() || next.lpNorm<Eigen::Infinity>() > kExplosionNorm) {
            const double t = path_.time(k_ + 1);
            throw ExplosionError("simulate: state left the finite range at t = " + std::to_string(t), t);
        }
        log_.states.col(k_ + 1) = next;
        x.swap(next);
    }
    if (k_ == n) {
        log_.actions.col(n) = K_ * x;
        log_.gain_index[static_cast<size_t>(n)] = index_;
    }
}

TrajectoryLog Simulator::take_log() { return std::move(log_); }

TrajectoryLog simulate(const DynamicsModel& model, const CostSpec& cost, const GainSchedule& gains, const Vector& x0,
                       const BrownianPath& path, Scheme scheme) {
    if (gains.empty() || gains.front().start != 0.0) throw ValueError("simulate: schedule must start at t = 0");
    Simulator sim(model, cost, x0, path, scheme);
    for (size_t i = 0; i < gains.size(); ++i) {
        if (i > 0 && gains[i].start < gains[i - 1].start) throw ValueError("simulate: schedule is not sorted");
        sim.set_gain(gains[i].K, gains[i].index);
        const Eigen::Index end = i + 1 < gains.size() ? snap_up(gains[i + 1].start, path.dt) : path.steps();
        sim.run_until(end);
    }
    return sim.take_log();
}

Matrix empirical_covariance(const TrajectoryLog& log, double t0, double t1) {
    const Eigen::Index k0 = snap_up(t0, log.dt);
    const Eigen::Index k1 = snap_up(t1, log.dt);
    if (!(t0 >= 0.0) || !(t1 > t0) || k1 > log.steps() || k1 <= k0) {
        throw ValueError("empirical_covariance: empty or out-of-range window");
    }
    const auto X = log.states.middleCols(k0, k1 - k0);
    return linalg::symmetrize(X * X.transpose() / static_cast<double>(k1 - k0));
}

}  // namespace ctlqr::sde
