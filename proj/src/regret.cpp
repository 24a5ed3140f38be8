#include "ctlqr/regret.hpp"

#include <algorithm>
#include <cmath>

#include "ctlqr/errors.hpp"
#include "ctlqr/matspec.hpp"

namespace ctlqr::regret {

namespace {

void check_record(const policy::RunRecord& record, const sde::BrownianPath& path) {
    const auto& log = record.trajectory;
    if (record.path_seed != path.seed || log.dt != path.dt || log.steps() != path.steps()) {
        throw ValueError("regret: record was not simulated on this path");
    }
}

}  // namespace

RegretCurve regret_coupled(const DynamicsModel& truth, const CostSpec& cost, const policy::RunRecord& record,
                           const sde::BrownianPath& path) {
    check_record(record, path);
    const auto sol = riccati::care_solve(truth, cost);
    const auto& log = record.trajectory;
    const auto opt = sde::simulate(truth, cost, {{0.0, sol.K, 0}}, log.states.col(0), path, record.scheme);
    return {log.times, log.cost_integral - opt.cost_integral};
}

Matrix E_matrix(const riccati::RiccatiSolution& sol, double t) {
    if (!(t >= 0.0)) throw ValueError("E_matrix: t must be nonnegative");
    const Matrix F = matspec::matrix_exp(sol.D, t);
    return F.transpose() * sol.P * F;
}

PolicyDiff::PolicyDiff(const DynamicsModel& truth, const CostSpec& cost, const riccati::RiccatiSolution& sol,
                       const policy::RunRecord& record)
    : dt_(record.trajectory.dt), steps_(record.trajectory.steps()), x_(record.trajectory.states) {
    const Matrix du = record.trajectory.actions - sol.K * x_;
    bdu_ = truth.B * du;
    first_ = Vector::Zero(steps_ + 1);
    for (Eigen::Index k = 0; k < steps_; ++k) {
        first_(k + 1) = first_(k) + dt_ * du.col(k).dot(cost.R * du.col(k));
    }
    step_ = matspec::matrix_exp(sol.D, dt_);
    lags_.push_back(sol.P);
    cutoff_ = 1e-17 * linalg::op_norm(sol.P);
}

Eigen::Index PolicyDiff::index_of(double T) const {
    if (!(T >= 0.0) || T > static_cast<double>(steps_) * dt_ * (1.0 + 1e-12)) {
        throw ValueError("policy_diff_term: T outside the record");
    }
    return std::min<Eigen::Index>(static_cast<Eigen::Index>(std::llround(T / dt_)), steps_);
}

void PolicyDiff::extend_lags(Eigen::Index lag) {
    while (!exhausted_ && static_cast<Eigen::Index>(lags_.size()) <= lag) {
        Matrix next = step_.transpose() * lags_.back() * step_;
        if (linalg::op_norm(next) < cutoff_) {
            exhausted_ = true;
            break;
        }
        lags_.push_back(std::move(next));
    }
}

double PolicyDiff::deviation_integral(double T) const { return first_(index_of(T)); }

double PolicyDiff::at(double T) {
    const Eigen::Index kT = index_of(T);
    extend_lags(kT);
    const Eigen::Index nlags = std::min<Eigen::Index>(kT, static_cast<Eigen::Index>(lags_.size()) - 1);
    double second = 0.0;
    // Left endpoint j sits at lag kT - j; lags past the cache have negligible weight.
    for (Eigen::Index l = 1; l <= nlags; ++l) {
        const Eigen::Index j = kT - l;
        second += x_.col(j).dot(lags_[static_cast<size_t>(l)] * bdu_.col(j));
    }
    return first_(kT) - 2.0 * dt_ * second;
}

double policy_diff_term(const DynamicsModel& truth, const CostSpec& cost, const riccati::RiccatiSolution& sol,
                        const policy::RunRecord& record, double T) {
    PolicyDiff pd(truth, cost, sol, record);
    return pd.at(T);
}

RateConstants rate_constants(const DynamicsModel& truth, const CostSpec& cost, const riccati::RiccatiSolution& sol,
                             double gamma) {
    if (!(gamma > 1.0)) throw ValueError("rate_constants: gamma must exceed 1");
    const double c_norm = linalg::op_norm(truth.C);
    const double cc_min = linalg::lambda_min_sym(truth.C * truth.C.transpose());
    if (!(cc_min > 1e-12 * std::max(c_norm * c_norm, 1e-300))) {
        throw ValueError("rate_constants: C C^T is singular");
    }
    const double p = linalg::op_norm(sol.P);
    const double q_min = linalg::lambda_min_sym(cost.Q);
    const double r_min = linalg::lambda_min_sym(cost.R);
    const auto dx = static_cast<double>(truth.dx());
    const auto du = static_cast<double>(truth.du());
    const auto dw = static_cast<double>(truth.dw());
    RateConstants out;
    out.omega_R = c_norm * std::pow(p, 1.5) * dw / std::sqrt(q_min * r_min);
    out.omega_E = (dx + du) * (dx / std::log(gamma) + dw * c_norm * c_norm / cc_min);
    out.omega_pi = (gamma - 1.0) * c_norm * c_norm * std::pow(p, 6) * linalg::op_norm(cost.R) /
                   (q_min * q_min * std::pow(r_min, 4)) * out.omega_E;
    return out;
}

std::vector<double> log_grid(double t_min, double t_max, int count) {
    if (!(t_min > 0.0) || !(t_max >= t_min) || count < 2) throw ValueError("log_grid: invalid range or count");
    std::vector<double> out(static_cast<size_t>(count));
    const double ratio = std::log(t_max / t_min) / (count - 1);
    for (int i = 0; i < count; ++i) out[static_cast<size_t>(i)] = t_min * std::exp(ratio * i);
    out.back() = t_max;
    return out;
}

RegretReport make_report(const DynamicsModel& truth, const CostSpec& cost, const riccati::RiccatiSolution& sol,
                         const policy::RunRecord& record, const sde::BrownianPath& path,
                         const std::vector<double>& grid, double gamma) {
    const auto curve = regret_coupled(truth, cost, record, path);
    PolicyDiff pd(truth, cost, sol, record);
    const double dt = record.trajectory.dt;
    const Eigen::Index steps = record.trajectory.steps();

    std::vector<Eigen::Index> ks;
    for (double T : grid) {
        if (!(T >= 0.0)) throw ValueError("make_report: negative horizon in grid");
        ks.push_back(std::min<Eigen::Index>(static_cast<Eigen::Index>(std::llround(T / dt)), steps));
    }
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    RegretReport rep;
    const auto n = static_cast<Eigen::Index>(ks.size());
    rep.grid.resize(n);
    rep.regret.resize(n);
    rep.regret_norm.resize(n);
    rep.policy_diff_term.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index k = ks[static_cast<size_t>(i)];
        const double T = curve.times(k);
        rep.grid(i) = T;
        rep.regret(i) = curve.regret(k);
        rep.regret_norm(i) = T > 0.0 ? curve.regret(k) / std::sqrt(T) : 0.0;
        rep.policy_diff_term(i) = pd.at(T);
    }

    const auto m = static_cast<Eigen::Index>(record.episodes.size());
    rep.episode_times.resize(m);
    rep.est_err_sq.resize(m);
    rep.est_err_sq_norm.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& e = record.episodes[static_cast<size_t>(i)];
        rep.episode_times(i) = e.tau;
        rep.est_err_sq(i) = e.psi * e.psi;
        rep.est_err_sq_norm(i) = std::sqrt(e.tau) * e.psi * e.psi;
    }
    try {
        rep.omega = rate_constants(truth, cost, sol, gamma);
    } catch (const ValueError&) {
        rep.omega = {};
    }
    return rep;
}

}  // namespace ctlqr::regret
