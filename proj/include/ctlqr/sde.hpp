#pragma once

#include <cstdint>
#include <vector>

#include "ctlqr/model.hpp"

/// Simulation of dX = (A X + B U) dt + C dW under piecewise-constant linear feedback.
namespace ctlqr::sde {

/// Pre-drawn Brownian increments on a uniform grid. `aux` holds independent standard normals
/// used by the exact scheme for the part of the step noise not explained by the increment.
struct BrownianPath {
    double dt = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    Matrix increments;  // d_W x steps, each column ~ N(0, dt I)
    Matrix aux;         // d_aux x steps, each column ~ N(0, I)

    Eigen::Index steps() const { return increments.cols(); }
    Eigen::Index dw() const { return increments.rows(); }
    double time(Eigen::Index k) const { return static_cast<double>(k) * dt; }
};

/// ceil(horizon / dt) increments drawn from a generator seeded with `seed`. The exact scheme
/// needs aux_dim = d_X; a negative aux_dim means d_W. Increments do not depend on aux_dim.
/// Throws ValueError for nonpositive dt or horizon < dt.
BrownianPath make_path(std::uint64_t seed, double horizon, double dt, Eigen::Index d_W, Eigen::Index aux_dim = -1);

/// Number of grid steps for a horizon, tolerant to rounding in horizon / dt.
Eigen::Index step_count(double horizon, double dt);

/// Grid index at which a switch requested at time t takes effect (snapped up).
Eigen::Index snap_up(double t, double dt);

enum class Scheme {
    // Matrix exponential drift with the exact Gaussian step noise.
    exact,
    // X + D X dt + C dW.
    euler_maruyama,
};

struct GainSegment {
    double start = 0.0;
    Matrix K;
    int index = 0;  // label written to the log
};

/// Segments sorted by start time; the first must start at 0.
using GainSchedule = std::vector<GainSegment>;

struct TrajectoryLog {
    double dt = 0.0;
    Vector times;                // steps + 1 grid points
    Matrix states;               // d_X x (steps + 1)
    Matrix actions;              // d_U x (steps + 1)
    std::vector<int> gain_index; // per grid point
    Vector cost_integral;        // running integral of X^T Q X + U^T R U, left endpoints

    Eigen::Index steps() const { return states.cols() - 1; }
};

/// One-step propagation for a fixed closed loop D = A + B K.
class StepOperator {
public:
    StepOperator(const DynamicsModel& model, const Matrix& K, double dt, Scheme scheme);

    /// Next state from x given the raw increment dw and auxiliary normals aux.
    void advance(const Vector& x, const Eigen::Ref<const Vector>& dw, const Eigen::Ref<const Vector>& aux,
                 Vector& out) const;

    const Matrix& transition() const { return phi_; }

private:
    Matrix phi_;    // e^{D dt}
    Matrix mix_;    // maps the increment to its share of the step noise
    Matrix resid_;  // factor of the remaining step-noise covariance
};

/// Incremental simulator: the adaptive policy advances it episode by episode.
class Simulator {
public:
    Simulator(const DynamicsModel& model, const CostSpec& cost, const Vector& x0, const BrownianPath& path,
              Scheme scheme = Scheme::exact);

    /// Switches to gain K (label `index`) from the current grid point on.
    void set_gain(const Matrix& K, int index);

    /// Advances to grid index `target` (clamped to the path length).
    /// Throws ExplosionError with the first time at which the state left the finite range.
    void run_until(Eigen::Index target);

    Eigen::Index position() const { return k_; }
    const TrajectoryLog& log() const { return log_; }
    TrajectoryLog take_log();

private:
    const DynamicsModel& model_;
    const CostSpec& cost_;
    const BrownianPath& path_;
    Scheme scheme_;
    Matrix K_;
    int index_ = 0;
    StepOperator op_;
    Eigen::Index k_ = 0;
    TrajectoryLog log_;
};

/// Simulates the whole path under a fixed schedule. Switch times snap up to the grid.
TrajectoryLog simulate(const DynamicsModel& model, const CostSpec& cost, const GainSchedule& gains,
                       const Vector& x0, const BrownianPath& path, Scheme scheme = Scheme::exact);

/// (t1 - t0)^{-1} times the left-endpoint integral of X X^T over [t0, t1].
Matrix empirical_covariance(const TrajectoryLog& log, double t0, double t1);

}  // namespace ctlqr::sde
