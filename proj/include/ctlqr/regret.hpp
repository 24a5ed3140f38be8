#pragma once

#include <vector>

#include "ctlqr/policy.hpp"
#include "ctlqr/riccati.hpp"

/// Coupled regret, the policy-differentiation term and the rate constants.
namespace ctlqr::regret {

struct RegretCurve {
    Vector times;   // every grid point of the record
    Vector regret;  // R_T: cost of the record minus cost of the optimal gain on the same path
};

/// Re-simulates the optimal gain on `path` from the record's initial state and subtracts
/// running costs. Throws ValueError if the record was not simulated on `path`.
RegretCurve regret_coupled(const DynamicsModel& truth, const CostSpec& cost, const policy::RunRecord& record,
                           const sde::BrownianPath& path);

/// e^{D^T t} P e^{D t} for the optimal closed loop D and Riccati solution P.
Matrix E_matrix(const riccati::RiccatiSolution& sol, double t);

/// Evaluates the policy-differentiation term at many horizons T for one record.
/// Caches E at every grid lag once and reuses it across T.
class PolicyDiff {
public:
    PolicyDiff(const DynamicsModel& truth, const CostSpec& cost, const riccati::RiccatiSolution& sol,
               const policy::RunRecord& record);

    /// Value at the grid point nearest to T (left-endpoint sums). Requires 0 <= T <= horizon.
    double at(double T);

    /// The squared-deviation integral alone.
    double deviation_integral(double T) const;

private:
    Eigen::Index index_of(double T) const;
    void extend_lags(Eigen::Index lag);

    double dt_;
    Eigen::Index steps_;
    Vector first_;  // running integral of ||R^{1/2} (u - K* x)||^2
    Matrix x_;      // states, d_X x (steps + 1)
    Matrix bdu_;    // B (u - K* x), d_X x (steps + 1)
    Matrix step_;   // e^{D dt}
    std::vector<Matrix> lags_;  // E at lag l dt
    double cutoff_;             // lags with ||E|| below this are dropped
    bool exhausted_ = false;
};

/// R~_T for a single horizon.
double policy_diff_term(const DynamicsModel& truth, const CostSpec& cost, const riccati::RiccatiSolution& sol,
                        const policy::RunRecord& record, double T);

struct RateConstants {
    double omega_R = 0.0;
    double omega_E = 0.0;
    double omega_pi = 0.0;
};

/// omega_R = ||C|| ||P||^{3/2} d_W / (lmin(Q) lmin(R))^{1/2}
/// omega_E = (d_X + d_U)(d_X / log gamma + d_W ||C||^2 / lmin(C C^T))
/// omega_pi = (gamma - 1) ||C||^2 ||P||^6 ||R|| / (lmin(Q)^2 lmin(R)^4) omega_E
/// Throws ValueError when C C^T is singular or gamma <= 1.
RateConstants rate_constants(const DynamicsModel& truth, const CostSpec& cost, const riccati::RiccatiSolution& sol,
                             double gamma);

/// `count` geometrically spaced times from t_min to t_max inclusive.
std::vector<double> log_grid(double t_min, double t_max, int count);

struct RegretReport {
    Vector grid;              // horizons T, snapped to the simulation grid
    Vector regret;            // R_T
    Vector regret_norm;       // T^{-1/2} R_T
    Vector policy_diff_term;  // R~_T
    Vector episode_times;     // tau_n
    Vector est_err_sq;        // Psi_n^2
    Vector est_err_sq_norm;   // tau_n^{1/2} Psi_n^2
    RateConstants omega;
};

/// Regret curve and policy-differentiation term on `grid`, and episode error summaries.
/// The rate constants are left at zero when C C^T is singular.
RegretReport make_report(const DynamicsModel& truth, const CostSpec& cost, const riccati::RiccatiSolution& sol,
                         const policy::RunRecord& record, const sde::BrownianPath& path,
                         const std::vector<double>& grid, double gamma);

}  // namespace ctlqr::regret
