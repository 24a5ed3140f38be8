#pragma once

#include "ctlqr/model.hpp"

/// Continuous algebraic Riccati equation, optimal LQ gain and the
/// perturbation identities built on it.
namespace ctlqr::riccati {

struct RiccatiSolution {
    Matrix P;  // stabilizing PSD solution of g(P) = 0
    Matrix K;  // -R^{-1} B^T P
    Matrix D;  // A + B K
    double residual = 0.0;          // ||g(P)||_F
    double optimal_avg_cost = 0.0;  // tr(P C C^T); zero when no noise matrix was supplied
    double integrated_time = 0.0;   // length of the Riccati flow before refinement
};

struct CareOptions {
    double tol = 1e-10;        // stop at ||g(M)||_F <= tol (1 + ||Q||_F)
    double max_time = 1e4;     // flow horizon before giving up
    long max_steps = 1000000;  // accepted plus rejected steps before giving up
    bool newton_refine = true;
    double newton_switch = 1e-4;  // relative residual at which refinement is attempted
};

/// g(M) = A^T M + M A - M B R^{-1} B^T M + Q.
Matrix riccati_residual(const ParameterPair& ab, const CostSpec& cost, const Matrix& M);
Matrix riccati_residual(const DynamicsModel& model, const CostSpec& cost, const Matrix& M);

/// Integrates dM/dt = g(M) from M = 0 with error-controlled RK4 steps; once the residual is
/// small and the induced gain stabilizes, Newton-Kleinman sweeps polish the answer.
/// Throws ConvergenceError if the tolerance is not met within max_time.
RiccatiSolution care_solve(const ParameterPair& ab, const CostSpec& cost, const CareOptions& opts = {});
RiccatiSolution care_solve(const DynamicsModel& model, const CostSpec& cost, const CareOptions& opts = {});

/// Same flow started from an arbitrary symmetric PSD matrix.
RiccatiSolution care_solve_from(const ParameterPair& ab, const CostSpec& cost, const Matrix& M0,
                                const CareOptions& opts = {});

/// tr(P C C^T).
double optimal_average_cost(const RiccatiSolution& sol, const Matrix& C);

/// tr(lyapunov_solve(D, I)): an upper bound on the integral of ||e^{D t}||_2^2 over [0, inf).
double exp_energy_bound(const Matrix& D);

/// min(1, 1/k_norm) * min( [g ^ g^m] / (m^{1/2} cond), 1 / (4 energy) ), g = -alpha.
/// Shared by kappa_star and epsilon_0, which have the same closed form.
double perturbation_radius(double alpha, int m, double similarity_cond, double k_norm, double energy);

struct LipschitzBounds {
    double kappa_star = 0.0;
    double beta_star = 0.0;
};

/// Radius kappa_star within which ||K(est) - K*||_2 <= beta_star Psi(est).
LipschitzBounds lipschitz_bounds(const DynamicsModel& truth, const CostSpec& cost,
                                 const RiccatiSolution& sol);

struct SuboptimalCost {
    double total_cost = 0.0;    // integral of x^T (Q + K^T R K) x for the noiseless closed loop
    double identity_rhs = 0.0;  // x0^T P x0 + integral of ||R^{1/2}(K - K_opt) x||^2
};

/// Both sides of the suboptimal-gain cost identity for the noiseless system started at x0.
SuboptimalCost suboptimal_cost_identity(const DynamicsModel& model, const CostSpec& cost,
                                        const Matrix& K, const Vector& x0);

}  // namespace ctlqr::riccati
