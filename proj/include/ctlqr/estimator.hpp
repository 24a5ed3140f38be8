#pragma once

#include <random>

#include "ctlqr/margin.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/sde.hpp"

/// Continuous-time least-squares identification of [A, B] with randomized estimates.
namespace ctlqr::estimator {

enum class ScheduleMode {
    decaying,    // sigma_n = sigma0 (n gamma^{-n})^{1/4}
    persistent,  // sigma_n = sigma0
};

struct EstimatorState {
    Matrix gram;         // integral of Z Z^T ds, Z = [X; U]
    Matrix cross;        // integral of Z dX^T
    Matrix noise_cross;  // integral of Z dW^T; needs the true increments, diagnostic only
    double elapsed = 0.0;
    double gamma = 1.2;
    double sigma0 = 1.0;
    int n = 0;
    ScheduleMode mode = ScheduleMode::decaying;

    static EstimatorState make(Eigen::Index dx, Eigen::Index du, Eigen::Index dw, double gamma, double sigma0,
                               ScheduleMode mode = ScheduleMode::decaying);

    Eigen::Index dx() const { return cross.cols(); }
    Eigen::Index dz() const { return gram.rows(); }
};

struct ParameterEstimate {
    Matrix A_hat;
    Matrix B_hat;
    int episode = 0;
    bool projected = false;

    ParameterPair pair() const { return {A_hat, B_hat}; }
};

inline constexpr double kDefaultSvCutoff = 1e-12;

/// Adds one left-endpoint step: gram += Z Z^T ds, cross += Z dx^T, noise_cross += Z dw^T.
void accumulate(EstimatorState& state, const Vector& x, const Vector& u, const Vector& dx, const Vector& dw,
                double ds);

/// accumulate over grid steps [k0, k1) of a log, with dx taken from consecutive logged states.
void accumulate_log(EstimatorState& state, const sde::TrajectoryLog& log, const sde::BrownianPath& path,
                    Eigen::Index k0, Eigen::Index k1);

/// cross^T pinv(gram); eigenvalues below sv_cutoff lambda_max(gram) are dropped.
ParameterEstimate least_squares(const EstimatorState& state, double sv_cutoff = kDefaultSvCutoff);

/// sigma0 (gamma^{-n} n)^{1/4}.
double randomization_sigma(int n, double gamma, double sigma0);

/// The sigma_n the state's schedule prescribes for episode n.
double schedule_sigma(const EstimatorState& state, int n);

/// d_X x cols matrix of independent N(0, sigma^2) entries, filled row by row.
Matrix randomization_matrix(std::mt19937_64& rng, Eigen::Index dx, Eigen::Index cols, double sigma);

/// Least squares plus randomization, then projected onto the oracle's set.
ParameterEstimate randomized_estimate(const EstimatorState& state, int n, std::mt19937_64& rng,
                                      const margin::StabilizationOracle& oracle,
                                      double sv_cutoff = kDefaultSvCutoff);

/// Psi of the estimate against the truth.
double estimation_error(const ParameterEstimate& est, const DynamicsModel& truth);

/// ||(I + gram)^{-1/2} noise_cross||_2^2 / (m d_W log(e + lambda_max(gram))), m = d_X + d_U.
double self_normalized_ratio(const EstimatorState& state);

}  // namespace ctlqr::estimator
