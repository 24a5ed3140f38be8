#pragma once

#include <optional>

#include "ctlqr/matspec.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/riccati.hpp"

/// Stability margins of certainty-equivalent gains and the stabilization oracle.
namespace ctlqr::margin {

struct MarginCertificate {
    double rho = 0.0;              // -alpha(A_est + B_est K_est)
    double zeta = 0.0;             // ||P_est||_2
    int m_hat = 1;                 // largest Jordan block of the estimated closed loop
    double similarity_cond = 1.0;  // conditioning of its Jordan similarity
    double k_norm = 0.0;           // ||K_est||_2
    double delta = 0.0;
    double radius = 0.0;           // admissible deviation Psi from the truth
};

/// alpha(M) + max(x, x^{1/m}) with x = m^{1/2} e_norm_similar, where e_norm_similar = ||P E P^{-1}||_2.
/// Upper-bounds alpha(M - E).
double eig_perturbation_bound(const matspec::SpectralProfile& profile, double e_norm_similar);

/// Same bound with ||P E P^{-1}||_2 formed from the profile's similarity transform.
double eig_perturbation_bound(const matspec::SpectralProfile& profile, const Matrix& E);

/// min(1, 1/k_norm) (x ^ x^m) / (m^{1/2} cond) with x = rho - delta. Requires rho > delta.
double margin_radius(double rho, double delta, int m, double similarity_cond, double k_norm);

/// Certificate for the gain computed from an estimate. Any true pair within `radius` (in Psi)
/// of `est` is stabilized by K(est) with abscissa below -delta.
/// Throws EmptyMarginError when delta >= rho, ConvergenceError when est is not stabilizable.
MarginCertificate stability_margin(const ParameterPair& est, const CostSpec& cost, double delta,
                                   const riccati::CareOptions& opts = {});

/// Radius around the truth inside which every estimate has a uniformly good closed loop.
double epsilon0(const DynamicsModel& truth, const CostSpec& cost);

enum class OracleRule {
    // Psi(est) strictly below the certificate radius evaluated at est.
    certified,
    // alpha(A + B K(est)) < -delta0 checked directly against the truth. Contains the certified set.
    closed_loop,
};

/// Simulation-side membership oracle; holds the truth.
struct StabilizationOracle {
    double delta0 = 0.0;
    DynamicsModel truth;
    CostSpec cost;
    ParameterPair anchor;
    OracleRule rule = OracleRule::certified;

    /// delta0 defaults to half the optimal stability margin, the anchor to the truth itself.
    /// Throws ValueError if delta0 is not positive or the anchor is not a member.
    static StabilizationOracle make(const DynamicsModel& truth, const CostSpec& cost,
                                    std::optional<double> delta0 = std::nullopt,
                                    std::optional<ParameterPair> anchor = std::nullopt,
                                    OracleRule rule = OracleRule::certified);
};

/// Membership test. Estimates whose Riccati equation cannot be solved within a bounded
/// number of flow steps are not members.
bool oracle_contains(const StabilizationOracle& oracle, const ParameterPair& est);

/// est if it is a member; otherwise the member closest to est on the segment toward the anchor,
/// located to 1e-6 of the segment. The search walks out from the anchor with doubling steps and
/// then bisects, so it finds the edge of the anchor's part of the segment.
ParameterPair oracle_project(const StabilizationOracle& oracle, const ParameterPair& est,
                             bool* projected = nullptr);

}  // namespace ctlqr::margin
