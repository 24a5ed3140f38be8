#include "ctlqr/margin.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctlqr/errors.hpp"
#include "ctlqr/riccati.hpp"

namespace ctlqr::margin {

double eig_perturbation_bound(const matspec::SpectralProfile& profile, double e_norm_similar) {
    if (!(e_norm_similar >= 0.0)) throw ValueError("eig_perturbation_bound: norm must be nonnegative");
    const double x = std::sqrt(double(profile.m)) * e_norm_similar;
    return profile.abscissa + std::max(x, std::pow(x, 1.0 / profile.m));
}

double eig_perturbation_bound(const matspec::SpectralProfile& profile, const Matrix& E) {
    const Eigen::Index n = profile.similarity.rows();
    linalg::require_shape(E, n, n, "eig_perturbation_bound: E");
    const CMatrix PEPinv = profile.similarity * E.cast<Complex>() * profile.similarity_inv;
    return eig_perturbation_bound(profile, linalg::op_norm(PEPinv));
}

double margin_radius(double rho, double delta, int m, double similarity_cond, double k_norm) {
    if (!(delta >= 0.0)) throw ValueError("margin_radius: delta must be nonnegative");
    if (!(rho > delta)) {
        throw EmptyMarginError("margin_radius: delta " + std::to_string(delta) + " is not below rho " +
                               std::to_string(rho));
    }
    if (m < 1 || !(similarity_cond >= 1.0 - 1e-12) || !(k_norm >= 0.0)) {
        throw ValueError("margin_radius: invalid argument");
    }
    const double x = rho - delta;
    return std::min(1.0, 1.0 / k_norm) * std::min(x, std::pow(x, m)) / (std::sqrt(double(m)) * similarity_cond);
}

MarginCertificate stability_margin(const ParameterPair& est, const CostSpec& cost, double delta,
                                   const riccati::CareOptions& opts) {
    const riccati::RiccatiSolution sol = riccati::care_solve(est, cost, opts);
    const matspec::SpectralProfile prof = matspec::jordan_profile(sol.D);

    MarginCertificate c;
    c.rho = -prof.abscissa;
    c.zeta = linalg::op_norm(sol.P);
    c.m_hat = prof.m;
    c.similarity_cond = prof.similarity_cond;
    c.k_norm = linalg::op_norm(sol.K);
    c.delta = delta;
    c.radius = margin_radius(c.rho, delta, c.m_hat, c.similarity_cond, c.k_norm);
    return c;
}

double epsilon0(const DynamicsModel& truth, const CostSpec& cost) {
    const riccati::RiccatiSolution sol = riccati::care_solve(truth, cost);
    const matspec::SpectralProfile prof = matspec::jordan_profile(sol.D);
    if (!(prof.abscissa < 0.0)) throw InstabilityError("epsilon0: optimal closed loop is not stable");
    return riccati::perturbation_radius(prof.abscissa, prof.m, prof.similarity_cond, linalg::op_norm(sol.K),
                                        riccati::exp_energy_bound(sol.D));
}

StabilizationOracle StabilizationOracle::make(const DynamicsModel& truth, const CostSpec& cost,
                                              std::optional<double> delta0, std::optional<ParameterPair> anchor,
                                              OracleRule rule) {
    StabilizationOracle o;
    o.truth = truth;
    o.cost = cost;
    o.rule = rule;
    if (delta0) {
        o.delta0 = *delta0;
    } else {
        const riccati::RiccatiSolution sol = riccati::care_solve(truth, cost);
        o.delta0 = -0.5 * matspec::spectral_abscissa(sol.D);
    }
    if (!(o.delta0 > 0.0)) throw ValueError("StabilizationOracle: delta0 must be positive");
    o.anchor = anchor ? *anchor : ParameterPair::of(truth);
    linalg::require_shape(o.anchor.A, truth.dx(), truth.dx(), "StabilizationOracle: anchor A");
    linalg::require_shape(o.anchor.B, truth.dx(), truth.du(), "StabilizationOracle: anchor B");
    if (!oracle_contains(o, o.anchor)) throw ValueError("StabilizationOracle: anchor is not a member");
    return o;
}

namespace {

// Members have well-conditioned Riccati equations; the cap keeps hopeless estimates cheap.
riccati::CareOptions oracle_care_options() {
    riccati::CareOptions opts;
    opts.max_steps = 20000;
    return opts;
}

}  // namespace

bool oracle_contains(const StabilizationOracle& oracle, const ParameterPair& est) {
    const ParameterPair truth = ParameterPair::of(oracle.truth);
    linalg::require_shape(est.A, truth.A.rows(), truth.A.cols(), "oracle_contains: A");
    linalg::require_shape(est.B, truth.B.rows(), truth.B.cols(), "oracle_contains: B");
    if (!linalg::all_finite(est.A) || !linalg::all_finite(est.B)) return false;
    try {
        if (oracle.rule == OracleRule::closed_loop) {
            const riccati::RiccatiSolution sol = riccati::care_solve(est, oracle.cost, oracle_care_options());
            return matspec::spectral_abscissa(truth.A + truth.B * sol.K) < -oracle.delta0;
        }
        const MarginCertificate c = stability_margin(est, oracle.cost, oracle.delta0, oracle_care_options());
        return parameter_distance(est, truth) < c.radius;
    } catch (const Error&) {
        return false;
    }
}

ParameterPair oracle_project(const StabilizationOracle& oracle, const ParameterPair& est, bool* projected) {
    if (projected) *projected = false;
    if (oracle_contains(oracle, est)) return est;
    if (projected) *projected = true;

    // u is the fraction of the way from the anchor to est.
    auto at = [&](double u) {
        return ParameterPair{oracle.anchor.A + u * (est.A - oracle.anchor.A),
                             oracle.anchor.B + u * (est.B - oracle.anchor.B)};
    };
    constexpr double kResolution = 1e-6;
    const double span = parameter_distance(est, oracle.anchor);
    double in = 0.0;
    double out = 1.0;
    for (double u = std::min(0.5, 1e-3 / std::max(span, 1e-300)); u < 1.0; u *= 2.0) {
        if (!oracle_contains(oracle, at(u))) {
            out = u;
            break;
        }
        in = u;
    }
    while (out - in > kResolution) {
        const double mid = 0.5 * (in + out);
        if (oracle_contains(oracle, at(mid))) {
            in = mid;
        } else {
            out = mid;
        }
    }
    return in == 0.0 ? oracle.anchor : at(in);
}

}  // namespace ctlqr::margin
