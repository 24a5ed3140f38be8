#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ctlqr/estimator.hpp"
#include "ctlqr/margin.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/sde.hpp"

/// The randomized-estimates episode loop and its non-learning baselines.
namespace ctlqr::policy {

enum class Mode { randomized, persistent, optimal, fixed_gain };

std::string to_string(Mode mode);
/// Accepts "randomized", "persistent", "optimal", "fixed-gain". Throws ValueError otherwise.
Mode parse_mode(const std::string& name);

struct PolicyConfig {
    double gamma = 1.2;
    double sigma0 = 1.0;
    double horizon = 500.0;
    std::optional<ParameterPair> theta0;  // initial estimate; the oracle anchor when unset
    std::optional<Vector> x0;             // zero when unset
    double sv_cutoff = estimator::kDefaultSvCutoff;
    sde::Scheme scheme = sde::Scheme::exact;
    std::vector<double> diagnostic_times;  // extra estimator snapshots, any order
};

struct EpisodeRecord {
    int n = 0;
    double tau = 0.0;         // gamma^n
    double switch_time = 0.0; // tau snapped up to the grid
    ParameterPair theta;      // estimate in force from switch_time on
    Matrix K;                 // gain applied on this episode
    double sigma = 0.0;
    bool projected = false;
    double psi = 0.0;                  // estimation error of theta
    double psi_ls = 0.0;               // estimation error of the plain least-squares estimate
    double closed_loop_abscissa = 0.0; // alpha(A + B K) of the true system
    double gram_lambda_min = 0.0;
    double sn_ratio = 0.0;             // self-normalized ratio at switch_time
};

struct DiagnosticPoint {
    double t = 0.0;
    double sn_ratio = 0.0;
    double gram_lambda_min = 0.0;
};

struct RunRecord {
    sde::TrajectoryLog trajectory;
    std::vector<EpisodeRecord> episodes;
    std::vector<DiagnosticPoint> diagnostics;  // sorted by t
    Mode mode = Mode::randomized;
    Matrix initial_gain;    // gain on [0, 1), logged with index -1
    std::uint64_t path_seed = 0;
    sde::Scheme scheme = sde::Scheme::exact;
};

/// [gamma^0, gamma^1, ..., gamma^N] with gamma^N <= horizon < gamma^{N+1}.
/// Throws ValueError for gamma <= 1 or horizon < 1.
std::vector<double> episode_schedule(double gamma, double horizon);

/// Generator for the randomization of episode n on the path seeded with `seed`.
std::mt19937_64 episode_rng(std::uint64_t seed, int n);

/// Randomized-estimates policy with sigma_n = sigma0 (n gamma^{-n})^{1/4}.
/// The path must cover exactly the configured horizon.
RunRecord run_adaptive(const DynamicsModel& truth, const CostSpec& cost, const margin::StabilizationOracle& oracle,
                       const PolicyConfig& config, const sde::BrownianPath& path);

/// Same loop with sigma_n = sigma0 for every episode.
RunRecord run_persistent(const DynamicsModel& truth, const CostSpec& cost,
                         const margin::StabilizationOracle& oracle, const PolicyConfig& config,
                         const sde::BrownianPath& path);

/// Constant gain K for the whole horizon. Episode records hold the passive least-squares
/// estimate at each tau_n with sigma = 0; the gain is never updated.
RunRecord run_fixed_gain(const DynamicsModel& truth, const CostSpec& cost, const Matrix& K,
                         const PolicyConfig& config, const sde::BrownianPath& path);

/// run_fixed_gain with the optimal gain.
RunRecord run_optimal(const DynamicsModel& truth, const CostSpec& cost, const PolicyConfig& config,
                      const sde::BrownianPath& path);

}  // namespace ctlqr::policy
