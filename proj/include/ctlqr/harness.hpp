#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctlqr/margin.hpp"
#include "ctlqr/policy.hpp"
#include "ctlqr/presets.hpp"
#include "ctlqr/regret.hpp"

/// Experiment orchestration: configuration, seeded replicates and CSV output.
namespace ctlqr::harness {

struct ExperimentConfig {
    std::string preset = "x29a";
    // Inline model; when A is set, B and C must be set too and the preset is ignored.
    std::optional<Matrix> A, B, C;
    double Q_scale = 10.0;  // Q = Q_scale I
    double R_scale = 1.0;   // R = R_scale I
    double gamma = 1.2;
    double sigma0 = 1.0;
    double horizon = 500.0;
    double dt = 0.01;
    int n_replicates = 1;
    std::uint64_t base_seed = 0;
    policy::Mode mode = policy::Mode::randomized;
    double delta0_fraction = 0.5;      // delta0 as a fraction of the optimal stability margin
    double anchor_perturbation = 0.5;  // Psi(theta0) as a fraction of epsilon0
    margin::OracleRule oracle_rule = margin::OracleRule::closed_loop;
    int regret_points = 64;  // log-spaced horizons in the per-T output
    int workers = 1;
    std::string output = "out";

    /// Throws ValueError naming the first offending field.
    void validate() const;
};

/// Sets one field from its textual value. Throws ValueError for unknown keys or bad values.
void set_field(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Parses `key = value` lines; blank lines and lines starting with '#' are skipped.
/// The result is validated.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every field as `key = value` lines, in a fixed order. parse_config inverts it.
std::string format_config(const ExperimentConfig& config);

std::string to_string(margin::OracleRule rule);
/// Accepts "certified", "closed-loop" and "closed_loop".
margin::OracleRule parse_oracle_rule(const std::string& name);

/// "a b c; d e f" -> 2 x 3. Entries may also be separated by commas.
Matrix parse_matrix(const std::string& text);
std::string format_matrix(const Matrix& M);

/// The truth, cost, optimal solution, oracle and initial estimate shared by all replicates.
struct ExperimentSetup {
    ExperimentConfig config;
    DynamicsModel truth;
    CostSpec cost;
    riccati::RiccatiSolution sol;
    double epsilon0 = 0.0;
    margin::StabilizationOracle oracle;
    ParameterPair theta0;     // also the oracle anchor
    Matrix fixed_gain;        // K(theta0), applied in fixed-gain mode
    policy::PolicyConfig policy;
    std::vector<double> grid;  // horizons of the per-T output
};

/// The model named by the config with Q and R applied.
std::pair<DynamicsModel, CostSpec> build_model(const ExperimentConfig& config);

/// theta0 = truth + scale epsilon0 (U_A, U_B) / 2 with U_A, U_B the all-ones blocks normalized
/// to unit spectral norm, so Psi(theta0) = scale epsilon0.
ParameterPair perturbed_estimate(const DynamicsModel& truth, double epsilon0, double scale);

ExperimentSetup prepare(const ExperimentConfig& config);

struct ReplicateResult {
    int replicate = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    policy::RunRecord record;
    regret::RegretReport report;
};

/// Runs replicate r on the path seeded with base_seed + r. Library errors are caught and
/// reported through `failed`.
ReplicateResult run_replicate(const ExperimentSetup& setup, int replicate);

/// Runs replicates 0..n-1 on up to `workers` threads. Results are ordered by replicate.
std::vector<ReplicateResult> run_replicates(const ExperimentSetup& setup, int workers);

struct OutputFiles {
    std::filesystem::path episodes;
    std::filesystem::path regret;
    std::filesystem::path failures;
    std::filesystem::path metadata;
};

inline constexpr const char* kEpisodeHeader = "replicate,n,tau_n,psi_sq,sqrtT_psi_sq,sigma_n,projected";
inline constexpr const char* kRegretHeader = "replicate,T,R_T,R_T_over_sqrtT,R_tilde_T";
inline constexpr const char* kFailureHeader = "replicate,seed,error";

/// Writes episodes.csv, regret.csv, failures.csv and metadata.txt under `dir`.
/// Throws IoError with the offending path.
OutputFiles write_outputs(const ExperimentSetup& setup, const std::vector<ReplicateResult>& results,
                          const std::filesystem::path& dir);

/// prepare + run_replicates + write_outputs into config.output.
OutputFiles run_experiment(const ExperimentConfig& config);

/// Library version string.
std::string version();

}  // namespace ctlqr::harness
