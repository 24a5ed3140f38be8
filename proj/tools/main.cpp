#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ctlqr/errors.hpp"
#include "ctlqr/harness.hpp"
#include "ctlqr/margin.hpp"
#include "ctlqr/matspec.hpp"
#include "ctlqr/riccati.hpp"

using namespace ctlqr;

namespace {

struct ModelArgs {
    std::string config;
    std::string preset;
};

void add_model_args(CLI::App* app, ModelArgs& args) {
    app->add_option("--config", args.config, "Key/value config file (preset or inline A, B, C; Q_scale, R_scale)");
    app->add_option("--preset", args.preset, "Model preset")->check(CLI::IsMember({"x29a"}));
}

harness::ExperimentConfig base_config(const ModelArgs& args) {
    harness::ExperimentConfig c = args.config.empty() ? harness::ExperimentConfig{} : harness::load_config(args.config);
    if (!args.preset.empty()) {
        c.preset = args.preset;
        c.A.reset();
        c.B.reset();
        c.C.reset();
    }
    return c;
}

void print_matrix(const char* name, const Matrix& M) {
    std::printf("%s =\n", name);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) std::printf(" % .10e", M(i, j));
        std::printf("\n");
    }
}

int cmd_run(const ModelArgs& margs, const std::optional<std::string>& mode, const std::optional<int>& replicates,
            const std::optional<long long>& seed, const std::optional<std::string>& out,
            const std::optional<int>& workers) {
    auto c = base_config(margs);
    if (mode) c.mode = policy::parse_mode(*mode);
    if (replicates) c.n_replicates = *replicates;
    if (seed) {
        if (*seed < 0) throw ValueError("--seed must be nonnegative");
        c.base_seed = static_cast<std::uint64_t>(*seed);
    }
    if (out) c.output = *out;
    if (workers) c.workers = *workers;
    c.validate();

    const auto setup = harness::prepare(c);
    const auto results = harness::run_replicates(setup, c.workers);
    const auto files = harness::write_outputs(setup, results, c.output);
    int failed = 0;
    for (const auto& r : results) failed += r.failed ? 1 : 0;
    std::printf("mode %s, %d replicates (%d failed)\n", policy::to_string(c.mode).c_str(), c.n_replicates, failed);
    std::printf("wrote %s\n      %s\n      %s\n      %s\n", files.episodes.c_str(), files.regret.c_str(),
                files.failures.c_str(), files.metadata.c_str());
    return 0;
}

int cmd_solve_care(const ModelArgs& margs) {
    const auto [truth, cost] = harness::build_model(base_config(margs));
    const auto sol = riccati::care_solve(truth, cost);
    print_matrix("P", sol.P);
    print_matrix("K", sol.K);
    const double res = riccati::riccati_residual(truth, cost, sol.P).norm();
    std::printf("residual ||g(P)||_F = %.3e (relative to ||Q||_F: %.3e)\n", res, res / cost.Q.norm());
    std::printf("closed-loop abscissa = %.10g\n", matspec::spectral_abscissa(sol.D));
    std::printf("optimal average cost tr(P C C^T) = %.10g\n", riccati::optimal_average_cost(sol, truth.C));
    return 0;
}

int cmd_margin(const ModelArgs& margs, std::optional<double> delta) {
    const auto [truth, cost] = harness::build_model(base_config(margs));
    const auto sol = riccati::care_solve(truth, cost);
    const double rho = -matspec::spectral_abscissa(sol.D);
    const double d = delta.value_or(0.5 * rho);
    const auto cert = margin::stability_margin(ParameterPair::of(truth), cost, d);
    std::printf("certificate at the true parameters\n");
    std::printf("  rho        = %.10g\n", cert.rho);
    std::printf("  delta      = %.10g\n", cert.delta);
    std::printf("  zeta       = %.10g\n", cert.zeta);
    std::printf("  m          = %d\n", cert.m_hat);
    std::printf("  cond       = %.10g\n", cert.similarity_cond);
    std::printf("  ||K||      = %.10g\n", cert.k_norm);
    std::printf("  radius     = %.10g\n", cert.radius);
    std::printf("epsilon0     = %.10g\n", margin::epsilon0(truth, cost));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online LQ control of stochastic linear systems with randomized estimates"};
    app.require_subcommand(1);
    app.set_version_flag("--version", harness::version());

    ModelArgs run_model, care_model, margin_model;
    std::optional<std::string> mode, out;
    std::optional<int> replicates, workers;
    std::optional<long long> seed;
    auto* run = app.add_subcommand("run", "Run seeded replicates and write CSV output");
    add_model_args(run, run_model);
    run->add_option("--mode", mode, "Policy")->check(CLI::IsMember({"randomized", "persistent", "optimal", "fixed-gain"}));
    run->add_option("--replicates", replicates, "Number of replicates")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Base seed; replicate r uses seed + r");
    run->add_option("--out", out, "Output directory");
    run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

    auto* care = app.add_subcommand("solve-care", "Solve the Riccati equation and print P, K and the residual");
    add_model_args(care, care_model);

    std::optional<double> delta;
    auto* mrg = app.add_subcommand("margin", "Print the stability-margin certificate and epsilon0");
    add_model_args(mrg, margin_model);
    mrg->add_option("--delta", delta, "Required decay rate (default: half the optimal margin)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(run_model, mode, replicates, seed, out, workers);
        if (*care) return cmd_solve_care(care_model);
        if (*mrg) return cmd_margin(margin_model, delta);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
