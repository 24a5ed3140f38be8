#include "ctlqr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include "ctlqr/errors.hpp"
#include "ctlqr/matspec.hpp"

#ifndef CTLQR_VERSION
#define CTLQR_VERSION "unknown"
#endif

namespace ctlqr::harness {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Shortest text that reads back to the same double.
std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValueError("config: '" + key + "' expects a number, got '" + value + "'");
}

long long parse_integer(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValueError("config: '" + key + "' expects an integer, got '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
    const long long v = parse_integer(key, value);
    if (v < -2147483647LL || v > 2147483647LL) throw ValueError("config: '" + key + "' is out of range");
    return static_cast<int>(v);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out + "\"";
}

}  // namespace

std::string version() { return CTLQR_VERSION; }

std::string to_string(margin::OracleRule rule) {
    return rule == margin::OracleRule::certified ? "certified" : "closed-loop";
}

margin::OracleRule parse_oracle_rule(const std::string& name) {
    if (name == "certified") return margin::OracleRule::certified;
    if (name == "closed-loop" || name == "closed_loop") return margin::OracleRule::closed_loop;
    throw ValueError("unknown oracle rule '" + name + "'");
}

Matrix parse_matrix(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::stringstream all(text);
    std::string row;
    while (std::getline(all, row, ';')) {
        std::replace(row.begin(), row.end(), ',', ' ');
        std::istringstream in(row);
        std::vector<double> vals;
        std::string tok;
        while (in >> tok) vals.push_back(parse_double("matrix entry", tok));
        if (vals.empty()) throw ValueError("matrix: empty row in '" + text + "'");
        if (!rows.empty() && vals.size() != rows.front().size()) throw DimensionError("matrix: ragged rows in '" + text + "'");
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw ValueError("matrix: no entries");
    Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
    return M;
}

std::string format_matrix(const Matrix& M) {
    std::string out;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        if (i > 0) out += "; ";
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j > 0) out += ' ';
            out += num(M(i, j));
        }
    }
    return out;
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ValueError(std::string("config: ") + what);
    };
    if (A) {
        require(B.has_value() && C.has_value(), "inline A needs B and C");
    } else {
        require(!B && !C, "inline B or C given without A");
        require(preset == "x29a", "unknown preset (known: x29a)");
    }
    require(Q_scale > 0.0 && std::isfinite(Q_scale), "Q_scale must be positive");
    require(R_scale > 0.0 && std::isfinite(R_scale), "R_scale must be positive");
    require(gamma > 1.0 && std::isfinite(gamma), "gamma must exceed 1");
    require(sigma0 >= 0.0 && std::isfinite(sigma0), "sigma0 must be nonnegative");
    require(horizon >= 1.0 && std::isfinite(horizon), "horizon must be at least 1");
    require(dt > 0.0 && dt <= 1.0, "dt must lie in (0, 1]");
    require(n_replicates >= 1, "n_replicates must be at least 1");
    require(delta0_fraction > 0.0 && delta0_fraction < 1.0, "delta0_fraction must lie in (0, 1)");
    require(anchor_perturbation >= 0.0 && anchor_perturbation < 1.0, "anchor_perturbation must lie in [0, 1)");
    require(regret_points >= 2, "regret_points must be at least 2");
    require(workers >= 1, "workers must be at least 1");
    require(!output.empty(), "output must be a path");
}

void set_field(ExperimentConfig& c, const std::string& key, const std::string& value) {
    if (key == "preset") c.preset = value;
    else if (key == "A") c.A = parse_matrix(value);
    else if (key == "B") c.B = parse_matrix(value);
    else if (key == "C") c.C = parse_matrix(value);
    else if (key == "Q_scale") c.Q_scale = parse_double(key, value);
    else if (key == "R_scale") c.R_scale = parse_double(key, value);
    else if (key == "gamma") c.gamma = parse_double(key, value);
    else if (key == "sigma0") c.sigma0 = parse_double(key, value);
    else if (key == "horizon") c.horizon = parse_double(key, value);
    else if (key == "dt") c.dt = parse_double(key, value);
    else if (key == "n_replicates") c.n_replicates = parse_int(key, value);
    else if (key == "base_seed") {
        const long long v = parse_integer(key, value);
        if (v < 0) throw ValueError("config: base_seed must be nonnegative");
        c.base_seed = static_cast<std::uint64_t>(v);
    } else if (key == "mode") c.mode = policy::parse_mode(value);
    else if (key == "delta0_fraction") c.delta0_fraction = parse_double(key, value);
    else if (key == "anchor_perturbation") c.anchor_perturbation = parse_double(key, value);
    else if (key == "oracle_rule") c.oracle_rule = parse_oracle_rule(value);
    else if (key == "regret_points") c.regret_points = parse_int(key, value);
    else if (key == "workers") c.workers = parse_int(key, value);
    else if (key == "output") c.output = value;
    else throw ValueError("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValueError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        try {
            set_field(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const Error& e) {
            throw ValueError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    try {
        return parse_config(in);
    } catch (const ValueError& e) {
        throw ValueError(path.string() + ": " + e.what());
    }
}

std::string format_config(const ExperimentConfig& c) {
    std::ostringstream out;
    if (c.A) {
        out << "A = " << format_matrix(*c.A) << '\n';
        out << "B = " << format_matrix(*c.B) << '\n';
        out << "C = " << format_matrix(*c.C) << '\n';
    } else {
        out << "preset = " << c.preset << '\n';
    }
    out << "Q_scale = " << num(c.Q_scale) << '\n'
        << "R_scale = " << num(c.R_scale) << '\n'
        << "gamma = " << num(c.gamma) << '\n'
        << "sigma0 = " << num(c.sigma0) << '\n'
        << "horizon = " << num(c.horizon) << '\n'
        << "dt = " << num(c.dt) << '\n'
        << "n_replicates = " << c.n_replicates << '\n'
        << "base_seed = " << c.base_seed << '\n'
        << "mode = " << policy::to_string(c.mode) << '\n'
        << "delta0_fraction = " << num(c.delta0_fraction) << '\n'
        << "anchor_perturbation = " << num(c.anchor_perturbation) << '\n'
        << "oracle_rule = " << to_string(c.oracle_rule) << '\n'
        << "regret_points = " << c.regret_points << '\n'
        << "workers = " << c.workers << '\n'
        << "output = " << c.output << '\n';
    return out.str();
}

std::pair<DynamicsModel, CostSpec> build_model(const ExperimentConfig& config) {
    config.validate();
    DynamicsModel truth = config.A ? DynamicsModel::make(*config.A, *config.B, *config.C) : x29a_preset().first;
    CostSpec cost = CostSpec::make(config.Q_scale * Matrix::Identity(truth.dx(), truth.dx()),
                                   config.R_scale * Matrix::Identity(truth.du(), truth.du()));
    return {std::move(truth), std::move(cost)};
}

ParameterPair perturbed_estimate(const DynamicsModel& truth, double epsilon0, double scale) {
    Matrix UA = Matrix::Ones(truth.dx(), truth.dx());
    Matrix UB = Matrix::Ones(truth.dx(), truth.du());
    UA /= linalg::op_norm(UA);
    UB /= linalg::op_norm(UB);
    const double h = 0.5 * scale * epsilon0;
    return {truth.A + h * UA, truth.B + h * UB};
}

ExperimentSetup prepare(const ExperimentConfig& config) {
    auto [truth, cost] = build_model(config);
    ExperimentSetup s{config, truth, cost, riccati::care_solve(truth, cost), 0.0, {}, {}, {}, {}, {}};
    s.epsilon0 = margin::epsilon0(truth, cost);
    s.theta0 = perturbed_estimate(truth, s.epsilon0, config.anchor_perturbation);
    const double rho = -matspec::spectral_abscissa(s.sol.D);
    s.oracle = margin::StabilizationOracle::make(truth, cost, config.delta0_fraction * rho, s.theta0,
                                                 config.oracle_rule);
    s.fixed_gain = riccati::care_solve(s.theta0, cost).K;
    s.policy.gamma = config.gamma;
    s.policy.sigma0 = config.sigma0;
    s.policy.horizon = config.horizon;
    s.policy.theta0 = s.theta0;
    s.grid = regret::log_grid(1.0, config.horizon, config.regret_points);
    return s;
}

ReplicateResult run_replicate(const ExperimentSetup& s, int replicate) {
    ReplicateResult out;
    out.replicate = replicate;
    out.seed = s.config.base_seed + static_cast<std::uint64_t>(replicate);
    try {
        const auto path = sde::make_path(out.seed, s.config.horizon, s.config.dt, s.truth.dw());
        switch (s.config.mode) {
            case policy::Mode::randomized:
                out.record = policy::run_adaptive(s.truth, s.cost, s.oracle, s.policy, path);
                break;
            case policy::Mode::persistent:
                out.record = policy::run_persistent(s.truth, s.cost, s.oracle, s.policy, path);
                break;
            case policy::Mode::optimal:
                out.record = policy::run_optimal(s.truth, s.cost, s.policy, path);
                break;
            case policy::Mode::fixed_gain:
                out.record = policy::run_fixed_gain(s.truth, s.cost, s.fixed_gain, s.policy, path);
                break;
        }
        out.report = regret::make_report(s.truth, s.cost, s.sol, out.record, path, s.grid, s.config.gamma);
    } catch (const Error& e) {
        out.failed = true;
        out.error = e.what();
        out.record = {};
        out.report = {};
    }
    return out;
}

std::vector<ReplicateResult> run_replicates(const ExperimentSetup& setup, int workers) {
    const int n = setup.config.n_replicates;
    std::vector<ReplicateResult> results(static_cast<size_t>(n));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int r = next++; r < n; r = next++) results[static_cast<size_t>(r)] = run_replicate(setup, r);
    };
    const int w = std::clamp(workers, 1, n);
    std::vector<std::thread> pool;
    for (int i = 1; i < w; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return results;
}

OutputFiles write_outputs(const ExperimentSetup& setup, const std::vector<ReplicateResult>& results,
                          const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    const OutputFiles files{dir / "episodes.csv", dir / "regret.csv", dir / "failures.csv", dir / "metadata.txt"};

    auto episodes = open_out(files.episodes);
    episodes << kEpisodeHeader << '\n';
    auto regret = open_out(files.regret);
    regret << kRegretHeader << '\n';
    auto failures = open_out(files.failures);
    failures << kFailureHeader << '\n';
    int failed = 0;
    for (const auto& r : results) {
        if (r.failed) {
            ++failed;
            failures << r.replicate << ',' << r.seed << ',' << csv_field(r.error) << '\n';
            continue;
        }
        for (const auto& e : r.record.episodes) {
            const double psi_sq = e.psi * e.psi;
            episodes << r.replicate << ',' << e.n << ',' << num(e.tau) << ',' << num(psi_sq) << ','
                     << num(std::sqrt(e.tau) * psi_sq) << ',' << num(e.sigma) << ',' << (e.projected ? 1 : 0) << '\n';
        }
        const auto& rep = r.report;
        for (Eigen::Index i = 0; i < rep.grid.size(); ++i) {
            regret << r.replicate << ',' << num(rep.grid(i)) << ',' << num(rep.regret(i)) << ','
                   << num(rep.regret_norm(i)) << ',' << num(rep.policy_diff_term(i)) << '\n';
        }
    }
    close_out(episodes, files.episodes);
    close_out(regret, files.regret);
    close_out(failures, files.failures);

    auto meta = open_out(files.metadata);
    meta << format_config(setup.config);
    regret::RateConstants omega;
    try {
        omega = regret::rate_constants(setup.truth, setup.cost, setup.sol, setup.config.gamma);
    } catch (const ValueError&) {
    }
    meta << "version = " << version() << '\n'
         << "omega_R = " << num(omega.omega_R) << '\n'
         << "omega_E = " << num(omega.omega_E) << '\n'
         << "omega_pi = " << num(omega.omega_pi) << '\n'
         << "epsilon0 = " << num(setup.epsilon0) << '\n'
         << "delta0 = " << num(setup.oracle.delta0) << '\n'
         << "optimal_average_cost = " << num(riccati::optimal_average_cost(setup.sol, setup.truth.C)) << '\n'
         << "failed_replicates = " << failed << '\n';
    close_out(meta, files.metadata);
    return files;
}

OutputFiles run_experiment(const ExperimentConfig& config) {
    const auto setup = prepare(config);
    const auto results = run_replicates(setup, config.workers);
    return write_outputs(setup, results, config.output);
}

}  // namespace ctlqr::harness
