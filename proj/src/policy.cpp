#include "ctlqr/policy.hpp"

#include <algorithm>
#include <cmath>

#include "ctlqr/errors.hpp"
#include "ctlqr/matspec.hpp"
#include "ctlqr/riccati.hpp"

namespace ctlqr::policy {

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::randomized: return "randomized";
        case Mode::persistent: return "persistent";
        case Mode::optimal: return "optimal";
        case Mode::fixed_gain: return "fixed-gain";
    }
    return "unknown";
}

Mode parse_mode(const std::string& name) {
    if (name == "randomized") return Mode::randomized;
    if (name == "persistent") return Mode::persistent;
    if (name == "optimal") return Mode::optimal;
    if (name == "fixed-gain" || name == "fixed_gain") return Mode::fixed_gain;
    throw ValueError("unknown mode '" + name + "'");
}

std::vector<double> episode_schedule(double gamma, double horizon) {
    if (!(gamma > 1.0) || !std::isfinite(gamma)) throw ValueError("episode_schedule: gamma must exceed 1");
    if (!(horizon >= 1.0) || !std::isfinite(horizon)) throw ValueError("episode_schedule: horizon must be at least 1");
    std::vector<double> out;
    for (int n = 0;; ++n) {
        const double t = std::pow(gamma, n);
        // Tolerate rounding in gamma^n when the horizon is itself a power of gamma.
        if (t > horizon * (1.0 + 1e-12)) break;
        out.push_back(t);
    }
    return out;
}

std::mt19937_64 episode_rng(std::uint64_t seed, int n) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 2u,
                      static_cast<std::uint32_t>(n)};
    return std::mt19937_64(seq);
}

namespace {

enum class EventKind { episode, diagnostic };

struct Event {
    Eigen::Index k;
    EventKind kind;
    int n;       // episode number
    double t;    // requested time
};

Eigen::Index checked_steps(const PolicyConfig& config, const sde::BrownianPath& path) {
    if (!(config.horizon >= 1.0)) throw ValueError("policy: horizon must be at least 1");
    const Eigen::Index steps = sde::step_count(config.horizon, path.dt);
    if (path.steps() != steps) {
        throw ValueError("policy: path has " + std::to_string(path.steps()) + " steps but the horizon needs " +
                         std::to_string(steps));
    }
    return steps;
}

Vector initial_state(const DynamicsModel& truth, const PolicyConfig& config) {
    if (!config.x0) return Vector::Zero(truth.dx());
    if (config.x0->size() != truth.dx()) throw DimensionError("policy: x0 has the wrong size");
    return *config.x0;
}

std::vector<Event> make_events(const PolicyConfig& config, double dt, Eigen::Index steps) {
    std::vector<Event> events;
    const auto taus = episode_schedule(config.gamma, config.horizon);
    for (size_t n = 0; n < taus.size(); ++n) {
        events.push_back({std::min(sde::snap_up(taus[n], dt), steps), EventKind::episode, static_cast<int>(n),
                          taus[n]});
    }
    for (double t : config.diagnostic_times) {
        if (!(t >= 0.0) || t > config.horizon) throw ValueError("policy: diagnostic time outside the horizon");
        events.push_back({std::min(sde::snap_up(t, dt), steps), EventKind::diagnostic, -1, t});
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.k < b.k; });
    return events;
}

// Drives the simulator and the estimator together through the event list.
class Loop {
public:
    Loop(const DynamicsModel& truth, const CostSpec& cost, const PolicyConfig& config, const sde::BrownianPath& path,
         estimator::ScheduleMode schedule)
        : truth_(truth),
          path_(path),
          sv_cutoff_(config.sv_cutoff),
          steps_(checked_steps(config, path)),
          sim_(truth, cost, initial_state(truth, config), path, config.scheme),
          state_(estimator::EstimatorState::make(truth.dx(), truth.du(), truth.dw(), config.gamma, config.sigma0,
                                                 schedule)) {}

    void advance(Eigen::Index k) {
        sim_.run_until(k);
        estimator::accumulate_log(state_, sim_.log(), path_, acc_, k);
        acc_ = k;
    }

    DiagnosticPoint snapshot(double t) const {
        return {t, estimator::self_normalized_ratio(state_), linalg::lambda_min_sym(state_.gram)};
    }

    EpisodeRecord episode_record(const Event& e, const ParameterPair& theta, const Matrix& K, double sigma,
                                 bool projected) const {
        EpisodeRecord r;
        r.n = e.n;
        r.tau = e.t;
        r.switch_time = path_.time(e.k);
        r.theta = theta;
        r.K = K;
        r.sigma = sigma;
        r.projected = projected;
        r.psi = parameter_distance(theta, ParameterPair::of(truth_));
        r.psi_ls = parameter_distance(estimator::least_squares(state_, sv_cutoff_).pair(), ParameterPair::of(truth_));
        r.closed_loop_abscissa = matspec::spectral_abscissa(truth_.A + truth_.B * K);
        r.gram_lambda_min = linalg::lambda_min_sym(state_.gram);
        r.sn_ratio = estimator::self_normalized_ratio(state_);
        return r;
    }

    Eigen::Index steps() const { return steps_; }
    sde::Simulator& sim() { return sim_; }
    estimator::EstimatorState& state() { return state_; }

private:
    const DynamicsModel& truth_;
    const sde::BrownianPath& path_;
    double sv_cutoff_;
    Eigen::Index steps_;
    sde::Simulator sim_;
    estimator::EstimatorState state_;
    Eigen::Index acc_ = 0;
};

RunRecord run_learning(const DynamicsModel& truth, const CostSpec& cost, const margin::StabilizationOracle& oracle,
                       const PolicyConfig& config, const sde::BrownianPath& path, Mode mode) {
    const auto schedule =
        mode == Mode::persistent ? estimator::ScheduleMode::persistent : estimator::ScheduleMode::decaying;
    Loop loop(truth, cost, config, path, schedule);
    RunRecord rec;
    rec.mode = mode;
    rec.path_seed = path.seed;
    rec.scheme = config.scheme;

    const ParameterPair theta0 = config.theta0 ? *config.theta0 : oracle.anchor;
    rec.initial_gain = riccati::care_solve(theta0, cost).K;
    loop.sim().set_gain(rec.initial_gain, -1);

    for (const Event& e : make_events(config, path.dt, loop.steps())) {
        loop.advance(e.k);
        if (e.kind == EventKind::diagnostic) {
            rec.diagnostics.push_back(loop.snapshot(e.t));
            continue;
        }
        loop.state().n = e.n;
        auto rng = episode_rng(path.seed, e.n);
        const auto est = estimator::randomized_estimate(loop.state(), e.n, rng, oracle, config.sv_cutoff);
        const Matrix K = riccati::care_solve(est.pair(), cost).K;
        loop.sim().set_gain(K, e.n);
        rec.episodes.push_back(
            loop.episode_record(e, est.pair(), K, estimator::schedule_sigma(loop.state(), e.n), est.projected));
    }
    loop.advance(loop.steps());
    rec.trajectory = loop.sim().take_log();
    return rec;
}

}  // namespace

RunRecord run_adaptive(const DynamicsModel& truth, const CostSpec& cost, const margin::StabilizationOracle& oracle,
                       const PolicyConfig& config, const sde::BrownianPath& path) {
    return run_learning(truth, cost, oracle, config, path, Mode::randomized);
}

RunRecord run_persistent(const DynamicsModel& truth, const CostSpec& cost,
                         const margin::StabilizationOracle& oracle, const PolicyConfig& config,
                         const sde::BrownianPath& path) {
    return run_learning(truth, cost, oracle, config, path, Mode::persistent);
}

RunRecord run_fixed_gain(const DynamicsModel& truth, const CostSpec& cost, const Matrix& K,
                         const PolicyConfig& config, const sde::BrownianPath& path) {
    linalg::require_shape(K, truth.du(), truth.dx(), "run_fixed_gain: K");
    Loop loop(truth, cost, config, path, estimator::ScheduleMode::decaying);
    RunRecord rec;
    rec.mode = Mode::fixed_gain;
    rec.path_seed = path.seed;
    rec.scheme = config.scheme;
    rec.initial_gain = K;
    loop.sim().set_gain(K, -1);
    for (const Event& e : make_events(config, path.dt, loop.steps())) {
        loop.advance(e.k);
        if (e.kind == EventKind::diagnostic) {
            rec.diagnostics.push_back(loop.snapshot(e.t));
            continue;
        }
        loop.state().n = e.n;
        const auto ls = estimator::least_squares(loop.state(), config.sv_cutoff);
        loop.sim().set_gain(K, e.n);
        rec.episodes.push_back(loop.episode_record(e, ls.pair(), K, 0.0, false));
    }
    loop.advance(loop.steps());
    rec.trajectory = loop.sim().take_log();
    return rec;
}

RunRecord run_optimal(const DynamicsModel& truth, const CostSpec& cost, const PolicyConfig& config,
                      const sde::BrownianPath& path) {
    RunRecord rec = run_fixed_gain(truth, cost, riccati::care_solve(truth, cost).K, config, path);
    rec.mode = Mode::optimal;
    return rec;
}

}  // namespace ctlqr::policy
