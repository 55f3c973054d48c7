#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <exception>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "agents.hpp"
#include "metrics.hpp"
#include "plan.hpp"
#include "rollout.hpp"
#include "validator.hpp"
#include "vehicle.hpp"
#include "world.hpp"

namespace maneuverforge {

enum class BackendKind { llm, scripted, replay };

inline std::string to_string(BackendKind b) {
    switch (b) {
    case BackendKind::llm: return "llm";
    case BackendKind::scripted: return "scripted";
    case BackendKind::replay: return "replay";
    }
    return "scripted";
}

inline BackendKind backend_from_string(const std::string& s) {
    if (s == "llm") return BackendKind::llm;
    if (s == "scripted") return BackendKind::scripted;
    if (s == "replay") return BackendKind::replay;
    throw invalid_argument("unknown backend '" + s + "'");
}

struct LoopConfig {
    int k_max = 30;
    double epsilon = 3.0;  // cost threshold
    CostWeights weights;
    ConstraintSet constraints;
    std::string vehicle = "sedan";
    /// Overrides the named preset when set (e.g. loaded from a JSON file).
    std::optional<VehicleParams> vehicle_params;
    std::string world = "open";
    double corridor_half_width = 6.0;
    BackendKind backend = BackendKind::scripted;
    std::uint64_t seed = 0;
    double initial_speed = 0.0;  // m/s, body-frame longitudinal
    double dt = default_dt;
    /// Relative jitter applied to the scripted seed plan (0 = exact template).
    double seed_perturbation = 0.0;
    MetricThresholds thresholds;
    /// Ask the backend for extra enrichment guidance (one extra call per iteration).
    bool llm_enrichment = false;
};

inline void check_loop_config(const LoopConfig& c) {
    if (c.k_max < 1) throw invalid_argument("k_max must be >= 1");
    if (!(c.epsilon >= 0.0)) throw invalid_argument("epsilon must be >= 0");
    if (!(c.dt > 0.0)) throw invalid_argument("dt must be > 0");
    if (!(c.seed_perturbation >= 0.0 && c.seed_perturbation < 1.0))
        throw invalid_argument("seed_perturbation must lie in [0, 1)");
    if (!std::isfinite(c.initial_speed)) throw invalid_argument("initial_speed must be finite");
    check_weights(c.weights);
    check_constraints(c.constraints);
}

/// Everything a trial needs that is derived once from the config.
struct TrialEnvironment {
    VehicleParams vehicle;
    WorldModel world;
    ConstraintSet constraints;
    VehicleState initial;
};

inline TrialEnvironment make_environment(const LoopConfig& config) {
    check_loop_config(config);
    TrialEnvironment env;
    env.vehicle = config.vehicle_params ? *config.vehicle_params : vehicle_preset(config.vehicle);
    check_params(env.vehicle);
    env.world = world_preset(config.world, config.corridor_half_width);
    check_world(env.world);
    env.constraints = config.constraints;
    env.constraints.safety.drive_accel = env.vehicle.max_drive_force / env.vehicle.mass;
    env.initial.y_pos = env.world.spawn_y;
    env.initial.v_long = config.initial_speed;
    return env;
}

/// Enrich, propose, validate, then simulate and score when the plan survives
/// validation. Recoverable backend failures are recorded, not thrown.
inline IterationRecord run_iteration(int k, const Query& query, const LoopConfig& config,
                                     const TrialEnvironment& env, AgentBackend& backend,
                                     const std::vector<IterationRecord>& history,
                                     Trajectory* trajectory_out = nullptr) {
    if (k < 1) throw invalid_argument("iteration index must be >= 1");
    const auto started = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.k = k;
    rec.query = query;
    auto finish = [&]() {
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        return rec;
    };

    try {
        const auto eq = enrich(query, env.constraints, history, env.vehicle,
                               config.llm_enrichment ? &backend : nullptr);
        rec.raw_plan = propose_plan(eq, backend);
    } catch (const fixture_exhausted&) {
        throw;
    } catch (const fixture_mismatch&) {
        throw;
    } catch (const auth_missing&) {
        throw;
    } catch (const error& e) {
        rec.error = e.what();
        rec.validation.verdict = Verdict::rejected;
        return finish();
    }

    rec.validation = validate(*rec.raw_plan, env.constraints);
    if (rec.validation.verdict == Verdict::rejected) return finish();

    rec.implemented = true;
    try {
        auto traj = rollout(env.initial, compile(*rec.validation.repaired_plan), env.vehicle, config.dt, env.world);
        rec.metrics = compute_metrics(traj, config.thresholds);
        rec.cost = cost(*rec.metrics, config.weights);
        if (trajectory_out) *trajectory_out = std::move(traj);
    } catch (const simulation_diverged& e) {
        rec.error = e.what();
    }
    return finish();
}

struct RunResult {
    std::vector<IterationRecord> records;
    ManeuverPlan best_plan;
    double best_cost = std::numeric_limits<double>::infinity();
    TrialMetrics best_metrics;
    int best_k = 0;
    bool converged = false;
    int iterations_used = 0;
    /// Rollout of best_plan; not serialized.
    Trajectory best_trajectory;
};

/// The closed loop: iterate until the cost drops to epsilon or k_max is
/// reached, keeping the lowest-cost executed plan (later ties win).
inline RunResult run_loop(const LoopConfig& config, const std::string& task_text, AgentBackend& backend) {
    const auto env = make_environment(config);
    if (task_text.empty()) throw invalid_argument("task text must not be empty");

    Query query;
    query.text = task_text;
    query.iteration = 1;
    query.context = {{"task", task_text}, {"vehicle", env.vehicle.name}};

    RunResult result;
    bool have_best = false;
    for (int k = 1; k <= config.k_max; ++k) {
        Trajectory traj;
        auto rec = run_iteration(k, query, config, env, backend, result.records, &traj);
        result.iterations_used = k;

        if (rec.cost) {
            if (*rec.cost <= result.best_cost) {
                result.best_cost = *rec.cost;
                result.best_plan = *rec.validated_plan();
                result.best_metrics = *rec.metrics;
                result.best_k = k;
                result.best_trajectory = std::move(traj);
                have_best = true;
            }
            if (*rec.cost <= config.epsilon) {
                result.converged = true;
                result.records.push_back(std::move(rec));
                break;
            }
            query = compose_feedback(query, *rec.metrics, config.thresholds);
        } else if (rec.raw_plan && rec.validation.verdict == Verdict::rejected) {
            query = compose_rejection_feedback(query, rec.validation);
        } else {
            Query next = query;
            next.iteration = query.iteration + 1;
            next.text = query.task() + "\n\nFeedback on attempt " + std::to_string(query.iteration) + ": " +
                        (rec.raw_plan ? std::string("the simulation diverged. Use milder inputs.")
                                      : "no usable plan was produced (" + rec.error + "). Return a valid JSON plan.");
            query = std::move(next);
        }
        result.records.push_back(std::move(rec));
    }
    if (!have_best) throw all_iterations_rejected("no iteration produced metrics");
    return result;
}

// ---- batches -------------------------------------------------------------

struct TrialSummary {
    int trial = 0;
    std::uint64_t seed = 0;
    bool evaluated = false;    // at least one iteration produced metrics
    bool implemented = false;  // the final iteration's plan was executed
    bool converged = false;
    int iterations_used = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    TrialMetrics best_metrics;
    std::string error;
};

struct BatchRow {
    int batch = 0;
    int first_trial = 0;
    int trials = 0;
    int implemented = 0;
    int rejected = 0;
    double mean_angle_error = std::numeric_limits<double>::quiet_NaN();
    double min_angle_error = std::numeric_limits<double>::quiet_NaN();
    double success_rate = 0.0;  // percent of trials with success
};

struct ImplementationRow {
    std::string label;
    int total = 0;
    int implemented = 0;
    int rejected = 0;
    double success_percent() const { return total > 0 ? 100.0 * implemented / total : 0.0; }
};

struct VelocityRow {
    double time = 0.0;
    int n = 0;
    double vx_mean = 0.0, vx_ci = 0.0;
    double vy_mean = 0.0, vy_ci = 0.0;
    double vrot_mean_degps = 0.0, vrot_ci = 0.0;
};

struct BatchReport {
    int n_trials = 0;
    int batch_size = 0;
    std::string vehicle;
    std::vector<TrialSummary> trials;
    std::vector<BatchRow> batches;
    std::vector<ImplementationRow> implementation;  // overall, early, later
    std::vector<VelocityRow> velocity;
    /// Per-trial loop results, in trial order (for iteration logs).
    std::vector<RunResult> runs;
};

inline std::vector<ImplementationRow> implementation_rows(const std::vector<TrialSummary>& trials) {
    auto row = [&](std::string label, std::size_t begin, std::size_t end) {
        ImplementationRow r;
        r.label = std::move(label);
        for (std::size_t i = begin; i < end; ++i) {
            ++r.total;
            trials[i].implemented ? ++r.implemented : ++r.rejected;
        }
        return r;
    };
    const std::size_t n = trials.size();
    const std::size_t early = n * 3 / 5;
    return {row("Overall", 0, n),
            row("Early (first " + std::to_string(early) + ")", 0, early),
            row("Later (last " + std::to_string(n - early) + ")", early, n)};
}

inline std::vector<BatchRow> batch_rows(const std::vector<TrialSummary>& trials, int batch_size) {
    std::vector<BatchRow> rows;
    const int n = static_cast<int>(trials.size());
    for (int start = 0, b = 1; start < n; start += batch_size, ++b) {
        BatchRow row;
        row.batch = b;
        row.first_trial = start;
        const int end = std::min(n, start + batch_size);
        row.trials = end - start;
        double sum = 0.0;
        int evaluated = 0;
        int successes = 0;
        for (int i = start; i < end; ++i) {
            const auto& t = trials[static_cast<std::size_t>(i)];
            t.implemented ? ++row.implemented : ++row.rejected;
            if (!t.evaluated) continue;
            ++evaluated;
            sum += t.best_metrics.angle_error;
            row.min_angle_error = evaluated == 1 ? t.best_metrics.angle_error
                                                 : std::min(row.min_angle_error, t.best_metrics.angle_error);
            if (t.best_metrics.success) ++successes;
        }
        if (evaluated > 0) row.mean_angle_error = sum / evaluated;
        row.success_rate = 100.0 * successes / row.trials;
        rows.push_back(row);
    }
    return rows;
}

/// Per-timestep mean and 95% half-width across the best trajectories. Rows
/// exist only where at least two trials still have samples.
inline std::vector<VelocityRow> velocity_statistics(const std::vector<const Trajectory*>& trajectories) {
    std::vector<VelocityRow> rows;
    std::size_t longest = 0;
    for (const auto* t : trajectories) longest = std::max(longest, t->samples.size());
    std::vector<double> vx, vy, vr;
    for (std::size_t i = 0; i < longest; ++i) {
        vx.clear(), vy.clear(), vr.clear();
        double time = 0.0;
        for (const auto* t : trajectories) {
            if (i >= t->samples.size()) continue;
            const auto& s = t->samples[i];
            time = s.time;
            vx.push_back(s.state.v_long);
            vy.push_back(s.state.v_lat);
            vr.push_back(s.state.yaw_rate * rad_to_deg);
        }
        if (vx.size() < 2) continue;
        auto mean = [](const std::vector<double>& v) {
            return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        };
        VelocityRow row;
        row.time = time;
        row.n = static_cast<int>(vx.size());
        row.vx_mean = mean(vx);
        row.vx_ci = confidence_interval(vx);
        row.vy_mean = mean(vy);
        row.vy_ci = confidence_interval(vy);
        row.vrot_mean_degps = mean(vr);
        row.vrot_ci = confidence_interval(vr);
        rows.push_back(row);
    }
    return rows;
}

using BackendFactory = std::function<std::unique_ptr<AgentBackend>(int trial, std::uint64_t seed)>;

/// n_trials independent loops with trial_seed = seed + trial_index, run on
/// up to `jobs` threads. Results do not depend on the thread count.
inline BatchReport run_batch(const LoopConfig& config, const std::string& task_text, int n_trials,
                             int batch_size, const BackendFactory& make_backend, int jobs = 1) {
    if (n_trials < 1) throw invalid_argument("n_trials must be >= 1");
    if (batch_size < 1) throw invalid_argument("batch_size must be >= 1");
    const auto env = make_environment(config);

    BatchReport report;
    report.n_trials = n_trials;
    report.batch_size = batch_size;
    report.vehicle = env.vehicle.name;
    report.trials.resize(static_cast<std::size_t>(n_trials));
    report.runs.resize(static_cast<std::size_t>(n_trials));

    std::atomic<int> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    auto worker = [&]() {
        for (int i = next++; i < n_trials; i = next++) {
            auto& summary = report.trials[static_cast<std::size_t>(i)];
            summary.trial = i;
            summary.seed = config.seed + static_cast<std::uint64_t>(i);
            LoopConfig trial_config = config;
            trial_config.seed = summary.seed;
            try {
                auto backend = make_backend(i, summary.seed);
                auto run = run_loop(trial_config, task_text, *backend);
                summary.evaluated = true;
                summary.implemented = run.records.back().implemented;
                summary.converged = run.converged;
                summary.iterations_used = run.iterations_used;
                summary.best_cost = run.best_cost;
                summary.best_metrics = run.best_metrics;
                report.runs[static_cast<std::size_t>(i)] = std::move(run);
            } catch (const all_iterations_rejected& e) {
                summary.error = e.what();
                summary.iterations_used = config.k_max;
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(jobs, 1, n_trials);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    report.batches = batch_rows(report.trials, batch_size);
    report.implementation = implementation_rows(report.trials);
    std::vector<const Trajectory*> trajectories;
    for (std::size_t i = 0; i < report.runs.size(); ++i)
        if (report.trials[i].evaluated) trajectories.push_back(&report.runs[i].best_trajectory);
    report.velocity = velocity_statistics(trajectories);
    return report;
}

// ---- comparison tables ---------------------------------------------------

struct ComparisonRow {
    std::string metric;
    std::vector<double> values;  // one per column
};

struct ComparisonTable {
    std::vector<std::string> labels;
    std::vector<ComparisonRow> rows;
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double share_within(const std::vector<double>& v, double threshold) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto hits = std::count_if(v.begin(), v.end(), [&](double x) { return x <= threshold; });
    return 100.0 * static_cast<double>(hits) / static_cast<double>(v.size());
}

} // namespace detail

/// Summary columns, one per metric set: angle-error statistics (population
/// standard deviation), success rate, jerk, yaw rate, smoothness, simulated
/// execution time, and the shares within 3 and 7 degrees.
inline ComparisonTable summarize_comparison(const std::vector<std::vector<TrialMetrics>>& sets,
                                            const std::vector<std::string>& labels,
                                            const MetricThresholds& thresholds = {}) {
    if (sets.size() != labels.size()) throw invalid_argument("one label per result set required");
    for (const auto& s : sets)
        if (s.empty()) throw invalid_argument("result sets must be non-empty");

    ComparisonTable table;
    table.labels = labels;
    const char* names[] = {"Mean Angle Error (deg)", "Median Angle Error (deg)", "Min Angle Error (deg)",
                           "Max Angle Error (deg)",  "Standard Deviation",       "Success Rate (%)",
                           "Mean Jerk (m/s^3)",      "Avg Max Jerk (m/s^3)",     "Mean Yaw Rate (deg/s)",
                           "Steering Smoothness",    "Avg Execution Time (s)",   "Share <= 3 deg (%)",
                           "Share <= 7 deg (%)"};
    for (const char* n : names) table.rows.push_back({n, {}});

    for (const auto& set : sets) {
        std::vector<double> err;
        double jerk = 0, max_jerk = 0, yaw = 0, smooth = 0, exec = 0;
        int success = 0;
        for (const auto& m : set) {
            err.push_back(m.angle_error);
            jerk += m.mean_jerk;
            max_jerk += m.max_jerk;
            yaw += m.mean_yaw_rate;
            smooth += m.steering_smoothness;
            exec += m.execution_time;
            if (m.angle_error <= thresholds.acceptable_deg && !m.collision) ++success;
        }
        const double n = static_cast<double>(set.size());
        const double mean = std::accumulate(err.begin(), err.end(), 0.0) / n;
        double ss = 0.0;
        for (double e : err) ss += (e - mean) * (e - mean);
        const double values[] = {mean,
                                 detail::median(err),
                                 *std::min_element(err.begin(), err.end()),
                                 *std::max_element(err.begin(), err.end()),
                                 std::sqrt(ss / n),
                                 100.0 * success / n,
                                 jerk / n,
                                 max_jerk / n,
                                 yaw / n,
                                 smooth / n,
                                 exec / n,
                                 detail::share_within(err, thresholds.optimal_deg),
                                 detail::share_within(err, 7.0)};
        for (std::size_t r = 0; r < table.rows.size(); ++r) table.rows[r].values.push_back(values[r]);
    }
    return table;
}

inline ComparisonTable summarize_comparison(const std::vector<TrialMetrics>& a, const std::vector<TrialMetrics>& b,
                                            const std::string& label_a, const std::string& label_b,
                                            const MetricThresholds& thresholds = {}) {
    return summarize_comparison({a, b}, {label_a, label_b}, thresholds);
}

inline std::vector<TrialMetrics> evaluated_metrics(const BatchReport& report) {
    std::vector<TrialMetrics> out;
    for (const auto& t : report.trials)
        if (t.evaluated) out.push_back(t.best_metrics);
    return out;
}

} // namespace maneuverforge
