#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "orchestrator.hpp"

namespace maneuverforge {

/// Write via a sibling temp file and rename, so readers never see a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw invalid_argument("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw invalid_argument("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

namespace detail {

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline nlohmann::json num_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

} // namespace detail

// ---- JSON ----------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Query& q) {
    j = {{"text", q.text}, {"iteration", q.iteration}};
}

inline void to_json(nlohmann::json& j, const IterationRecord& r) {
    j = {{"k", r.k},
         {"query", r.query},
         {"raw_plan", r.raw_plan ? nlohmann::json(*r.raw_plan) : nlohmann::json()},
         {"validation", r.validation},
         {"metrics", r.metrics ? nlohmann::json(*r.metrics) : nlohmann::json()},
         {"cost", r.cost ? nlohmann::json(*r.cost) : nlohmann::json()},
         {"implemented", r.implemented}};
    if (!r.error.empty()) j["error"] = r.error;
}

inline void to_json(nlohmann::json& j, const RunResult& r) {
    j = {{"records", r.records},           {"best_plan", r.best_plan},   {"best_cost", r.best_cost},
         {"best_metrics", r.best_metrics}, {"best_k", r.best_k},         {"converged", r.converged},
         {"iterations_used", r.iterations_used}};
}

inline void to_json(nlohmann::json& j, const TrialSummary& t) {
    j = {{"trial", t.trial},
         {"seed", t.seed},
         {"evaluated", t.evaluated},
         {"implemented", t.implemented},
         {"converged", t.converged},
         {"iterations_used", t.iterations_used},
         {"best_cost", detail::num_or_null(t.best_cost)},
         {"best_metrics", t.evaluated ? nlohmann::json(t.best_metrics) : nlohmann::json()}};
    if (!t.error.empty()) j["error"] = t.error;
}

inline void to_json(nlohmann::json& j, const BatchRow& b) {
    j = {{"batch", b.batch},
         {"first_trial", b.first_trial},
         {"trials", b.trials},
         {"implemented", b.implemented},
         {"rejected", b.rejected},
         {"mean_angle_error", detail::num_or_null(b.mean_angle_error)},
         {"min_angle_error", detail::num_or_null(b.min_angle_error)},
         {"success_rate", b.success_rate}};
}

inline void to_json(nlohmann::json& j, const ImplementationRow& r) {
    j = {{"label", r.label},
         {"total", r.total},
         {"implemented", r.implemented},
         {"rejected", r.rejected},
         {"success_percent", r.success_percent()}};
}

inline void to_json(nlohmann::json& j, const BatchReport& r) {
    j = {{"n_trials", r.n_trials},         {"batch_size", r.batch_size}, {"vehicle", r.vehicle},
         {"trials", r.trials},             {"batches", r.batches},       {"implementation", r.implementation}};
}

inline void to_json(nlohmann::json& j, const ComparisonTable& t) {
    j = nlohmann::json{{"labels", t.labels}, {"rows", nlohmann::json::array()}};
    for (const auto& row : t.rows) {
        nlohmann::json values = nlohmann::json::array();
        for (double v : row.values) values.push_back(detail::num_or_null(v));
        j["rows"].push_back({{"metric", row.metric}, {"values", values}});
    }
}

// ---- CSV -----------------------------------------------------------------

inline std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream out;
    out << "time_s,x_m,y_m,heading_rad,v_long_mps,v_lat_mps,yaw_rate_radps,throttle,steering,brake,reverse\n";
    for (const auto& s : traj.samples) {
        const auto& x = s.state;
        const auto& u = s.control;
        out << detail::num(s.time) << ',' << detail::num(x.x_pos) << ',' << detail::num(x.y_pos) << ','
            << detail::num(x.heading) << ',' << detail::num(x.v_long) << ',' << detail::num(x.v_lat) << ','
            << detail::num(x.yaw_rate) << ',' << detail::num(u.throttle) << ',' << detail::num(u.steering) << ','
            << detail::num(u.brake) << ',' << (u.reverse ? 1 : 0) << '\n';
    }
    return out.str();
}

inline std::string velocity_ci_csv(const std::vector<VelocityRow>& rows) {
    std::ostringstream out;
    out << "time_s,vx_mean,vx_ci,vy_mean,vy_ci,vrot_mean_degps,vrot_ci\n";
    for (const auto& r : rows)
        out << detail::num(r.time) << ',' << detail::num(r.vx_mean) << ',' << detail::num(r.vx_ci) << ','
            << detail::num(r.vy_mean) << ',' << detail::num(r.vy_ci) << ',' << detail::num(r.vrot_mean_degps) << ','
            << detail::num(r.vrot_ci) << '\n';
    return out.str();
}

/// wall_ms is the only non-deterministic column; pass include_wall=false for
/// byte-stable output.
inline std::string iteration_log_csv(const std::vector<const RunResult*>& runs, bool include_wall = true) {
    std::ostringstream out;
    out << "trial,k,implemented,angle_error_deg,signed_error_deg,collision,mean_jerk,cost,wall_ms\n";
    for (std::size_t t = 0; t < runs.size(); ++t) {
        if (!runs[t]) continue;
        for (const auto& r : runs[t]->records) {
            out << t << ',' << r.k << ',' << (r.implemented ? 1 : 0) << ',';
            if (r.metrics) {
                out << detail::num(r.metrics->angle_error) << ',' << detail::num(r.metrics->signed_heading_error) << ','
                    << (r.metrics->collision ? 1 : 0) << ',' << detail::num(r.metrics->mean_jerk) << ','
                    << detail::num(*r.cost) << ',';
            } else {
                out << ",,,,,";
            }
            if (include_wall) out << detail::num(r.wall_ms);
            out << '\n';
        }
    }
    return out.str();
}

inline std::string iteration_log_csv(const RunResult& run, bool include_wall = true) {
    return iteration_log_csv(std::vector<const RunResult*>{&run}, include_wall);
}

inline std::string learning_progress_csv(const std::vector<BatchRow>& rows) {
    std::ostringstream out;
    out << "batch,first_trial,trials,mean_angle_error_deg,min_angle_error_deg,implemented,rejected,success_rate_pct\n";
    for (const auto& b : rows)
        out << b.batch << ',' << b.first_trial << ',' << b.trials << ',' << detail::num(b.mean_angle_error) << ','
            << detail::num(b.min_angle_error) << ',' << b.implemented << ',' << b.rejected << ','
            << detail::num(b.success_rate) << '\n';
    return out.str();
}

// ---- text tables ---------------------------------------------------------

inline std::string percent(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", p);
    return buf;
}

inline std::string format_implementation_table(const std::vector<ImplementationRow>& rows) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-22s %8s %12s %9s %12s\n", "Trials", "Total", "Implemented", "Rejected",
                  "Success Rate");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-22s %8d %12d %9d %12s\n", r.label.c_str(), r.total, r.implemented,
                      r.rejected, percent(r.success_percent()).c_str());
        out << line;
    }
    return out.str();
}

inline std::string format_comparison_table(const ComparisonTable& table) {
    std::ostringstream out;
    char cell[64];
    std::snprintf(cell, sizeof cell, "%-28s", "Metric");
    out << cell;
    for (const auto& l : table.labels) {
        std::snprintf(cell, sizeof cell, " %14s", l.c_str());
        out << cell;
    }
    out << '\n';
    for (const auto& row : table.rows) {
        std::snprintf(cell, sizeof cell, "%-28s", row.metric.c_str());
        out << cell;
        for (double v : row.values) {
            std::snprintf(cell, sizeof cell, " %14.2f", v);
            out << cell;
        }
        out << '\n';
    }
    return out.str();
}

} // namespace maneuverforge
