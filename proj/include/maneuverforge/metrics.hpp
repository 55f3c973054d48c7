#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "world.hpp"

namespace maneuverforge {

inline constexpr double rad_to_deg = 180.0 / std::numbers::pi;
/// Guard that keeps steering smoothness finite on straight-line trajectories.
inline constexpr double smoothness_epsilon_deg = 1e-6;

struct MetricThresholds {
    double optimal_deg = 3.0;
    double acceptable_deg = 10.0;
};

struct TrialMetrics {
    double angle_error = 0.0;          // deg, >= 0
    double signed_heading_error = 0.0; // deg, > 0 means overshoot
    bool collision = false;
    double mean_jerk = 0.0;            // m/s^3
    double max_jerk = 0.0;             // m/s^3
    double mean_yaw_rate = 0.0;        // deg/s
    double steering_smoothness = 0.0;  // 1/deg
    double execution_time = 0.0;       // s of simulated time
    bool success = false;

    friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

struct CostWeights {
    double alpha1 = 1.0;   // per degree of heading error
    double alpha2 = 100.0; // per collision
    double alpha3 = 0.1;   // per m/s^3 of mean jerk
};

inline void check_weights(const CostWeights& w) {
    if (!(w.alpha1 >= 0.0 && w.alpha2 >= 0.0 && w.alpha3 >= 0.0))
        throw invalid_argument("cost weights must be >= 0");
}

struct AngleError {
    double signed_deg = 0.0;
    double absolute_deg = 0.0;
};

/// Heading error from a total rotation in degrees: |rotation| - 180, so the
/// turn direction does not matter and overshoot is positive.
inline AngleError angle_error_from_rotation(double rotation_deg) {
    const double signed_deg = std::abs(rotation_deg) - 180.0;
    return {signed_deg, std::abs(signed_deg)};
}

inline double total_rotation_deg(const Trajectory& traj) {
    if (traj.samples.empty()) throw empty_trajectory("trajectory has no samples");
    return (traj.samples.back().state.heading - traj.samples.front().state.heading) * rad_to_deg;
}

inline AngleError angle_error(const Trajectory& traj) {
    return angle_error_from_rotation(total_rotation_deg(traj));
}

struct JerkMetrics {
    double mean = 0.0;
    double max = 0.0;
};

/// Acceleration magnitude from central differences of the body-frame
/// velocities, then jerk as the forward difference of that magnitude.
inline JerkMetrics jerk_metrics(const Trajectory& traj) {
    const auto& s = traj.samples;
    if (s.size() < 3) throw too_short("jerk needs at least 3 samples");
    const double dt = s[1].time - s[0].time;

    std::vector<double> accel;
    accel.reserve(s.size() - 2);
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const double ax = (s[k + 1].state.v_long - s[k - 1].state.v_long) / (2.0 * dt);
        const double ay = (s[k + 1].state.v_lat - s[k - 1].state.v_lat) / (2.0 * dt);
        accel.push_back(std::hypot(ax, ay));
    }
    JerkMetrics out;
    if (accel.size() < 2) return out;
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < accel.size(); ++k) {
        const double j = std::abs(accel[k + 1] - accel[k]) / dt;
        sum += j;
        out.max = std::max(out.max, j);
    }
    out.mean = sum / static_cast<double>(accel.size() - 1);
    return out;
}

struct SmoothnessYaw {
    double steering_smoothness = 0.0; // 1/deg
    double mean_yaw_rate = 0.0;       // deg/s
};

inline SmoothnessYaw smoothness_and_yaw(const Trajectory& traj) {
    const auto& s = traj.samples;
    if (s.size() < 2) throw too_short("smoothness needs at least 2 samples");
    double sum_dh = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k)
        sum_dh += std::abs(s[k].state.heading - s[k - 1].state.heading) * rad_to_deg;
    double sum_yaw = 0.0;
    for (const auto& sample : s) sum_yaw += std::abs(sample.state.yaw_rate) * rad_to_deg;

    SmoothnessYaw out;
    out.steering_smoothness =
        1.0 / (sum_dh / static_cast<double>(s.size() - 1) + smoothness_epsilon_deg);
    out.mean_yaw_rate = sum_yaw / static_cast<double>(s.size());
    return out;
}

inline TrialMetrics compute_metrics(const Trajectory& traj, const MetricThresholds& thresholds = {}) {
    TrialMetrics m;
    const auto err = angle_error(traj);
    m.angle_error = err.absolute_deg;
    m.signed_heading_error = err.signed_deg;
    m.collision = traj.collision;
    if (traj.samples.size() >= 3) {
        const auto jerk = jerk_metrics(traj);
        m.mean_jerk = jerk.mean;
        m.max_jerk = jerk.max;
    }
    if (traj.samples.size() >= 2) {
        const auto sy = smoothness_and_yaw(traj);
        m.steering_smoothness = sy.steering_smoothness;
        m.mean_yaw_rate = sy.mean_yaw_rate;
    }
    m.execution_time = traj.samples.back().time - traj.samples.front().time;
    m.success = m.angle_error <= thresholds.acceptable_deg && !m.collision;
    return m;
}

/// L = a1*angle_error + a2*collision + a3*mean_jerk
inline double cost(const TrialMetrics& m, const CostWeights& w = {}) {
    return w.alpha1 * m.angle_error + w.alpha2 * (m.collision ? 1.0 : 0.0) + w.alpha3 * m.mean_jerk;
}

/// R = a1*(180 - angle_error) + a2*(1 - collision) - a3*mean_jerk, evaluated
/// as K - L with K = 180*a1 + a2. Summing the terms separately drifts; this
/// form keeps L + R == K exact at the default weights and within an ulp
/// otherwise.
inline double reward(const TrialMetrics& m, const CostWeights& w = {}) {
    return (180.0 * w.alpha1 + w.alpha2) - cost(m, w);
}

/// 95% half-width 1.96 * sigma / sqrt(n), sigma with 1/n normalization.
inline double confidence_interval(std::span<const double> samples) {
    if (samples.size() < 2) throw too_few_samples("confidence interval needs n >= 2");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    return 1.96 * std::sqrt(ss / n) / std::sqrt(n);
}

inline void to_json(nlohmann::json& j, const TrialMetrics& m) {
    j = nlohmann::json{{"angle_error", m.angle_error},
                       {"signed_heading_error", m.signed_heading_error},
                       {"collision", m.collision},
                       {"mean_jerk", m.mean_jerk},
                       {"max_jerk", m.max_jerk},
                       {"mean_yaw_rate", m.mean_yaw_rate},
                       {"steering_smoothness", m.steering_smoothness},
                       {"execution_time", m.execution_time},
                       {"success", m.success}};
}

inline void from_json(const nlohmann::json& j, TrialMetrics& m) {
    m.angle_error = j.at("angle_error").get<double>();
    m.signed_heading_error = j.at("signed_heading_error").get<double>();
    m.collision = j.at("collision").get<bool>();
    m.mean_jerk = j.at("mean_jerk").get<double>();
    m.max_jerk = j.at("max_jerk").get<double>();
    m.mean_yaw_rate = j.at("mean_yaw_rate").get<double>();
    m.steering_smoothness = j.at("steering_smoothness").get<double>();
    m.execution_time = j.at("execution_time").get<double>();
    m.success = j.at("success").get<bool>();
}

inline void to_json(nlohmann::json& j, const CostWeights& w) {
    j = nlohmann::json{{"alpha1", w.alpha1}, {"alpha2", w.alpha2}, {"alpha3", w.alpha3}};
}

} // namespace maneuverforge
