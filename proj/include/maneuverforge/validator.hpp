#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "plan.hpp"

namespace maneuverforge {

/// Static actuator and plan-shape limits. These are fixed at the actuator
/// ranges; check_constraints() refuses anything else.
struct OperationalBounds {
    double throttle_min = 0.0, throttle_max = 1.0;
    double steering_min = -1.0, steering_max = 1.0;
    double brake_min = 0.0, brake_max = 1.0;
    double duration_max = max_phase_duration;  // lower bound is exclusive 0
    int min_phases = 1;
    int max_phases = maneuverforge::max_phases;
};

/// Dynamic-risk caps.
struct SafetyCaps {
    /// |steering| cap applied to phases whose estimated speed exceeds
    /// high_speed_threshold.
    double high_speed_steer_cap = 1.0;
    /// Estimated speed (m/s) above which the steering cap applies.
    double high_speed_threshold = 20.0;
    double max_total_duration = max_plan_duration;  // s
    bool require_final_brake = true;
    /// Acceleration per unit throttle (max_drive_force / mass) for the speed estimate.
    double drive_accel = 7000.0 / 1500.0;
};

struct ConstraintSet {
    OperationalBounds operational;
    SafetyCaps safety;
};

inline void check_constraints(const ConstraintSet& c) {
    const auto& o = c.operational;
    if (o.throttle_min != 0.0 || o.throttle_max != 1.0 || o.brake_min != 0.0 || o.brake_max != 1.0 ||
        o.steering_min != -1.0 || o.steering_max != 1.0)
        throw invalid_argument("operational channel bounds are fixed at throttle/brake [0,1], steering [-1,1]");
    if (!(o.duration_max > 0.0 && o.duration_max <= max_phase_duration))
        throw invalid_argument("operational duration_max must lie in (0, 30]");
    if (!(o.min_phases >= 1 && o.max_phases >= o.min_phases && o.max_phases <= maneuverforge::max_phases))
        throw invalid_argument("operational phase-count bounds must lie within [1, 10]");
    const auto& s = c.safety;
    if (!(s.high_speed_steer_cap > 0.0 && s.high_speed_steer_cap <= 1.0))
        throw invalid_argument("safety steering cap must lie in (0, 1]");
    if (!(s.high_speed_threshold > 0.0))
        throw invalid_argument("safety speed threshold must be > 0");
    if (!(s.max_total_duration > 0.0 && s.max_total_duration <= max_plan_duration))
        throw invalid_argument("safety max_total_duration must lie in (0, 60]");
    if (!(s.drive_accel > 0.0 && std::isfinite(s.drive_accel)))
        throw invalid_argument("safety drive_accel must be > 0");
}

enum class Verdict { accepted, repaired, rejected };
enum class ConstraintClass { safety, operational };

struct Violation {
    std::optional<int> phase;  // empty for plan-level violations
    std::string channel;
    double observed = 0.0;
    double bound = 0.0;
    ConstraintClass cls = ConstraintClass::operational;
    bool structural = false;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
    Verdict verdict = Verdict::accepted;
    std::vector<Violation> violations;
    std::optional<ManeuverPlan> repaired_plan;
};

/// Raised by enforce() when the plan cannot be repaired.
class plan_rejected : public error {
public:
    explicit plan_rejected(ValidationReport report)
        : error("plan_rejected: " + std::to_string(report.violations.size()) + " violation(s)"),
          report_(std::move(report)) {}

    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

namespace detail {

inline int channel_rank(const std::string& channel) {
    static const char* const order[] = {"phase_count", "total_duration", "duration",
                                        "throttle",    "steering",       "brake"};
    for (int i = 0; i < 6; ++i)
        if (channel == order[i]) return i;
    return 6;
}

} // namespace detail

/// Numeric channels outside their interval are clamped (repaired); shape
/// problems (phase count, non-positive or non-finite values, over-long plans,
/// missing final brake) reject the plan. Never mutates its input.
inline ValidationReport validate(const ManeuverPlan& plan, const ConstraintSet& constraints = {}) {
    const auto& op = constraints.operational;
    const auto& sf = constraints.safety;
    ValidationReport report;
    ManeuverPlan fixed = plan;

    auto add = [&](std::optional<int> phase, std::string channel, double observed, double bound,
                   ConstraintClass cls, bool structural) {
        report.violations.push_back({phase, std::move(channel), observed, bound, cls, structural});
    };

    const int n = static_cast<int>(plan.phases.size());
    if (n < op.min_phases) add(std::nullopt, "phase_count", n, op.min_phases, ConstraintClass::operational, true);
    if (n > op.max_phases) add(std::nullopt, "phase_count", n, op.max_phases, ConstraintClass::operational, true);

    double throttle_time = 0.0;
    for (int i = 0; i < n; ++i) {
        auto& ph = fixed.phases[static_cast<std::size_t>(i)];

        auto clamp_channel = [&](const char* name, double& value, double lo, double hi) {
            if (!std::isfinite(value)) {
                add(i, name, value, hi, ConstraintClass::operational, true);
                return;
            }
            if (value < lo) {
                add(i, name, value, lo, ConstraintClass::operational, false);
                value = lo;
            } else if (value > hi) {
                add(i, name, value, hi, ConstraintClass::operational, false);
                value = hi;
            }
        };

        if (!std::isfinite(ph.duration) || ph.duration <= 0.0)
            add(i, "duration", ph.duration, 0.0, ConstraintClass::operational, true);
        else if (ph.duration > op.duration_max) {
            add(i, "duration", ph.duration, op.duration_max, ConstraintClass::operational, false);
            ph.duration = op.duration_max;
        }
        clamp_channel("throttle", ph.throttle, op.throttle_min, op.throttle_max);
        clamp_channel("steering", ph.steering, op.steering_min, op.steering_max);
        clamp_channel("brake", ph.brake, op.brake_min, op.brake_max);

        // Coarse closed-form speed bound: every unit of throttle-time adds drive_accel.
        if (std::isfinite(ph.throttle) && std::isfinite(ph.duration) && ph.duration > 0.0)
            throttle_time += ph.throttle * ph.duration;
        const double speed_estimate = sf.drive_accel * throttle_time;
        if (speed_estimate > sf.high_speed_threshold && std::isfinite(ph.steering) &&
            std::abs(ph.steering) > sf.high_speed_steer_cap) {
            add(i, "steering", ph.steering, sf.high_speed_steer_cap, ConstraintClass::safety, false);
            ph.steering = std::copysign(sf.high_speed_steer_cap, ph.steering);
        }
    }

    if (n > 0) {
        const double total = fixed.total_duration();
        if (std::isfinite(total) && total > sf.max_total_duration)
            add(std::nullopt, "total_duration", total, sf.max_total_duration, ConstraintClass::safety, true);
        const auto& last = fixed.phases.back();
        if (sf.require_final_brake && std::isfinite(last.brake) && !(last.brake > 0.0))
            add(n - 1, "brake", last.brake, 0.0, ConstraintClass::safety, true);
    }

    std::stable_sort(report.violations.begin(), report.violations.end(),
                     [](const Violation& a, const Violation& b) {
                         const int pa = a.phase.value_or(-1);
                         const int pb = b.phase.value_or(-1);
                         if (pa != pb) return pa < pb;
                         return detail::channel_rank(a.channel) < detail::channel_rank(b.channel);
                     });

    const bool structural = std::any_of(report.violations.begin(), report.violations.end(),
                                        [](const Violation& v) { return v.structural; });
    if (structural) {
        report.verdict = Verdict::rejected;
    } else {
        report.verdict = report.violations.empty() ? Verdict::accepted : Verdict::repaired;
        report.repaired_plan = std::move(fixed);
    }
    return report;
}

/// Maps a proposed plan into the safe set, or throws plan_rejected.
inline ManeuverPlan enforce(const ManeuverPlan& plan, const ConstraintSet& constraints = {}) {
    auto report = validate(plan, constraints);
    if (report.verdict == Verdict::rejected) throw plan_rejected(std::move(report));
    return std::move(*report.repaired_plan);
}

// ---- JSON ----------------------------------------------------------------

inline std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::accepted: return "accepted";
    case Verdict::repaired: return "repaired";
    case Verdict::rejected: return "rejected";
    }
    return "rejected";
}

inline std::string to_string(ConstraintClass c) {
    return c == ConstraintClass::safety ? "safety" : "operational";
}

inline void to_json(nlohmann::json& j, const Violation& v) {
    j = nlohmann::json{{"phase", v.phase ? nlohmann::json(*v.phase) : nlohmann::json(nullptr)},
                       {"channel", v.channel},
                       {"observed", v.observed},
                       {"bound", v.bound},
                       {"class", to_string(v.cls)},
                       {"structural", v.structural}};
}

inline void to_json(nlohmann::json& j, const ValidationReport& r) {
    j = nlohmann::json{{"verdict", to_string(r.verdict)}, {"violations", r.violations}};
    if (r.repaired_plan) j["repaired_plan"] = *r.repaired_plan;
}

inline void to_json(nlohmann::json& j, const ConstraintSet& c) {
    j = nlohmann::json{
        {"operational",
         {{"throttle", {c.operational.throttle_min, c.operational.throttle_max}},
          {"steering", {c.operational.steering_min, c.operational.steering_max}},
          {"brake", {c.operational.brake_min, c.operational.brake_max}},
          {"duration_max", c.operational.duration_max},
          {"phases", {c.operational.min_phases, c.operational.max_phases}}}},
        {"safety",
         {{"high_speed_steer_cap", c.safety.high_speed_steer_cap},
          {"high_speed_threshold", c.safety.high_speed_threshold},
          {"max_total_duration", c.safety.max_total_duration},
          {"require_final_brake", c.safety.require_final_brake},
          {"drive_accel", c.safety.drive_accel}}}};
}

/// One-line summary of the bounds, used in agent prompts.
inline std::string describe(const ConstraintSet& c) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "throttle in [0,1], brake in [0,1], steering in [-1,1]; phase duration in (0, %g] s; "
                  "%d to %d phases; total duration <= %g s; %s|steering| <= %g once estimated speed "
                  "exceeds %g m/s",
                  c.operational.duration_max, c.operational.min_phases, c.operational.max_phases,
                  c.safety.max_total_duration,
                  c.safety.require_final_brake ? "final phase must brake; " : "",
                  c.safety.high_speed_steer_cap, c.safety.high_speed_threshold);
    return buf;
}

} // namespace maneuverforge
