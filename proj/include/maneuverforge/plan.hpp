#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynamics.hpp"
#include "errors.hpp"

namespace maneuverforge {

enum class ManeuverType { j_turn };

inline constexpr int max_phases = 10;
inline constexpr double max_phase_duration = 30.0;  // s
inline constexpr double max_plan_duration = 60.0;   // s

/// One constant-control segment of a maneuver.
struct Phase {
    std::string name;
    double duration = 0.0;  // s
    double throttle = 0.0;
    double steering = 0.0;
    double brake = 0.0;
    bool reverse = false;

    ControlInput control() const { return ControlInput{throttle, steering, brake, reverse}; }

    friend bool operator==(const Phase&, const Phase&) = default;
};

struct ManeuverPlan {
    ManeuverType maneuver_type = ManeuverType::j_turn;
    std::vector<Phase> phases;
    std::string metadata;

    double total_duration() const {
        double t = 0.0;
        for (const auto& ph : phases) t += ph.duration;
        return t;
    }

    friend bool operator==(const ManeuverPlan&, const ManeuverPlan&) = default;
};

struct ScheduleSegment {
    double start_time = 0.0;
    double end_time = 0.0;
    ControlInput control;
};

/// Piecewise-constant control over [0, end_time()]. Segments are half-open
/// [start, end); the final instant belongs to the last segment.
struct ControlSchedule {
    std::vector<ScheduleSegment> segments;

    double end_time() const { return segments.empty() ? 0.0 : segments.back().end_time; }
    bool empty() const { return segments.empty(); }
};

/// Canonical five-phase J-turn: reverse, reverse with steering, counter-steer
/// forward, straighten and accelerate, brake. These numbers are the scripted
/// agent's seed and mirror config/jturn_template.json.
inline ManeuverPlan jturn_template() {
    ManeuverPlan plan;
    plan.maneuver_type = ManeuverType::j_turn;
    plan.phases = {
        {"reverse_acceleration", 1.0, 0.4, 0.0, 0.0, true},
        {"reverse_steering", 3.2, 0.0, 0.9, 0.0, true},
        {"counter_steer_forward", 3.0, 0.7, -0.9, 0.0, false},
        {"forward_acceleration", 1.0, 0.3, 0.0, 0.0, false},
        {"braking", 1.5, 0.0, 0.0, 0.8, false},
    };
    plan.metadata = "canonical J-turn template";
    return plan;
}

/// Throws malformed_plan if a phase or the plan as a whole is out of shape.
inline void check_plan_shape(const ManeuverPlan& plan) {
    if (plan.phases.empty() || plan.phases.size() > static_cast<std::size_t>(max_phases))
        throw malformed_plan("plan must have 1.." + std::to_string(max_phases) + " phases, got " +
                             std::to_string(plan.phases.size()));
    for (std::size_t i = 0; i < plan.phases.size(); ++i) {
        const auto& ph = plan.phases[i];
        if (!(ph.duration > 0.0 && ph.duration <= max_phase_duration))
            throw malformed_plan("phase " + std::to_string(i) + " duration must lie in (0, 30] s");
        if (!std::isfinite(ph.throttle) || !std::isfinite(ph.steering) || !std::isfinite(ph.brake))
            throw malformed_plan("phase " + std::to_string(i) + " has a non-finite channel");
    }
    if (plan.total_duration() > max_plan_duration)
        throw malformed_plan("plan duration exceeds 60 s");
}

inline ControlSchedule compile(const ManeuverPlan& plan) {
    check_plan_shape(plan);
    ControlSchedule schedule;
    schedule.segments.reserve(plan.phases.size());
    double t = 0.0;
    for (const auto& ph : plan.phases) {
        const double end = t + ph.duration;
        schedule.segments.push_back({t, end, clamp_control(ph.control())});
        t = end;
    }
    return schedule;
}

inline const ControlInput& control_at(const ControlSchedule& schedule, double t) {
    if (schedule.empty()) throw out_of_range("empty schedule");
    if (!(t >= 0.0 && t <= schedule.end_time()))
        throw out_of_range("t=" + std::to_string(t) + " outside [0, " +
                           std::to_string(schedule.end_time()) + "]");
    // Few segments; a linear scan is fine.
    for (const auto& seg : schedule.segments)
        if (t < seg.end_time) return seg.control;
    return schedule.segments.back().control;
}

// ---- JSON ----------------------------------------------------------------

inline std::string to_string(ManeuverType t) {
    switch (t) {
    case ManeuverType::j_turn: return "j_turn";
    }
    return "j_turn";
}

inline void to_json(nlohmann::json& j, const Phase& ph) {
    j = nlohmann::json{{"name", ph.name},         {"duration", ph.duration},
                       {"throttle", ph.throttle}, {"steering", ph.steering},
                       {"brake", ph.brake},       {"reverse", ph.reverse}};
}

inline void to_json(nlohmann::json& j, const ManeuverPlan& plan) {
    j = nlohmann::json{{"maneuver_type", to_string(plan.maneuver_type)},
                       {"phases", plan.phases},
                       {"metadata", plan.metadata}};
}

/// Parses the plan document shape only; numeric ranges are the validator's job.
/// Throws malformed_plan on any shape problem.
inline ManeuverPlan plan_from_json(const nlohmann::json& j) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw malformed_plan(msg);
    };
    require(j.is_object(), "plan must be a JSON object");
    require(j.contains("maneuver_type") && j["maneuver_type"].is_string(), "missing maneuver_type");
    require(j["maneuver_type"] == "j_turn", "unsupported maneuver_type");
    require(j.contains("phases") && j["phases"].is_array(), "missing phases array");

    ManeuverPlan plan;
    plan.maneuver_type = ManeuverType::j_turn;
    if (j.contains("metadata")) {
        require(j["metadata"].is_string(), "metadata must be a string");
        plan.metadata = j["metadata"].get<std::string>();
    }
    for (const auto& p : j["phases"]) {
        require(p.is_object(), "phase must be an object");
        for (const char* key : {"duration", "throttle", "steering", "brake"})
            require(p.contains(key) && p[key].is_number(), std::string("phase field '") + key + "' missing");
        require(p.contains("reverse") && p["reverse"].is_boolean(), "phase field 'reverse' missing");
        Phase ph;
        ph.name = p.contains("name") && p["name"].is_string() ? p["name"].get<std::string>() : "";
        ph.duration = p["duration"].get<double>();
        ph.throttle = p["throttle"].get<double>();
        ph.steering = p["steering"].get<double>();
        ph.brake = p["brake"].get<double>();
        ph.reverse = p["reverse"].get<bool>();
        plan.phases.push_back(std::move(ph));
    }
    return plan;
}

/// JSON schema handed to the plan-generating backend. Ranges are deliberately
/// absent: out-of-range values must reach the validator to be repaired.
inline const nlohmann::json& plan_schema() {
    static const nlohmann::json schema = nlohmann::json::parse(R"({
  "type": "object",
  "additionalProperties": false,
  "required": ["maneuver_type", "phases", "metadata"],
  "properties": {
    "maneuver_type": {"type": "string", "enum": ["j_turn"]},
    "metadata": {"type": "string"},
    "phases": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["name", "duration", "throttle", "steering", "brake", "reverse"],
        "properties": {
          "name": {"type": "string"},
          "duration": {"type": "number"},
          "throttle": {"type": "number"},
          "steering": {"type": "number"},
          "brake": {"type": "number"},
          "reverse": {"type": "boolean"}
        }
      }
    }
  }
})");
    return schema;
}

} // namespace maneuverforge
