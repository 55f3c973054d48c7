#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace maneuverforge {

inline constexpr double gravity = 9.81;

/// Planar rigid-body state. Heading is unwrapped: it keeps accumulating past
/// +/-pi so the total rotation of a maneuver can be read off directly.
struct VehicleState {
    double x_pos = 0.0;    // m, world frame
    double y_pos = 0.0;    // m, world frame
    double heading = 0.0;  // rad, CCW positive
    double v_long = 0.0;   // m/s, body frame
    double v_lat = 0.0;    // m/s, body frame
    double yaw_rate = 0.0; // rad/s
    double time = 0.0;     // s

    bool all_finite() const {
        return std::isfinite(x_pos) && std::isfinite(y_pos) && std::isfinite(heading) &&
               std::isfinite(v_long) && std::isfinite(v_lat) && std::isfinite(yaw_rate) &&
               std::isfinite(time);
    }

    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Normalized actuator command: throttle and brake in [0,1], steering in [-1,1].
struct ControlInput {
    double throttle = 0.0;
    double steering = 0.0;
    double brake = 0.0;
    bool reverse = false;

    friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct VehicleParams {
    std::string name;
    double mass = 0.0;                  // kg
    double yaw_inertia = 0.0;           // kg m^2
    double dist_front_axle = 0.0;       // m, CG to front axle
    double dist_rear_axle = 0.0;        // m, CG to rear axle
    double cornering_stiff_front = 0.0; // N/rad
    double cornering_stiff_rear = 0.0;  // N/rad
    double max_drive_force = 0.0;       // N
    double max_brake_force = 0.0;       // N
    double max_steer_angle = 0.0;       // rad at steering = +/-1
    double drag_coeff = 0.0;            // N s^2/m^2
    double rolling_coeff = 0.0;         // N s/m
    double friction_coeff = 0.0;        // mu
    double body_length = 0.0;           // m
    double body_width = 0.0;            // m

    double wheelbase() const { return dist_front_axle + dist_rear_axle; }

    friend bool operator==(const VehicleParams&, const VehicleParams&) = default;
};

inline void check_params(const VehicleParams& p) {
    auto positive = [](double v, const char* field) {
        if (!(std::isfinite(v) && v > 0.0))
            throw invalid_argument(std::string("vehicle parameter '") + field + "' must be > 0");
    };
    positive(p.mass, "mass");
    positive(p.yaw_inertia, "yaw_inertia");
    positive(p.dist_front_axle, "dist_front_axle");
    positive(p.dist_rear_axle, "dist_rear_axle");
    positive(p.cornering_stiff_front, "cornering_stiff_front");
    positive(p.cornering_stiff_rear, "cornering_stiff_rear");
    positive(p.max_drive_force, "max_drive_force");
    positive(p.max_brake_force, "max_brake_force");
    positive(p.max_steer_angle, "max_steer_angle");
    positive(p.body_length, "body_length");
    positive(p.body_width, "body_width");
    if (!(std::isfinite(p.drag_coeff) && p.drag_coeff >= 0.0))
        throw invalid_argument("vehicle parameter 'drag_coeff' must be >= 0");
    if (!(std::isfinite(p.rolling_coeff) && p.rolling_coeff >= 0.0))
        throw invalid_argument("vehicle parameter 'rolling_coeff' must be >= 0");
    if (!(p.friction_coeff > 0.0 && p.friction_coeff <= 2.0))
        throw invalid_argument("vehicle parameter 'friction_coeff' must lie in (0, 2]");
}

// Built-in presets. config/vehicles/*.json carry the same numbers and a unit
// test keeps the two in sync.

inline VehicleParams sedan_preset() {
    VehicleParams p;
    p.name = "sedan";
    p.mass = 1500.0;
    p.yaw_inertia = 2600.0;
    p.dist_front_axle = 1.2;
    p.dist_rear_axle = 1.6;
    p.cornering_stiff_front = 55000.0;
    p.cornering_stiff_rear = 60000.0;
    p.max_drive_force = 7000.0;
    p.max_brake_force = 12000.0;
    p.max_steer_angle = 0.6;
    p.drag_coeff = 0.4;
    p.rolling_coeff = 30.0;
    p.friction_coeff = 1.0;
    p.body_length = 4.8;
    p.body_width = 1.85;
    return p;
}

/// Shorter wheelbase, higher power-to-weight and a CG shifted rearward.
inline VehicleParams sports_coupe_preset() {
    VehicleParams p;
    p.name = "sports_coupe";
    p.mass = 1350.0;
    p.yaw_inertia = 1900.0;
    p.dist_front_axle = 1.3;
    p.dist_rear_axle = 1.1;
    p.cornering_stiff_front = 50000.0;
    p.cornering_stiff_rear = 55000.0;
    p.max_drive_force = 8500.0;
    p.max_brake_force = 11000.0;
    p.max_steer_angle = 0.6;
    p.drag_coeff = 0.35;
    p.rolling_coeff = 25.0;
    p.friction_coeff = 1.0;
    p.body_length = 4.4;
    p.body_width = 1.8;
    return p;
}

inline VehicleParams vehicle_preset(std::string_view name) {
    if (name == "sedan") return sedan_preset();
    if (name == "sports_coupe") return sports_coupe_preset();
    throw invalid_argument("unknown vehicle preset '" + std::string(name) + "'");
}

inline void to_json(nlohmann::json& j, const VehicleParams& p) {
    j = nlohmann::json{
        {"name", p.name},
        {"mass", p.mass},
        {"yaw_inertia", p.yaw_inertia},
        {"dist_front_axle", p.dist_front_axle},
        {"dist_rear_axle", p.dist_rear_axle},
        {"cornering_stiff_front", p.cornering_stiff_front},
        {"cornering_stiff_rear", p.cornering_stiff_rear},
        {"max_drive_force", p.max_drive_force},
        {"max_brake_force", p.max_brake_force},
        {"max_steer_angle", p.max_steer_angle},
        {"drag_coeff", p.drag_coeff},
        {"rolling_coeff", p.rolling_coeff},
        {"friction_coeff", p.friction_coeff},
        {"body_length", p.body_length},
        {"body_width", p.body_width},
    };
}

/// Strict: every field is required and unknown keys are rejected.
inline void from_json(const nlohmann::json& j, VehicleParams& p) {
    static const char* const fields[] = {
        "mass", "yaw_inertia", "dist_front_axle", "dist_rear_axle",
        "cornering_stiff_front", "cornering_stiff_rear", "max_drive_force",
        "max_brake_force", "max_steer_angle", "drag_coeff", "rolling_coeff",
        "friction_coeff", "body_length", "body_width"};
    if (!j.is_object()) throw invalid_argument("vehicle document must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = key == "name";
        for (const char* f : fields) known = known || key == f;
        if (!known) throw invalid_argument("unknown vehicle parameter '" + key + "'");
    }
    for (const char* f : fields)
        if (!j.contains(f) || !j.at(f).is_number())
            throw invalid_argument(std::string("vehicle parameter '") + f + "' missing or not a number");
    p.name = j.value("name", std::string{});
    p.mass = j.at("mass").get<double>();
    p.yaw_inertia = j.at("yaw_inertia").get<double>();
    p.dist_front_axle = j.at("dist_front_axle").get<double>();
    p.dist_rear_axle = j.at("dist_rear_axle").get<double>();
    p.cornering_stiff_front = j.at("cornering_stiff_front").get<double>();
    p.cornering_stiff_rear = j.at("cornering_stiff_rear").get<double>();
    p.max_drive_force = j.at("max_drive_force").get<double>();
    p.max_brake_force = j.at("max_brake_force").get<double>();
    p.max_steer_angle = j.at("max_steer_angle").get<double>();
    p.drag_coeff = j.at("drag_coeff").get<double>();
    p.rolling_coeff = j.at("rolling_coeff").get<double>();
    p.friction_coeff = j.at("friction_coeff").get<double>();
    p.body_length = j.at("body_length").get<double>();
    p.body_width = j.at("body_width").get<double>();
    check_params(p);
}

inline VehicleParams load_vehicle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_argument("cannot open vehicle file '" + path + "'");
    auto j = nlohmann::json::parse(in);
    return j.get<VehicleParams>();
}

inline void to_json(nlohmann::json& j, const VehicleState& s) {
    j = nlohmann::json{{"x_pos", s.x_pos},   {"y_pos", s.y_pos},   {"heading", s.heading},
                       {"v_long", s.v_long}, {"v_lat", s.v_lat},   {"yaw_rate", s.yaw_rate},
                       {"time", s.time}};
}

inline void to_json(nlohmann::json& j, const ControlInput& c) {
    j = nlohmann::json{{"throttle", c.throttle}, {"steering", c.steering},
                       {"brake", c.brake}, {"reverse", c.reverse}};
}

} // namespace maneuverforge
