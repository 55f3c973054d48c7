#pragma once

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "vehicle.hpp"

namespace maneuverforge {

/// Reference-speed floor for slip angles; lateral tire forces fade linearly
/// to zero as planar speed drops below it.
inline constexpr double slip_speed_floor = 0.5;   // m/s
/// Brake force direction is blended through zero speed over this band.
inline constexpr double brake_speed_band = 0.1;   // m/s

struct StateDerivative {
    double d_x_pos = 0.0;      // m/s
    double d_y_pos = 0.0;      // m/s
    double d_heading = 0.0;    // rad/s
    double accel_long = 0.0;   // m/s^2
    double accel_lat = 0.0;    // m/s^2
    double d_yaw_rate = 0.0;   // rad/s^2

    bool all_finite() const {
        return std::isfinite(d_x_pos) && std::isfinite(d_y_pos) && std::isfinite(d_heading) &&
               std::isfinite(accel_long) && std::isfinite(accel_lat) && std::isfinite(d_yaw_rate);
    }
};

/// Clamp each channel into its legal interval. Idempotent.
inline ControlInput clamp_control(double throttle, double steering, double brake, bool reverse) {
    if (!std::isfinite(throttle) || !std::isfinite(steering) || !std::isfinite(brake))
        throw invalid_control("control channels must be finite");
    return ControlInput{std::clamp(throttle, 0.0, 1.0), std::clamp(steering, -1.0, 1.0),
                        std::clamp(brake, 0.0, 1.0), reverse};
}

inline ControlInput clamp_control(const ControlInput& c) {
    return clamp_control(c.throttle, c.steering, c.brake, c.reverse);
}

namespace detail {

inline double sign_or_one(double v) { return v < 0.0 ? -1.0 : 1.0; }

inline double saturate(double force, double limit) { return std::clamp(force, -limit, limit); }

/// Per-axle lateral forces, exposed for the saturation property tests.
struct TireForces {
    double front = 0.0;
    double rear = 0.0;
    double steer_angle = 0.0;
};

inline TireForces tire_forces(const VehicleState& s, const ControlInput& u, const VehicleParams& p) {
    const double lf = p.dist_front_axle;
    const double lr = p.dist_rear_axle;
    const double dir = sign_or_one(s.v_long);
    const double v_ref = std::max(std::abs(s.v_long), slip_speed_floor);

    TireForces f;
    f.steer_angle = u.steering * p.max_steer_angle;
    // Slip angles are measured against the direction of travel, so both the
    // steer angle and the lateral-velocity term flip when reversing.
    const double slip_front = dir * f.steer_angle - std::atan2(s.v_lat + lf * s.yaw_rate, v_ref);
    const double slip_rear = -std::atan2(s.v_lat - lr * s.yaw_rate, v_ref);

    const double load = p.friction_coeff * p.mass * gravity / (lf + lr);
    const double speed = std::hypot(s.v_long, s.v_lat);
    const double blend = std::min(1.0, speed / slip_speed_floor);
    f.front = blend * saturate(p.cornering_stiff_front * slip_front, load * lr);
    f.rear = blend * saturate(p.cornering_stiff_rear * slip_rear, load * lf);
    return f;
}

inline double longitudinal_force(const VehicleState& s, const ControlInput& u, const VehicleParams& p) {
    const double drive_dir = u.reverse ? -1.0 : 1.0;
    const double brake_dir = std::clamp(s.v_long / brake_speed_band, -1.0, 1.0);
    return drive_dir * u.throttle * p.max_drive_force - brake_dir * u.brake * p.max_brake_force -
           p.drag_coeff * s.v_long * std::abs(s.v_long) - p.rolling_coeff * s.v_long;
}

} // namespace detail

/// Dynamic bicycle model with linear, friction-saturated tires. The velocity
/// coupling terms are -yaw_rate*v_lat (longitudinal) and +yaw_rate*v_long
/// (lateral).
inline StateDerivative derivatives(const VehicleState& s, const ControlInput& u, const VehicleParams& p) {
    const auto tires = detail::tire_forces(s, u, p);
    const double f_v = detail::longitudinal_force(s, u, p) / p.mass;
    const double cos_delta = std::cos(tires.steer_angle);

    StateDerivative d;
    d.accel_long = f_v - s.yaw_rate * s.v_lat;
    d.accel_lat = (tires.front * cos_delta + tires.rear) / p.mass + s.yaw_rate * s.v_long;
    d.d_yaw_rate =
        (p.dist_front_axle * tires.front * cos_delta - p.dist_rear_axle * tires.rear) / p.yaw_inertia;

    const double c = std::cos(s.heading);
    const double sn = std::sin(s.heading);
    d.d_x_pos = s.v_long * c - s.v_lat * sn;
    d.d_y_pos = s.v_long * sn + s.v_lat * c;
    d.d_heading = s.yaw_rate;
    return d;
}

namespace detail {

inline VehicleState advance(const VehicleState& s, const StateDerivative& d, double h) {
    VehicleState out = s;
    out.x_pos += h * d.d_x_pos;
    out.y_pos += h * d.d_y_pos;
    out.heading += h * d.d_heading;
    out.v_long += h * d.accel_long;
    out.v_lat += h * d.accel_lat;
    out.yaw_rate += h * d.d_yaw_rate;
    return out;
}

} // namespace detail

class simulation_diverged : public error {
public:
    explicit simulation_diverged(const std::string& what_arg)
        : error("simulation_diverged: " + what_arg) {}
};

inline constexpr double default_dt = 0.01;

/// One classical RK4 step. Throws simulation_diverged on a non-finite result.
inline VehicleState step(const VehicleState& s, const ControlInput& u, const VehicleParams& p,
                         double dt = default_dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw invalid_argument("dt must be > 0");
    const auto k1 = derivatives(s, u, p);
    const auto k2 = derivatives(detail::advance(s, k1, dt / 2), u, p);
    const auto k3 = derivatives(detail::advance(s, k2, dt / 2), u, p);
    const auto k4 = derivatives(detail::advance(s, k3, dt), u, p);

    VehicleState out = s;
    auto combine = [dt](double a, double b, double c, double d) {
        return dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    };
    out.x_pos += combine(k1.d_x_pos, k2.d_x_pos, k3.d_x_pos, k4.d_x_pos);
    out.y_pos += combine(k1.d_y_pos, k2.d_y_pos, k3.d_y_pos, k4.d_y_pos);
    out.heading += combine(k1.d_heading, k2.d_heading, k3.d_heading, k4.d_heading);
    out.v_long += combine(k1.accel_long, k2.accel_long, k3.accel_long, k4.accel_long);
    out.v_lat += combine(k1.accel_lat, k2.accel_lat, k3.accel_lat, k4.accel_lat);
    out.yaw_rate += combine(k1.d_yaw_rate, k2.d_yaw_rate, k3.d_yaw_rate, k4.d_yaw_rate);
    out.time = s.time + dt;
    if (!out.all_finite()) throw simulation_diverged("non-finite state at t=" + std::to_string(out.time));
    return out;
}

} // namespace maneuverforge
