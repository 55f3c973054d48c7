#pragma once

// Brute-force references shared by the unit tests and the acceptance binary.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <maneuverforge/maneuverforge.hpp>

namespace oracle {

namespace mf = maneuverforge;

inline mf::VehicleState euler(mf::VehicleState s, const mf::ControlInput& u, const mf::VehicleParams& p, double h,
                              double horizon) {
    const long n = std::lround(horizon / h);
    for (long i = 0; i < n; ++i) s = mf::detail::advance(s, mf::derivatives(s, u, p), h);
    return s;
}

inline mf::VehicleState rk4(mf::VehicleState s, const mf::ControlInput& u, const mf::VehicleParams& p, double dt,
                            double horizon) {
    const long n = std::lround(horizon / dt);
    for (long i = 0; i < n; ++i) s = mf::step(s, u, p, dt);
    return s;
}

inline double max_field_diff(const mf::VehicleState& a, const mf::VehicleState& b) {
    return std::max({std::abs(a.x_pos - b.x_pos), std::abs(a.y_pos - b.y_pos), std::abs(a.heading - b.heading),
                     std::abs(a.v_long - b.v_long), std::abs(a.v_lat - b.v_lat),
                     std::abs(a.yaw_rate - b.yaw_rate)});
}

// ---- collision -------------------------------------------------------------

inline bool in_box(mf::Vec2 p, const mf::Obstacle& b) {
    return p.x >= b.x_min && p.x <= b.x_max && p.y >= b.y_min && p.y <= b.y_max;
}

inline bool in_footprint(mf::Vec2 p, const mf::VehicleState& s, const mf::VehicleParams& v) {
    const double dx = p.x - s.x_pos;
    const double dy = p.y - s.y_pos;
    const double lon = dx * std::cos(s.heading) + dy * std::sin(s.heading);
    const double lat = -dx * std::sin(s.heading) + dy * std::cos(s.heading);
    return std::abs(lon) <= v.body_length / 2 && std::abs(lat) <= v.body_width / 2;
}

template <class Fn>
void walk_polygon(const std::array<mf::Vec2, 4>& poly, int points, Fn&& fn) {
    double perimeter = 0.0;
    for (int i = 0; i < 4; ++i) perimeter += std::hypot(poly[(i + 1) % 4].x - poly[i].x, poly[(i + 1) % 4].y - poly[i].y);
    const double spacing = perimeter / points;
    for (int i = 0; i < 4; ++i) {
        const auto a = poly[i];
        const auto b = poly[(i + 1) % 4];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
        for (int k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) / n;
            fn(mf::Vec2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
        }
    }
}

/// Two convex shapes overlap iff a boundary point of one lies in the other.
inline bool sampled_overlap(const mf::VehicleState& s, const mf::VehicleParams& v, const mf::Obstacle& box,
                            int points = 10000) {
    bool hit = false;
    walk_polygon(mf::footprint_corners(s, v), points, [&](mf::Vec2 p) { hit = hit || in_box(p, box); });
    if (hit) return true;
    const std::array<mf::Vec2, 4> box_poly{mf::Vec2{box.x_min, box.y_min}, mf::Vec2{box.x_max, box.y_min},
                                           mf::Vec2{box.x_max, box.y_max}, mf::Vec2{box.x_min, box.y_max}};
    walk_polygon(box_poly, points, [&](mf::Vec2 p) { hit = hit || in_footprint(p, s, v); });
    return hit;
}

/// True when growing or shrinking the footprint by `band` flips the exact answer.
inline bool near_contact(const mf::VehicleState& s, mf::VehicleParams v, const mf::Obstacle& box, double band) {
    auto grown = v;
    grown.body_length += 2 * band;
    grown.body_width += 2 * band;
    auto shrunk = v;
    shrunk.body_length -= 2 * band;
    shrunk.body_width -= 2 * band;
    return mf::overlaps(mf::footprint_corners(s, grown), box) != mf::overlaps(mf::footprint_corners(s, shrunk), box);
}

struct CollisionCase {
    mf::VehicleState pose;
    mf::VehicleParams vehicle;
    mf::Obstacle box;
};

inline CollisionCase random_collision_case(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CollisionCase c;
    c.vehicle = mf::sedan_preset();
    c.vehicle.body_length = 2.0 + 4.0 * u(rng);
    c.vehicle.body_width = 1.0 + 1.5 * u(rng);
    c.pose.heading = (u(rng) * 2 - 1) * M_PI * 2;
    const double cx = (u(rng) * 2 - 1) * 4;
    const double cy = (u(rng) * 2 - 1) * 4;
    const double w = 0.2 + 3.0 * u(rng);
    const double h = 0.2 + 3.0 * u(rng);
    c.box = {cx - w / 2, cx + w / 2, cy - h / 2, cy + h / 2};
    return c;
}

// ---- angle error -------------------------------------------------------------

struct AngleCase {
    double rotation_deg;
    double signed_deg;
    double absolute_deg;
};

/// theta_e = | |rotation| - 180 |, signed positive on overshoot.
inline const std::vector<AngleCase>& angle_table() {
    static const std::vector<AngleCase> table{
        {180.0, 0.0, 0.0},     {-180.0, 0.0, 0.0},    {170.0, -10.0, 10.0},  {-170.0, -10.0, 10.0},
        {192.0, 12.0, 12.0},   {-192.0, 12.0, 12.0},  {90.0, -90.0, 90.0},   {-90.0, -90.0, 90.0},
        {360.0, 180.0, 180.0}, {0.0, -180.0, 180.0},  {183.0, 3.0, 3.0},     {-177.0, -3.0, 3.0},
    };
    return table;
}

/// Trajectory with a linear heading sweep ending at `rotation_deg`.
inline mf::Trajectory sweep(double rotation_deg, int samples = 101, double dt = 0.01) {
    mf::Trajectory t;
    for (int i = 0; i < samples; ++i) {
        mf::TrajectorySample s;
        s.time = i * dt;
        s.state.time = s.time;
        s.state.heading = rotation_deg / mf::rad_to_deg * i / (samples - 1);
        t.samples.push_back(s);
    }
    return t;
}

} // namespace oracle
