#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "vehicle.hpp"

namespace maneuverforge {

struct Obstacle {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
};

struct WorldModel {
    std::string name = "open";
    std::vector<Obstacle> obstacles;
    /// Lateral start position of the vehicle (heading 0, at x = 0).
    double spawn_y = 0.0;
};

inline WorldModel open_world() { return WorldModel{"open", {}, 0.0}; }

/// Two long wall strips parallel to the x axis at +/-half_width. The vehicle
/// starts in the right half of the road, a quarter of the half-width off centre.
inline WorldModel corridor_world(double half_width = 6.0, double wall_thickness = 1.0,
                                 double extent = 500.0) {
    if (!(half_width > 0.0 && wall_thickness > 0.0 && extent > 0.0))
        throw invalid_argument("corridor dimensions must be positive");
    return WorldModel{"corridor",
                      {{-extent, extent, half_width, half_width + wall_thickness},
                       {-extent, extent, -half_width - wall_thickness, -half_width}},
                      -0.25 * half_width};
}

inline WorldModel world_preset(std::string_view name, double corridor_half_width = 6.0) {
    if (name == "open") return open_world();
    if (name == "corridor") return corridor_world(corridor_half_width);
    throw invalid_argument("unknown world preset '" + std::string(name) + "'");
}

inline void check_world(const WorldModel& w) {
    for (const auto& o : w.obstacles)
        if (!(o.x_max > o.x_min && o.y_max > o.y_min))
            throw invalid_argument("degenerate obstacle rectangle");
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Corners of the vehicle footprint (body_length x body_width centred on the pose),
/// counter-clockwise starting at front-left.
inline std::array<Vec2, 4> footprint_corners(const VehicleState& s, const VehicleParams& p) {
    const double c = std::cos(s.heading);
    const double sn = std::sin(s.heading);
    const double hl = p.body_length / 2.0;
    const double hw = p.body_width / 2.0;
    const Vec2 fwd{c * hl, sn * hl};
    const Vec2 left{-sn * hw, c * hw};
    return {Vec2{s.x_pos + fwd.x + left.x, s.y_pos + fwd.y + left.y},
            Vec2{s.x_pos - fwd.x + left.x, s.y_pos - fwd.y + left.y},
            Vec2{s.x_pos - fwd.x - left.x, s.y_pos - fwd.y - left.y},
            Vec2{s.x_pos + fwd.x - left.x, s.y_pos + fwd.y - left.y}};
}

/// Separating-axis test between the oriented footprint and an axis-aligned box.
/// Touching boundaries count as overlap.
inline bool overlaps(const std::array<Vec2, 4>& corners, const Obstacle& box) {
    const std::array<Vec2, 4> box_corners{Vec2{box.x_min, box.y_min}, Vec2{box.x_max, box.y_min},
                                          Vec2{box.x_max, box.y_max}, Vec2{box.x_min, box.y_max}};
    const Vec2 e0{corners[0].x - corners[1].x, corners[0].y - corners[1].y};
    const Vec2 e1{corners[1].x - corners[2].x, corners[1].y - corners[2].y};
    const std::array<Vec2, 4> axes{Vec2{1.0, 0.0}, Vec2{0.0, 1.0}, e0, e1};

    for (const Vec2& axis : axes) {
        double a_min = dot(corners[0], axis), a_max = a_min;
        double b_min = dot(box_corners[0], axis), b_max = b_min;
        for (int i = 1; i < 4; ++i) {
            const double pa = dot(corners[i], axis);
            const double pb = dot(box_corners[i], axis);
            a_min = std::min(a_min, pa);
            a_max = std::max(a_max, pa);
            b_min = std::min(b_min, pb);
            b_max = std::max(b_max, pb);
        }
        if (a_max < b_min || b_max < a_min) return false;
    }
    return true;
}

inline bool collision_check(const VehicleState& s, const VehicleParams& p, const WorldModel& world) {
    if (world.obstacles.empty()) return false;
    const auto corners = footprint_corners(s, p);
    for (const auto& o : world.obstacles)
        if (overlaps(corners, o)) return true;
    return false;
}

struct TrajectorySample {
    double time = 0.0;
    VehicleState state;
    ControlInput control;

    friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    bool collision = false;
    std::optional<double> truncated_at;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

} // namespace maneuverforge
