#pragma once

#include <cmath>
#include <cstddef>

#include "dynamics.hpp"
#include "plan.hpp"
#include "world.hpp"

namespace maneuverforge {

/// Raised when integration produces a non-finite state; carries the samples
/// logged up to the fault.
class rollout_diverged : public simulation_diverged {
public:
    rollout_diverged(const std::string& what_arg, Trajectory partial)
        : simulation_diverged(what_arg), partial_(std::move(partial)) {}

    const Trajectory& partial() const { return partial_; }

private:
    Trajectory partial_;
};

/// Executes the schedule step by step, stopping early on impact.
inline Trajectory rollout(const VehicleState& initial, const ControlSchedule& schedule,
                          const VehicleParams& params, double dt, const WorldModel& world) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw invalid_argument("dt must be > 0");

    Trajectory traj;
    const ControlInput idle{};
    const double total = schedule.end_time();
    const auto n_steps = static_cast<std::size_t>(std::llround(total / dt));
    traj.samples.reserve(n_steps + 1);

    auto control_for = [&](std::size_t k) -> ControlInput {
        if (schedule.empty()) return idle;
        return control_at(schedule, std::min(static_cast<double>(k) * dt, total));
    };

    VehicleState state = initial;
    traj.samples.push_back({state.time, state, control_for(0)});
    if (collision_check(state, params, world)) {
        traj.collision = true;
        traj.truncated_at = state.time;
        return traj;
    }

    for (std::size_t k = 0; k < n_steps; ++k) {
        try {
            state = step(state, control_for(k), params, dt);
        } catch (const simulation_diverged& e) {
            throw rollout_diverged(e.what(), std::move(traj));
        }
        traj.samples.push_back({state.time, state, control_for(k + 1)});
        if (collision_check(state, params, world)) {
            traj.collision = true;
            traj.truncated_at = state.time;
            break;
        }
    }
    return traj;
}

} // namespace maneuverforge
