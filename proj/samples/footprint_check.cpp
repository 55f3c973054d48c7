// Drive straight at a wall and report when the footprint first touches it.
#include <cstdio>

#include <maneuverforge/maneuverforge.hpp>

namespace mf = maneuverforge;

int main() {
    const auto sedan = mf::sedan_preset();
    mf::WorldModel world{"wall", {{10.0, 11.0, -5.0, 5.0}}, 0.0};

    mf::ManeuverPlan plan;
    plan.phases = {{"cruise", 5.0, 0.6, 0.0, 0.0, false}, {"stop", 1.0, 0.0, 0.0, 1.0, false}};
    const auto traj = mf::rollout({}, mf::compile(plan), sedan, mf::default_dt, world);

    if (traj.collision)
        std::printf("contact at t=%.2f s, x=%.2f m\n", *traj.truncated_at, traj.samples.back().state.x_pos);
    else
        std::printf("no contact, stopped at x=%.2f m\n", traj.samples.back().state.x_pos);
}
