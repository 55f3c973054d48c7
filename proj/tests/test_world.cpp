#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <maneuverforge/maneuverforge.hpp>

using namespace maneuverforge;

namespace {

VehicleState pose(double x, double y, double heading) {
    VehicleState s;
    s.x_pos = x;
    s.y_pos = y;
    s.heading = heading;
    return s;
}

ManeuverPlan coast(double seconds) {
    ManeuverPlan plan;
    plan.phases = {{"coast", seconds, 0.0, 0.0, 0.0, false}};
    return plan;
}

} // namespace

TEST(Footprint, AxisAlignedCorners) {
    const auto p = sedan_preset();  // 4.8 x 1.85
    const auto c = footprint_corners(pose(1.0, 2.0, 0.0), p);
    EXPECT_DOUBLE_EQ(c[0].x, 3.4);
    EXPECT_DOUBLE_EQ(c[0].y, 2.925);
    EXPECT_DOUBLE_EQ(c[2].x, -1.4);
    EXPECT_DOUBLE_EQ(c[2].y, 1.075);
}

TEST(Footprint, RotatedQuarterTurn) {
    const auto c = footprint_corners(pose(0.0, 0.0, M_PI / 2), sedan_preset());
    EXPECT_NEAR(c[0].x, -0.925, 1e-12);
    EXPECT_NEAR(c[0].y, 2.4, 1e-12);
}

TEST(Overlap, SeparatedTouchingAndOverlapping) {
    const auto c = footprint_corners(pose(0.0, 0.0, 0.0), sedan_preset());
    EXPECT_FALSE(overlaps(c, {2.5, 3.0, -1.0, 1.0}));
    EXPECT_TRUE(overlaps(c, {2.4, 3.0, -1.0, 1.0}));  // touching counts
    EXPECT_TRUE(overlaps(c, {2.0, 3.0, -1.0, 1.0}));
    EXPECT_TRUE(overlaps(c, {-0.1, 0.1, -0.1, 0.1}));  // box inside footprint
    EXPECT_TRUE(overlaps(c, {-10.0, 10.0, -10.0, 10.0}));  // footprint inside box
}

TEST(Overlap, RotatedFootprintNeedsOwnAxes) {
    // The axis-aligned bounding boxes overlap but the rotated rectangle does not
    // reach the corner box.
    const auto c = footprint_corners(pose(0.0, 0.0, M_PI / 4), sedan_preset());
    EXPECT_FALSE(overlaps(c, {1.6, 2.0, -2.0, -1.6}));
}

TEST(Corridor, WallsAndSpawn) {
    const auto w = corridor_world(6.0);
    ASSERT_EQ(w.obstacles.size(), 2u);
    EXPECT_EQ(w.obstacles[0].y_min, 6.0);
    EXPECT_EQ(w.obstacles[1].y_max, -6.0);
    EXPECT_FALSE(collision_check(pose(0.0, w.spawn_y, 0.0), sedan_preset(), w));
    EXPECT_TRUE(collision_check(pose(0.0, 5.5, 0.0), sedan_preset(), w));
    EXPECT_THROW(world_preset("maze"), invalid_argument);
    EXPECT_THROW(corridor_world(-1.0), invalid_argument);
}

TEST(Rollout, ZeroDurationScheduleGivesSingleSample) {
    const auto t = rollout({}, ControlSchedule{}, sedan_preset(), default_dt, open_world());
    ASSERT_EQ(t.samples.size(), 1u);
    EXPECT_FALSE(t.collision);
}

TEST(Rollout, SampleCountAndControlLog) {
    const auto t = rollout({}, compile(jturn_template()), sedan_preset(), default_dt, open_world());
    EXPECT_EQ(t.samples.size(), static_cast<std::size_t>(std::llround(jturn_template().total_duration() / 0.01)) + 1);
    EXPECT_TRUE(t.samples.front().control.reverse);
    EXPECT_GT(t.samples.back().control.brake, 0.0);
}

// Front bumper starts 5 m from the wall face at 10 m/s.
TEST(Rollout, WallImpactAfterHalfSecond) {
    const auto p = sedan_preset();
    WorldModel wall{"wall", {{5.0 + p.body_length / 2, 6.0 + p.body_length / 2, -10.0, 10.0}}, 0.0};
    VehicleState s;
    s.v_long = 10.0;
    const auto t = rollout(s, compile(coast(3.0)), p, default_dt, wall);
    EXPECT_TRUE(t.collision);
    ASSERT_TRUE(t.truncated_at);
    EXPECT_NEAR(*t.truncated_at, 0.5, 0.02);
    EXPECT_EQ(t.samples.back().time, *t.truncated_at);
}

TEST(Rollout, StartingInsideObstacleCollidesImmediately) {
    WorldModel w{"box", {{-1.0, 1.0, -1.0, 1.0}}, 0.0};
    const auto t = rollout({}, compile(coast(1.0)), sedan_preset(), default_dt, w);
    EXPECT_TRUE(t.collision);
    EXPECT_EQ(t.samples.size(), 1u);
}

// Pinned from the scripted convergence run: the untouched template already
// lands within 10 degrees of a half turn on the sedan.
TEST(Rollout, TemplateOnSedanIsCloseToHalfTurn) {
    const auto t = rollout({}, compile(jturn_template()), sedan_preset(), default_dt, open_world());
    EXPECT_FALSE(t.collision);
    const double rot = std::abs(t.samples.back().state.heading - t.samples.front().state.heading) * rad_to_deg;
    EXPECT_NEAR(rot, 180.0, 10.0);
    EXPECT_NEAR(angle_error(t).signed_deg, -5.98, 0.01);
}

TEST(Rollout, Deterministic) {
    const auto sched = compile(jturn_template());
    const auto w = corridor_world();
    VehicleState s;
    s.y_pos = w.spawn_y;
    EXPECT_EQ(rollout(s, sched, sports_coupe_preset(), default_dt, w),
              rollout(s, sched, sports_coupe_preset(), default_dt, w));
}

TEST(Rollout, DivergenceCarriesPartialLog) {
    auto p = sedan_preset();
    p.max_drive_force = 1e308;
    try {
        rollout({}, compile(coast(1.0)), p, default_dt, open_world());
        ManeuverPlan plan;
        plan.phases = {{"boom", 1.0, 1.0, 0.0, 0.0, false}};
        rollout({}, compile(plan), p, default_dt, open_world());
        FAIL() << "expected divergence";
    } catch (const rollout_diverged& e) {
        EXPECT_GE(e.partial().samples.size(), 1u);
    }
}

TEST(Rollout, RejectsBadDt) {
    EXPECT_THROW(rollout({}, compile(coast(1.0)), sedan_preset(), 0.0, open_world()), invalid_argument);
}
