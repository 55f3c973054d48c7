#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>
#include <maneuverforge/maneuverforge.hpp>

#include "oracles.hpp"

using namespace maneuverforge;

namespace {

double ulp(double x) { return std::nextafter(std::abs(x), INFINITY) - std::abs(x); }

Trajectory synthetic(int n, double dt, auto&& fill) {
    Trajectory t;
    for (int i = 0; i < n; ++i) {
        TrajectorySample s;
        s.time = i * dt;
        s.state.time = s.time;
        fill(s.state, s.time);
        t.samples.push_back(s);
    }
    return t;
}

TrialMetrics with(double err, bool collision, double jerk) {
    TrialMetrics m;
    m.angle_error = err;
    m.collision = collision;
    m.mean_jerk = jerk;
    return m;
}

} // namespace

TEST(AngleError, TableMatchesFormula) {
    for (const auto& c : oracle::angle_table()) {
        const auto e = angle_error_from_rotation(c.rotation_deg);
        EXPECT_EQ(e.signed_deg, c.signed_deg) << c.rotation_deg;
        EXPECT_EQ(e.absolute_deg, c.absolute_deg) << c.rotation_deg;
        const auto from_traj = angle_error(oracle::sweep(c.rotation_deg));
        EXPECT_NEAR(from_traj.signed_deg, c.signed_deg, 1e-9);
    }
}

TEST(AngleError, MirroredTrajectoryKeepsError) {
    const auto traj = rollout({}, compile(jturn_template()), sports_coupe_preset(), default_dt, open_world());
    auto mirrored = traj;
    for (auto& s : mirrored.samples) {
        s.state.y_pos = -s.state.y_pos;
        s.state.heading = -s.state.heading;
        s.state.v_lat = -s.state.v_lat;
        s.state.yaw_rate = -s.state.yaw_rate;
    }
    EXPECT_EQ(angle_error(traj).absolute_deg, angle_error(mirrored).absolute_deg);
}

TEST(AngleError, EmptyTrajectoryThrows) { EXPECT_THROW(angle_error(Trajectory{}), empty_trajectory); }

TEST(Jerk, ConstantVelocityIsZero) {
    const auto t = synthetic(200, 0.01, [](VehicleState& s, double) { s.v_long = 7.0; });
    const auto j = jerk_metrics(t);
    EXPECT_EQ(j.mean, 0.0);
    EXPECT_EQ(j.max, 0.0);
}

TEST(Jerk, ConstantAccelerationIsZero) {
    const auto t = synthetic(300, 0.01, [](VehicleState& s, double time) {
        s.v_long = 1.0 + 2.0 * time;
        s.v_lat = -0.5 * time;
    });
    const auto j = jerk_metrics(t);
    EXPECT_LT(j.mean, 1e-9);
    EXPECT_LT(j.max, 1e-9);
}

TEST(Jerk, TooShortThrows) {
    const auto t = synthetic(2, 0.01, [](VehicleState&, double) {});
    EXPECT_THROW(jerk_metrics(t), too_short);
}

// Goldens from an independent numpy finite-difference pass over the same rollout.
TEST(Jerk, SedanTemplateGolden) {
    const auto t = rollout({}, compile(jturn_template()), sedan_preset(), default_dt, open_world());
    const auto j = jerk_metrics(t);
    EXPECT_NEAR(j.mean, 4.546152184745698, 1e-9);
    EXPECT_NEAR(j.max, 389.89392986543993, 1e-7);
}

TEST(Smoothness, StraightLineHitsEpsilonGuard) {
    const auto t = synthetic(50, 0.01, [](VehicleState& s, double) { s.v_long = 3.0; });
    const auto r = smoothness_and_yaw(t);
    EXPECT_DOUBLE_EQ(r.steering_smoothness, 1.0 / smoothness_epsilon_deg);
    EXPECT_EQ(r.mean_yaw_rate, 0.0);
}

TEST(Smoothness, ConstantYawRate) {
    const auto t = synthetic(101, 0.01, [](VehicleState& s, double time) {
        s.yaw_rate = 0.1;
        s.heading = 0.1 * time;
    });
    const auto r = smoothness_and_yaw(t);
    EXPECT_NEAR(r.steering_smoothness, 1.0 / (0.001 * rad_to_deg + 1e-6), 1e-6);
    EXPECT_NEAR(r.steering_smoothness, 17.45, 0.01);
    EXPECT_NEAR(r.mean_yaw_rate, 0.1 * rad_to_deg, 1e-12);
}

TEST(Smoothness, SedanTemplateGolden) {
    const auto t = rollout({}, compile(jturn_template()), sedan_preset(), default_dt, open_world());
    const auto r = smoothness_and_yaw(t);
    EXPECT_NEAR(r.steering_smoothness, 5.0562181665712975, 1e-9);
    EXPECT_NEAR(r.mean_yaw_rate, 19.75714590210753, 1e-9);
}

TEST(ComputeMetrics, SuccessFlagFollowsThreshold) {
    for (const auto& c : oracle::angle_table()) {
        const auto m = compute_metrics(oracle::sweep(c.rotation_deg));
        EXPECT_EQ(m.success, m.angle_error <= 10.0 && !m.collision);
    }
    auto t = oracle::sweep(180.0);
    t.collision = true;
    EXPECT_FALSE(compute_metrics(t).success);
    MetricThresholds strict{3.0, 2.0};
    EXPECT_FALSE(compute_metrics(oracle::sweep(183.0), strict).success);
}

TEST(ComputeMetrics, ExecutionTimeIsSimulatedSpan) {
    const auto m = compute_metrics(oracle::sweep(90.0, 251));
    EXPECT_NEAR(m.execution_time, 2.5, 1e-12);
}

TEST(Cost, Examples) {
    EXPECT_EQ(cost(with(0, false, 0)), 0.0);
    EXPECT_NEAR(cost(with(10, false, 0.5)), 10.05, 1e-12);
    EXPECT_EQ(cost(with(0, true, 0)), 100.0);
}

TEST(Reward, Examples) {
    EXPECT_EQ(reward(with(0, false, 0)), 280.0);
    EXPECT_EQ(reward(with(180, true, 0)), 0.0);
}

TEST(Reward, CostPlusRewardIsConstant) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> err(0, 180), jerk(0, 1000);
    for (int i = 0; i < 20000; ++i) {
        const auto m = with(err(rng), i % 3 == 0, jerk(rng));
        ASSERT_EQ(cost(m) + reward(m), 280.0) << i;
    }
}

TEST(Reward, CostPlusRewardWithinAnUlpForAnyWeights) {
    // Exactness needs the default weights: with an odd last mantissa bit in
    // 180*a1 + a2 the sum can land on a rounding tie that goes the other way.
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> err(0, 180), jerk(0, 500), w(0, 10);
    for (int i = 0; i < 2000; ++i) {
        CostWeights cw{w(rng), 10 * w(rng), w(rng) / 10};
        const auto m = with(err(rng), i % 3 == 0, jerk(rng));
        const double k = 180 * cw.alpha1 + cw.alpha2;
        const double l = cost(m, cw);
        EXPECT_LE(std::abs(l + reward(m, cw) - k), std::max(ulp(k), ulp(l))) << i;
    }
}

TEST(Weights, NegativeRejected) {
    EXPECT_THROW(check_weights({-1, 100, 0.1}), invalid_argument);
    EXPECT_NO_THROW(check_weights({0, 0, 0}));
}

TEST(ConfidenceInterval, Examples) {
    const std::vector<double> flat{1, 1, 1, 1};
    EXPECT_EQ(confidence_interval(flat), 0.0);
    const std::vector<double> sigma2{-1, -1, 3, 3};  // mean 1, population sigma 2
    EXPECT_EQ(confidence_interval(sigma2), 1.96);
    const std::vector<double> pair{0, 2};
    EXPECT_NEAR(confidence_interval(pair), 1.96 / std::sqrt(2.0), 1e-15);
    const std::vector<double> one{5};
    EXPECT_THROW(confidence_interval(one), too_few_samples);
}

TEST(Collision, OpenWorldNeverCollides) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int i = 0; i < 100; ++i) {
        VehicleState s;
        s.x_pos = u(rng);
        s.y_pos = u(rng);
        s.heading = u(rng);
        EXPECT_FALSE(collision_check(s, sedan_preset(), open_world()));
    }
}

TEST(Collision, RotatedCornerOneCentimetreInside) {
    const auto p = sedan_preset();
    VehicleState s;
    s.heading = M_PI / 4;
    // Rightmost corner of the rotated footprint.
    double right = -1e9;
    for (const auto& c : footprint_corners(s, p)) right = std::max(right, c.x);
    const Obstacle wall{right - 0.01, right + 1.0, -10.0, 10.0};
    EXPECT_TRUE(collision_check(s, p, WorldModel{"w", {wall}, 0.0}));
    EXPECT_TRUE(oracle::sampled_overlap(s, p, wall));
    const Obstacle clear{right + 0.01, right + 1.0, -10.0, 10.0};
    EXPECT_FALSE(collision_check(s, p, WorldModel{"w", {clear}, 0.0}));
    EXPECT_FALSE(oracle::sampled_overlap(s, p, clear));
}

TEST(Collision, AgreesWithSamplingOracle) {
    std::mt19937_64 rng(99);
    int disagreements = 0;
    for (int i = 0; i < 200; ++i) {
        const auto c = oracle::random_collision_case(rng);
        const bool sat = overlaps(footprint_corners(c.pose, c.vehicle), c.box);
        if (sat != oracle::sampled_overlap(c.pose, c.vehicle, c.box, 2000) &&
            !oracle::near_contact(c.pose, c.vehicle, c.box, 0.02))
            ++disagreements;
    }
    EXPECT_EQ(disagreements, 0);
}

TEST(MetricsJson, RoundTrip) {
    const auto m = compute_metrics(rollout({}, compile(jturn_template()), sedan_preset(), default_dt, open_world()));
    const nlohmann::json j = m;
    EXPECT_EQ(j.get<TrialMetrics>(), m);
}
