#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <maneuverforge/maneuverforge.hpp>

using namespace maneuverforge;
namespace fs = std::filesystem;

namespace {

Query task(const std::string& text = "Execute a J-turn maneuver.") {
    Query q;
    q.text = text;
    q.context["task"] = text;
    return q;
}

TrialMetrics err_metrics(double signed_err, bool collision = false, double jerk = 0.5) {
    TrialMetrics m;
    m.signed_heading_error = signed_err;
    m.angle_error = std::abs(signed_err);
    m.collision = collision;
    m.mean_jerk = jerk;
    return m;
}

IterationRecord evaluated(int k, const ManeuverPlan& plan, const TrialMetrics& m) {
    IterationRecord r;
    r.k = k;
    r.raw_plan = plan;
    r.validation = validate(plan);
    r.implemented = true;
    r.metrics = m;
    r.cost = cost(m);
    return r;
}

fs::path temp_file(const std::string& name) {
    auto p = fs::temp_directory_path() / ("mf_agents_" + name);
    fs::remove(p);
    return p;
}

// Records every call and answers with a fixed document.
class Canned : public AgentBackend {
public:
    explicit Canned(nlohmann::json reply) : reply_(std::move(reply)) {}
    nlohmann::json generate(const std::vector<ChatMessage>& m, const nlohmann::json&) override {
        seen.push_back(m);
        return reply_;
    }
    std::vector<std::vector<ChatMessage>> seen;

private:
    nlohmann::json reply_;
};

} // namespace

TEST(Enrich, KeepsOriginalAndAddsVehicleFacts) {
    const auto eq = enrich(task(), {}, {}, sedan_preset());
    EXPECT_NE(eq.enriched_text.find("Execute a J-turn maneuver."), std::string::npos);
    EXPECT_NE(eq.enriched_text.find("sedan"), std::string::npos);
    EXPECT_NE(eq.enriched_text.find("wheelbase_m: 2.80"), std::string::npos);
    EXPECT_NE(eq.enriched_text.find("steering in [-1,1]"), std::string::npos);
    EXPECT_EQ(eq.enriched_text.find("previous_plan"), std::string::npos);
}

TEST(Enrich, OvershootHistoryAddsNote) {
    std::vector<IterationRecord> history{evaluated(1, jturn_template(), err_metrics(12.0))};
    const auto eq = enrich(task(), {}, history, sedan_preset());
    EXPECT_NE(eq.enriched_text.find("overshot 180 deg by 12.0 deg"), std::string::npos);
    EXPECT_NE(eq.enriched_text.find("gentler steering during phase 2"), std::string::npos);
    EXPECT_NE(eq.enriched_text.find("previous_metrics"), std::string::npos);
}

TEST(Enrich, EmptyTextRejected) { EXPECT_THROW(enrich(Query{}, {}, {}, sedan_preset()), invalid_argument); }

TEST(Enrich, GuidanceBackendFailureBecomesEnrichmentFailed) {
    ScriptedBackend scripted;  // only speaks the plan schema
    EXPECT_THROW(enrich(task(), {}, {}, sedan_preset(), &scripted), enrichment_failed);
    Canned ok(nlohmann::json{{"guidance", "keep phase 2 short"}});
    const auto eq = enrich(task(), {}, {}, sedan_preset(), &ok);
    EXPECT_NE(eq.enriched_text.find("keep phase 2 short"), std::string::npos);
    Canned bad(nlohmann::json{{"advice", 1}});
    EXPECT_THROW(enrich(task(), {}, {}, sedan_preset(), &bad), enrichment_failed);
}

TEST(ProposePlan, ScriptedFirstIterationIsTemplate) {
    ScriptedBackend backend;
    EXPECT_EQ(propose_plan(enrich(task(), {}, {}, sedan_preset()), backend), jturn_template());
}

TEST(ProposePlan, ScriptedRefinesFromContext) {
    ScriptedBackend backend;
    const auto m = err_metrics(-20.0);
    std::vector<IterationRecord> history{evaluated(1, jturn_template(), m)};
    const auto plan = propose_plan(enrich(task(), {}, history, sedan_preset()), backend);
    EXPECT_EQ(plan, scripted_refine(jturn_template(), m));
}

TEST(ProposePlan, NonConformingReplyIsSchemaViolation) {
    Canned backend(nlohmann::json{{"maneuver_type", "j_turn"}, {"phases", 3}, {"metadata", ""}});
    EXPECT_THROW(propose_plan(enrich(task(), {}, {}, sedan_preset()), backend), schema_violation);
    nlohmann::json wrong_type = jturn_template();
    wrong_type["maneuver_type"] = "k_turn";
    Canned backend2(wrong_type);
    EXPECT_THROW(propose_plan(enrich(task(), {}, {}, sedan_preset()), backend2), schema_violation);
}

TEST(ProposePlan, ReplayReturnsRecordedPlan) {
    auto plan = jturn_template();
    plan.phases[1].steering = 1.5;
    ReplayBackend backend({FixtureRecord{{}, schema_hash(plan_schema()), plan}});
    const auto got = propose_plan(enrich(task(), {}, {}, sedan_preset()), backend);
    EXPECT_EQ(nlohmann::json(got).dump(), nlohmann::json(plan).dump());
    EXPECT_EQ(backend.consumed(), 1u);
    EXPECT_THROW(backend.generate({}, plan_schema()), fixture_exhausted);
}

TEST(Replay, SchemaHashMismatch) {
    ReplayBackend backend({FixtureRecord{{}, "deadbeef", jturn_template()}});
    EXPECT_THROW(backend.generate({}, plan_schema()), fixture_mismatch);
}

TEST(Fixture, WriterAndLoaderRoundTrip) {
    const auto path = temp_file("roundtrip.jsonl");
    FixtureWriter w(path.string());
    const FixtureRecord a{{{"system", "s"}, {"user", "u"}}, schema_hash(plan_schema()), jturn_template()};
    w.append(a);
    w.append(a);
    const auto loaded = load_fixture(path.string());
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[1].request_messages, a.request_messages);
    EXPECT_EQ(loaded[1].response_json, a.response_json);
}

TEST(Fixture, MalformedLineIsSchemaViolation) {
    const auto path = temp_file("broken.jsonl");
    std::ofstream(path) << "{\"request_messages\": [], \"output_schema_hash\": \"x\", \"response_json\": {}}\n"
                        << "{not json\n";
    EXPECT_THROW(load_fixture(path.string()), schema_violation);
}

TEST(Fixture, SchemaHashIsSha256OfCompactDump) {
    EXPECT_EQ(schema_hash(nlohmann::json::object()),
              "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a");  // sha256("{}")
    EXPECT_EQ(schema_hash(plan_schema()).size(), 64u);
}

TEST(ScriptedRefine, ZeroErrorIsFixedPoint) {
    EXPECT_EQ(scripted_refine(jturn_template(), err_metrics(0.0)), jturn_template());
}

TEST(ScriptedRefine, OvershootReducesPhaseTwoSteering) {
    const auto next = scripted_refine(jturn_template(), err_metrics(12.0));
    EXPECT_LT(std::abs(next.phases[1].steering), std::abs(jturn_template().phases[1].steering));
    EXPECT_LT(next.phases[1].duration, jturn_template().phases[1].duration);
    // 1 - 0.5*12/180
    EXPECT_NEAR(next.phases[1].duration, 3.2 * (1 - 0.5 * 12 / 180), 1e-12);
}

TEST(ScriptedRefine, UndershootIsCappedAtTwentyPercent) {
    const auto next = scripted_refine(jturn_template(), err_metrics(-170.0));
    EXPECT_NEAR(next.phases[1].duration, 3.2 * 1.2, 1e-12);
    EXPECT_NEAR(next.phases[1].steering, std::min(1.0, 0.9 * 1.1), 1e-12);
}

TEST(ScriptedRefine, CollisionGolden) {
    const auto base = jturn_template();
    const auto next = scripted_refine(base, err_metrics(40.0, true));
    for (std::size_t i = 0; i < base.phases.size(); ++i) {
        EXPECT_DOUBLE_EQ(next.phases[i].throttle, base.phases[i].throttle * 0.85);
        if (base.phases[i].throttle > 0.0) {
            EXPECT_LT(next.phases[i].throttle, base.phases[i].throttle);
        }
        EXPECT_EQ(next.phases[i].steering, base.phases[i].steering);
        EXPECT_EQ(next.phases[i].duration, base.phases[i].duration);
    }
    EXPECT_DOUBLE_EQ(next.phases.back().brake, 0.88);
}

TEST(ScriptedRefine, MonotoneConvergenceOnBothPresets) {
    for (const auto& p : {sedan_preset(), sports_coupe_preset()}) {
        auto plan = jturn_template();
        double prev = 1e9;
        bool done = false;
        for (int k = 0; k < 30 && !done; ++k) {
            const auto m = compute_metrics(rollout({}, compile(plan), p, default_dt, open_world()));
            ASSERT_FALSE(m.collision);
            ASSERT_LT(m.angle_error, prev) << p.name << " k=" << k;
            prev = m.angle_error;
            done = m.angle_error <= 3.0;
            plan = scripted_refine(plan, m);
        }
        EXPECT_TRUE(done) << p.name;
    }
}

TEST(ScriptedBackend, PerturbationIsSeeded) {
    ScriptedBackend a(42, 0.1), b(42, 0.1), c(43, 0.1);
    EXPECT_EQ(a.seed_plan(), b.seed_plan());
    EXPECT_NE(a.seed_plan(), c.seed_plan());
    EXPECT_EQ(validate(a.seed_plan()).verdict, Verdict::accepted);
}

TEST(Feedback, OvershootMentionsValue) {
    const auto q = compose_feedback(task(), err_metrics(12.0));
    EXPECT_EQ(q.iteration, 2);
    EXPECT_NE(q.text.find("overshooting"), std::string::npos);
    EXPECT_NE(q.text.find("12"), std::string::npos);
    EXPECT_EQ(q.text.rfind("Execute a J-turn maneuver.", 0), 0u);
}

TEST(Feedback, SuccessAsksForReproduction) {
    const auto q = compose_feedback(task(), err_metrics(0.0, false, 0.01));
    EXPECT_NE(q.text.find("Success"), std::string::npos);
    EXPECT_NE(q.text.find("Reproduce"), std::string::npos);
}

TEST(Feedback, CollisionWarns) {
    const auto q = compose_feedback(task(), err_metrics(-50.0, true));
    EXPECT_NE(q.text.find("WARNING"), std::string::npos);
    EXPECT_NE(q.text.find("Reduce speed"), std::string::npos);
}

TEST(Feedback, IterationAlwaysAdvancesAndTaskIsKept) {
    auto q = task();
    for (int i = 0; i < 5; ++i) {
        const auto next = compose_feedback(q, err_metrics(-10.0 + i));
        EXPECT_EQ(next.iteration, q.iteration + 1);
        EXPECT_EQ(next.task(), "Execute a J-turn maneuver.");
        EXPECT_NE(next.text.find("Feedback on attempt " + std::to_string(q.iteration)), std::string::npos);
        q = next;
    }
}

TEST(Feedback, RejectionListsViolations) {
    ManeuverPlan plan;
    const auto q = compose_rejection_feedback(task(), validate(plan));
    EXPECT_NE(q.text.find("parameters rejected"), std::string::npos);
    EXPECT_NE(q.text.find("phase_count"), std::string::npos);
}
