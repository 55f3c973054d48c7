#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "fixture.hpp"
#include "metrics.hpp"
#include "plan.hpp"
#include "schema.hpp"
#include "validator.hpp"
#include "vehicle.hpp"

namespace maneuverforge {

/// A natural-language instruction for iteration k. context["task"] keeps the
/// user's original sentence across feedback rounds.
struct Query {
    std::string text;
    int iteration = 1;
    std::map<std::string, std::string> context;

    std::string task() const {
        auto it = context.find("task");
        return it != context.end() ? it->second : text;
    }
};

struct EnrichedQuery {
    Query original;
    std::string enriched_text;
    std::vector<std::pair<std::string, std::string>> injected_facts;
};

/// One pass of the closed loop.
struct IterationRecord {
    int k = 0;
    Query query;
    std::optional<ManeuverPlan> raw_plan;
    ValidationReport validation;
    std::optional<TrialMetrics> metrics;
    std::optional<double> cost;
    bool implemented = false;
    std::string error;     // backend failure, if any
    double wall_ms = 0.0;  // excluded from deterministic outputs

    /// The plan that was executed; present iff implemented.
    const ManeuverPlan* validated_plan() const {
        return implemented && validation.repaired_plan ? &*validation.repaired_plan : nullptr;
    }
};

/// Text-generation backend: returns a JSON document conforming to the schema or throws.
class AgentBackend {
public:
    virtual ~AgentBackend() = default;
    virtual nlohmann::json generate(const std::vector<ChatMessage>& messages,
                                    const nlohmann::json& output_schema) = 0;
};

inline constexpr const char* context_marker = "Context (JSON): ";

namespace detail {

inline std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

inline const IterationRecord* last_evaluated(const std::vector<IterationRecord>& history) {
    for (auto it = history.rbegin(); it != history.rend(); ++it)
        if (it->implemented && it->metrics) return &*it;
    return nullptr;
}

} // namespace detail

/// Builds the Driver prompt: the original instruction verbatim, then vehicle
/// facts, constraint bounds, the last evaluated metrics, and the required
/// output schema. With a guidance backend, its free-text advice is appended.
inline EnrichedQuery enrich(const Query& q, const ConstraintSet& constraints,
                            const std::vector<IterationRecord>& history, const VehicleParams& vehicle,
                            AgentBackend* guidance = nullptr) {
    if (q.text.empty()) throw invalid_argument("query text must not be empty");

    EnrichedQuery eq;
    eq.original = q;
    auto fact = [&](std::string key, std::string value) {
        eq.injected_facts.emplace_back(std::move(key), std::move(value));
    };

    fact("vehicle", vehicle.name.empty() ? "custom" : vehicle.name);
    fact("mass_kg", detail::fmt("%.0f", vehicle.mass));
    fact("wheelbase_m", detail::fmt("%.2f", vehicle.wheelbase()));
    fact("max_steer_deg", detail::fmt("%.1f", vehicle.max_steer_angle * rad_to_deg));
    fact("power_to_weight_mps2", detail::fmt("%.2f", vehicle.max_drive_force / vehicle.mass));
    fact("constraints", describe(constraints));

    nlohmann::json context = nlohmann::json::object();
    context["iteration"] = q.iteration;
    std::string notes;
    if (const auto* last = detail::last_evaluated(history)) {
        const auto& m = *last->metrics;
        fact("last_iteration", std::to_string(last->k));
        fact("last_signed_heading_error_deg", detail::fmt("%.2f", m.signed_heading_error));
        fact("last_collision", m.collision ? "yes" : "no");
        fact("last_mean_jerk_mps3", detail::fmt("%.3f", m.mean_jerk));
        if (m.collision)
            notes += "Note: the last attempt collided; lower speeds and brake earlier.\n";
        else if (m.signed_heading_error > 0.0)
            notes += "Note: the last attempt overshot 180 deg by " +
                     detail::fmt("%.1f", m.signed_heading_error) +
                     " deg; use gentler steering during phase 2.\n";
        else if (m.signed_heading_error < 0.0)
            notes += "Note: the last attempt undershot 180 deg by " +
                     detail::fmt("%.1f", -m.signed_heading_error) +
                     " deg; steer harder or longer during phase 2.\n";
        context["previous_plan"] = *last->validated_plan();
        context["previous_metrics"] = m;
    }

    std::string text = q.text + "\n\n";
    text += "Facts:\n";
    for (const auto& [k, v] : eq.injected_facts) text += "- " + k + ": " + v + "\n";
    text += notes;

    if (guidance) {
        static const nlohmann::json guidance_schema = {
            {"type", "object"},
            {"additionalProperties", false},
            {"required", {"guidance"}},
            {"properties", {{"guidance", {{"type", "string"}}}}}};
        try {
            auto reply = guidance->generate(
                {{"system", "You are the query enricher for a vehicle stunt-maneuver planner. Add "
                            "concise, concrete guidance for the driver agent."},
                 {"user", text}},
                guidance_schema);
            if (!conforms(reply, guidance_schema)) throw schema_violation(schema_mismatch(reply, guidance_schema));
            const auto g = reply["guidance"].get<std::string>();
            fact("guidance", g);
            text += "Guidance: " + g + "\n";
        } catch (const error& e) {
            throw enrichment_failed(e.what());
        }
    }

    text += "Respond with one JSON object matching this schema: " + plan_schema().dump() + "\n";
    text += context_marker + context.dump();
    eq.enriched_text = std::move(text);
    return eq;
}

inline const char* driver_system_prompt() {
    return "You are the driver agent. Plan the requested stunt maneuver as a short ordered list of "
           "constant-control phases (throttle, steering, brake in normalized units, reverse flag, "
           "duration in seconds). Output only the JSON plan.";
}

/// Asks the backend for a plan and parses it. The result is not validated.
inline ManeuverPlan propose_plan(const EnrichedQuery& eq, AgentBackend& backend) {
    const std::vector<ChatMessage> messages{{"system", driver_system_prompt()},
                                            {"user", eq.enriched_text}};
    auto doc = backend.generate(messages, plan_schema());
    if (auto why = schema_mismatch(doc, plan_schema()); !why.empty()) throw schema_violation(why);
    try {
        return plan_from_json(doc);
    } catch (const malformed_plan& e) {
        throw schema_violation(e.what());
    }
}

// ---- scripted refinement -------------------------------------------------

struct ScriptedGains {
    double gain = 0.5;                // lambda
    double step_cap = 0.2;            // max relative change per step
    double collision_throttle = 0.85; // throttle multiplier after impact
    double collision_brake = 1.10;    // final-brake multiplier after impact
};

/// Deterministic proportional update on the reverse-steering phase (index 1)
/// and the counter-steer phase (index 2). With e the signed heading error,
/// the phase-II duration scales by (1 - gain*e/180) and both steering
/// magnitudes by (1 - gain*sign(e)*min(|e|/180, cap)), each change capped at
/// step_cap. A collision instead cuts every throttle and raises the final brake.
inline ManeuverPlan scripted_refine(const ManeuverPlan& prev, const TrialMetrics& metrics,
                                    const ScriptedGains& gains = {}) {
    ManeuverPlan next = prev;
    if (metrics.collision) {
        for (auto& ph : next.phases) ph.throttle *= gains.collision_throttle;
        if (!next.phases.empty()) {
            auto& last = next.phases.back();
            last.brake = last.brake > 0.0 ? last.brake * gains.collision_brake : 0.1;
        }
    } else if (next.phases.size() >= 2) {
        const double e = metrics.signed_heading_error;
        const double duration_scale =
            std::clamp(1.0 - gains.gain * e / 180.0, 1.0 - gains.step_cap, 1.0 + gains.step_cap);
        const double sign = e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
        const double steer_scale = 1.0 - gains.gain * sign * std::min(std::abs(e) / 180.0, gains.step_cap);
        next.phases[1].duration *= duration_scale;
        for (std::size_t i = 1; i < std::min<std::size_t>(3, next.phases.size()); ++i)
            next.phases[i].steering *= steer_scale;
    }
    for (auto& ph : next.phases) {
        const auto c = clamp_control(ph.control());
        ph.throttle = c.throttle;
        ph.steering = c.steering;
        ph.brake = c.brake;
        ph.duration = std::clamp(ph.duration, 1e-3, max_phase_duration);
    }
    return next;
}

/// Deterministic heuristic backend. It ignores the prose and reads the JSON
/// context block that enrich() appends: with a previous plan and its
/// metrics it applies scripted_refine(), otherwise it emits the J-turn
/// template, optionally jittered by a seeded perturbation.
class ScriptedBackend : public AgentBackend {
public:
    explicit ScriptedBackend(std::uint64_t seed = 0, double perturbation = 0.0, ScriptedGains gains = {})
        : seed_(seed), perturbation_(perturbation), gains_(gains) {}

    nlohmann::json generate(const std::vector<ChatMessage>& messages,
                            const nlohmann::json& output_schema) override {
        if (output_schema != plan_schema())
            throw backend_unavailable("scripted backend only produces maneuver plans");
        const auto context = read_context(messages);
        if (context.contains("previous_plan") && context.contains("previous_metrics")) {
            const auto prev = plan_from_json(context["previous_plan"]);
            const auto metrics = context["previous_metrics"].get<TrialMetrics>();
            return scripted_refine(prev, metrics, gains_);
        }
        return seed_plan();
    }

    ManeuverPlan seed_plan() const {
        auto plan = jturn_template();
        if (perturbation_ <= 0.0) return plan;
        std::mt19937_64 rng(seed_);
        std::uniform_real_distribution<double> jitter(-perturbation_, perturbation_);
        for (std::size_t i = 1; i < std::min<std::size_t>(3, plan.phases.size()); ++i) {
            plan.phases[i].duration *= 1.0 + jitter(rng);
            plan.phases[i].steering = std::clamp(plan.phases[i].steering * (1.0 + jitter(rng)), -1.0, 1.0);
        }
        return plan;
    }

private:
    static nlohmann::json read_context(const std::vector<ChatMessage>& messages) {
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
            const auto pos = it->content.rfind(context_marker);
            if (pos == std::string::npos) continue;
            const auto start = pos + std::char_traits<char>::length(context_marker);
            const auto end = it->content.find('\n', start);
            return nlohmann::json::parse(it->content.substr(start, end - start));
        }
        return nlohmann::json::object();
    }

    std::uint64_t seed_;
    double perturbation_;
    ScriptedGains gains_;
};

/// Serves recorded responses in call order. The cursor is not synchronized:
/// confine one instance to one trial.
class ReplayBackend : public AgentBackend {
public:
    explicit ReplayBackend(std::vector<FixtureRecord> records) : records_(std::move(records)) {}
    explicit ReplayBackend(const std::string& path) : records_(load_fixture(path)) {}

    nlohmann::json generate(const std::vector<ChatMessage>&, const nlohmann::json& output_schema) override {
        if (cursor_ >= records_.size())
            throw fixture_exhausted("fixture has only " + std::to_string(records_.size()) + " record(s)");
        const auto& rec = records_[cursor_];
        const auto hash = schema_hash(output_schema);
        if (rec.output_schema_hash != hash)
            throw fixture_mismatch("record " + std::to_string(cursor_) + " schema hash " +
                                   rec.output_schema_hash + " does not match " + hash);
        ++cursor_;
        return rec.response_json;
    }

    std::size_t consumed() const { return cursor_; }
    std::size_t size() const { return records_.size(); }

private:
    std::vector<FixtureRecord> records_;
    std::size_t cursor_ = 0;
};

// ---- feedback --------------------------------------------------------------

/// Q_{k+1}: the original task plus a feedback paragraph on the last trial.
inline Query compose_feedback(const Query& prev, const TrialMetrics& metrics,
                              const MetricThresholds& thresholds = {}) {
    Query next;
    next.iteration = prev.iteration + 1;
    next.context = prev.context;
    next.context["task"] = prev.task();

    std::string fb = "Feedback on attempt " + std::to_string(prev.iteration) + ": signed heading error " +
                     detail::fmt("%+.1f", metrics.signed_heading_error) + " deg, collision " +
                     (metrics.collision ? "yes" : "no") + ", mean jerk " +
                     detail::fmt("%.2f", metrics.mean_jerk) + " m/s^3. ";
    if (metrics.collision) {
        fb += "WARNING: the vehicle collided and the trial was terminated on impact. Reduce speed and "
              "brake earlier.";
    } else if (metrics.angle_error <= thresholds.optimal_deg) {
        fb += "Success: the turn was within " + detail::fmt("%.1f", metrics.angle_error) +
              " deg of 180 deg. Reproduce the same parameters.";
    } else if (metrics.signed_heading_error > 0.0) {
        fb += "The maneuver is currently overshooting by " + detail::fmt("%.1f", metrics.signed_heading_error) +
              " deg. Reduce steering and shorten phase II.";
    } else {
        fb += "The maneuver is currently undershooting by " +
              detail::fmt("%.1f", -metrics.signed_heading_error) +
              " deg. Increase steering and lengthen phase II.";
    }
    next.text = next.context["task"] + "\n\n" + fb;
    return next;
}

/// Feedback after a rejected plan: lists the violations.
inline Query compose_rejection_feedback(const Query& prev, const ValidationReport& report) {
    Query next;
    next.iteration = prev.iteration + 1;
    next.context = prev.context;
    next.context["task"] = prev.task();
    std::string fb = "Feedback on attempt " + std::to_string(prev.iteration) + ": parameters rejected:";
    for (const auto& v : report.violations) {
        fb += " [" + (v.phase ? "phase " + std::to_string(*v.phase + 1) : std::string("plan")) + " " +
              v.channel + "=" + detail::fmt("%g", v.observed) + ", bound " + detail::fmt("%g", v.bound) + " (" +
              to_string(v.cls) + ")]";
    }
    fb += ". Propose a plan that respects every bound.";
    next.text = next.context["task"] + "\n\n" + fb;
    return next;
}

} // namespace maneuverforge
