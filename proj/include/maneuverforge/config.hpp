#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "llm_client.hpp"
#include "orchestrator.hpp"
#include "vehicle.hpp"

namespace maneuverforge {

struct ExportToggles {
    bool trajectory_csv = true;
    bool velocity_ci_csv = true;
    bool iteration_log = true;
};

/// On-disk run configuration. Parsing is strict: unknown keys are errors.
/// Relative paths inside the file resolve against the file's directory.
struct RunConfigFile {
    LoopConfig loop;
    LlmConfig llm;
    ExportToggles exports;
    std::string output_dir = "out";
    std::string task = "Perform a J-turn: start in reverse and finish facing the opposite direction.";
    std::optional<std::string> fixture;
    int trials = 100;
    int batch_size = 20;
};

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Line of the first occurrence of `"key"` used as an object key.
inline int line_of_key(const std::string& text, const std::string& key) {
    const std::string quoted = "\"" + key + "\"";
    for (auto pos = text.find(quoted); pos != std::string::npos; pos = text.find(quoted, pos + 1)) {
        auto after = text.find_first_not_of(" \t\r\n", pos + quoted.size());
        if (after != std::string::npos && text[after] == ':') return line_of_offset(text, pos);
    }
    return 0;
}

class ConfigReader {
public:
    ConfigReader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const int line = line_of_key(text_, key);
        throw config_error(source_ + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what);
    }

    void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) const {
        if (!obj.is_object()) fail(where, "'" + where + "' must be an object");
        for (const auto& [k, _] : obj.items()) {
            if (k == "api_key") fail(k, "api keys are read from the environment only; remove '" + k + "'");
            if (!allowed.count(k)) fail(k, "unknown key '" + k + "'" + (where.empty() ? "" : " in '" + where + "'"));
        }
    }

    template <class T>
    void get(const nlohmann::json& obj, const std::string& key, T& out) const {
        auto it = obj.find(key);
        if (it == obj.end()) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw std::invalid_argument("expected a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
                if constexpr (std::is_unsigned_v<T>)
                    if (it->template get<long long>() < 0) throw std::invalid_argument("expected a non-negative integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw std::invalid_argument("expected a number");
            } else {
                if (!it->is_string()) throw std::invalid_argument("expected a string");
            }
            out = it->template get<T>();
        } catch (const std::exception& e) {
            fail(key, "'" + key + "': " + e.what());
        }
    }

private:
    const std::string& text_;
    std::string source_;
};

} // namespace detail

inline RunConfigFile parse_run_config(const std::string& text, const std::string& source = "<config>",
                                      const std::filesystem::path& base_dir = {}) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(source + ":" + std::to_string(detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                           ": invalid JSON (" + e.what() + ")");
    }
    detail::ConfigReader r(text, source);
    if (!doc.is_object()) throw config_error(source + ":1: top level must be an object");
    r.reject_unknown(doc,
                     {"k_max", "epsilon", "weights", "constraints", "vehicle", "vehicle_file", "world",
                      "corridor_half_width", "backend", "seed", "initial_speed", "dt", "seed_perturbation",
                      "thresholds", "llm_enrichment", "task", "output_dir", "exports", "llm", "fixture", "trials",
                      "batch_size"},
                     "");

    RunConfigFile cfg;
    auto& loop = cfg.loop;
    r.get(doc, "k_max", loop.k_max);
    r.get(doc, "epsilon", loop.epsilon);
    r.get(doc, "vehicle", loop.vehicle);
    r.get(doc, "world", loop.world);
    r.get(doc, "corridor_half_width", loop.corridor_half_width);
    r.get(doc, "seed", loop.seed);
    r.get(doc, "initial_speed", loop.initial_speed);
    r.get(doc, "dt", loop.dt);
    r.get(doc, "seed_perturbation", loop.seed_perturbation);
    r.get(doc, "llm_enrichment", loop.llm_enrichment);
    r.get(doc, "task", cfg.task);
    if (doc.contains("output_dir")) {
        r.get(doc, "output_dir", cfg.output_dir);
        cfg.output_dir = (base_dir / cfg.output_dir).lexically_normal().string();
    }
    r.get(doc, "trials", cfg.trials);
    r.get(doc, "batch_size", cfg.batch_size);

    std::string backend = to_string(loop.backend);
    r.get(doc, "backend", backend);
    try {
        loop.backend = backend_from_string(backend);
    } catch (const error& e) {
        r.fail("backend", e.what());
    }

    if (doc.contains("fixture")) {
        std::string f;
        r.get(doc, "fixture", f);
        cfg.fixture = (base_dir / f).lexically_normal().string();
    }

    if (doc.contains("vehicle_file")) {
        std::string f;
        r.get(doc, "vehicle_file", f);
        try {
            loop.vehicle_params = load_vehicle((base_dir / f).string());
        } catch (const std::exception& e) {
            r.fail("vehicle_file", e.what());
        }
    } else {
        try {
            (void)vehicle_preset(loop.vehicle);
        } catch (const error& e) {
            r.fail("vehicle", e.what());
        }
    }
    if (loop.world != "open" && loop.world != "corridor") r.fail("world", "unknown world '" + loop.world + "'");

    if (auto it = doc.find("weights"); it != doc.end()) {
        r.reject_unknown(*it, {"alpha1", "alpha2", "alpha3"}, "weights");
        r.get(*it, "alpha1", loop.weights.alpha1);
        r.get(*it, "alpha2", loop.weights.alpha2);
        r.get(*it, "alpha3", loop.weights.alpha3);
    }
    if (auto it = doc.find("thresholds"); it != doc.end()) {
        r.reject_unknown(*it, {"optimal_deg", "acceptable_deg"}, "thresholds");
        r.get(*it, "optimal_deg", loop.thresholds.optimal_deg);
        r.get(*it, "acceptable_deg", loop.thresholds.acceptable_deg);
    }
    if (auto it = doc.find("constraints"); it != doc.end()) {
        r.reject_unknown(*it,
                         {"duration_max", "min_phases", "max_phases", "high_speed_steer_cap", "high_speed_threshold",
                          "max_total_duration", "require_final_brake"},
                         "constraints");
        auto& c = loop.constraints;
        r.get(*it, "duration_max", c.operational.duration_max);
        r.get(*it, "min_phases", c.operational.min_phases);
        r.get(*it, "max_phases", c.operational.max_phases);
        r.get(*it, "high_speed_steer_cap", c.safety.high_speed_steer_cap);
        r.get(*it, "high_speed_threshold", c.safety.high_speed_threshold);
        r.get(*it, "max_total_duration", c.safety.max_total_duration);
        r.get(*it, "require_final_brake", c.safety.require_final_brake);
    }
    if (auto it = doc.find("exports"); it != doc.end()) {
        r.reject_unknown(*it, {"trajectory_csv", "velocity_ci_csv", "iteration_log"}, "exports");
        r.get(*it, "trajectory_csv", cfg.exports.trajectory_csv);
        r.get(*it, "velocity_ci_csv", cfg.exports.velocity_ci_csv);
        r.get(*it, "iteration_log", cfg.exports.iteration_log);
    }
    if (auto it = doc.find("llm"); it != doc.end()) {
        r.reject_unknown(*it,
                         {"endpoint_url", "model_name", "api_key_env_var", "timeout", "max_retries", "temperature",
                          "backoff_base", "backoff_factor", "require_auth", "record_path"},
                         "llm");
        auto& l = cfg.llm;
        r.get(*it, "endpoint_url", l.endpoint_url);
        r.get(*it, "model_name", l.model_name);
        r.get(*it, "api_key_env_var", l.api_key_env_var);
        r.get(*it, "timeout", l.timeout);
        r.get(*it, "max_retries", l.max_retries);
        r.get(*it, "temperature", l.temperature);
        r.get(*it, "backoff_base", l.backoff_base);
        r.get(*it, "backoff_factor", l.backoff_factor);
        r.get(*it, "require_auth", l.require_auth);
        if (it->contains("record_path")) {
            std::string p;
            r.get(*it, "record_path", p);
            l.record_path = (base_dir / p).lexically_normal().string();
        }
    }

    try {
        check_loop_config(loop);
        check_llm_config(cfg.llm);
    } catch (const error& e) {
        throw config_error(source + ": " + e.what());
    }
    if (cfg.trials < 1) r.fail("trials", "trials must be >= 1");
    if (cfg.batch_size < 1) r.fail("batch_size", "batch_size must be >= 1");
    return cfg;
}

inline RunConfigFile load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.string(), path.parent_path());
}

} // namespace maneuverforge
