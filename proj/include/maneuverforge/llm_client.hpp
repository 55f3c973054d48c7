#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "agents.hpp"
#include "errors.hpp"
#include "fixture.hpp"
#include "schema.hpp"

namespace maneuverforge {

struct LlmConfig {
    /// Full URL of an OpenAI-compatible chat-completions endpoint.
    std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
    std::string model_name = "gpt-4o";
    std::string api_key_env_var = "MANEUVERGPT_API_KEY";
    double timeout = 30.0;  // s, per attempt
    int max_retries = 2;
    double temperature = 0.2;
    double backoff_base = 1.0;  // s
    double backoff_factor = 2.0;
    bool require_auth = true;
    /// When set, every successful call is appended to this JSONL fixture.
    std::optional<std::string> record_path;
};

inline void check_llm_config(const LlmConfig& c) {
    if (!(c.timeout > 0.0)) throw invalid_argument("llm timeout must be > 0");
    if (c.max_retries < 0) throw invalid_argument("llm max_retries must be >= 0");
    if (!(c.backoff_base >= 0.0 && c.backoff_factor >= 1.0))
        throw invalid_argument("llm backoff must be non-negative and non-shrinking");
}

struct HttpRequest {
    std::string url;
    std::map<std::string, std::string> headers;
    std::string body;
    double timeout = 30.0;
};

enum class TransportError { none, timeout, connection };

struct HttpResponse {
    int status = 0;
    std::string body;
    TransportError error = TransportError::none;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport; a fresh connection per call.
class HttplibTransport : public HttpTransport {
public:
    HttpResponse post(const HttpRequest& request) override {
        const auto scheme_end = request.url.find("://");
        if (scheme_end == std::string::npos) throw invalid_argument("endpoint url lacks a scheme: " + request.url);
        const auto path_start = request.url.find('/', scheme_end + 3);
        const std::string origin = request.url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

        httplib::Client client(origin);
        const auto secs = static_cast<time_t>(request.timeout);
        const auto usecs = static_cast<time_t>((request.timeout - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        httplib::Headers headers;
        for (const auto& [k, v] : request.headers)
            if (k != "Content-Type") headers.emplace(k, v);
        auto result = client.Post(path, headers, request.body, "application/json");

        HttpResponse out;
        if (!result) {
            const auto err = result.error();
            out.error = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                         err == httplib::Error::Write)
                            ? TransportError::timeout
                            : TransportError::connection;
            out.body = httplib::to_string(err);
            return out;
        }
        out.status = result->status;
        out.body = result->body;
        return out;
    }
};

using Sleeper = std::function<void(double seconds)>;

inline void default_sleep(double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

inline nlohmann::json build_chat_request(const LlmConfig& config, const std::vector<ChatMessage>& messages,
                                         const nlohmann::json& schema) {
    return nlohmann::json{
        {"model", config.model_name},
        {"messages", messages},
        {"temperature", config.temperature},
        {"response_format",
         {{"type", "json_schema"},
          {"json_schema", {{"name", "maneuver_output"}, {"schema", schema}, {"strict", false}}}}}};
}

/// POSTs a schema-constrained chat completion and returns the parsed content.
/// Transport errors, HTTP 429/5xx and non-conforming content are retried
/// with exponential backoff; other HTTP errors fail at once.
inline nlohmann::json complete_structured(const LlmConfig& config, const std::vector<ChatMessage>& messages,
                                          const nlohmann::json& schema, HttpTransport& transport,
                                          const Sleeper& sleep = default_sleep,
                                          FixtureWriter* recorder = nullptr) {
    check_llm_config(config);
    HttpRequest request;
    request.url = config.endpoint_url;
    request.timeout = config.timeout;
    request.headers["Content-Type"] = "application/json";
    if (config.require_auth) {
        const char* key = std::getenv(config.api_key_env_var.c_str());
        if (key == nullptr || *key == '\0')
            throw auth_missing("environment variable " + config.api_key_env_var + " is not set");
        request.headers["Authorization"] = std::string("Bearer ") + key;
    }
    request.body = build_chat_request(config, messages, schema).dump();

    enum class Failure { none, timeout, unavailable, rate_limited, schema };
    Failure last = Failure::none;
    std::string detail;

    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) sleep(config.backoff_base * std::pow(config.backoff_factor, attempt - 1));

        const auto resp = transport.post(request);
        if (resp.error == TransportError::timeout) {
            last = Failure::timeout;
            detail = resp.body;
            continue;
        }
        if (resp.error == TransportError::connection) {
            last = Failure::unavailable;
            detail = resp.body;
            continue;
        }
        if (resp.status == 429) {
            last = Failure::rate_limited;
            detail = "HTTP 429";
            continue;
        }
        if (resp.status >= 500) {
            last = Failure::unavailable;
            detail = "HTTP " + std::to_string(resp.status);
            continue;
        }
        if (resp.status < 200 || resp.status >= 300)
            throw backend_unavailable("HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 200));

        nlohmann::json content;
        try {
            const auto body = nlohmann::json::parse(resp.body);
            content = nlohmann::json::parse(
                body.at("choices").at(0).at("message").at("content").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            last = Failure::schema;
            detail = std::string("unparseable completion: ") + e.what();
            continue;
        }
        if (auto why = schema_mismatch(content, schema); !why.empty()) {
            last = Failure::schema;
            detail = why;
            continue;
        }
        if (recorder) recorder->append({messages, schema_hash(schema), content});
        return content;
    }

    const std::string tries = " after " + std::to_string(config.max_retries + 1) + " attempt(s): ";
    switch (last) {
    case Failure::timeout: throw timeout_error("request timed out" + tries + detail);
    case Failure::rate_limited: throw rate_limited("rate limited" + tries + detail);
    case Failure::schema: throw schema_violation(detail);
    default: throw backend_unavailable("endpoint unavailable" + tries + detail);
    }
}

/// AgentBackend over an OpenAI-compatible endpoint. Immutable after
/// construction apart from the shared recorder, which serializes appends.
class LlmBackend : public AgentBackend {
public:
    explicit LlmBackend(LlmConfig config, std::shared_ptr<HttpTransport> transport = nullptr,
                        Sleeper sleep = default_sleep)
        : config_(std::move(config)),
          transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
          sleep_(std::move(sleep)) {
        check_llm_config(config_);
        if (config_.record_path) recorder_ = std::make_shared<FixtureWriter>(*config_.record_path);
    }

    nlohmann::json generate(const std::vector<ChatMessage>& messages, const nlohmann::json& output_schema) override {
        return complete_structured(config_, messages, output_schema, *transport_, sleep_, recorder_.get());
    }

    const LlmConfig& config() const { return config_; }

private:
    LlmConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleep_;
    std::shared_ptr<FixtureWriter> recorder_;
};

} // namespace maneuverforge
