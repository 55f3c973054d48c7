#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "errors.hpp"

namespace maneuverforge {

struct ChatMessage {
    std::string role;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

inline void to_json(nlohmann::json& j, const ChatMessage& m) {
    j = nlohmann::json{{"role", m.role}, {"content", m.content}};
}

inline void from_json(const nlohmann::json& j, ChatMessage& m) {
    m.role = j.at("role").get<std::string>();
    m.content = j.at("content").get<std::string>();
}

/// SHA-256 of the schema's compact serialization, hex encoded.
inline std::string schema_hash(const nlohmann::json& schema) {
    const std::string text = schema.dump();
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr);
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

/// One generate() call: {request_messages, output_schema_hash, response_json}.
struct FixtureRecord {
    std::vector<ChatMessage> request_messages;
    std::string output_schema_hash;
    nlohmann::json response_json;
};

inline void to_json(nlohmann::json& j, const FixtureRecord& r) {
    j = nlohmann::json{{"request_messages", r.request_messages},
                       {"output_schema_hash", r.output_schema_hash},
                       {"response_json", r.response_json}};
}

inline void from_json(const nlohmann::json& j, FixtureRecord& r) {
    r.request_messages = j.at("request_messages").get<std::vector<ChatMessage>>();
    r.output_schema_hash = j.at("output_schema_hash").get<std::string>();
    r.response_json = j.at("response_json");
}

/// Appends records to a JSONL fixture file. Safe to share between threads.
class FixtureWriter {
public:
    explicit FixtureWriter(std::string path) : path_(std::move(path)) {}

    void append(const FixtureRecord& record) {
        std::lock_guard lock(mutex_);
        std::ofstream out(path_, std::ios::app);
        if (!out) throw invalid_argument("cannot open fixture file '" + path_ + "' for append");
        out << nlohmann::json(record).dump() << '\n';
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::mutex mutex_;
};

inline std::vector<FixtureRecord> load_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_argument("cannot open fixture file '" + path + "'");
    std::vector<FixtureRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(nlohmann::json::parse(line).get<FixtureRecord>());
        } catch (const nlohmann::json::exception& e) {
            throw schema_violation(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

} // namespace maneuverforge
