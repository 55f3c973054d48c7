#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace maneuverforge {

/// Checks a document against the JSON-schema subset used for structured
/// output: type, enum, properties, required, additionalProperties (boolean),
/// items, minItems, maxItems. Returns an empty string when the document
/// conforms, otherwise a description of the first mismatch.
inline std::string schema_mismatch(const nlohmann::json& doc, const nlohmann::json& schema,
                                   const std::string& path = "$") {
    if (schema.contains("type")) {
        const auto type = schema["type"].get<std::string>();
        bool ok = false;
        if (type == "object") ok = doc.is_object();
        else if (type == "array") ok = doc.is_array();
        else if (type == "string") ok = doc.is_string();
        else if (type == "number") ok = doc.is_number();
        else if (type == "integer") ok = doc.is_number_integer();
        else if (type == "boolean") ok = doc.is_boolean();
        else if (type == "null") ok = doc.is_null();
        if (!ok) return path + ": expected " + type;
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& v : schema["enum"]) found = found || v == doc;
        if (!found) return path + ": value not in enum";
    }
    if (doc.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!doc.contains(key.get<std::string>()))
                    return path + ": missing required key '" + key.get<std::string>() + "'";
        const bool closed = schema.contains("additionalProperties") &&
                            schema["additionalProperties"].is_boolean() &&
                            !schema["additionalProperties"].get<bool>();
        for (const auto& [key, value] : doc.items()) {
            if (schema.contains("properties") && schema["properties"].contains(key)) {
                auto sub = schema_mismatch(value, schema["properties"][key], path + "." + key);
                if (!sub.empty()) return sub;
            } else if (closed) {
                return path + ": unexpected key '" + key + "'";
            }
        }
    }
    if (doc.is_array()) {
        if (schema.contains("minItems") && doc.size() < schema["minItems"].get<std::size_t>())
            return path + ": too few items";
        if (schema.contains("maxItems") && doc.size() > schema["maxItems"].get<std::size_t>())
            return path + ": too many items";
        if (schema.contains("items"))
            for (std::size_t i = 0; i < doc.size(); ++i) {
                auto sub = schema_mismatch(doc[i], schema["items"], path + "[" + std::to_string(i) + "]");
                if (!sub.empty()) return sub;
            }
    }
    return {};
}

inline bool conforms(const nlohmann::json& doc, const nlohmann::json& schema) {
    return schema_mismatch(doc, schema).empty();
}

} // namespace maneuverforge
