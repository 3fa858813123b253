#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"

namespace lobqr {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Throws ConfigError if `j` is not an object or carries a key outside `allowed`.
void require_keys_subset(const json& j, std::initializer_list<const char*> allowed, const std::string& context);

/// Reads `key` if present, converting with a ConfigError on type mismatch.
template <typename T>
bool read_optional(const json& j, const char* key, T& out, const std::string& context);

template <typename T>
T read_required(const json& j, const char* key, const std::string& context);

json load_json_file(const std::string& path);
/// Stable dump (sorted keys for json, insertion order for ordered_json).
void save_json_file(const std::string& path, const ordered_json& j);

/// FNV-1a over the canonical dump; used to stamp configs into outputs.
std::string hash_hex(const std::string& text);

}  // namespace lobqr

#include "lobqr/errors.hpp"

namespace lobqr {

template <typename T>
bool read_optional(const json& j, const char* key, T& out, const std::string& context) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return false;
    try {
        out = it->template get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(context + "." + key + ": " + e.what());
    }
    return true;
}

template <typename T>
T read_required(const json& j, const char* key, const std::string& context) {
    T out{};
    if (!read_optional(j, key, out, context)) throw ConfigError(context + ": missing required key '" + key + "'");
    return out;
}

}  // namespace lobqr
