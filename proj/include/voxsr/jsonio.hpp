#pragma once

// Thin wrapper over the vendored nlohmann parser: exception-free parsing
// mapped onto our error types, strict unknown-key rejection, and typed
// getters that name the offending key.

#include <set>
#include <string>

#include <json.hpp>

#include "voxsr/common.hpp"

namespace voxsr::detail {

using Json = nlohmann::json;

template <class Err>
inline Json parse_json_object(const std::string& text, const std::string& what) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Err(what + ": malformed JSON");
    if (!j.is_object()) throw Err(what + ": top level must be a JSON object");
    return j;
}

template <class Err>
inline void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                                const std::string& what) {
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw Err(what + ": unknown key '" + item.key() + "'");
}

template <class Err, class T>
inline void read_key(const Json& obj, const char* key, T& out, bool required,
                     const std::string& what) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (required) throw Err(what + ": missing key '" + key + "'");
        return;
    }
    try {
        out = it->template get<T>();
    } catch (const Json::exception&) {
        throw Err(what + ": key '" + std::string(key) + "' has the wrong type");
    }
}

}  // namespace voxsr::detail
