#pragma once

// Strict reading of JSON configuration objects: every field is optional and
// keeps its default, but unknown keys and wrongly typed values are rejected
// with the dotted path of the offending field.

#include "pads/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace pads::config {

using nlohmann::json;

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(ErrorCode::config, "field '" + display() + "': expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        out = convert<T>(j_.at(key), field(key));
    }

    ObjectReader child(const std::string& key) {
        seen_.insert(key);
        return ObjectReader(j_.at(key), field(key));
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    /// Rejects keys that were never asked for.
    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) fail(ErrorCode::config, "field '" + field(k) + "': unknown key");
        }
    }

    template <class T>
    static T convert(const json& v, const std::string& where) {
        auto bad = [&](const char* want) { fail(ErrorCode::config, "field '" + where + "': expected " + want); };
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) bad("a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) bad("an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) bad("a non-negative integer");
            }
            return v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) bad("a number");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) bad("a string");
            return v.get<std::string>();
        } else {
            // std::vector<U>
            if (!v.is_array()) bad("an array");
            T out;
            std::size_t i = 0;
            for (const auto& e : v) {
                out.push_back(convert<typename T::value_type>(e, where + "[" + std::to_string(i++) + "]"));
            }
            return out;
        }
    }

private:
    std::string display() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::config, "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        fail(ErrorCode::config, path + ": " + e.what());
    }
}

} // namespace pads::config
