/// @file toml.hpp
/// @brief Minimal TOML subset reader for run configuration files.
///
/// Supported: comments, [section] headers, key = value with basic strings,
/// integers, floats, booleans, and flat arrays of those. That covers the whole
/// config schema; anything else is rejected with a line-numbered error.

#pragma once

#include <map>
#include <string>
#include <vector>

namespace fiml {

struct TomlValue {
    enum class Kind { String, Integer, Float, Boolean, Array };
    Kind kind = Kind::Float;
    std::string str;
    long long integer = 0;
    double number = 0.0;
    bool boolean = false;
    std::vector<TomlValue> array;

    /// Numeric view: integers promote to double.
    double as_number(const std::string& context) const;
    long long as_integer(const std::string& context) const;
    const std::string& as_string(const std::string& context) const;
    bool as_boolean(const std::string& context) const;
};

/// section name ("" for the root table) -> key -> value. Duplicate keys and
/// duplicate section headers are errors.
using TomlDocument = std::map<std::string, std::map<std::string, TomlValue>>;

TomlDocument parse_toml(const std::string& text, const std::string& source_name);

TomlDocument parse_toml_file(const std::string& path);

} // namespace fiml
