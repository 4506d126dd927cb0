// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Profile files are plain "key = value" lines. '#' starts a comment, blank
// lines are ignored, keys are the ModelProfile / HardwareProfile field names.
// Integer fields accept scientific notation when the value is integral
// (n_params = 6.74e9). Model files may omit head_dim (hidden / n_heads) and
// n_kv_heads (n_heads).

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "tokensieve/error.hpp"
#include "tokensieve/roofline.hpp"

namespace tokensieve::roofline {

using ConfigEntries = std::map<std::string, std::string, std::less<>>;

namespace detail {

inline std::string_view trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

inline double parse_real(const ConfigEntries& entries, std::string_view key) {
    const std::string& text = entries.find(key)->second;
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
        fail(ErrorCode::ConfigParse, "key '" + std::string(key) + "': '" + text + "' is not a number");
    }
    return value;
}

inline std::uint64_t parse_count(const ConfigEntries& entries, std::string_view key) {
    const double value = parse_real(entries, key);
    if (value < 0.0 || value != std::floor(value) || value > 1.8e19) {
        fail(ErrorCode::ConfigParse, "key '" + std::string(key) + "' must be a non-negative integer");
    }
    return static_cast<std::uint64_t>(value);
}

inline void check_keys(const ConfigEntries& entries,
                       const std::set<std::string_view>& required,
                       const std::set<std::string_view>& optional) {
    for (const auto& [key, value] : entries) {
        if (!required.contains(key) && !optional.contains(key)) {
            fail(ErrorCode::ConfigParse, "unknown key '" + key + "'");
        }
    }
    for (std::string_view key : required) {
        if (!entries.contains(key)) {
            fail(ErrorCode::ConfigParse, "missing key '" + std::string(key) + "'");
        }
    }
}

}  // namespace detail

inline ConfigEntries parse_config_text(std::string_view text) {
    ConfigEntries entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto newline = text.find('\n', pos);
        std::string_view line = text.substr(pos, newline == std::string_view::npos ? text.npos : newline - pos);
        pos = newline == std::string_view::npos ? text.size() + 1 : newline + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorCode::ConfigParse, "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty() || value.empty()) {
            fail(ErrorCode::ConfigParse, "line " + std::to_string(line_no) + ": empty key or value");
        }
        if (!entries.emplace(key, value).second) {
            fail(ErrorCode::ConfigParse, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }
    return entries;
}

inline ModelProfile model_profile_from_entries(const ConfigEntries& entries) {
    detail::check_keys(entries, {"n_layers", "hidden", "n_heads", "intermediate", "vocab", "n_params"},
                       {"name", "n_kv_heads", "head_dim"});
    ModelProfile profile;
    profile.name = entries.contains("name") ? entries.find("name")->second : "custom";
    profile.n_layers = detail::parse_count(entries, "n_layers");
    profile.hidden = detail::parse_count(entries, "hidden");
    profile.n_heads = detail::parse_count(entries, "n_heads");
    profile.n_kv_heads = entries.contains("n_kv_heads") ? detail::parse_count(entries, "n_kv_heads") : profile.n_heads;
    profile.head_dim = entries.contains("head_dim") ? detail::parse_count(entries, "head_dim")
                                                    : (profile.n_heads ? profile.hidden / profile.n_heads : 0);
    profile.intermediate = detail::parse_count(entries, "intermediate");
    profile.vocab = detail::parse_count(entries, "vocab");
    profile.n_params = detail::parse_count(entries, "n_params");
    profile.validate();
    return profile;
}

inline HardwareProfile hardware_profile_from_entries(const ConfigEntries& entries) {
    detail::check_keys(entries, {"peak_flops_fp16", "peak_ops_int8", "mem_bandwidth"}, {"name"});
    HardwareProfile hw;
    hw.name = entries.contains("name") ? entries.find("name")->second : "custom";
    hw.peak_flops_fp16 = detail::parse_real(entries, "peak_flops_fp16");
    hw.peak_ops_int8 = detail::parse_real(entries, "peak_ops_int8");
    hw.mem_bandwidth = detail::parse_real(entries, "mem_bandwidth");
    hw.validate();
    return hw;
}

inline std::string read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// Built-in preset name ("llava-7b") or path to a profile file.
inline ModelProfile resolve_model_profile(const std::string& name_or_path) {
    if (name_or_path == "llava-7b") {
        return llava_7b();
    }
    if (!std::filesystem::is_regular_file(name_or_path)) {
        fail(ErrorCode::UnknownProfile, "no model preset or file named '" + name_or_path + "'");
    }
    return model_profile_from_entries(parse_config_text(read_config_file(name_or_path)));
}

/// Built-in preset name ("a100") or path to a profile file.
inline HardwareProfile resolve_hardware_profile(const std::string& name_or_path) {
    if (name_or_path == "a100") {
        return a100();
    }
    if (!std::filesystem::is_regular_file(name_or_path)) {
        fail(ErrorCode::UnknownProfile, "no hardware preset or file named '" + name_or_path + "'");
    }
    return hardware_profile_from_entries(parse_config_text(read_config_file(name_or_path)));
}

}  // namespace tokensieve::roofline
