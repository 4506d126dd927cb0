// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Structured-text (JSON) forms of reports and fixture sidecars. Field names
// here are the stable schema shared by the CLI and host bindings.

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "tokensieve/error.hpp"
#include "tokensieve/eval.hpp"
#include "tokensieve/metric.hpp"
#include "tokensieve/roofline.hpp"
#include "tokensieve/selection.hpp"
#include "tokensieve/version.hpp"

namespace tokensieve {

using json = nlohmann::ordered_json;

inline json metric_to_json(const Metric& metric) {
    json out = {{"kind", std::string(to_string(metric.kind))}};
    if (metric.kind == MetricKind::Lp) {
        out["p"] = metric.p;
    }
    return out;
}

inline json policy_to_json(const SelectionPolicy& policy) {
    if (const auto* topk = std::get_if<TopK>(&policy)) {
        return {{"type", "topk"}, {"k", topk->k}};
    }
    if (const auto* ratio = std::get_if<Ratio>(&policy)) {
        return {{"type", "ratio"}, {"ratio", ratio->r}};
    }
    return {{"type", "threshold"}, {"tau", std::get<Threshold>(policy).tau}};
}

inline json spec_to_json(const SelectionSpec& spec) {
    return {{"policy", policy_to_json(spec.policy)},
            {"metric", metric_to_json(spec.metric)},
            {"aggregation", std::string(to_string(spec.aggregation))}};
}

inline json prune_result_to_json(const PruneResult& result) {
    return {{"n_original", result.n_original},
            {"n_kept", result.kept.size()},
            {"kept", result.kept},
            {"scores", result.scores},
            {"spec", spec_to_json(result.spec)}};
}

inline json efficiency_report_to_json(const roofline::EfficiencyReport& report) {
    return {{"n_tokens", report.n_tokens},
            {"flops_total", report.flops_total},
            {"weights_bytes", report.weights_bytes},
            {"kv_cache_bytes", report.kv_cache_bytes},
            {"activation_bytes", report.activation_bytes},
            {"total_memory_bytes", report.total_memory_bytes},
            {"prefill_seconds", report.prefill_seconds}};
}

inline json model_profile_to_json(const roofline::ModelProfile& p) {
    return {{"name", p.name},         {"n_layers", p.n_layers},         {"hidden", p.hidden},
            {"n_heads", p.n_heads},   {"n_kv_heads", p.n_kv_heads},     {"head_dim", p.head_dim},
            {"intermediate", p.intermediate}, {"vocab", p.vocab},       {"n_params", p.n_params}};
}

inline json hardware_profile_to_json(const roofline::HardwareProfile& hw) {
    return {{"name", hw.name},
            {"peak_flops_fp16", hw.peak_flops_fp16},
            {"peak_ops_int8", hw.peak_ops_int8},
            {"mem_bandwidth", hw.mem_bandwidth}};
}

inline json error_to_json(const Error& error) {
    return {{"error", {{"code", std::string(to_string(error.code()))}, {"message", error.detail()}}}};
}

/// Sidecar written next to a fixture's .temb files.
inline json fixture_truth_to_json(const eval::Fixture& fixture) {
    const auto& p = fixture.params;
    return {{"format", "tokensieve-fixture"},
            {"version", kVersion},
            {"params",
             {{"n_visual", p.n_visual},
              {"n_text", p.n_text},
              {"dim", p.dim},
              {"n_relevant", p.n_relevant},
              {"separation", p.separation},
              {"seed", p.seed}}},
            {"relevant", fixture.relevant}};
}

/// Ground-truth indices from a fixture sidecar file.
inline std::vector<std::size_t> load_truth_indices(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    try {
        const json doc = json::parse(in);
        return doc.at("relevant").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigParse, "bad truth sidecar " + path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        fail(ErrorCode::IoFailure, "write error on " + path.string());
    }
}

}  // namespace tokensieve
