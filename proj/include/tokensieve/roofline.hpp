// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tokensieve/error.hpp"
#include "tokensieve/metric.hpp"

namespace tokensieve::roofline {

/// Decoder-only transformer shape used for cost accounting.
struct ModelProfile {
    std::string name;
    std::uint64_t n_layers = 0;
    std::uint64_t hidden = 0;
    std::uint64_t n_heads = 0;
    std::uint64_t n_kv_heads = 0;
    std::uint64_t head_dim = 0;
    std::uint64_t intermediate = 0;
    std::uint64_t vocab = 0;
    std::uint64_t n_params = 0;

    void validate() const {
        const auto positive = [&](std::uint64_t v, const char* field) {
            if (v < 1) {
                fail(ErrorCode::InvalidParams, std::string("model profile field '") + field + "' must be >= 1");
            }
        };
        positive(n_layers, "n_layers");
        positive(hidden, "hidden");
        positive(n_heads, "n_heads");
        positive(n_kv_heads, "n_kv_heads");
        positive(head_dim, "head_dim");
        positive(intermediate, "intermediate");
        positive(vocab, "vocab");
        positive(n_params, "n_params");
        if (hidden != n_heads * head_dim) {
            fail(ErrorCode::InvalidParams, "hidden must equal n_heads * head_dim");
        }
        if (n_heads % n_kv_heads != 0) {
            fail(ErrorCode::InvalidParams, "n_kv_heads must divide n_heads");
        }
    }

    friend bool operator==(const ModelProfile&, const ModelProfile&) = default;
};

struct HardwareProfile {
    std::string name;
    double peak_flops_fp16 = 0.0;  // FLOP/s
    double peak_ops_int8 = 0.0;    // OP/s
    double mem_bandwidth = 0.0;    // bytes/s

    void validate() const {
        if (!(peak_flops_fp16 > 0.0) || !(peak_ops_int8 > 0.0) || !(mem_bandwidth > 0.0)) {
            fail(ErrorCode::InvalidParams, "hardware rates must all be > 0");
        }
    }

    friend bool operator==(const HardwareProfile&, const HardwareProfile&) = default;
};

/// Inference datatype; int8 is one byte everywhere, KV cache included.
enum class DType {
    fp16,
    int8,
};

inline constexpr std::uint64_t bytes_per_element(DType dtype) {
    return dtype == DType::fp16 ? 2 : 1;
}

inline constexpr std::string_view to_string(DType dtype) {
    return dtype == DType::fp16 ? "fp16" : "int8";
}

inline DType parse_dtype(std::string_view name) {
    const std::string key = tokensieve::detail::lowercase(name);
    if (key == "fp16" || key == "float16") return DType::fp16;
    if (key == "int8") return DType::int8;
    fail(ErrorCode::InvalidParams, "unknown dtype '" + std::string(name) + "' (expected fp16 or int8)");
}

inline double peak_rate(const HardwareProfile& hw, DType dtype) {
    return dtype == DType::fp16 ? hw.peak_flops_fp16 : hw.peak_ops_int8;
}

/// LLaVA-1.5 7B language model (Vicuna-7B decoder).
inline ModelProfile llava_7b() {
    return ModelProfile{"llava-7b", 32, 4096, 32, 32, 128, 11008, 32000, 6'740'000'000ULL};
}

/// A100-class accelerator.
inline HardwareProfile a100() {
    return HardwareProfile{"a100", 312e12, 624e12, 2.039e12};
}

struct EfficiencyReport {
    std::uint64_t n_tokens = 0;
    double flops_total = 0.0;
    std::uint64_t weights_bytes = 0;
    std::uint64_t kv_cache_bytes = 0;
    std::uint64_t activation_bytes = 0;
    std::uint64_t total_memory_bytes = 0;
    double prefill_seconds = 0.0;

    friend bool operator==(const EfficiencyReport&, const EfficiencyReport&) = default;
};

/// Keys and values for every layer: 2 * layers * n * kv_heads * head_dim elements.
inline std::uint64_t kv_cache_bytes(const ModelProfile& profile, std::uint64_t n, DType dtype) {
    return 2 * profile.n_layers * n * profile.n_kv_heads * profile.head_dim * bytes_per_element(dtype);
}

/// Linear layers (2 * params * n) plus the two attention matmuls (QK^T and PV).
inline double prefill_flops(const ModelProfile& profile, std::uint64_t n) {
    const double tokens = static_cast<double>(n);
    return 2.0 * static_cast<double>(profile.n_params) * tokens +
           4.0 * static_cast<double>(profile.n_layers) * tokens * tokens * static_cast<double>(profile.hidden);
}

inline std::uint64_t weights_bytes(const ModelProfile& profile, DType dtype) {
    return profile.n_params * bytes_per_element(dtype);
}

/**
 * @brief One operator of the prefill pass at batch size 1.
 *
 * Byte counts are for a single execution; `per_layer` operators run once per
 * decoder layer, the rest once per pass.
 */
struct OperatorCost {
    std::string name;
    double flops = 0.0;
    std::uint64_t weight_bytes = 0;
    std::uint64_t load_act_bytes = 0;
    std::uint64_t store_act_bytes = 0;
    bool per_layer = true;

    std::uint64_t bytes_moved() const noexcept {
        return weight_bytes + load_act_bytes + store_act_bytes;
    }
};

/// Operator table of a LLaMA-style decoder (RMSNorm, MHA/GQA, SwiGLU MLP) prefilling n tokens.
inline std::vector<OperatorCost> prefill_operators(const ModelProfile& profile, std::uint64_t n, DType dtype) {
    const std::uint64_t b = bytes_per_element(dtype);
    const std::uint64_t h = profile.hidden;
    const std::uint64_t kv = profile.n_kv_heads * profile.head_dim;
    const std::uint64_t heads = profile.n_heads;
    const std::uint64_t ff = profile.intermediate;
    const double tokens = static_cast<double>(n);

    const auto linear = [&](std::string name, std::uint64_t d_in, std::uint64_t d_out) {
        return OperatorCost{std::move(name), 2.0 * tokens * static_cast<double>(d_in * d_out), d_in * d_out * b,
                            n * d_in * b, n * d_out * b, true};
    };
    const auto elementwise = [&](std::string name, double flops_per_elem, std::uint64_t width,
                                 std::uint64_t inputs, std::uint64_t weight_elems) {
        return OperatorCost{std::move(name), flops_per_elem * tokens * static_cast<double>(width),
                            weight_elems * b, inputs * n * width * b, n * width * b, true};
    };

    std::vector<OperatorCost> ops;
    ops.push_back(elementwise("attn_norm", 4.0, h, 1, h));
    ops.push_back(linear("q_proj", h, h));
    ops.push_back(linear("k_proj", h, kv));
    ops.push_back(linear("v_proj", h, kv));
    ops.push_back(OperatorCost{"qk_matmul", 2.0 * tokens * tokens * static_cast<double>(h), 0,
                               (n * h + n * kv) * b, n * n * heads * b, true});
    ops.push_back(OperatorCost{"softmax", 5.0 * tokens * tokens * static_cast<double>(heads), 0,
                               n * n * heads * b, n * n * heads * b, true});
    ops.push_back(OperatorCost{"sv_matmul", 2.0 * tokens * tokens * static_cast<double>(h), 0,
                               (n * n * heads + n * kv) * b, n * h * b, true});
    ops.push_back(linear("out_proj", h, h));
    ops.push_back(elementwise("attn_add", 1.0, h, 2, 0));
    ops.push_back(elementwise("mlp_norm", 4.0, h, 1, h));
    ops.push_back(linear("gate_proj", h, ff));
    ops.push_back(linear("up_proj", h, ff));
    ops.push_back(elementwise("mlp_act", 5.0, ff, 2, 0));
    ops.push_back(linear("down_proj", ff, h));
    ops.push_back(elementwise("mlp_add", 1.0, h, 2, 0));

    OperatorCost lm_head = linear("lm_head", h, profile.vocab);
    lm_head.per_layer = false;
    ops.push_back(std::move(lm_head));
    return ops;
}

/// Sum over layers of every per-layer operator's stored outputs: hidden
/// states, projections, MLP intermediates and the n x n score matrices.
inline std::uint64_t activation_bytes(const ModelProfile& profile, std::uint64_t n, DType dtype) {
    std::uint64_t per_layer = 0;
    for (const auto& op : prefill_operators(profile, n, dtype)) {
        if (op.per_layer) {
            per_layer += op.store_act_bytes;
        }
    }
    return per_layer * profile.n_layers;
}

/// Roofline time of one operator: the slower of its compute and memory bounds.
inline double operator_seconds(const OperatorCost& op, const HardwareProfile& hw, DType dtype) {
    return std::max(op.flops / peak_rate(hw, dtype), static_cast<double>(op.bytes_moved()) / hw.mem_bandwidth);
}

inline double prefill_time(const ModelProfile& profile, const HardwareProfile& hw, std::uint64_t n, DType dtype) {
    double layer = 0.0;
    double once = 0.0;
    for (const auto& op : prefill_operators(profile, n, dtype)) {
        (op.per_layer ? layer : once) += operator_seconds(op, hw, dtype);
    }
    return layer * static_cast<double>(profile.n_layers) + once;
}

inline EfficiencyReport efficiency_report(const ModelProfile& profile,
                                          const HardwareProfile& hw,
                                          std::uint64_t n_visual_kept,
                                          std::uint64_t n_text,
                                          DType dtype) {
    profile.validate();
    hw.validate();
    const std::uint64_t n = n_visual_kept + n_text;
    if (n < 1) {
        fail(ErrorCode::InvalidParams, "sequence must hold at least one token");
    }
    EfficiencyReport report;
    report.n_tokens = n;
    report.flops_total = prefill_flops(profile, n);
    report.weights_bytes = weights_bytes(profile, dtype);
    report.kv_cache_bytes = kv_cache_bytes(profile, n, dtype);
    report.activation_bytes = activation_bytes(profile, n, dtype);
    report.total_memory_bytes = report.weights_bytes + report.kv_cache_bytes + report.activation_bytes;
    report.prefill_seconds = prefill_time(profile, hw, n, dtype);
    return report;
}

}  // namespace tokensieve::roofline
