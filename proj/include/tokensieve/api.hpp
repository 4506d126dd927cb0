// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Entry points for embedding the engine in a host pipeline (e.g. a Python
// extension). Inputs are borrowed float32 row-major buffers; nothing is copied
// on the way in. Every failure surfaces as tokensieve::Error.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "tokensieve/error.hpp"
#include "tokensieve/json_io.hpp"
#include "tokensieve/metric.hpp"
#include "tokensieve/roofline.hpp"
#include "tokensieve/selection.hpp"
#include "tokensieve/similarity.hpp"
#include "tokensieve/token_matrix.hpp"
#include "tokensieve/version.hpp"

namespace tokensieve::api {

struct BufferView {
    std::span<const float> data;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

struct PruneOutput {
    std::vector<std::size_t> kept;  // ascending
    std::vector<double> scores;
};

inline MatrixView checked_view(const BufferView& buffer, std::string_view label) {
    const MatrixView view(buffer.data, buffer.rows, buffer.cols);
    const std::size_t bad = first_non_finite(buffer.data);
    if (bad != buffer.data.size()) {
        fail(ErrorCode::NonFiniteValue, std::string(label) + " element " + std::to_string(bad));
    }
    return view;
}

inline PruneOutput prune(const BufferView& visual,
                         const BufferView& text,
                         std::string_view metric_name,
                         const SelectionPolicy& policy,
                         std::string_view aggregation_name = "mean",
                         double p = 3.0,
                         std::size_t workers = 1) {
    SelectionSpec spec{policy, Metric{parse_metric_kind(metric_name), p}, parse_aggregation(aggregation_name)};
    spec.validate();
    const MatrixView visual_view = checked_view(visual, "visual");
    const MatrixView text_view = checked_view(text, "text");
    const ScoreVector scores =
        score_tokens(visual_view, text_view, spec.metric, spec.aggregation, ExecutionOptions{workers});
    PruneResult result = select(scores, spec.policy);
    return PruneOutput{std::move(result.kept), std::move(result.scores)};
}

/// Same fields and names as the "report" object of `tokensieve analyze --json`.
inline json analyze(const roofline::ModelProfile& model,
                    const roofline::HardwareProfile& hardware,
                    std::size_t n_visual,
                    std::size_t n_text,
                    std::string_view dtype_name) {
    const auto report = roofline::efficiency_report(model, hardware, n_visual, n_text, roofline::parse_dtype(dtype_name));
    return efficiency_report_to_json(report);
}

inline const char* version() {
    return kVersion;
}

}  // namespace tokensieve::api
