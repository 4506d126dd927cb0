// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tokensieve/error.hpp"
#include "tokensieve/metric.hpp"
#include "tokensieve/parallel.hpp"
#include "tokensieve/similarity.hpp"
#include "tokensieve/token_matrix.hpp"

namespace tokensieve {

struct TopK {
    std::size_t k = 1;
    friend bool operator==(const TopK&, const TopK&) = default;
};

/// Fraction of visual tokens removed; retained count is ratio_to_k(n, r).
struct Ratio {
    double r = 0.0;
    friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// Keep every token whose relevance is >= tau.
struct Threshold {
    double tau = 0.0;
    friend bool operator==(const Threshold&, const Threshold&) = default;
};

using SelectionPolicy = std::variant<TopK, Ratio, Threshold>;

inline void validate_policy(const SelectionPolicy& policy) {
    if (const auto* topk = std::get_if<TopK>(&policy)) {
        if (topk->k < 1) {
            fail(ErrorCode::InvalidParams, "k must be >= 1");
        }
    } else if (const auto* ratio = std::get_if<Ratio>(&policy)) {
        if (!(ratio->r >= 0.0 && ratio->r < 1.0)) {
            fail(ErrorCode::InvalidParams, "reduction ratio must lie in [0, 1), got " + std::to_string(ratio->r));
        }
    } else if (!std::isfinite(std::get<Threshold>(policy).tau)) {
        fail(ErrorCode::InvalidParams, "threshold tau must be finite");
    }
}

struct SelectionSpec {
    SelectionPolicy policy = TopK{};
    Metric metric;
    QueryAggregation aggregation = QueryAggregation::MeanPool;

    void validate() const {
        validate_policy(policy);
        metric.validate();
    }
};

/// Kept visual tokens in ascending original position, with their scores.
struct PruneResult {
    std::vector<std::size_t> kept;
    std::vector<double> scores;
    std::size_t n_original = 0;
    SelectionSpec spec;
};

/**
 * Number of visual tokens retained from n when a fraction r is removed:
 * ceil(n * (1 - r)), never below 1. Products within 1e-9 of an integer are
 * snapped first so that, e.g., 10 tokens at r = 0.7 keep 3 rather than 4.
 */
inline std::size_t ratio_to_k(std::size_t n, double r) {
    if (n < 1) {
        fail(ErrorCode::InvalidParams, "ratio_to_k needs n >= 1");
    }
    validate_policy(Ratio{r});
    double kept = static_cast<double>(n) * (1.0 - r);
    const double nearest = std::round(kept);
    if (std::abs(kept - nearest) <= 1e-9 * static_cast<double>(n)) {
        kept = nearest;
    }
    const auto k = static_cast<std::size_t>(std::ceil(kept));
    return std::clamp<std::size_t>(k, 1, n);
}

namespace detail {

inline PruneResult make_result(const ScoreVector& scores, std::vector<std::size_t> kept, SelectionPolicy policy) {
    PruneResult result;
    result.n_original = scores.size();
    result.spec = SelectionSpec{policy, scores.metric, scores.aggregation};
    result.scores.reserve(kept.size());
    for (std::size_t index : kept) {
        result.scores.push_back(scores.scores[index]);
    }
    result.kept = std::move(kept);
    return result;
}

}  // namespace detail

/// The min(k, N) most relevant tokens. Ties go to the lower original index.
inline PruneResult select_topk(const ScoreVector& scores, std::size_t k) {
    if (scores.size() == 0) {
        fail(ErrorCode::EmptyScores, "cannot select from an empty score vector");
    }
    validate_policy(TopK{k});
    const std::size_t n = scores.size();
    const std::size_t count = std::min(k, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto more_relevant = [&](std::size_t a, std::size_t b) {
        const double sa = scores.scores[a];
        const double sb = scores.scores[b];
        return sa > sb || (sa == sb && a < b);
    };
    if (count < n) {
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                         more_relevant);
        order.resize(count);
    }
    std::sort(order.begin(), order.end());
    return detail::make_result(scores, std::move(order), TopK{k});
}

/// Every token with relevance >= tau (inclusive), possibly none.
inline PruneResult select_threshold(const ScoreVector& scores, double tau) {
    validate_policy(Threshold{tau});
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores.scores[i] >= tau) {
            kept.push_back(i);
        }
    }
    return detail::make_result(scores, std::move(kept), Threshold{tau});
}

inline PruneResult select(const ScoreVector& scores, const SelectionPolicy& policy) {
    if (const auto* topk = std::get_if<TopK>(&policy)) {
        return select_topk(scores, topk->k);
    }
    if (const auto* ratio = std::get_if<Ratio>(&policy)) {
        if (scores.size() == 0) {
            fail(ErrorCode::EmptyScores, "cannot select from an empty score vector");
        }
        PruneResult result = select_topk(scores, ratio_to_k(scores.size(), ratio->r));
        result.spec.policy = *ratio;
        return result;
    }
    return select_threshold(scores, std::get<Threshold>(policy).tau);
}

enum class ProjectionPlacement {
    PreRetrieval,   // project the whole visual matrix, then score in the projected space
    PostRetrieval,  // score in the encoder space, then project only the kept rows
};

/// Affine map x -> x W + b applied row-wise; W is d_in x d_out.
struct ProjectionSpec {
    TokenMatrix weight;
    std::vector<float> bias;  // empty means zeros
    ProjectionPlacement placement = ProjectionPlacement::PreRetrieval;

    std::size_t input_dim() const noexcept {
        return weight.rows();
    }
    std::size_t output_dim() const noexcept {
        return weight.cols();
    }
};

inline TokenMatrix apply_projection(MatrixView m, const ProjectionSpec& proj) {
    if (m.cols() != proj.input_dim()) {
        fail(ErrorCode::DimensionMismatch,
             "matrix dim " + std::to_string(m.cols()) + " != projection input dim " +
                 std::to_string(proj.input_dim()));
    }
    if (!proj.bias.empty() && proj.bias.size() != proj.output_dim()) {
        fail(ErrorCode::DimensionMismatch,
             "bias length " + std::to_string(proj.bias.size()) + " != projection output dim " +
                 std::to_string(proj.output_dim()));
    }
    const std::size_t d_out = proj.output_dim();
    std::vector<float> out(m.rows() * d_out);
    std::vector<double> acc(d_out);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto x = m.row(r);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto w = proj.weight.row(i);
            const double xi = x[i];
            for (std::size_t o = 0; o < d_out; ++o) {
                acc[o] += xi * static_cast<double>(w[o]);
            }
        }
        for (std::size_t o = 0; o < d_out; ++o) {
            const double b = proj.bias.empty() ? 0.0 : static_cast<double>(proj.bias[o]);
            out[r * d_out + o] = static_cast<float>(acc[o] + b);
        }
    }
    return TokenMatrix(m.rows(), d_out, std::move(out));
}

enum class SequenceLayout {
    VisualThenText,
    TextThenVisual,
};

/// Copies the given rows of m, in the given order.
inline TokenMatrix gather_rows(MatrixView m, std::span<const std::size_t> indices) {
    std::vector<float> out;
    out.reserve(indices.size() * m.cols());
    for (std::size_t index : indices) {
        if (index >= m.rows()) {
            fail(ErrorCode::IndexOutOfRange,
                 "row " + std::to_string(index) + " out of range for " + std::to_string(m.rows()) + " rows");
        }
        const auto row = m.row(index);
        out.insert(out.end(), row.begin(), row.end());
    }
    return TokenMatrix(indices.size(), m.cols(), std::move(out));
}

inline TokenMatrix concat_rows(MatrixView first, MatrixView second) {
    if (first.cols() != second.cols()) {
        fail(ErrorCode::DimensionMismatch,
             "cannot concatenate dim " + std::to_string(first.cols()) + " with dim " +
                 std::to_string(second.cols()));
    }
    std::vector<float> out;
    out.reserve(first.values().size() + second.values().size());
    out.insert(out.end(), first.values().begin(), first.values().end());
    out.insert(out.end(), second.values().begin(), second.values().end());
    return TokenMatrix(first.rows() + second.rows(), first.cols(), std::move(out));
}

/// Kept visual rows (ascending original order) concatenated with the text rows.
inline TokenMatrix assemble_sequence(MatrixView visual,
                                     MatrixView text,
                                     const PruneResult& result,
                                     SequenceLayout layout = SequenceLayout::VisualThenText) {
    if (visual.cols() != text.cols()) {
        fail(ErrorCode::DimensionMismatch,
             "visual dim " + std::to_string(visual.cols()) + " != text dim " + std::to_string(text.cols()));
    }
    if (result.n_original != visual.rows()) {
        fail(ErrorCode::DimensionMismatch,
             "selection covers " + std::to_string(result.n_original) + " tokens but visual matrix has " +
                 std::to_string(visual.rows()));
    }
    const TokenMatrix kept = gather_rows(visual, result.kept);
    return layout == SequenceLayout::VisualThenText ? concat_rows(kept, text) : concat_rows(text, kept);
}

struct PipelineOptions {
    SequenceLayout layout = SequenceLayout::VisualThenText;
    std::optional<ProjectionSpec> projection;
    /// Text rows placed in the output sequence. Defaults to the query matrix;
    /// needed with PostRetrieval projection when the query lives in the
    /// encoder space but the sequence must be in the language-model space.
    std::optional<MatrixView> merge_text;
    ExecutionOptions exec;
};

struct PipelineResult {
    PruneResult selection;
    TokenMatrix sequence;
};

/**
 * @brief Encode -> database -> query -> transform, over precomputed embeddings.
 *
 * The visual rows form the retrieval database and the text rows the query.
 * With PreRetrieval projection the database is projected before scoring; with
 * PostRetrieval only the retrieved rows are projected. The kept rows are then
 * merged with the text block according to the layout.
 */
inline PipelineResult reduce_tokens(MatrixView visual,
                                    MatrixView text,
                                    const SelectionSpec& spec,
                                    const PipelineOptions& options = {}) {
    spec.validate();
    const bool pre = options.projection && options.projection->placement == ProjectionPlacement::PreRetrieval;
    const bool post = options.projection && options.projection->placement == ProjectionPlacement::PostRetrieval;

    std::optional<TokenMatrix> projected;
    if (pre) {
        projected = apply_projection(visual, *options.projection);
    }
    const MatrixView database = projected ? projected->view() : visual;

    const ScoreVector scores = score_tokens(database, text, spec.metric, spec.aggregation, options.exec);
    PruneResult selection = select(scores, spec.policy);

    TokenMatrix kept = gather_rows(database, selection.kept);
    if (post) {
        kept = apply_projection(kept, *options.projection);
    }
    const MatrixView merge_text = options.merge_text.value_or(text);
    TokenMatrix sequence = options.layout == SequenceLayout::VisualThenText ? concat_rows(kept, merge_text)
                                                                             : concat_rows(merge_text, kept);
    return PipelineResult{std::move(selection), std::move(sequence)};
}

inline std::string_view to_string(SequenceLayout layout) {
    return layout == SequenceLayout::VisualThenText ? "visual-then-text" : "text-then-visual";
}

inline std::string_view to_string(ProjectionPlacement placement) {
    return placement == ProjectionPlacement::PreRetrieval ? "pre" : "post";
}

inline SequenceLayout parse_layout(std::string_view name) {
    const std::string key = detail::lowercase(name);
    if (key == "visual-then-text" || key == "visual-first") return SequenceLayout::VisualThenText;
    if (key == "text-then-visual" || key == "text-first") return SequenceLayout::TextThenVisual;
    fail(ErrorCode::InvalidParams, "unknown layout '" + std::string(name) + "'");
}

inline ProjectionPlacement parse_placement(std::string_view name) {
    const std::string key = detail::lowercase(name);
    if (key == "pre" || key == "pre-retrieval") return ProjectionPlacement::PreRetrieval;
    if (key == "post" || key == "post-retrieval") return ProjectionPlacement::PostRetrieval;
    fail(ErrorCode::InvalidParams, "unknown projection placement '" + std::string(name) + "'");
}

}  // namespace tokensieve
