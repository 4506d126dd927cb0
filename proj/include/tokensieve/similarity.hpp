// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tokensieve/error.hpp"
#include "tokensieve/metric.hpp"
#include "tokensieve/parallel.hpp"
#include "tokensieve/token_matrix.hpp"

namespace tokensieve {

/// Per-visual-token relevance, higher = more relevant.
struct ScoreVector {
    std::vector<double> scores;
    Metric metric;
    QueryAggregation aggregation = QueryAggregation::MeanPool;

    std::size_t size() const noexcept {
        return scores.size();
    }
};

/// M x N relevance table: entry (j, i) relates text token j to visual token i.
struct ScoreTable {
    std::size_t n_queries = 0;
    std::size_t n_tokens = 0;
    std::vector<double> values;

    double operator()(std::size_t query, std::size_t token) const {
        return values[query * n_tokens + token];
    }
};

namespace kernels {

// All kernels accumulate in double, strictly left to right over the
// embedding dimension. The compiler may not reassociate this (no fast-math),
// which keeps scores bit-reproducible.

template <typename A, typename B>
double l1(std::span<const A> a, std::span<const B> b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        acc += std::abs(static_cast<double>(a[c]) - static_cast<double>(b[c]));
    }
    return acc;
}

template <typename A, typename B>
double l2(std::span<const A> a, std::span<const B> b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const double d = static_cast<double>(a[c]) - static_cast<double>(b[c]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

template <typename A, typename B>
double lp(std::span<const A> a, std::span<const B> b, double p) {
    // p == 2 routes through the L2 kernel so the two strategies agree bit for bit.
    if (p == 2.0) {
        return l2(a, b);
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        acc += std::pow(std::abs(static_cast<double>(a[c]) - static_cast<double>(b[c])), p);
    }
    return std::pow(acc, 1.0 / p);
}

template <typename A, typename B>
double linf(std::span<const A> a, std::span<const B> b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        acc = std::max(acc, std::abs(static_cast<double>(a[c]) - static_cast<double>(b[c])));
    }
    return acc;
}

template <typename A, typename B>
double inner_product(std::span<const A> a, std::span<const B> b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        acc += static_cast<double>(a[c]) * static_cast<double>(b[c]);
    }
    return acc;
}

}  // namespace kernels

/// Relevance of `a` to `b` under `metric`: inner product as-is, distances negated.
template <typename A, typename B>
double relevance(const Metric& metric, std::span<const A> a, std::span<const B> b) {
    switch (metric.kind) {
    case MetricKind::L1: return -kernels::l1(a, b);
    case MetricKind::L2: return -kernels::l2(a, b);
    case MetricKind::Lp: return -kernels::lp(a, b, metric.p);
    case MetricKind::Linf: return -kernels::linf(a, b);
    case MetricKind::InnerProduct: return kernels::inner_product(a, b);
    }
    return 0.0;
}

namespace detail {

inline void check_scoring_inputs(MatrixView db, MatrixView queries, const Metric& metric) {
    metric.validate();
    if (db.empty()) {
        fail(ErrorCode::EmptyInput, "visual token matrix has no rows");
    }
    if (queries.empty()) {
        fail(ErrorCode::EmptyInput, "query matrix has no rows");
    }
    if (db.cols() != queries.cols()) {
        fail(ErrorCode::DimensionMismatch,
             "visual dim " + std::to_string(db.cols()) + " != query dim " + std::to_string(queries.cols()));
    }
}

/// Column mean of the query rows, summed in row order.
inline std::vector<double> mean_query(MatrixView queries) {
    std::vector<double> mean(queries.cols(), 0.0);
    for (std::size_t j = 0; j < queries.rows(); ++j) {
        const auto row = queries.row(j);
        for (std::size_t c = 0; c < mean.size(); ++c) {
            mean[c] += static_cast<double>(row[c]);
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(queries.rows());
    }
    return mean;
}

}  // namespace detail

/// Full M x N relevance table between every text token and every visual token.
inline ScoreTable pairwise_scores(MatrixView db,
                                  MatrixView queries,
                                  const Metric& metric,
                                  const ExecutionOptions& exec = {}) {
    detail::check_scoring_inputs(db, queries, metric);
    ScoreTable table;
    table.n_queries = queries.rows();
    table.n_tokens = db.rows();
    table.values.assign(table.n_queries * table.n_tokens, 0.0);
    parallel_for(db.rows(), exec, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto token = db.row(i);
            for (std::size_t j = 0; j < queries.rows(); ++j) {
                table.values[j * table.n_tokens + i] = relevance(metric, token, queries.row(j));
            }
        }
    });
    return table;
}

/**
 * @brief Relevance of every visual token to the text prompt.
 *
 * MeanPool averages the text rows into one query and scores once.
 * BestOverQueries keeps, per visual token, the highest relevance over text
 * rows; SumOverQueries adds them up in text-row order.
 */
inline ScoreVector score_tokens(MatrixView db,
                                MatrixView queries,
                                const Metric& metric,
                                QueryAggregation aggregation = QueryAggregation::MeanPool,
                                const ExecutionOptions& exec = {}) {
    detail::check_scoring_inputs(db, queries, metric);

    ScoreVector out;
    out.metric = metric;
    out.aggregation = aggregation;
    out.scores.assign(db.rows(), 0.0);

    std::vector<double> pooled;
    if (aggregation == QueryAggregation::MeanPool) {
        pooled = detail::mean_query(queries);
    }
    const std::span<const double> pooled_view(pooled);

    parallel_for(db.rows(), exec, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto token = db.row(i);
            double score = 0.0;
            switch (aggregation) {
            case QueryAggregation::MeanPool:
                score = relevance(metric, token, pooled_view);
                break;
            case QueryAggregation::BestOverQueries:
                score = relevance(metric, token, queries.row(0));
                for (std::size_t j = 1; j < queries.rows(); ++j) {
                    score = std::max(score, relevance(metric, token, queries.row(j)));
                }
                break;
            case QueryAggregation::SumOverQueries:
                for (std::size_t j = 0; j < queries.rows(); ++j) {
                    score += relevance(metric, token, queries.row(j));
                }
                break;
            }
            out.scores[i] = score;
        }
    });

    for (std::size_t i = 0; i < out.scores.size(); ++i) {
        if (!std::isfinite(out.scores[i])) {
            fail(ErrorCode::NonFiniteValue, "relevance overflowed for visual token " + std::to_string(i));
        }
    }
    return out;
}

/// Scales each nonzero row to unit L2 norm; zero rows pass through unchanged.
inline TokenMatrix normalize_rows(MatrixView m) {
    std::vector<float> values(m.values().begin(), m.values().end());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        double norm_sq = 0.0;
        for (float v : row) {
            norm_sq += static_cast<double>(v) * static_cast<double>(v);
        }
        if (norm_sq == 0.0) {
            continue;
        }
        const double norm = std::sqrt(norm_sq);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            values[r * m.cols() + c] = static_cast<float>(static_cast<double>(row[c]) / norm);
        }
    }
    return TokenMatrix(m.rows(), m.cols(), std::move(values), ElementType::float32, true);
}

}  // namespace tokensieve
