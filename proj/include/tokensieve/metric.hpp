// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <string_view>

#include "tokensieve/error.hpp"

namespace tokensieve {

enum class MetricKind {
    L1,
    L2,
    Lp,
    InnerProduct,
    Linf,
};

/// Retrieval strategy. Distance kinds are turned into relevance by negation.
struct Metric {
    MetricKind kind = MetricKind::L2;
    double p = 3.0;  // only read when kind == Lp

    bool is_distance() const noexcept {
        return kind != MetricKind::InnerProduct;
    }

    void validate() const {
        if (kind == MetricKind::Lp && !(p > 0.0 && std::isfinite(p))) {
            fail(ErrorCode::InvalidParams, "Lp metric needs a finite p > 0, got " + std::to_string(p));
        }
    }

    friend bool operator==(const Metric& a, const Metric& b) {
        return a.kind == b.kind && (a.kind != MetricKind::Lp || a.p == b.p);
    }
};

/// How a multi-token text prompt is reduced to one relevance per visual token.
enum class QueryAggregation {
    MeanPool,
    BestOverQueries,
    SumOverQueries,
};

inline constexpr std::string_view to_string(MetricKind kind) {
    switch (kind) {
    case MetricKind::L1: return "L1";
    case MetricKind::L2: return "L2";
    case MetricKind::Lp: return "Lp";
    case MetricKind::InnerProduct: return "InnerProduct";
    case MetricKind::Linf: return "Linf";
    }
    return "?";
}

inline constexpr std::string_view to_string(QueryAggregation agg) {
    switch (agg) {
    case QueryAggregation::MeanPool: return "mean";
    case QueryAggregation::BestOverQueries: return "best";
    case QueryAggregation::SumOverQueries: return "sum";
    }
    return "?";
}

namespace detail {

inline std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace detail

/// Accepts l1, l2, lp, linf, ip / inner-product / inner_product / innerproduct (case-insensitive).
inline MetricKind parse_metric_kind(std::string_view name) {
    const std::string key = detail::lowercase(name);
    if (key == "l1") return MetricKind::L1;
    if (key == "l2") return MetricKind::L2;
    if (key == "lp") return MetricKind::Lp;
    if (key == "linf") return MetricKind::Linf;
    if (key == "ip" || key == "inner-product" || key == "inner_product" || key == "innerproduct") {
        return MetricKind::InnerProduct;
    }
    fail(ErrorCode::InvalidParams, "unknown metric '" + std::string(name) + "'");
}

inline QueryAggregation parse_aggregation(std::string_view name) {
    const std::string key = detail::lowercase(name);
    if (key == "mean" || key == "meanpool") return QueryAggregation::MeanPool;
    if (key == "best" || key == "max" || key == "bestoverqueries") return QueryAggregation::BestOverQueries;
    if (key == "sum" || key == "sumoverqueries") return QueryAggregation::SumOverQueries;
    fail(ErrorCode::InvalidParams, "unknown aggregation '" + std::string(name) + "'");
}

}  // namespace tokensieve
