// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tokensieve/error.hpp"
#include "tokensieve/metric.hpp"
#include "tokensieve/selection.hpp"
#include "tokensieve/token_matrix.hpp"

namespace tokensieve::eval {

/**
 * @brief Seedable generator whose output is identical on every platform.
 *
 * Raw bits come from std::mt19937_64, whose sequence is fixed by the C++
 * standard. The standard distributions are implementation-defined, so the
 * derived draws are written out here:
 *   uniform()        (bits >> 11) * 2^-53, in [0, 1)
 *   below(m)         rejection sampling on bits, uniform in [0, m)
 *   gaussian()       Box-Muller, u1 = 1 - uniform(), u2 = uniform(),
 *                    sqrt(-2 ln u1) * cos(2 pi u2); one value per pair
 *   sign()           +1 if the top bit of the next draw is 0, else -1
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : m_engine(seed) {}

    std::uint64_t bits() {
        return m_engine();
    }

    double uniform() {
        return static_cast<double>(bits() >> 11) * 0x1.0p-53;
    }

    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t draw = bits();
        while (draw >= limit) {
            draw = bits();
        }
        return draw % bound;
    }

    double gaussian() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double sign() {
        return (bits() >> 63) == 0 ? 1.0 : -1.0;
    }

private:
    std::mt19937_64 m_engine;
};

struct FixtureParams {
    std::size_t n_visual = 576;
    std::size_t n_text = 40;
    std::size_t dim = 64;
    std::size_t n_relevant = 116;
    double separation = 10.0;  // center distance in units of the cluster std
    std::uint64_t seed = 42;

    void validate() const {
        if (n_visual < 1 || n_text < 1) {
            fail(ErrorCode::InvalidParams, "fixture needs at least one visual and one text token");
        }
        if (dim < 2) {
            fail(ErrorCode::InvalidParams, "fixture dim must be >= 2");
        }
        if (n_relevant > n_visual) {
            fail(ErrorCode::InvalidParams, "n_relevant (" + std::to_string(n_relevant) + ") exceeds n_visual (" +
                                               std::to_string(n_visual) + ")");
        }
        if (!(separation >= 0.0) || !std::isfinite(separation)) {
            fail(ErrorCode::InvalidParams, "separation must be finite and >= 0");
        }
    }
};

/// Visual/text embeddings with a planted set of relevant visual tokens.
struct Fixture {
    FixtureParams params;
    TokenMatrix visual;
    TokenMatrix text;
    std::vector<std::size_t> relevant;  // ascending
};

inline constexpr double kCenterScale = 4.0;
inline constexpr double kClusterStd = 1.0;
inline constexpr double kTextStd = 0.5;

/**
 * Draw order (all from one Rng seeded with params.seed):
 *   1. center c: dim gaussians, scaled by kCenterScale
 *   2. offset direction u: dim signs, divided by sqrt(dim)
 *   3. relevant positions: partial Fisher-Yates over [0, n_visual), first
 *      n_relevant slots, then sorted
 *   4. visual rows in order: c (relevant) or c + separation * std * u
 *      (distractor), plus std * gaussian per coordinate
 *   5. text rows in order: c + kTextStd * gaussian per coordinate
 */
inline Fixture gen_fixture(const FixtureParams& params) {
    params.validate();
    Rng rng(params.seed);
    const std::size_t d = params.dim;

    std::vector<double> center(d);
    for (double& v : center) {
        v = kCenterScale * rng.gaussian();
    }
    std::vector<double> direction(d);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : direction) {
        v = rng.sign() * inv_sqrt_d;
    }

    std::vector<std::size_t> slots(params.n_visual);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    for (std::size_t i = 0; i < params.n_relevant; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(params.n_visual - i));
        std::swap(slots[i], slots[j]);
    }
    std::vector<std::size_t> relevant(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(params.n_relevant));
    std::sort(relevant.begin(), relevant.end());
    std::vector<bool> is_relevant(params.n_visual, false);
    for (std::size_t index : relevant) {
        is_relevant[index] = true;
    }

    const double offset = params.separation * kClusterStd;
    std::vector<float> visual(params.n_visual * d);
    for (std::size_t r = 0; r < params.n_visual; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double mean = is_relevant[r] ? center[c] : center[c] + offset * direction[c];
            visual[r * d + c] = static_cast<float>(mean + kClusterStd * rng.gaussian());
        }
    }
    std::vector<float> text(params.n_text * d);
    for (std::size_t r = 0; r < params.n_text; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            text[r * d + c] = static_cast<float>(center[c] + kTextStd * rng.gaussian());
        }
    }

    return Fixture{params, TokenMatrix(params.n_visual, d, std::move(visual)),
                   TokenMatrix(params.n_text, d, std::move(text)), std::move(relevant)};
}

namespace detail {

inline std::vector<std::size_t> sorted_unique(std::span<const std::size_t> values) {
    std::vector<std::size_t> out(values.begin(), values.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::size_t intersection_size(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t count = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

}  // namespace detail

/// |kept ∩ truth| / |truth|
inline double recall_at_k(const PruneResult& result, std::span<const std::size_t> truth) {
    const auto truth_set = detail::sorted_unique(truth);
    if (truth_set.empty()) {
        fail(ErrorCode::EmptyTruth, "recall needs a non-empty ground-truth set");
    }
    const auto kept = detail::sorted_unique(result.kept);
    return static_cast<double>(detail::intersection_size(kept, truth_set)) / static_cast<double>(truth_set.size());
}

/// Jaccard index of two kept sets; 1.0 when both are empty.
inline double selection_overlap(const PruneResult& a, const PruneResult& b) {
    if (a.n_original != b.n_original) {
        fail(ErrorCode::MismatchedUniverse, "selections over " + std::to_string(a.n_original) + " and " +
                                                std::to_string(b.n_original) + " tokens");
    }
    const auto sa = detail::sorted_unique(a.kept);
    const auto sb = detail::sorted_unique(b.kept);
    const std::size_t both = detail::intersection_size(sa, sb);
    const std::size_t either = sa.size() + sb.size() - both;
    return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

// ---------------------------------------------------------------------------
// Brute-force reference. Written independently of similarity.hpp on purpose:
// plain index loops, explicit formulas, full stable sort.

inline double oracle_relevance(const Metric& metric, const float* token, const double* query, std::size_t d) {
    double acc = 0.0;
    if (metric.kind == MetricKind::InnerProduct) {
        for (std::size_t c = 0; c < d; ++c) {
            acc = acc + static_cast<double>(token[c]) * query[c];
        }
        return acc;
    }
    if (metric.kind == MetricKind::Linf) {
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = std::fabs(static_cast<double>(token[c]) - query[c]);
            if (diff > acc) {
                acc = diff;
            }
        }
        return -acc;
    }
    if (metric.kind == MetricKind::L1) {
        for (std::size_t c = 0; c < d; ++c) {
            acc = acc + std::fabs(static_cast<double>(token[c]) - query[c]);
        }
        return -acc;
    }
    const double p = metric.kind == MetricKind::L2 ? 2.0 : metric.p;
    for (std::size_t c = 0; c < d; ++c) {
        const double diff = static_cast<double>(token[c]) - query[c];
        acc = acc + (p == 2.0 ? diff * diff : std::pow(std::fabs(diff), p));
    }
    return -(p == 2.0 ? std::sqrt(acc) : std::pow(acc, 1.0 / p));
}

/// Aggregated relevance of every visual token, computed naively.
inline std::vector<double> oracle_scores(MatrixView db, MatrixView queries, const Metric& metric,
                                         QueryAggregation aggregation) {
    metric.validate();
    if (db.empty() || queries.empty()) {
        fail(ErrorCode::EmptyInput, "oracle needs non-empty inputs");
    }
    if (db.cols() != queries.cols()) {
        fail(ErrorCode::DimensionMismatch, "oracle inputs disagree on dimension");
    }
    const std::size_t n = db.rows();
    const std::size_t m = queries.rows();
    const std::size_t d = db.cols();
    const float* db_data = db.values().data();
    const float* q_data = queries.values().data();

    std::vector<double> scores(n, 0.0);
    if (aggregation == QueryAggregation::MeanPool) {
        std::vector<double> mean(d, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t c = 0; c < d; ++c) {
                mean[c] = mean[c] + static_cast<double>(q_data[j * d + c]);
            }
        }
        for (std::size_t c = 0; c < d; ++c) {
            mean[c] = mean[c] / static_cast<double>(m);
        }
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = oracle_relevance(metric, db_data + i * d, mean.data(), d);
        }
        return scores;
    }

    std::vector<double> query(d);
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        double best = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t c = 0; c < d; ++c) {
                query[c] = static_cast<double>(q_data[j * d + c]);
            }
            const double s = oracle_relevance(metric, db_data + i * d, query.data(), d);
            total = total + s;
            if (j == 0 || s > best) {
                best = s;
            }
        }
        scores[i] = aggregation == QueryAggregation::SumOverQueries ? total : best;
    }
    return scores;
}

/// Top-k by full stable sort of the naive scores; ties keep the lower index.
inline PruneResult oracle_select(MatrixView db, MatrixView queries, const Metric& metric,
                                 QueryAggregation aggregation, std::size_t k) {
    if (k < 1) {
        fail(ErrorCode::InvalidParams, "k must be >= 1");
    }
    const std::vector<double> scores = oracle_scores(db, queries, metric, aggregation);
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end());

    PruneResult result;
    result.n_original = scores.size();
    result.spec = SelectionSpec{TopK{k}, metric, aggregation};
    for (std::size_t index : order) {
        result.scores.push_back(scores[index]);
    }
    result.kept = std::move(order);
    return result;
}

}  // namespace tokensieve::eval
