// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tokensieve/similarity.hpp"

using namespace tokensieve;
using tokensieve::test::matrix;
using tokensieve::test::random_matrix;

namespace {

const Metric kAllMetrics[] = {
    {MetricKind::L1, 3.0}, {MetricKind::L2, 3.0}, {MetricKind::Lp, 3.0},
    {MetricKind::InnerProduct, 3.0}, {MetricKind::Linf, 3.0},
};

const QueryAggregation kAllAggregations[] = {
    QueryAggregation::MeanPool, QueryAggregation::BestOverQueries, QueryAggregation::SumOverQueries};

double single(const Metric& metric, const TokenMatrix& a, const TokenMatrix& b) {
    return pairwise_scores(a, b, metric).values.at(0);
}

// Naive triple loop: for every visual token, for every text token, for every
// coordinate. Euclidean distance, best over queries.
std::vector<double> l2_best_triple_loop(const TokenMatrix& db, const TokenMatrix& q) {
    std::vector<double> out(db.rows());
    for (std::size_t i = 0; i < db.rows(); ++i) {
        double best = -1e300;
        for (std::size_t j = 0; j < q.rows(); ++j) {
            double sum = 0;
            for (std::size_t c = 0; c < db.cols(); ++c) {
                const double diff = double(db(i, c)) - double(q(j, c));
                sum += diff * diff;
            }
            best = std::max(best, -std::sqrt(sum));
        }
        out[i] = best;
    }
    return out;
}

}  // namespace

TEST(PairwiseScores, InnerProductOnBasis) {
    const TokenMatrix db = matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const TokenMatrix q = matrix(1, 3, {0, 1, 0});
    const ScoreTable table = pairwise_scores(db, q, Metric{MetricKind::InnerProduct});
    EXPECT_EQ(table.values, (std::vector<double>{0, 1, 0}));
}

TEST(PairwiseScores, IdenticalRowIsMaximalUnderL2) {
    const TokenMatrix db = matrix(2, 2, {0.5f, -1.5f, 3, 3});
    const TokenMatrix q = matrix(1, 2, {0.5f, -1.5f});
    const ScoreTable table = pairwise_scores(db, q, Metric{MetricKind::L2});
    EXPECT_EQ(table(0, 0), 0.0);
    EXPECT_LT(table(0, 1), 0.0);
}

TEST(PairwiseScores, ChebyshevExample) {
    const TokenMatrix db = matrix(2, 2, {1, 2, 3, 1});
    const TokenMatrix q = matrix(1, 2, {3, 3});
    EXPECT_EQ(pairwise_scores(db, q, Metric{MetricKind::Linf}).values, (std::vector<double>{-2, -2}));
}

TEST(PairwiseScores, LpWithPThree) {
    const TokenMatrix db = matrix(1, 2, {0, 0});
    const TokenMatrix q = matrix(1, 2, {1, 1});
    EXPECT_NEAR(single(Metric{MetricKind::Lp, 3.0}, db, q), -std::cbrt(2.0), 1e-12);
    EXPECT_NEAR(single(Metric{MetricKind::Lp, 3.0}, db, q), -1.2599, 1e-4);
}

TEST(PairwiseScores, TableLayoutIsQueryMajor) {
    const TokenMatrix db = matrix(3, 1, {0, 1, 2});
    const TokenMatrix q = matrix(2, 1, {10, 20});
    const ScoreTable t = pairwise_scores(db, q, Metric{MetricKind::InnerProduct});
    ASSERT_EQ(t.n_queries, 2u);
    ASSERT_EQ(t.n_tokens, 3u);
    EXPECT_EQ(t(1, 2), 40.0);
    EXPECT_EQ(t(0, 1), 10.0);
}

TEST(PairwiseScores, Errors) {
    const TokenMatrix a = matrix(2, 2, {1, 2, 3, 4});
    const TokenMatrix b = matrix(1, 3, {1, 2, 3});
    const TokenMatrix empty(0, 2, {});
    try {
        pairwise_scores(a, b, Metric{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
    try {
        pairwise_scores(empty, a, Metric{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
    }
    try {
        score_tokens(a, empty, Metric{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
    }
    EXPECT_THROW(score_tokens(a, a, Metric{MetricKind::Lp, 0.0}), Error);
    EXPECT_THROW(score_tokens(a, a, Metric{MetricKind::Lp, -1.0}), Error);
}

TEST(ScoreTokens, MeanOfDuplicatesEqualsSingleQuery) {
    std::mt19937_64 rng(3);
    const TokenMatrix db = random_matrix(20, 6, rng);
    const TokenMatrix q = random_matrix(1, 6, rng);
    std::vector<float> doubled(q.values().begin(), q.values().end());
    doubled.insert(doubled.end(), q.values().begin(), q.values().end());
    const TokenMatrix q2 = matrix(2, 6, doubled);
    for (const Metric& metric : kAllMetrics) {
        const auto one = score_tokens(db, q, metric, QueryAggregation::MeanPool);
        const auto two = score_tokens(db, q2, metric, QueryAggregation::MeanPool);
        EXPECT_EQ(one.scores, two.scores) << to_string(metric.kind);
    }
}

TEST(ScoreTokens, SingleQueryMakesAggregationsAgree) {
    std::mt19937_64 rng(5);
    const TokenMatrix db = random_matrix(30, 8, rng);
    const TokenMatrix q = random_matrix(1, 8, rng);
    for (const Metric& metric : kAllMetrics) {
        const auto mean = score_tokens(db, q, metric, QueryAggregation::MeanPool);
        const auto best = score_tokens(db, q, metric, QueryAggregation::BestOverQueries);
        const auto sum = score_tokens(db, q, metric, QueryAggregation::SumOverQueries);
        EXPECT_EQ(mean.scores, best.scores);
        EXPECT_EQ(mean.scores, sum.scores);
    }
}

TEST(ScoreTokens, BestOverQueriesMatchesTripleLoop) {
    std::mt19937_64 rng(17);
    const TokenMatrix db = random_matrix(32, 16, rng);
    const TokenMatrix q = random_matrix(4, 16, rng);
    const auto expected = l2_best_triple_loop(db, q);
    const auto got = score_tokens(db, q, Metric{MetricKind::L2}, QueryAggregation::BestOverQueries);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_NEAR(got.scores[i], expected[i], 1e-5 * std::abs(expected[i]));
    }
}

TEST(ScoreTokens, AggregationsAgreeWithTable) {
    std::mt19937_64 rng(23);
    const TokenMatrix db = random_matrix(25, 7, rng);
    const TokenMatrix q = random_matrix(5, 7, rng);
    for (const Metric& metric : kAllMetrics) {
        const ScoreTable table = pairwise_scores(db, q, metric);
        const auto best = score_tokens(db, q, metric, QueryAggregation::BestOverQueries);
        const auto sum = score_tokens(db, q, metric, QueryAggregation::SumOverQueries);
        for (std::size_t i = 0; i < db.rows(); ++i) {
            double b = table(0, i);
            double s = 0;
            for (std::size_t j = 0; j < q.rows(); ++j) {
                b = std::max(b, table(j, i));
                s += table(j, i);
            }
            EXPECT_EQ(best.scores[i], b);
            EXPECT_EQ(sum.scores[i], s);
        }
    }
}

TEST(ScoreTokens, CarriesMetricAndAggregation) {
    const TokenMatrix db = matrix(2, 2, {1, 2, 3, 4});
    const auto s = score_tokens(db, db, Metric{MetricKind::Lp, 4.0}, QueryAggregation::SumOverQueries);
    EXPECT_EQ(s.metric.kind, MetricKind::Lp);
    EXPECT_EQ(s.metric.p, 4.0);
    EXPECT_EQ(s.aggregation, QueryAggregation::SumOverQueries);
}

TEST(ScoreTokens, DistanceScoresAreNonPositive) {
    std::mt19937_64 rng(29);
    const TokenMatrix db = random_matrix(40, 9, rng);
    const TokenMatrix q = random_matrix(3, 9, rng);
    for (const Metric& metric : kAllMetrics) {
        if (!metric.is_distance()) {
            continue;
        }
        for (auto agg : kAllAggregations) {
            for (double s : score_tokens(db, q, metric, agg).scores) {
                EXPECT_LE(s, 0.0);
            }
        }
    }
}

// ---- invariants

TEST(SimilarityProperties, Symmetry) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const TokenMatrix a = random_matrix(1, 1 + trial % 17, rng);
        const TokenMatrix b = random_matrix(1, a.cols(), rng);
        for (const Metric& metric : kAllMetrics) {
            EXPECT_EQ(single(metric, a, b), single(metric, b, a));
        }
    }
}

TEST(SimilarityProperties, TranslationInvarianceOfDistances) {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 2 + trial % 31;
        const TokenMatrix db = random_matrix(20, d, rng);
        const TokenMatrix q = random_matrix(3, d, rng);
        const TokenMatrix t = random_matrix(1, d, rng, 5.0f);
        const auto shift = [&](const TokenMatrix& m) {
            std::vector<float> v(m.values().begin(), m.values().end());
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] += t.values()[i % d];
            }
            return matrix(m.rows(), d, v);
        };
        const TokenMatrix db2 = shift(db);
        const TokenMatrix q2 = shift(q);
        for (const Metric& metric : kAllMetrics) {
            if (!metric.is_distance()) {
                continue;
            }
            for (auto agg : kAllAggregations) {
                const auto before = score_tokens(db, q, metric, agg);
                const auto after = score_tokens(db2, q2, metric, agg);
                for (std::size_t i = 0; i < db.rows(); ++i) {
                    EXPECT_NEAR(before.scores[i], after.scores[i], 1e-5 * std::max(1.0, std::abs(before.scores[i])));
                }
            }
        }
    }
}

TEST(SimilarityProperties, InnerProductPositiveScaling) {
    std::mt19937_64 rng(41);
    for (float c : {0.25f, 2.0f, 8.0f}) {  // powers of two keep the float scaling exact
        const TokenMatrix db = random_matrix(50, 12, rng);
        const TokenMatrix q = random_matrix(4, 12, rng);
        std::vector<float> scaled(db.values().begin(), db.values().end());
        for (float& v : scaled) {
            v *= c;
        }
        const TokenMatrix db_scaled = matrix(50, 12, scaled);
        for (auto agg : kAllAggregations) {
            const auto base = score_tokens(db, q, Metric{MetricKind::InnerProduct}, agg);
            const auto up = score_tokens(db_scaled, q, Metric{MetricKind::InnerProduct}, agg);
            std::vector<std::size_t> order_base(50), order_up(50);
            std::iota(order_base.begin(), order_base.end(), 0);
            std::iota(order_up.begin(), order_up.end(), 0);
            std::sort(order_base.begin(), order_base.end(),
                      [&](auto a, auto b) { return base.scores[a] > base.scores[b]; });
            std::sort(order_up.begin(), order_up.end(), [&](auto a, auto b) { return up.scores[a] > up.scores[b]; });
            EXPECT_EQ(order_base, order_up);
            for (std::size_t i = 0; i < 50; ++i) {
                EXPECT_NEAR(up.scores[i], c * base.scores[i], 1e-9 * std::max(1.0, std::abs(up.scores[i])));
            }
        }
    }
}

TEST(SimilarityProperties, L2EqualsLpWithPTwo) {
    std::mt19937_64 rng(43);
    const TokenMatrix db = random_matrix(100, 33, rng);
    const TokenMatrix q = random_matrix(6, 33, rng);
    for (auto agg : kAllAggregations) {
        const auto l2 = score_tokens(db, q, Metric{MetricKind::L2}, agg);
        const auto lp = score_tokens(db, q, Metric{MetricKind::Lp, 2.0}, agg);
        for (std::size_t i = 0; i < l2.size(); ++i) {
            EXPECT_NEAR(l2.scores[i], lp.scores[i], 1e-6);
        }
    }
}

TEST(SimilarityProperties, NormOrderingLinfLpL1) {
    std::mt19937_64 rng(47);
    for (double p : {1.0, 1.5, 2.0, 3.0, 7.0}) {
        const TokenMatrix db = random_matrix(60, 10, rng);
        const TokenMatrix q = random_matrix(1, 10, rng);
        const auto inf = pairwise_scores(db, q, Metric{MetricKind::Linf}).values;
        const auto lp = pairwise_scores(db, q, Metric{MetricKind::Lp, p}).values;
        const auto l1 = pairwise_scores(db, q, Metric{MetricKind::L1}).values;
        for (std::size_t i = 0; i < inf.size(); ++i) {
            // Relevance is negated distance, so the distance ordering flips.
            EXPECT_LE(-inf[i], -lp[i] * (1 + 1e-12)) << p;
            EXPECT_LE(-lp[i], -l1[i] * (1 + 1e-12)) << p;
        }
    }
}

TEST(SimilarityProperties, DeterministicAcrossWorkerCounts) {
    std::mt19937_64 rng(53);
    const TokenMatrix db = random_matrix(777, 48, rng);
    const TokenMatrix q = random_matrix(9, 48, rng);
    for (const Metric& metric : kAllMetrics) {
        for (auto agg : kAllAggregations) {
            const auto serial = score_tokens(db, q, metric, agg, ExecutionOptions{1});
            for (std::size_t workers : {2u, 3u, 8u, 0u}) {
                const auto parallel = score_tokens(db, q, metric, agg, ExecutionOptions{workers});
                ASSERT_EQ(std::memcmp(serial.scores.data(), parallel.scores.data(),
                                      serial.scores.size() * sizeof(double)),
                          0);
            }
            const auto again = score_tokens(db, q, metric, agg);
            EXPECT_EQ(serial.scores, again.scores);
        }
    }
}

// ---- normalize_rows

TEST(NormalizeRows, ThreeFourFive) {
    const TokenMatrix m = normalize_rows(matrix(1, 2, {3, 4}));
    EXPECT_FLOAT_EQ(m(0, 0), 0.6f);
    EXPECT_FLOAT_EQ(m(0, 1), 0.8f);
    EXPECT_TRUE(m.row_normalized());
}

TEST(NormalizeRows, ZeroRowPassesThrough) {
    const TokenMatrix m = normalize_rows(matrix(2, 2, {0, 0, 1, 1}));
    EXPECT_EQ(m(0, 0), 0.0f);
    EXPECT_EQ(m(0, 1), 0.0f);
    EXPECT_NEAR(m(1, 0), std::sqrt(0.5), 1e-7);
}

TEST(NormalizeRows, InnerProductBoundedByOne) {
    std::mt19937_64 rng(59);
    const TokenMatrix db = normalize_rows(random_matrix(200, 24, rng, 10.0f));
    const TokenMatrix q = normalize_rows(random_matrix(5, 24, rng, 0.1f));
    const auto table = pairwise_scores(db, q, Metric{MetricKind::InnerProduct});
    for (double s : table.values) {
        EXPECT_LE(s, 1.0 + 1e-6);
        EXPECT_GE(s, -1.0 - 1e-6);
    }
}

TEST(MetricNames, ParseAndPrint) {
    EXPECT_EQ(parse_metric_kind("LINF"), MetricKind::Linf);
    EXPECT_EQ(parse_metric_kind("ip"), MetricKind::InnerProduct);
    EXPECT_EQ(parse_metric_kind("inner_product"), MetricKind::InnerProduct);
    EXPECT_EQ(parse_aggregation("best"), QueryAggregation::BestOverQueries);
    EXPECT_THROW(parse_metric_kind("cosine"), Error);
    EXPECT_THROW(parse_aggregation("median"), Error);
    for (const Metric& metric : kAllMetrics) {
        EXPECT_EQ(parse_metric_kind(to_string(metric.kind)), metric.kind);
    }
}
