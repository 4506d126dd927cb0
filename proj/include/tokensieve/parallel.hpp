// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tokensieve {

struct ExecutionOptions {
    /// 0 selects std::thread::hardware_concurrency().
    std::size_t workers = 1;
};

inline std::size_t resolve_workers(std::size_t requested) {
    if (requested != 0) {
        return requested;
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous slices of [0, count). Each index is
/// visited by exactly one worker, so per-index results do not depend on the
/// worker count.
template <typename Body>
void parallel_for(std::size_t count, const ExecutionOptions& options, Body&& body) {
    const std::size_t workers = std::min(resolve_workers(options.workers), std::max<std::size_t>(count, 1));
    if (workers <= 1 || count < 2) {
        body(std::size_t{0}, count);
        return;
    }

    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(count, begin + chunk);
            if (begin >= end) {
                break;
            }
            threads.emplace_back([&body, &errors, w, begin, end] {
                try {
                    body(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& error : errors) {
        if (error) {
            std::rethrow_exception(error);
        }
    }
}

}  // namespace tokensieve
