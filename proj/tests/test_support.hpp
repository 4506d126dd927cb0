// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tokensieve/token_matrix.hpp"

namespace tokensieve::test {

inline TokenMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, float scale = 1.0f) {
    std::normal_distribution<float> dist(0.0f, scale);
    std::vector<float> values(rows * cols);
    for (float& v : values) {
        v = dist(rng);
    }
    return TokenMatrix(rows, cols, std::move(values));
}

inline TokenMatrix matrix(std::size_t rows, std::size_t cols, std::vector<float> values) {
    return TokenMatrix(rows, cols, std::move(values));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::uint64_t counter = 0;
        std::random_device seed;
        m_path = std::filesystem::temp_directory_path() /
                 ("tokensieve_test_" + std::to_string(seed()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(m_path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(m_path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const {
        return m_path / name;
    }
    const std::filesystem::path& path() const {
        return m_path;
    }

private:
    std::filesystem::path m_path;
};

}  // namespace tokensieve::test
