// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tokensieve/error.hpp"

namespace tokensieve {

/// Element type of the stored payload. In memory everything is float32.
enum class ElementType : std::uint8_t {
    float32 = 0,
    float16 = 1,
};

inline constexpr std::size_t element_width(ElementType type) {
    return type == ElementType::float16 ? 2 : 4;
}

inline constexpr const char* to_string(ElementType type) {
    return type == ElementType::float16 ? "float16" : "float32";
}

// IEEE 754 binary16 conversions. float -> half rounds to nearest even,
// overflow goes to infinity and NaN stays NaN (quiet).
inline std::uint16_t float_to_half(float value) {
    constexpr std::uint32_t f32_infinity = 255u << 23;
    constexpr std::uint32_t f16_max = (127u + 16u) << 23;
    constexpr std::uint32_t denorm_magic_bits = ((127u - 15u) + (23u - 10u) + 1u) << 23;

    std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
    const std::uint32_t sign = bits & 0x80000000u;
    bits ^= sign;

    std::uint16_t out = 0;
    if (bits >= f16_max) {
        out = bits > f32_infinity ? 0x7e00 : 0x7c00;
    } else if (bits < (113u << 23)) {
        const float shifted = std::bit_cast<float>(bits) + std::bit_cast<float>(denorm_magic_bits);
        out = static_cast<std::uint16_t>(std::bit_cast<std::uint32_t>(shifted) - denorm_magic_bits);
    } else {
        const std::uint32_t mant_odd = (bits >> 13) & 1u;
        bits += (static_cast<std::uint32_t>(15 - 127) << 23) + 0xfffu;
        bits += mant_odd;
        out = static_cast<std::uint16_t>(bits >> 13);
    }
    return static_cast<std::uint16_t>(out | (sign >> 16));
}

inline float half_to_float(std::uint16_t half) {
    const std::uint32_t sign = static_cast<std::uint32_t>(half & 0x8000u) << 16;
    const std::uint32_t exponent = (half >> 10) & 0x1fu;
    const std::uint32_t mantissa = half & 0x3ffu;

    if (exponent == 0) {
        const float magnitude = std::ldexp(static_cast<float>(mantissa), -24);
        return sign ? -magnitude : magnitude;
    }
    if (exponent == 31) {
        return std::bit_cast<float>(sign | 0x7f800000u | (mantissa << 13));
    }
    return std::bit_cast<float>(sign | ((exponent + 112u) << 23) | (mantissa << 13));
}

/// Non-owning row-major view over rows x cols float32 values.
class MatrixView {
public:
    MatrixView() = default;

    MatrixView(std::span<const float> values, std::size_t rows, std::size_t cols)
        : m_values(values),
          m_rows(rows),
          m_cols(cols) {
        if (cols == 0) {
            fail(ErrorCode::DimensionMismatch, "matrix must have at least one column");
        }
        if (values.size() != rows * cols) {
            fail(ErrorCode::DimensionMismatch,
                 "buffer holds " + std::to_string(values.size()) + " values, expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
        }
    }

    std::size_t rows() const noexcept {
        return m_rows;
    }
    std::size_t cols() const noexcept {
        return m_cols;
    }
    bool empty() const noexcept {
        return m_rows == 0;
    }
    std::span<const float> values() const noexcept {
        return m_values;
    }
    std::span<const float> row(std::size_t index) const {
        return m_values.subspan(index * m_cols, m_cols);
    }
    float operator()(std::size_t r, std::size_t c) const {
        return m_values[r * m_cols + c];
    }

private:
    std::span<const float> m_values;
    std::size_t m_rows = 0;
    std::size_t m_cols = 1;
};

/// Returns the index of the first non-finite value, or values.size() if all are finite.
inline std::size_t first_non_finite(std::span<const float> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            return i;
        }
    }
    return values.size();
}

/**
 * @brief Owning N x d matrix of token embeddings (one token per row).
 *
 * Values are always held as float32. `source_type()` records the element type
 * the data originated from; a float16-sourced matrix holds only values that are
 * exactly representable in binary16, so writing it back as float16 is lossless.
 * Instances are immutable after construction.
 */
class TokenMatrix {
public:
    TokenMatrix() = default;

    TokenMatrix(std::size_t rows,
                std::size_t cols,
                std::vector<float> values,
                ElementType source = ElementType::float32,
                bool row_normalized = false)
        : m_rows(rows),
          m_cols(cols),
          m_source(source),
          m_row_normalized(row_normalized),
          m_values(std::move(values)) {
        if (cols == 0) {
            fail(ErrorCode::DimensionMismatch, "matrix must have at least one column");
        }
        if (m_values.size() != rows * cols) {
            fail(ErrorCode::DimensionMismatch,
                 "data length " + std::to_string(m_values.size()) + " != " + std::to_string(rows) + "x" +
                     std::to_string(cols));
        }
        const std::size_t bad = first_non_finite(m_values);
        if (bad != m_values.size()) {
            fail(ErrorCode::NonFiniteValue, "non-finite value at element " + std::to_string(bad));
        }
        if (source == ElementType::float16) {
            for (std::size_t i = 0; i < m_values.size(); ++i) {
                if (half_to_float(float_to_half(m_values[i])) != m_values[i]) {
                    fail(ErrorCode::InvalidParams,
                         "element " + std::to_string(i) + " is not representable as float16");
                }
            }
        }
    }

    static TokenMatrix from_view(MatrixView view) {
        return TokenMatrix(view.rows(), view.cols(), {view.values().begin(), view.values().end()});
    }

    /// Copy with every value rounded to the nearest float16, tagged as float16-sourced.
    TokenMatrix to_float16() const {
        std::vector<float> rounded(m_values.size());
        for (std::size_t i = 0; i < m_values.size(); ++i) {
            rounded[i] = half_to_float(float_to_half(m_values[i]));
        }
        return TokenMatrix(m_rows, m_cols, std::move(rounded), ElementType::float16, false);
    }

    std::size_t rows() const noexcept {
        return m_rows;
    }
    std::size_t cols() const noexcept {
        return m_cols;
    }
    bool empty() const noexcept {
        return m_rows == 0;
    }
    ElementType source_type() const noexcept {
        return m_source;
    }
    bool row_normalized() const noexcept {
        return m_row_normalized;
    }
    std::span<const float> values() const noexcept {
        return m_values;
    }
    std::span<const float> row(std::size_t index) const {
        return values().subspan(index * m_cols, m_cols);
    }
    float operator()(std::size_t r, std::size_t c) const {
        return m_values[r * m_cols + c];
    }

    MatrixView view() const {
        return MatrixView(m_values, m_rows, m_cols);
    }
    operator MatrixView() const {  // NOLINT(google-explicit-constructor)
        return view();
    }

    friend bool operator==(const TokenMatrix& a, const TokenMatrix& b) {
        return a.m_rows == b.m_rows && a.m_cols == b.m_cols && a.m_source == b.m_source &&
               a.m_values == b.m_values;
    }

private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 1;
    ElementType m_source = ElementType::float32;
    bool m_row_normalized = false;
    std::vector<float> m_values;
};

}  // namespace tokensieve
