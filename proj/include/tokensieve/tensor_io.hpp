// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// .temb container, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "TEMB"
//   4       2     version (u16, = 1)
//   6       1     dtype code (u8, 0 = float32, 1 = float16)
//   7       8     rows (u64)
//   15      8     cols (u64)
//   23      ...   payload, rows * cols * width(dtype) bytes, row-major
//
// The file must end exactly at the end of the payload.

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tokensieve/error.hpp"
#include "tokensieve/token_matrix.hpp"

namespace tokensieve {

inline constexpr std::array<char, 4> kTembMagic = {'T', 'E', 'M', 'B'};
inline constexpr std::uint16_t kTembVersion = 1;
inline constexpr std::size_t kTembHeaderSize = 4 + 2 + 1 + 8 + 8;

static_assert(kTembHeaderSize == 23);

struct MatrixHeader {
    std::uint16_t version = kTembVersion;
    ElementType dtype = ElementType::float32;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
};

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
    }
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
    }
    return static_cast<T>(value);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_header(const MatrixHeader& header) {
    std::vector<std::uint8_t> out;
    out.reserve(kTembHeaderSize);
    out.insert(out.end(), kTembMagic.begin(), kTembMagic.end());
    detail::put_le<std::uint16_t>(out, header.version);
    detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(header.dtype));
    detail::put_le<std::uint64_t>(out, header.rows);
    detail::put_le<std::uint64_t>(out, header.cols);
    return out;
}

/// Parses and validates a header; does not look at the payload.
inline MatrixHeader decode_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kTembHeaderSize) {
        fail(ErrorCode::TruncatedHeader,
             "file has " + std::to_string(bytes.size()) + " bytes, header needs " +
                 std::to_string(kTembHeaderSize) + " (offset " + std::to_string(bytes.size()) + ")");
    }
    if (std::memcmp(bytes.data(), kTembMagic.data(), kTembMagic.size()) != 0) {
        fail(ErrorCode::BadMagic, "expected \"TEMB\" at byte offset 0");
    }
    MatrixHeader header;
    header.version = detail::get_le<std::uint16_t>(bytes, 4);
    if (header.version != kTembVersion) {
        fail(ErrorCode::UnsupportedVersion,
             "version " + std::to_string(header.version) + " at byte offset 4, supported: 1");
    }
    const auto dtype_code = detail::get_le<std::uint8_t>(bytes, 6);
    if (dtype_code > 1) {
        fail(ErrorCode::UnsupportedDtype, "dtype code " + std::to_string(dtype_code) + " at byte offset 6");
    }
    header.dtype = static_cast<ElementType>(dtype_code);
    header.rows = detail::get_le<std::uint64_t>(bytes, 7);
    header.cols = detail::get_le<std::uint64_t>(bytes, 15);
    if (header.cols == 0) {
        fail(ErrorCode::DimensionMismatch, "cols must be >= 1 (byte offset 15)");
    }
    return header;
}

/// Decodes a complete .temb image held in memory.
inline TokenMatrix decode_matrix(std::span<const std::uint8_t> bytes) {
    const MatrixHeader header = decode_header(bytes);
    const std::size_t width = element_width(header.dtype);
    const std::uint64_t max_elements = (std::numeric_limits<std::uint64_t>::max() - kTembHeaderSize) / width;
    if (header.rows != 0 && header.cols > max_elements / header.rows) {
        fail(ErrorCode::TruncatedPayload, "declared shape overflows the addressable payload size");
    }
    const std::uint64_t count = header.rows * header.cols;
    const std::uint64_t expected = kTembHeaderSize + count * width;
    if (bytes.size() < expected) {
        fail(ErrorCode::TruncatedPayload,
             "payload ends at byte offset " + std::to_string(bytes.size()) + ", expected " +
                 std::to_string(expected));
    }
    if (bytes.size() > expected) {
        fail(ErrorCode::TrailingData,
             std::to_string(bytes.size() - expected) + " unexpected bytes from byte offset " +
                 std::to_string(expected));
    }

    std::vector<float> values(static_cast<std::size_t>(count));
    const std::uint8_t* payload = bytes.data() + kTembHeaderSize;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (header.dtype == ElementType::float16) {
            values[i] = half_to_float(detail::get_le<std::uint16_t>(bytes, kTembHeaderSize + i * 2));
        } else {
            std::uint32_t bits = 0;
            for (std::size_t b = 0; b < 4; ++b) {
                bits |= static_cast<std::uint32_t>(payload[i * 4 + b]) << (8 * b);
            }
            values[i] = std::bit_cast<float>(bits);
        }
        if (!std::isfinite(values[i])) {
            fail(ErrorCode::NonFiniteValue,
                 "element " + std::to_string(i) + " (byte offset " +
                     std::to_string(kTembHeaderSize + i * width) + ")");
        }
    }
    return TokenMatrix(static_cast<std::size_t>(header.rows), static_cast<std::size_t>(header.cols),
                       std::move(values), header.dtype);
}

/// Encodes a matrix using its source element type.
inline std::vector<std::uint8_t> encode_matrix(const TokenMatrix& m) {
    MatrixHeader header;
    header.dtype = m.source_type();
    header.rows = m.rows();
    header.cols = m.cols();
    std::vector<std::uint8_t> out = encode_header(header);
    out.reserve(kTembHeaderSize + m.values().size() * element_width(header.dtype));
    for (float v : m.values()) {
        if (header.dtype == ElementType::float16) {
            detail::put_le<std::uint16_t>(out, float_to_half(v));
        } else {
            detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
        }
    }
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        fail(ErrorCode::IoFailure, "read error on " + path.string());
    }
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::IoFailure, "write error on " + path.string());
    }
}

inline TokenMatrix load_matrix(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_matrix(bytes);
}

inline void save_matrix(const TokenMatrix& m, const std::filesystem::path& path) {
    write_file_bytes(path, encode_matrix(m));
}

}  // namespace tokensieve
