// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tokensieve {

enum class ErrorCode {
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    TruncatedHeader,
    TruncatedPayload,
    TrailingData,
    NonFiniteValue,
    IoFailure,
    DimensionMismatch,
    EmptyInput,
    EmptyScores,
    IndexOutOfRange,
    InvalidParams,
    EmptyTruth,
    MismatchedUniverse,
    UnknownProfile,
    ConfigParse,
};

inline constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::EmptyTruth: return "EmptyTruth";
    case ErrorCode::MismatchedUniverse: return "MismatchedUniverse";
    case ErrorCode::UnknownProfile: return "UnknownProfile";
    case ErrorCode::ConfigParse: return "ConfigParse";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI, host bindings) can map it onto exit codes or typed errors.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          m_code(code),
          m_detail(message) {}

    ErrorCode code() const noexcept {
        return m_code;
    }

    /// Message without the code prefix.
    const std::string& detail() const noexcept {
        return m_detail;
    }

private:
    ErrorCode m_code;
    std::string m_detail;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace tokensieve
