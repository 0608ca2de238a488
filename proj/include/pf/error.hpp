#pragma once

#include <stdexcept>
#include <string>

namespace pf {

// Stable error codes so callers (and tests) can dispatch on the failure
// kind instead of parsing message strings.
enum class Errc {
    BadMagic,
    BadVersion,
    Truncated,
    ExtentOverflow,
    BadExtent,
    TrailingBytes,
    NonFinite,
    EmptyHistory,
    OutOfRange,
    InsufficientHistory,
    AllZero,
    NonDivisible,
    ShapeMismatch,
    EmptySegment,
    CorruptOffsets,
    InvalidArgument,
    IoError,
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadVersion: return "BadVersion";
    case Errc::Truncated: return "Truncated";
    case Errc::ExtentOverflow: return "ExtentOverflow";
    case Errc::BadExtent: return "BadExtent";
    case Errc::TrailingBytes: return "TrailingBytes";
    case Errc::NonFinite: return "NonFinite";
    case Errc::EmptyHistory: return "EmptyHistory";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::AllZero: return "AllZero";
    case Errc::NonDivisible: return "NonDivisible";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptySegment: return "EmptySegment";
    case Errc::CorruptOffsets: return "CorruptOffsets";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond)
        fail(code, what);
}

}  // namespace pf
