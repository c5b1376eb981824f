#ifndef WAVEFAULT_ERROR_HPP
#define WAVEFAULT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace wavefault {

enum class ErrorKind {
    // signal_model
    NoCyclesDetected,
    DegenerateStats,
    WindowOutOfRange,
    InsufficientCycles,
    // dtw_core
    EmptyInput,
    BandTooNarrow,
    // relative_features
    LengthMismatch,
    SelfComparison,
    NotReference,
    // pairwise_features
    InsufficientReferences,
    KindMismatch,
    MissingKind,
    // classifiers
    MissingClass,
    LayoutMismatch,
    EmptyBatch,
    // synthgen
    InvalidConfig,
    // bench_cli
    ManifestInvalid,
    ClassImbalanceUnfixable,
    FormatError,
    IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NoCyclesDetected: return "NoCyclesDetected";
    case ErrorKind::DegenerateStats: return "DegenerateStats";
    case ErrorKind::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorKind::InsufficientCycles: return "InsufficientCycles";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::BandTooNarrow: return "BandTooNarrow";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SelfComparison: return "SelfComparison";
    case ErrorKind::NotReference: return "NotReference";
    case ErrorKind::InsufficientReferences: return "InsufficientReferences";
    case ErrorKind::KindMismatch: return "KindMismatch";
    case ErrorKind::MissingKind: return "MissingKind";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::LayoutMismatch: return "LayoutMismatch";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ManifestInvalid: return "ManifestInvalid";
    case ErrorKind::ClassImbalanceUnfixable: return "ClassImbalanceUnfixable";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Input/contract violations, as opposed to environment failures.
    bool is_validation() const noexcept { return kind_ != ErrorKind::IoError; }

private:
    ErrorKind kind_;
};

} // namespace wavefault

#endif // WAVEFAULT_ERROR_HPP
