#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spev {

/// Failure categories surfaced by the library. Each maps onto one named
/// error condition of an operation; the CLI and the HTTP service translate
/// them into exit codes and status codes respectively.
enum class Errc {
    InvalidArgument,
    UnreadableFile,
    UnsupportedFormat,
    ZeroSizedImage,
    DimensionMismatch,
    NoLinesFound,
    DegenerateGeometry,
    BelowHorizon,
    EmptyRoi,
    AllZeroRoi,
    EmptySeries,
    ZeroBaseline,
    EmptyModel,
    InsufficientData,
    SingularDesign,
    MalformedModelFile,
    OverlappingIntervals,
    NonPositiveArgument,
    NoRecords,
    ZeroEstimate,
    EmptyInput,
    InsufficientCameras,
    MalformedConfig,
    UnknownCamera,
    UnknownSession,
    UnknownFrame,
    EmptyFrameSelection,
    DuplicateRepetition,
    InvalidRepetition,
    SessionClosed,
    NoCompleteSessions,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool condition, Errc code, const std::string& what) {
    if (!condition) fail(code, what);
}

}  // namespace spev
