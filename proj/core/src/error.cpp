#include "spev/error.hpp"

namespace spev {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::UnreadableFile: return "UnreadableFile";
        case Errc::UnsupportedFormat: return "UnsupportedFormat";
        case Errc::ZeroSizedImage: return "ZeroSizedImage";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::NoLinesFound: return "NoLinesFound";
        case Errc::DegenerateGeometry: return "DegenerateGeometry";
        case Errc::BelowHorizon: return "BelowHorizon";
        case Errc::EmptyRoi: return "EmptyRoi";
        case Errc::AllZeroRoi: return "AllZeroRoi";
        case Errc::EmptySeries: return "EmptySeries";
        case Errc::ZeroBaseline: return "ZeroBaseline";
        case Errc::EmptyModel: return "EmptyModel";
        case Errc::InsufficientData: return "InsufficientData";
        case Errc::SingularDesign: return "SingularDesign";
        case Errc::MalformedModelFile: return "MalformedModelFile";
        case Errc::OverlappingIntervals: return "OverlappingIntervals";
        case Errc::NonPositiveArgument: return "NonPositiveArgument";
        case Errc::NoRecords: return "NoRecords";
        case Errc::ZeroEstimate: return "ZeroEstimate";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::InsufficientCameras: return "InsufficientCameras";
        case Errc::MalformedConfig: return "MalformedConfig";
        case Errc::UnknownCamera: return "UnknownCamera";
        case Errc::UnknownSession: return "UnknownSession";
        case Errc::UnknownFrame: return "UnknownFrame";
        case Errc::EmptyFrameSelection: return "EmptyFrameSelection";
        case Errc::DuplicateRepetition: return "DuplicateRepetition";
        case Errc::InvalidRepetition: return "InvalidRepetition";
        case Errc::SessionClosed: return "SessionClosed";
        case Errc::NoCompleteSessions: return "NoCompleteSessions";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace spev
