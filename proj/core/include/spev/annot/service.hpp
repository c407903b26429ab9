#pragma once

// Annotation use cases independent of the transport: sessions, markings
// with live subjective visibility, frame retrieval and ground-truth export.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spev/annot/store.hpp"
#include "spev/geometry.hpp"
#include "spev/subjective.hpp"

namespace spev {
struct PipelineConfig;
}

namespace spev::annot {

struct AnnotCamera {
    std::string camera_id;
    CameraGeometry geom15;
    CameraGeometry geom9;
    std::map<std::int64_t, std::filesystem::path> frames;
};

struct SubmitResult {
    AnnotationRecord record;
    std::size_t n_repetitions = 0;  ///< for this frame in this session
    double median_v_v = 0.0;
    SubjectiveVisibility visibility;
    SessionStatus status = SessionStatus::Open;
};

class AnnotationService {
public:
    using Clock = std::function<std::string()>;
    using IdSource = std::function<std::string()>;

    AnnotationService(std::vector<AnnotCamera> cameras, std::shared_ptr<AnnotationStore> store, Clock clock = {},
                      IdSource ids = {});

    /// Throws UnknownCamera, EmptyFrameSelection, UnknownFrame.
    Session create_session(const std::string& camera_id, const std::vector<std::int64_t>& frames,
                           const std::string& subject_id);

    /// Throws UnknownSession.
    std::shared_ptr<const SessionState> session(const std::string& session_id) const;

    /// Throws InvalidRepetition, BelowHorizon plus the store's checks.
    SubmitResult submit(const std::string& session_id, std::int64_t frame_index, int repetition, double v_v);

    /// Raw image bytes and their MIME type. Throws UnknownCamera,
    /// UnknownFrame, UnreadableFile.
    std::pair<std::vector<std::uint8_t>, std::string> frame_image(const std::string& camera_id,
                                                                  std::int64_t frame_index) const;

    /// Ground-truth CSV over complete sessions: per frame, each subject's
    /// median row, averaged across subjects. Throws UnknownCamera,
    /// NoCompleteSessions.
    std::string export_ground_truth(const std::string& camera_id) const;

    const AnnotCamera& camera(const std::string& camera_id) const;
    const AnnotationStore& store() const noexcept { return *store_; }

private:
    std::map<std::string, AnnotCamera> cameras_;
    std::shared_ptr<AnnotationStore> store_;
    Clock clock_;
    IdSource ids_;
};

/// Cameras from a pipeline config: geometry from calibration artifacts when
/// present, otherwise from the configured horizon; frames from the
/// camera's manifest. Cameras lacking both a horizon and artifacts are
/// skipped.
std::vector<AnnotCamera> cameras_from_config(const PipelineConfig& config);

/// UTC timestamp, ISO 8601 with milliseconds.
std::string utc_now();

/// 128-bit random hex identifier.
std::string random_id();

}  // namespace spev::annot
