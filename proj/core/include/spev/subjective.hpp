#pragma once

// Ground-truth visibility from human critical-point markings: each subject
// marks a frame five times, the median row is kept per subject, subject
// medians are averaged, and the averaged row is mapped to distance with
// both calibrations (15 m and 9 m anchor gaps).

#include <cstdint>
#include <span>
#include <string>

#include "spev/geometry.hpp"

namespace spev {

inline constexpr int kRequiredRepetitions = 5;

struct AnnotationRecord {
    std::string session_id;
    std::int64_t frame_index = 0;
    std::string subject_id;
    int repetition = 1;  ///< 1..5
    double v_v = 0.0;    ///< marked row, fractional pixels
    std::string created_at;

    bool operator==(const AnnotationRecord&) const = default;
};

struct SubjectiveVisibility {
    std::int64_t frame_index = 0;
    double v_v = 0.0;  ///< row the distances were evaluated at
    double vis_15 = 0.0;
    double vis_9 = 0.0;
    double vis_mean = 0.0;
    std::size_t n_annotations = 0;
};

/// Median of the marked rows (mean of the middle pair for even counts).
/// Throws NoRecords.
double median_vv(std::span<const AnnotationRecord> records);
double median_vv(std::span<const double> rows);

/// Throws BelowHorizon when v_v is not below both horizons.
SubjectiveVisibility subjective_visibility(double v_v, const CameraGeometry& geom15, const CameraGeometry& geom9);

/// Mean of per-subject median rows, then subjective_visibility of that
/// mean. n_annotations is set to the number of subjects. Throws NoRecords.
SubjectiveVisibility aggregate_subjects(std::span<const double> subject_medians, const CameraGeometry& geom15,
                                        const CameraGeometry& geom9);

}  // namespace spev
