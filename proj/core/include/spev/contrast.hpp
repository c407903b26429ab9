#pragma once

// Most-distant-visible-row baseline: scan ROI rows from the horizon
// downward and report the distance of the first row whose Michelson
// contrast reaches the 5% threshold.

#include <vector>

#include "spev/frame.hpp"
#include "spev/geometry.hpp"
#include "spev/roi.hpp"

namespace spev {

struct ContrastRow {
    int row = 0;
    double contrast = 0.0;
};

/// One entry per image row holding ROI pixels, top to bottom.
struct ContrastProfile {
    std::vector<ContrastRow> rows;
};

/// Michelson contrast (max - min) / (max + min) per ROI row; rows whose
/// max + min < 1e-9 get 0. Throws EmptyRoi, DimensionMismatch.
ContrastProfile row_contrast(const GrayFrame& frame, const RoiMask& roi);

/// Distance of the topmost ROI row below the horizon with contrast >=
/// `threshold`, or 0 m when none qualifies.
double contrast_visibility(const GrayFrame& frame, const RoiMask& roi, const CameraGeometry& geom,
                           double threshold = 0.05);

double contrast_visibility(const ContrastProfile& profile, const CameraGeometry& geom, double threshold = 0.05);

}  // namespace spev
