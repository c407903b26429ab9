#include "spev/contrast.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "spev/error.hpp"

namespace spev {

ContrastProfile row_contrast(const GrayFrame& frame, const RoiMask& roi) {
    if (frame.width() != roi.width() || frame.height() != roi.height()) {
        fail(Errc::DimensionMismatch, fmt::format("frame {}x{} vs ROI {}x{}", frame.width(), frame.height(),
                                                  roi.width(), roi.height()));
    }
    if (roi.count() == 0) fail(Errc::EmptyRoi, "ROI has no pixels");
    ContrastProfile profile;
    for (int r = 0; r < frame.height(); ++r) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int c = 0; c < frame.width(); ++c) {
            if (!roi.contains(r, c)) continue;
            lo = std::min(lo, frame(r, c));
            hi = std::max(hi, frame(r, c));
        }
        if (hi < lo) continue;
        const double sum = hi + lo;
        profile.rows.push_back({r, sum < 1e-9 ? 0.0 : (hi - lo) / sum});
    }
    return profile;
}

double contrast_visibility(const ContrastProfile& profile, const CameraGeometry& geom, double threshold) {
    require(threshold > 0.0 && threshold < 1.0, Errc::InvalidArgument, "threshold must lie in (0, 1)");
    geom.validate();
    for (const auto& row : profile.rows) {
        if (row.row <= geom.v_h) continue;
        if (row.contrast >= threshold) return row_to_distance(row.row, geom);
    }
    return 0.0;
}

double contrast_visibility(const GrayFrame& frame, const RoiMask& roi, const CameraGeometry& geom, double threshold) {
    return contrast_visibility(row_contrast(frame, roi), geom, threshold);
}

}  // namespace spev
