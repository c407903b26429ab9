#include "spev/subjective.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "spev/error.hpp"

namespace spev {

double median_vv(std::span<const double> rows) {
    if (rows.empty()) fail(Errc::NoRecords, "no markings to take a median of");
    std::vector<double> v(rows.begin(), rows.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double median_vv(std::span<const AnnotationRecord> records) {
    std::vector<double> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(r.v_v);
    return median_vv(std::span<const double>(rows));
}

SubjectiveVisibility subjective_visibility(double v_v, const CameraGeometry& geom15, const CameraGeometry& geom9) {
    SubjectiveVisibility out;
    out.v_v = v_v;
    out.vis_15 = row_to_distance(v_v, geom15);
    out.vis_9 = row_to_distance(v_v, geom9);
    out.vis_mean = 0.5 * (out.vis_15 + out.vis_9);
    out.n_annotations = 1;
    return out;
}

SubjectiveVisibility aggregate_subjects(std::span<const double> subject_medians, const CameraGeometry& geom15,
                                        const CameraGeometry& geom9) {
    if (subject_medians.empty()) fail(Errc::NoRecords, "no subject medians to aggregate");
    const double mean =
        std::accumulate(subject_medians.begin(), subject_medians.end(), 0.0) / static_cast<double>(subject_medians.size());
    auto out = subjective_visibility(mean, geom15, geom9);
    out.n_annotations = subject_medians.size();
    return out;
}

}  // namespace spev
