#include "spev/geometry.hpp"

#include <cmath>

#include <fmt/format.h>

#include "spev/error.hpp"

namespace spev {

namespace {
constexpr double kMinDenominator = 1e-9;
}

void CameraGeometry::validate() const {
    if (!(v_h < v_far && v_far < v_near)) {
        fail(Errc::DegenerateGeometry,
             fmt::format("expected horizon < far row < near row, got {} / {} / {}", v_h, v_far, v_near));
    }
    if (!(d_gap > 0.0)) fail(Errc::DegenerateGeometry, "anchor gap must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(Errc::DegenerateGeometry, "lambda must be positive");
}

double calibrate_lambda(double v_far, double v_near, double v_h, double d_gap) {
    if (!(v_h < v_far && v_far < v_near)) {
        fail(Errc::InvalidArgument,
             fmt::format("expected horizon < far row < near row, got {} / {} / {}", v_h, v_far, v_near));
    }
    require(d_gap > 0.0, Errc::InvalidArgument, "anchor gap must be positive");
    const double far_offset = v_far - v_h;
    const double near_offset = v_near - v_h;
    if (std::abs(far_offset) < kMinDenominator || std::abs(near_offset) < kMinDenominator) {
        fail(Errc::DegenerateGeometry, "anchor row coincides with the horizon");
    }
    const double denom = 1.0 / far_offset - 1.0 / near_offset;
    if (std::abs(denom) < kMinDenominator) fail(Errc::DegenerateGeometry, "anchor rows too close together");
    return d_gap / denom;
}

CameraGeometry make_geometry(double v_far, double v_near, double v_h, double d_gap) {
    CameraGeometry g{v_h, calibrate_lambda(v_far, v_near, v_h, d_gap), v_far, v_near, d_gap};
    g.validate();
    return g;
}

double row_to_distance(double v, const CameraGeometry& geom) {
    if (!(v > geom.v_h)) {
        fail(Errc::BelowHorizon, fmt::format("row {} is not below the horizon {}", v, geom.v_h));
    }
    return geom.lambda / (v - geom.v_h);
}

}  // namespace spev
