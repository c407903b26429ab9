#pragma once

namespace spev {

/// Road-plane projective calibration of one camera.
///
/// A pavement point imaged at row v lies at distance lambda / (v - v_h)
/// from the camera. `v_far` and `v_near` are the anchor rows used to
/// calibrate lambda from a known ground gap `d_gap` (meters).
struct CameraGeometry {
    double v_h = 0.0;     ///< horizon (vanishing point) row, fractional pixels
    double lambda = 0.0;  ///< meter * pixels
    double v_far = 0.0;   ///< far anchor row
    double v_near = 0.0;  ///< near anchor row
    double d_gap = 0.0;   ///< meters between the anchors (d_1 - d_2)

    /// Throws DegenerateGeometry unless v_h < v_far < v_near, d_gap > 0
    /// and lambda > 0.
    void validate() const;
};

/// lambda = d_gap / (1 / (v_far - v_h) - 1 / (v_near - v_h)).
double calibrate_lambda(double v_far, double v_near, double v_h, double d_gap);

/// Builds and validates a geometry from anchors.
CameraGeometry make_geometry(double v_far, double v_near, double v_h, double d_gap);

/// Distance in meters of the pavement point at row `v`; BelowHorizon when
/// v <= v_h.
double row_to_distance(double v, const CameraGeometry& geom);

}  // namespace spev
