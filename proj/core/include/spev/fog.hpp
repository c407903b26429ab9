#pragma once

// Koschmieder fog synthesis over a road-plane depth map.
//
// Observed luminance at depth d: L = L0 * exp(-k d) + Lf * (1 - exp(-k d)),
// and meteorological visibility is 2.99 / k (5% contrast threshold).

#include <cstdint>
#include <span>
#include <vector>

#include "spev/frame.hpp"
#include "spev/geometry.hpp"

namespace spev {

inline constexpr double kContrastLogThreshold = 2.99;  // -ln(0.05), rounded

double vis_from_k(double k);
double k_from_vis(double vis);

struct FogParams {
    double k = 0.0;      ///< extinction coefficient, 1/m
    double l_f = 0.8;    ///< sky luminance in [0, 1]

    double vis_true() const { return vis_from_k(k); }
    static FogParams from_visibility(double vis, double sky_luminance = 0.8);
};

/// Per-pixel distances; +infinity at and above the horizon row.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> d;

    double operator()(int row, int col) const { return d[static_cast<std::size_t>(row) * width + col]; }
};

DepthMap depth_from_geometry(const CameraGeometry& geom, int width, int height);

/// Throws DimensionMismatch. Infinite-depth pixels become L_f.
GrayFrame apply_fog(const GrayFrame& clear, const DepthMap& depth, const FogParams& fog);

struct SynthFrame {
    GrayFrame frame;
    double vis_true = 0.0;
    double k = 0.0;
};

/// One fogged copy of `clear` per schedule entry (meters, in (0, 2000]).
std::vector<SynthFrame> synth_sequence(const GrayFrame& clear, const CameraGeometry& geom,
                                       std::span<const double> vis_schedule, double sky_luminance = 0.8);

/// Geometric schedule from `from` to `to` meters over `count` frames.
std::vector<double> geometric_schedule(double from, double to, std::size_t count);

/// Layout of a synthetic straight road seen by a fixed camera.
struct SceneSpec {
    int width = 960;
    int height = 540;
    double v_h = 144.0;
    double lambda = 5940.0;             ///< meter * pixels
    double road_left_bottom = 80.0;     ///< road edge columns at the bottom row
    double road_right_bottom = 880.0;
    double pavement_mean = 0.25;
    double pavement_texture = 0.2;      ///< per-pixel std of the pavement
    double shoulder_mean = 0.6;
    double shoulder_texture = 0.05;
    double sky = 0.8;
    int lanes = 3;
    bool dashed_markings = true;
    bool edge_lines = false;            ///< solid border lines inside the road edges
    double edge_line_width_m = 0.2;
    double marking_value = 0.85;
    double dash_length = 9.0;           ///< meters painted
    double dash_gap = 6.0;              ///< meters blank
    double road_width_m = 11.25;
    double marking_width_m = 0.15;
};

/// Clear-day frame for `spec`; the pavement texture depends on `seed`.
GrayFrame make_clear_scene(const SceneSpec& spec, std::uint64_t seed);

/// Geometry whose far/near anchors sit at distances `d_far` / `d_near`.
CameraGeometry scene_geometry(const SceneSpec& spec, double d_far, double d_near);

/// Adds i.i.d. Gaussian noise and clamps to [0, 1].
void add_sensor_noise(GrayFrame& frame, double sigma, std::uint64_t seed);

/// Multiplies every intensity by `gain` and clamps to [0, 1].
void apply_gain(GrayFrame& frame, double gain);

}  // namespace spev
