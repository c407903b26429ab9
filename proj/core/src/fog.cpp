#include "spev/fog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "spev/error.hpp"

namespace spev {

namespace {
constexpr double kMaxScheduleVisibility = 2000.0;
}

double vis_from_k(double k) {
    if (!(k > 0.0)) fail(Errc::NonPositiveArgument, fmt::format("extinction coefficient {} must be positive", k));
    return kContrastLogThreshold / k;
}

double k_from_vis(double vis) {
    if (!(vis > 0.0)) fail(Errc::NonPositiveArgument, fmt::format("visibility {} must be positive", vis));
    return kContrastLogThreshold / vis;
}

FogParams FogParams::from_visibility(double vis, double sky_luminance) {
    require(sky_luminance >= 0.0 && sky_luminance <= 1.0, Errc::InvalidArgument, "sky luminance outside [0, 1]");
    return {k_from_vis(vis), sky_luminance};
}

DepthMap depth_from_geometry(const CameraGeometry& geom, int width, int height) {
    require(width >= 1 && height >= 1, Errc::InvalidArgument, "depth map dimensions must be positive");
    DepthMap map{width, height, std::vector<double>(static_cast<std::size_t>(width) * height)};
    for (int r = 0; r < height; ++r) {
        const double d = r > geom.v_h ? geom.lambda / (r - geom.v_h) : std::numeric_limits<double>::infinity();
        std::fill_n(map.d.begin() + static_cast<std::ptrdiff_t>(r) * width, width, d);
    }
    return map;
}

GrayFrame apply_fog(const GrayFrame& clear, const DepthMap& depth, const FogParams& fog) {
    if (clear.width() != depth.width || clear.height() != depth.height) {
        fail(Errc::DimensionMismatch, fmt::format("frame {}x{} vs depth {}x{}", clear.width(), clear.height(),
                                                  depth.width, depth.height));
    }
    require(fog.k >= 0.0, Errc::InvalidArgument, "extinction coefficient must be non-negative");
    GrayFrame out(clear.width(), clear.height());
    out.copy_metadata(clear);
    const auto src = clear.pixels();
    auto dst = out.pixels();
    // Depth is usually constant along rows; cache the transmission.
    double last_d = std::numeric_limits<double>::quiet_NaN();
    double t = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double d = depth.d[i];
        if (d != last_d) {
            t = std::isinf(d) ? 0.0 : std::exp(-fog.k * d);
            last_d = d;
        }
        dst[i] = std::clamp(src[i] * t + fog.l_f * (1.0 - t), 0.0, 1.0);
    }
    return out;
}

std::vector<SynthFrame> synth_sequence(const GrayFrame& clear, const CameraGeometry& geom,
                                       std::span<const double> vis_schedule, double sky_luminance) {
    for (double v : vis_schedule) {
        if (!(v > 0.0 && v <= kMaxScheduleVisibility)) {
            fail(Errc::InvalidArgument, fmt::format("scheduled visibility {} outside (0, 2000]", v));
        }
    }
    std::vector<SynthFrame> out;
    if (vis_schedule.empty()) return out;
    const auto depth = depth_from_geometry(geom, clear.width(), clear.height());
    out.reserve(vis_schedule.size());
    for (std::size_t i = 0; i < vis_schedule.size(); ++i) {
        const auto fog = FogParams::from_visibility(vis_schedule[i], sky_luminance);
        auto frame = apply_fog(clear, depth, fog);
        frame.frame_index = static_cast<std::int64_t>(i);
        out.push_back({std::move(frame), vis_schedule[i], fog.k});
    }
    return out;
}

std::vector<double> geometric_schedule(double from, double to, std::size_t count) {
    require(from > 0.0 && to > 0.0, Errc::NonPositiveArgument, "schedule endpoints must be positive");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = from;
        return out;
    }
    const double ratio = to / from;
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = from * std::pow(ratio, static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return out;
}

GrayFrame make_clear_scene(const SceneSpec& spec, std::uint64_t seed) {
    require(spec.v_h >= 0.0 && spec.v_h < spec.height - 2, Errc::InvalidArgument, "horizon must lie in the frame");
    require(spec.lambda > 0.0, Errc::InvalidArgument, "lambda must be positive");
    GrayFrame frame(spec.width, spec.height);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> pavement(spec.pavement_mean, spec.pavement_texture);
    std::normal_distribution<double> shoulder(spec.shoulder_mean, spec.shoulder_texture);

    const double center = 0.5 * (spec.road_left_bottom + spec.road_right_bottom);
    const double bottom = spec.height - 1;
    for (int r = 0; r < spec.height; ++r) {
        const double t = (r - spec.v_h) / (bottom - spec.v_h);  // 0 at horizon, 1 at bottom row
        const double left = center + (spec.road_left_bottom - center) * t;
        const double right = center + (spec.road_right_bottom - center) * t;
        const double d = r > spec.v_h ? spec.lambda / (r - spec.v_h) : 0.0;
        const double road_px = right - left;
        const double mark_half = std::max(0.5, 0.5 * spec.marking_width_m / spec.road_width_m * road_px);
        const double edge_w = std::max(1.0, spec.edge_line_width_m / spec.road_width_m * road_px);
        const bool painted =
            spec.dashed_markings && r > spec.v_h && std::fmod(d, spec.dash_length + spec.dash_gap) < spec.dash_length;
        for (int c = 0; c < spec.width; ++c) {
            double v;
            if (r <= spec.v_h) {
                v = spec.sky;
            } else if (c >= left && c <= right) {
                v = pavement(rng);
                if (spec.edge_lines && r > spec.v_h && (c - left < edge_w || right - c < edge_w)) v = spec.marking_value;
                if (painted) {
                    for (int lane = 1; lane < spec.lanes; ++lane) {
                        const double xm = left + road_px * lane / spec.lanes;
                        if (std::abs(c - xm) <= mark_half) v = spec.marking_value;
                    }
                }
            } else {
                v = shoulder(rng);
            }
            frame(r, c) = std::clamp(v, 0.0, 1.0);
        }
    }
    return frame;
}

CameraGeometry scene_geometry(const SceneSpec& spec, double d_far, double d_near) {
    require(d_far > d_near && d_near > 0.0, Errc::InvalidArgument, "need d_far > d_near > 0");
    const double v_far = spec.v_h + spec.lambda / d_far;
    const double v_near = spec.v_h + spec.lambda / d_near;
    return make_geometry(v_far, v_near, spec.v_h, d_far - d_near);
}

void add_sensor_noise(GrayFrame& frame, double sigma, std::uint64_t seed) {
    require(sigma >= 0.0, Errc::InvalidArgument, "noise sigma must be non-negative");
    if (sigma == 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : frame.pixels()) v = std::clamp(v + noise(rng), 0.0, 1.0);
}

void apply_gain(GrayFrame& frame, double gain) {
    require(gain > 0.0, Errc::InvalidArgument, "gain must be positive");
    for (double& v : frame.pixels()) v = std::clamp(v * gain, 0.0, 1.0);
}

}  // namespace spev
