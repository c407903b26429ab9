#pragma once

// Config-driven orchestration: calibrate, baseline, estimate, fit, eval and
// synthetic corpus generation. Every artifact lands under output_dir and
// carries the config hash.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spev/entropy.hpp"
#include "spev/evaluation.hpp"
#include "spev/geometry.hpp"
#include "spev/model.hpp"
#include "spev/roi.hpp"

namespace spev {

struct SmoothingConfig {
    double sigma = 1.0;
    int radius = 2;
};

struct RoiConfig {
    double edge_sigma = 2.0;  ///< pre-smoothing before edge detection
    double canny_lo = 0.02;
    double canny_hi = 0.05;
    int hough_threshold = 100;
    double h_margin = 10.0;
};

struct CameraConfig {
    std::string camera_id;
    std::optional<double> v_h;  ///< overrides the detected horizon
    double far_row_15 = 0.0;
    double far_row_9 = 0.0;
    double near_row = 0.0;
    double d15 = 15.0;
    double d9 = 9.0;
    std::optional<std::vector<Point2>> roi_polygon;
    std::filesystem::path clear_frame;
    std::filesystem::path clear_manifest;
    std::filesystem::path manifest;
    std::filesystem::path labels;
    bool test = false;
};

enum class Estimator { Spev, Contrast, Both };

struct SynthConfig {
    int cameras = 6;
    std::vector<std::string> test_cameras;
    int width = 960;
    int height = 540;
    double v_h = 144.0;
    double near_distance = 15.0;  ///< distance imaged by the bottom row
    double anchor_near = 20.0;    ///< near calibration anchor distance
    int frames = 200;
    int clear_frames = 10;
    double vis_from = 600.0;
    double vis_to = 20.0;
    double sensor_noise = 0.01;
    double label_noise = 2.0;
    double sky = 0.8;
    double gain_min = 0.8;
    double gain_max = 1.0;
    std::uint64_t seed = 1;
    std::string image_format = "pgm";  ///< pgm or png
    double pavement_texture = 0.2;
    bool edge_lines = false;
    bool dashed_markings = true;
};

struct PipelineConfig {
    std::filesystem::path base_dir;  ///< relative paths resolve here
    std::filesystem::path output_dir = "out";
    SmoothingConfig smoothing;
    bool denoise = false;
    double rejection_k = 3.0;
    FlipSpec flip;
    std::filesystem::path model_path;  ///< empty: bundled coefficient table
    std::vector<FitInterval> intervals = default_fit_intervals();
    ApeDenominator denominator = ApeDenominator::Estimate;
    double contrast_threshold = 0.05;
    Estimator estimator = Estimator::Spev;
    RoiConfig roi;
    std::vector<CameraConfig> cameras;
    std::optional<SynthConfig> synth;

    /// Compact JSON of the parsed document with output_dir removed.
    std::string canonical;
    /// SHA-256 (hex) of `canonical`.
    std::string hash;

    const CameraConfig& camera(const std::string& id) const;
    std::filesystem::path camera_dir(const std::string& id) const;
};

/// Throws MalformedConfig, UnreadableFile.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

/// Applies a JSON merge patch (RFC 7396) and re-derives the hash; the
/// output directory and base directory are kept.
PipelineConfig merge_config(const PipelineConfig& config, const std::string& merge_patch);

struct Calibration {
    std::string camera_id;
    CameraGeometry geom15;
    CameraGeometry geom9;
    RoiMask roi;
    double horizon_detected = 0.0;  ///< NaN when no detection ran
};

/// Camera artifacts written by run_calibrate.
Calibration load_calibration(const PipelineConfig& config, const std::string& camera_id);

/// Detects lane borders on the clear frame (unless a polygon is given),
/// derives both geometries and writes geometry.json, roi.json, roi.pgm.
Calibration run_calibrate(const PipelineConfig& config, const std::string& camera_id);

/// Entropy of the clear manifest, Hampel-filtered; writes baseline.json.
ClearBaseline run_baseline(const PipelineConfig& config, const std::string& camera_id);
ClearBaseline load_baseline(const PipelineConfig& config, const std::string& camera_id);

struct EstimateStats {
    std::size_t frames = 0;
    std::size_t errors = 0;
    std::filesystem::path csv;
};

/// Streams the camera's manifest (or `manifest_override`) through entropy,
/// ratio and tracking; writes estimates.csv, entropy.csv and a full
/// precision entropy cache.
EstimateStats run_estimate(const PipelineConfig& config, const std::string& camera_id,
                           const std::optional<std::filesystem::path>& manifest_override = std::nullopt);

/// H_r series of a camera's manifest, taken from the entropy cache when it
/// matches the config hash, otherwise computed and cached.
EntropySeries entropy_series(const PipelineConfig& config, const std::string& camera_id);

/// Labelled samples of a camera: entropy series joined with its labels CSV.
CameraDataset camera_dataset(const PipelineConfig& config, const CameraConfig& camera);

/// Fits on cameras not flagged test (all cameras if every one is flagged)
/// and writes model.json.
PiecewiseModel run_fit(const PipelineConfig& config);

/// Leave-one-camera-out over the flagged test cameras; writes report,
/// plot-data and summary files under eval/.
std::map<std::string, EvalReport> run_eval(const PipelineConfig& config);

struct SynthStats {
    std::filesystem::path config_path;
    std::size_t frames = 0;
};

/// Generates a synthetic multi-camera corpus plus a ready-to-run config
/// in `out_dir`. Throws MalformedConfig when the config has no synth block.
SynthStats run_synth(const PipelineConfig& config, const std::filesystem::path& out_dir,
                     std::optional<std::uint64_t> seed = std::nullopt);

std::string sha256_hex(const std::string& data);

}  // namespace spev
