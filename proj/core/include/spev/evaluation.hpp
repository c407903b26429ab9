#pragma once

// Relative-error metrics and leave-one-camera-out validation.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spev/model.hpp"

namespace spev {

enum class ApeDenominator { Estimate, Reference };

/// Signed percentage error (est - ref) / est * 100, or divided by ref with
/// ApeDenominator::Reference. Throws ZeroEstimate on a zero denominator.
double ape(double vis_est, double vis_ref, ApeDenominator denominator = ApeDenominator::Estimate);

struct EvalRow {
    std::int64_t frame_index = 0;
    double vis_est = 0.0;
    double vis_ref = 0.0;
    double ape_percent = 0.0;
    std::string estimator = "spev";
    double h_r = 0.0;
};

struct EvalSummary {
    std::size_t n = 0;
    double frac_under_10pct = 0.0;
    double frac_under_20pct = 0.0;
    double min_ape = 0.0;
    double max_ape = 0.0;
    double mean_abs_ape = 0.0;
};

struct EvalReport {
    std::string camera_id;
    std::vector<EvalRow> rows;
    EvalSummary summary;
};

/// Threshold fractions use |APE|. Throws EmptyInput.
EvalSummary summarize(std::span<const EvalRow> rows);

struct LabelledSample {
    std::int64_t frame_index = 0;
    double h_r = 0.0;
    double vis = 0.0;  ///< reference visibility, meters
};

struct CameraDataset {
    std::vector<LabelledSample> samples;  ///< frame order
    bool test = false;
};

struct FitConfig {
    std::vector<FitInterval> intervals = default_fit_intervals();
    FlipSpec flip;
    ApeDenominator denominator = ApeDenominator::Estimate;
};

/// Called once per fold with the held-out camera and the cameras trained on.
using FoldObserver = std::function<void(const std::string& held_out, const std::vector<std::string>& trained_on)>;

/// Model fitted on every camera except `held_out`, then run over the held
/// out samples in order with continuity tracking.
EvalReport evaluate_fold(const std::map<std::string, CameraDataset>& datasets, const std::string& held_out,
                         const FitConfig& config, PiecewiseModel* fitted = nullptr);

/// Runs one fold per camera flagged `test`, or per camera when none is
/// flagged. Throws InsufficientCameras with fewer than two cameras.
std::map<std::string, EvalReport> leave_one_out(const std::map<std::string, CameraDataset>& datasets,
                                                const FitConfig& config, const FoldObserver& observer = {});

/// Sequential prediction over an H_r series; each estimate seeds the next.
std::vector<Prediction> track(const PiecewiseModel& model, std::span<const double> h_r);

/// Spearman rank correlation with average ranks for ties. Throws
/// InvalidArgument on size mismatch or fewer than two points.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace spev
