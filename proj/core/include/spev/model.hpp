#pragma once

// Piecewise-stationary visibility model.
//
// Visibility is a per-interval polynomial in the entropy ratio x = H_r:
//     vis = alpha * x + beta * x^2 + gamma * x^3 + eta
// Intervals are expressed in meters of visibility, half-open [lo, hi) except
// the last, which is closed. Which piece applies to a given x is decided at
// prediction time by self-consistency (the output must land in the piece's
// own interval) and temporal continuity with the previous estimate.

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spev {

inline constexpr double kMinVisibility = 0.0;
inline constexpr double kMaxVisibility = 600.0;

struct PiecePoly {
    double alpha = 0.0;  ///< x^1
    double beta = 0.0;   ///< x^2
    double gamma = 0.0;  ///< x^3
    double eta = 0.0;    ///< constant
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const PiecePoly&) const = default;
};

struct FlipSpec {
    bool enabled = false;
    double lo = 10.0;
    double hi = 11.0;

    bool operator==(const FlipSpec&) const = default;
};

struct PiecewiseModel {
    std::vector<PiecePoly> pieces;
    FlipSpec flip;
    std::string version = "spev-1";

    bool operator==(const PiecewiseModel&) const = default;

    /// Throws EmptyModel, OverlappingIntervals, MalformedModelFile.
    void validate() const;

    /// Interval membership of `vis` for piece `n` (0-based).
    bool in_interval(std::size_t n, double vis) const;
};

/// x -> (lo + hi) - x when enabled, identity otherwise.
double mirror_flip(double x, const FlipSpec& spec);
std::vector<double> mirror_flip(std::span<const double> series, const FlipSpec& spec);

double eval_piece(const PiecePoly& piece, double x);

struct Prediction {
    double vis = 0.0;
    std::size_t piece_index = 0;  ///< 0-based
    bool self_consistent = true;  ///< false when no piece mapped into its own interval
};

/// Piece selection: among pieces whose output lies in their own interval,
/// the one closest to `prev_estimate`, or the lowest index when there is no
/// previous estimate. If none is self-consistent, the piece whose output is
/// nearest its interval is used and its output clamped into that interval.
/// The result is clamped to [0, 600] m. Throws EmptyModel.
Prediction predict(const PiecewiseModel& model, double x, std::optional<double> prev_estimate = std::nullopt);

struct FitSample {
    double x = 0.0;    ///< entropy ratio
    double vis = 0.0;  ///< meters
};

struct FitInterval {
    double lo = 0.0;
    double hi = 0.0;
    std::set<int> powers{1, 2, 3};  ///< subset of {1, 2, 3}; the constant is always fitted
};

/// Ordinary least squares per interval, samples grouped by their visibility.
/// Throws InsufficientData when an interval holds fewer than |powers| + 2
/// samples and SingularDesign when its design is rank deficient.
PiecewiseModel fit(std::span<const FitSample> samples, std::span<const FitInterval> intervals,
                   const FlipSpec& flip = {});

/// Convenience overload applying one power set to every interval.
PiecewiseModel fit(std::span<const FitSample> samples, std::span<const std::pair<double, double>> intervals,
                   const std::set<int>& powers, const FlipSpec& flip = {});

/// Sub-intervals of the shipped coefficient table with its power pattern:
/// quadratic for the six pieces below 100 m, cubic above.
std::vector<FitInterval> default_fit_intervals();

std::string save_model(const PiecewiseModel& model);
PiecewiseModel load_model(std::string_view text);
void save_model_file(const PiecewiseModel& model, const std::filesystem::path& path);
PiecewiseModel load_model_file(const std::filesystem::path& path);

/// The shipped 16-piece coefficient table.
PiecewiseModel bundled_model();

/// Location of the installed bundled_model.json asset.
std::filesystem::path default_model_path();

}  // namespace spev
