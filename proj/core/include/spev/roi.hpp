#pragma once

// Pavement region-of-interest extraction from a clear-day frame.
//
// Lines use the normal form rho = x * cos(theta) + y * sin(theta) with x the
// column, y the row (downward) and theta in [0, pi). Under this convention a
// line with theta < 90 deg has negative image slope (a left lane border
// rising toward the vanishing point) and theta > 90 deg positive slope.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spev/frame.hpp"

namespace spev {

struct Point2 {
    double x = 0.0;  ///< column
    double y = 0.0;  ///< row

    bool operator==(const Point2&) const = default;
};

struct HoughLine {
    double rho = 0.0;
    double theta = 0.0;  ///< radians, [0, pi)
    int votes = 0;

    /// Image slope dy/dx; infinite for vertical lines.
    double slope() const;
    /// Column where the line crosses row `y`.
    double x_at(double y) const;
};

/// Intersection of two lines; DegenerateGeometry when they are parallel.
Point2 intersect(const HoughLine& a, const HoughLine& b);

class RoiMask {
public:
    RoiMask() = default;

    /// Rasterizes `polygon` by testing pixel centers (col, row) with the
    /// even-odd rule.
    static RoiMask from_polygon(int width, int height, std::vector<Point2> polygon);

    /// Mask covering every pixel (rectangle through the frame's outer edges).
    static RoiMask full(int width, int height);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    const std::vector<Point2>& polygon() const noexcept { return polygon_; }
    std::span<const std::uint8_t> mask() const noexcept { return mask_; }

    bool contains(int row, int col) const { return mask_[static_cast<std::size_t>(row) * width_ + col] != 0; }
    std::size_t count() const noexcept { return count_; }
    double coverage() const noexcept;

    /// 8-bit PGM with 255 inside the ROI; `comment` goes in the header.
    void save_pgm(const std::filesystem::path& path, const std::string& comment = {}) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Point2> polygon_;
    std::vector<std::uint8_t> mask_;
    std::size_t count_ = 0;
};

/// Gradient magnitude edges (normalized Sobel, non-maximum suppression,
/// hysteresis between `lo` and `hi`). Returned as a row-major 0/1 map.
std::vector<std::uint8_t> detect_edges(const GrayFrame& frame, double lo, double hi);

/// Edge detection followed by a rho-theta Hough transform (1 px, 1 deg).
/// Accumulator peaks with at least `hough_threshold` votes are refined by a
/// total-least-squares fit over their supporting edge pixels and returned
/// sorted by votes, strongest first. Throws NoLinesFound.
std::vector<HoughLine> detect_lane_lines(const GrayFrame& clear_frame, double canny_lo, double canny_hi,
                                         int hough_threshold);

struct RoiResult {
    RoiMask roi;
    double horizon_row = 0.0;
    HoughLine left;
    HoughLine right;
};

/// Chooses the strongest negative-slope and positive-slope lines, takes
/// their intersection row as the horizon, and rasterizes the trapezoid
/// between them from row horizon + h_margin down to the bottom edge.
/// Lines within 5 deg of horizontal are ignored.
RoiResult build_roi(std::span<const HoughLine> lines, int width, int height, double h_margin = 10.0);

/// Trapezoid polygon for two lane borders; exposed for manual overrides.
std::vector<Point2> roi_trapezoid(const HoughLine& a, const HoughLine& b, int width, int height, double top_row);

}  // namespace spev
