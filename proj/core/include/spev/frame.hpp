#pragma once

// Grayscale frame container plus decoding and preprocessing.
//
// Intensities are doubles in [0, 1]; 8-bit inputs are divided by 255 at load
// time. Coordinates follow image conventions: row 0 is the top of the frame
// and rows grow downward, which is what the road geometry relies on.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spev {

class GrayFrame {
public:
    GrayFrame() = default;

    /// Frame of `width` x `height` pixels filled with `fill`.
    /// Throws ZeroSizedImage when either dimension is below 2.
    GrayFrame(int width, int height, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(int row, int col) const { return data_[index(row, col)]; }
    double& operator()(int row, int col) { return data_[index(row, col)]; }

    /// Row-major view of all intensities.
    std::span<const double> pixels() const noexcept { return data_; }
    std::span<double> pixels() noexcept { return data_; }

    std::span<const double> row(int r) const noexcept {
        return {data_.data() + static_cast<std::size_t>(r) * width_, static_cast<std::size_t>(width_)};
    }

    double timestamp = 0.0;
    std::string camera_id;
    std::int64_t frame_index = 0;

    /// Copies metadata (timestamp, camera, index) from `other`.
    void copy_metadata(const GrayFrame& other);

    /// Throws InvalidArgument when a value is non-finite or outside [0, 1].
    void validate() const;

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * width_ + col;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Decodes an 8-bit PNG (gray, RGB, palette) or binary PGM (P5).
/// RGB is reduced to luma with weights (0.299, 0.587, 0.114).
GrayFrame load_frame(const std::filesystem::path& path);

/// Same as load_frame, decoding from an in-memory buffer.
GrayFrame decode_frame(std::span<const std::uint8_t> bytes);

/// Writes an 8-bit image; the container is chosen from the extension
/// (.png or .pgm). Intensities are rounded to the nearest 1/255 step.
void save_frame(const GrayFrame& frame, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const GrayFrame& frame);
std::vector<std::uint8_t> encode_pgm(const GrayFrame& frame);

/// Normalized 1D Gaussian weights on [-radius, radius].
std::vector<double> gaussian_kernel(double sigma, int radius);

/// Separable Gaussian convolution, kernel truncated at +/-radius and
/// normalized to unit sum, edge replication at the borders.
GrayFrame gaussian_smooth(const GrayFrame& frame, double sigma, int radius);

/// 3x3 median filter with edge replication.
GrayFrame median_denoise(const GrayFrame& frame);

}  // namespace spev
