#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spev/frame.hpp"
#include "spev/roi.hpp"

namespace spev {

enum class EntropyUnit { Bits, Nats };

struct EntropyValue {
    double value = 0.0;  ///< bits unless computed with EntropyUnit::Nats
    std::size_t pixel_count = 0;
};

/// Shannon entropy of the intensity distribution p = f / sum(f) taken over
/// the ROI pixels. Throws EmptyRoi (fewer than 2 ROI pixels), AllZeroRoi,
/// DimensionMismatch.
EntropyValue intensity_entropy(const GrayFrame& frame, const RoiMask& roi, EntropyUnit unit = EntropyUnit::Bits);

/// intensity_entropy of gaussian_smooth(frame, sigma, radius).
EntropyValue gaussian_entropy(const GrayFrame& frame, const RoiMask& roi, double sigma, int radius,
                              EntropyUnit unit = EntropyUnit::Bits);

/// Entropy of the ROI intensity histogram over `bins` equal-width bins on
/// [0, 1]; the value 1.0 falls in the last bin.
EntropyValue histogram_entropy(const GrayFrame& frame, const RoiMask& roi, int bins);

struct ClearBaseline {
    std::string camera_id;
    double h_clear = 0.0;
    std::size_t n_used = 0;
    std::size_t n_rejected = 0;
    double rejection_k = 3.0;
};

/// Clear-day reference entropy: Hampel filter (reject |H - median| >
/// k * 1.4826 * MAD; no rejection when MAD is 0) then the mean of the
/// survivors. Throws EmptySeries.
ClearBaseline clear_baseline(std::span<const EntropyValue> series, double rejection_k = 3.0);

/// H_r = 10 * H_fog / H_clear. Throws ZeroBaseline.
double relative_ratio(const EntropyValue& h_fog, const ClearBaseline& baseline);
double relative_ratio(double h_fog, double h_clear);

struct EntropyPoint {
    std::int64_t frame_index = 0;
    double timestamp = 0.0;
    double h = 0.0;
    std::optional<double> h_r;
};

struct EntropySeries {
    std::string camera_id;
    std::vector<EntropyPoint> points;

    /// Fills h_r for every point from `baseline`.
    void apply_baseline(const ClearBaseline& baseline);
};

}  // namespace spev
