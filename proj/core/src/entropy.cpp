#include "spev/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "spev/error.hpp"

namespace spev {

namespace {

constexpr double kMadScale = 1.4826;

void check_dims(const GrayFrame& frame, const RoiMask& roi) {
    if (frame.width() != roi.width() || frame.height() != roi.height()) {
        fail(Errc::DimensionMismatch, fmt::format("frame {}x{} vs ROI {}x{}", frame.width(), frame.height(),
                                                  roi.width(), roi.height()));
    }
}

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

EntropyValue intensity_entropy(const GrayFrame& frame, const RoiMask& roi, EntropyUnit unit) {
    check_dims(frame, roi);
    if (roi.count() < 2) fail(Errc::EmptyRoi, fmt::format("ROI has {} pixels, need at least 2", roi.count()));

    const auto px = frame.pixels();
    const auto mask = roi.mask();
    double total = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i)
        if (mask[i]) total += px[i];
    if (!(total > 0.0)) fail(Errc::AllZeroRoi, "every ROI intensity is zero");

    double h = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (!mask[i] || px[i] <= 0.0) continue;
        const double p = px[i] / total;
        h -= p * std::log(p);
    }
    h = std::clamp(h, 0.0, std::log(static_cast<double>(roi.count())));
    if (unit == EntropyUnit::Bits) h = std::min(h / std::numbers::ln2, std::log2(static_cast<double>(roi.count())));
    return {h, roi.count()};
}

EntropyValue gaussian_entropy(const GrayFrame& frame, const RoiMask& roi, double sigma, int radius,
                              EntropyUnit unit) {
    check_dims(frame, roi);
    return intensity_entropy(gaussian_smooth(frame, sigma, radius), roi, unit);
}

EntropyValue histogram_entropy(const GrayFrame& frame, const RoiMask& roi, int bins) {
    require(bins >= 2, Errc::InvalidArgument, "histogram needs at least 2 bins");
    check_dims(frame, roi);
    if (roi.count() == 0) fail(Errc::EmptyRoi, "ROI is empty");

    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    const auto px = frame.pixels();
    const auto mask = roi.mask();
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (!mask[i]) continue;
        const auto b = std::clamp(static_cast<int>(std::floor(px[i] * bins)), 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    const double n = static_cast<double>(roi.count());
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return {std::max(h, 0.0), roi.count()};
}

ClearBaseline clear_baseline(std::span<const EntropyValue> series, double rejection_k) {
    if (series.empty()) fail(Errc::EmptySeries, "no clear-day entropy values");
    require(rejection_k > 0.0, Errc::InvalidArgument, "rejection_k must be positive");

    std::vector<double> values;
    values.reserve(series.size());
    for (const auto& e : series) values.push_back(e.value);
    const double med = median_of(values);
    std::vector<double> deviations;
    deviations.reserve(values.size());
    for (double v : values) deviations.push_back(std::abs(v - med));
    const double mad = kMadScale * median_of(deviations);

    double sum = 0.0;
    std::size_t used = 0;
    for (double v : values) {
        if (mad > 0.0 && std::abs(v - med) > rejection_k * mad) continue;
        sum += v;
        ++used;
    }
    ClearBaseline b;
    b.h_clear = sum / static_cast<double>(used);
    b.n_used = used;
    b.n_rejected = values.size() - used;
    b.rejection_k = rejection_k;
    return b;
}

double relative_ratio(double h_fog, double h_clear) {
    if (!(h_clear > 0.0)) fail(Errc::ZeroBaseline, "clear-day entropy must be positive");
    return 10.0 * h_fog / h_clear;
}

double relative_ratio(const EntropyValue& h_fog, const ClearBaseline& baseline) {
    return relative_ratio(h_fog.value, baseline.h_clear);
}

void EntropySeries::apply_baseline(const ClearBaseline& baseline) {
    for (auto& p : points) p.h_r = relative_ratio(p.h, baseline.h_clear);
}

}  // namespace spev
