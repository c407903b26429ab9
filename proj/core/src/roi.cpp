#include "spev/roi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "spev/error.hpp"

namespace spev {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr double kParallelTolerance = 0.5 * kDeg;
constexpr double kHorizontalExclusion = 5.0 * kDeg;
constexpr double kMinRoiCoverage = 0.01;
constexpr double kRefineBand = 1.5;
constexpr int kRefineIterations = 3;

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// Keeps theta in [0, pi), flipping rho to describe the same line.
HoughLine normalized(double rho, double theta, int votes) {
    while (theta < 0.0) {
        theta += kPi;
        rho = -rho;
    }
    while (theta >= kPi) {
        theta -= kPi;
        rho = -rho;
    }
    return {rho, theta, votes};
}

HoughLine refine(const HoughLine& seed, std::span<const Point2> edge_points) {
    HoughLine line = seed;
    for (int iter = 0; iter < kRefineIterations; ++iter) {
        const double c = std::cos(line.theta);
        const double s = std::sin(line.theta);
        double n = 0.0, mx = 0.0, my = 0.0;
        for (const auto& p : edge_points) {
            if (std::abs(p.x * c + p.y * s - line.rho) <= kRefineBand) {
                n += 1.0;
                mx += p.x;
                my += p.y;
            }
        }
        if (n < 2.0) break;
        mx /= n;
        my /= n;
        double sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (const auto& p : edge_points) {
            if (std::abs(p.x * c + p.y * s - line.rho) <= kRefineBand) {
                const double dx = p.x - mx;
                const double dy = p.y - my;
                sxx += dx * dx;
                syy += dy * dy;
                sxy += dx * dy;
            }
        }
        const double direction = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
        const double theta = direction + 0.5 * kPi;
        const auto next = normalized(mx * std::cos(theta) + my * std::sin(theta), theta, seed.votes);
        // A refit that swings far from the accumulator peak latched onto
        // a different structure; keep the previous estimate.
        const double dtheta = std::abs(std::remainder(next.theta - seed.theta, kPi));
        if (dtheta > 2.0 * kDeg) break;
        line = next;
    }
    return line;
}

double angle_between(const HoughLine& a, const HoughLine& b) {
    return std::abs(std::remainder(a.theta - b.theta, kPi));
}

}  // namespace

double HoughLine::slope() const {
    const double s = std::sin(theta);
    if (std::abs(s) < 1e-15) return std::numeric_limits<double>::infinity();
    return -std::cos(theta) / s;
}

double HoughLine::x_at(double y) const {
    const double c = std::cos(theta);
    if (std::abs(c) < 1e-15) fail(Errc::DegenerateGeometry, "horizontal line has no unique column");
    return (rho - y * std::sin(theta)) / c;
}

Point2 intersect(const HoughLine& a, const HoughLine& b) {
    const double ca = std::cos(a.theta), sa = std::sin(a.theta);
    const double cb = std::cos(b.theta), sb = std::sin(b.theta);
    const double det = ca * sb - sa * cb;
    if (std::abs(det) < 1e-12) fail(Errc::DegenerateGeometry, "lines are parallel");
    return {(a.rho * sb - b.rho * sa) / det, (ca * b.rho - cb * a.rho) / det};
}

RoiMask RoiMask::from_polygon(int width, int height, std::vector<Point2> polygon) {
    require(width >= 1 && height >= 1, Errc::InvalidArgument, "mask dimensions must be positive");
    require(polygon.size() >= 3, Errc::InvalidArgument, "polygon needs at least 3 vertices");
    RoiMask m;
    m.width_ = width;
    m.height_ = height;
    m.polygon_ = std::move(polygon);
    m.mask_.assign(static_cast<std::size_t>(width) * height, 0);

    const auto& poly = m.polygon_;
    const std::size_t nv = poly.size();
    std::vector<double> crossings;
    for (int r = 0; r < height; ++r) {
        const double y = r;
        crossings.clear();
        for (std::size_t i = 0, j = nv - 1; i < nv; j = i++) {
            const auto& pi = poly[i];
            const auto& pj = poly[j];
            if ((pi.y > y) != (pj.y > y)) {
                crossings.push_back((pj.x - pi.x) * (y - pi.y) / (pj.y - pi.y) + pi.x);
            }
        }
        if (crossings.empty()) continue;
        std::sort(crossings.begin(), crossings.end());
        // Pixel x is inside when an odd number of crossings lie strictly to
        // its right.
        std::size_t right = 0;  // first crossing index with x < crossing
        for (int c = 0; c < width; ++c) {
            const double x = c;
            while (right < crossings.size() && !(x < crossings[right])) ++right;
            if ((crossings.size() - right) % 2 == 1) {
                m.mask_[static_cast<std::size_t>(r) * width + c] = 1;
                ++m.count_;
            }
        }
    }
    return m;
}

RoiMask RoiMask::full(int width, int height) {
    const double l = -0.5, t = -0.5, r = width - 0.5, b = height - 0.5;
    return from_polygon(width, height, {{l, t}, {r, t}, {r, b}, {l, b}});
}

double RoiMask::coverage() const noexcept {
    return mask_.empty() ? 0.0 : static_cast<double>(count_) / static_cast<double>(mask_.size());
}

void RoiMask::save_pgm(const std::filesystem::path& path, const std::string& comment) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::UnreadableFile, fmt::format("cannot write '{}'", path.string()));
    out << "P5\n";
    if (!comment.empty()) out << "# " << comment << '\n';
    out << width_ << ' ' << height_ << "\n255\n";
    for (auto v : mask_) out.put(v ? static_cast<char>(255) : 0);
}

std::vector<std::uint8_t> detect_edges(const GrayFrame& frame, double lo, double hi) {
    require(lo > 0.0 && lo < hi, Errc::InvalidArgument, "edge thresholds need 0 < lo < hi");
    const int w = frame.width();
    const int h = frame.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<double> mag(n, 0.0);
    std::vector<std::uint8_t> dir(n, 0);

    auto at = [&](int r, int c) { return frame(clamp_index(r, h), clamp_index(c, w)); };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1) - at(r - 1, c - 1) -
                               2.0 * at(r, c - 1) - at(r + 1, c - 1)) /
                              8.0;
            const double gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1) - at(r - 1, c - 1) -
                               2.0 * at(r - 1, c) - at(r - 1, c + 1)) /
                              8.0;
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            mag[i] = std::hypot(gx, gy);
            double angle = std::atan2(gy, gx) / kDeg;
            if (angle < 0.0) angle += 180.0;
            if (angle < 22.5 || angle >= 157.5) {
                dir[i] = 0;
            } else if (angle < 67.5) {
                dir[i] = 1;
            } else if (angle < 112.5) {
                dir[i] = 2;
            } else {
                dir[i] = 3;
            }
        }
    }

    // 0 = none, 1 = weak candidate, 2 = strong
    std::vector<std::uint8_t> cls(n, 0);
    auto mag_at = [&](int r, int c) {
        if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
        return mag[static_cast<std::size_t>(r) * w + c];
    };
    for (int r = 1; r < h - 1; ++r) {
        for (int c = 1; c < w - 1; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            const double m = mag[i];
            if (m < lo) continue;
            double a = 0.0, b = 0.0;
            switch (dir[i]) {
                case 0: a = mag_at(r, c - 1); b = mag_at(r, c + 1); break;
                case 1: a = mag_at(r - 1, c - 1); b = mag_at(r + 1, c + 1); break;
                case 2: a = mag_at(r - 1, c); b = mag_at(r + 1, c); break;
                default: a = mag_at(r - 1, c + 1); b = mag_at(r + 1, c - 1); break;
            }
            if (m > a && m >= b) cls[i] = m >= hi ? 2 : 1;
        }
    }

    std::vector<std::uint8_t> edges(n, 0);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i) {
        if (cls[i] == 2 && !edges[i]) {
            edges[i] = 1;
            stack.push_back(i);
            while (!stack.empty()) {
                const std::size_t k = stack.back();
                stack.pop_back();
                const int r = static_cast<int>(k / w);
                const int c = static_cast<int>(k % w);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int rr = r + dr, cc = c + dc;
                        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                        const std::size_t j = static_cast<std::size_t>(rr) * w + cc;
                        if (cls[j] != 0 && !edges[j]) {
                            edges[j] = 1;
                            stack.push_back(j);
                        }
                    }
                }
            }
        }
    }
    return edges;
}

std::vector<HoughLine> detect_lane_lines(const GrayFrame& clear_frame, double canny_lo, double canny_hi,
                                         int hough_threshold) {
    require(canny_lo > 0.0 && canny_lo < canny_hi, Errc::InvalidArgument, "need 0 < canny_lo < canny_hi");
    require(hough_threshold >= 1, Errc::InvalidArgument, "hough_threshold must be >= 1");
    const int w = clear_frame.width();
    const int h = clear_frame.height();
    const auto edges = detect_edges(clear_frame, canny_lo, canny_hi);

    std::vector<Point2> points;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (edges[static_cast<std::size_t>(r) * w + c]) points.push_back({static_cast<double>(c), static_cast<double>(r)});
    if (points.empty()) fail(Errc::NoLinesFound, "no edge pixels");

    constexpr int kThetaBins = 180;
    const int max_rho = static_cast<int>(std::ceil(std::hypot(w, h)));
    const int rho_bins = 2 * max_rho + 1;
    std::vector<double> cos_t(kThetaBins), sin_t(kThetaBins);
    for (int t = 0; t < kThetaBins; ++t) {
        cos_t[t] = std::cos(t * kDeg);
        sin_t[t] = std::sin(t * kDeg);
    }
    std::vector<int> acc(static_cast<std::size_t>(kThetaBins) * rho_bins, 0);
    for (const auto& p : points) {
        for (int t = 0; t < kThetaBins; ++t) {
            const int rho = static_cast<int>(std::lround(p.x * cos_t[t] + p.y * sin_t[t]));
            ++acc[static_cast<std::size_t>(t) * rho_bins + rho + max_rho];
        }
    }
    auto votes = [&](int t, int r) {
        if (t < 0 || t >= kThetaBins || r < 0 || r >= rho_bins) return 0;
        return acc[static_cast<std::size_t>(t) * rho_bins + r];
    };

    struct Peak {
        int votes, t, r;
    };
    std::vector<Peak> peaks;
    for (int t = 0; t < kThetaBins; ++t) {
        for (int r = 0; r < rho_bins; ++r) {
            const int v = votes(t, r);
            if (v < hough_threshold) continue;
            if (v > votes(t, r - 1) && v >= votes(t, r + 1) && v > votes(t - 1, r) && v >= votes(t + 1, r)) {
                peaks.push_back({v, t, r});
            }
        }
    }
    if (peaks.empty()) {
        fail(Errc::NoLinesFound, fmt::format("no accumulator cell reached {} votes", hough_threshold));
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        if (a.t != b.t) return a.t < b.t;
        return a.r < b.r;
    });

    std::vector<HoughLine> lines;
    lines.reserve(peaks.size());
    for (const auto& pk : peaks) {
        const HoughLine seed{static_cast<double>(pk.r - max_rho), pk.t * kDeg, pk.votes};
        lines.push_back(refine(seed, points));
    }
    return lines;
}

std::vector<Point2> roi_trapezoid(const HoughLine& a, const HoughLine& b, int width, int height, double top_row) {
    const double bottom = height - 0.5;
    const double top = std::max(top_row, -0.5);
    if (!(top < bottom)) fail(Errc::DegenerateGeometry, "ROI top cut lies below the frame");
    (void)width;
    double xa_top = a.x_at(top), xa_bot = a.x_at(bottom);
    double xb_top = b.x_at(top), xb_bot = b.x_at(bottom);
    if (xa_bot > xb_bot) {
        std::swap(xa_top, xb_top);
        std::swap(xa_bot, xb_bot);
    }
    return {{xa_top, top}, {xb_top, top}, {xb_bot, bottom}, {xa_bot, bottom}};
}

RoiResult build_roi(std::span<const HoughLine> lines, int width, int height, double h_margin) {
    require(width >= 2 && height >= 2, Errc::InvalidArgument, "frame must be at least 2x2");
    const HoughLine* left = nullptr;   // negative slope
    const HoughLine* right = nullptr;  // positive slope
    for (const auto& line : lines) {
        const double from_horizontal = std::abs(line.theta - 0.5 * kPi);
        if (from_horizontal < kHorizontalExclusion) continue;
        const double slope = line.slope();
        if (!std::isfinite(slope)) continue;
        if (slope < 0.0 && !left) left = &line;
        if (slope > 0.0 && !right) right = &line;
        if (left && right) break;
    }
    if (!left || !right) fail(Errc::DegenerateGeometry, "need two lines with opposite-signed slopes");
    if (angle_between(*left, *right) < kParallelTolerance) fail(Errc::DegenerateGeometry, "lines are parallel");

    const Point2 vp = intersect(*left, *right);
    if (vp.y < -static_cast<double>(height) || vp.y > 2.0 * height) {
        fail(Errc::DegenerateGeometry, fmt::format("lines meet at row {}, far outside the frame", vp.y));
    }

    auto polygon = roi_trapezoid(*left, *right, width, height, vp.y + h_margin);
    auto roi = RoiMask::from_polygon(width, height, std::move(polygon));
    if (roi.coverage() < kMinRoiCoverage) {
        fail(Errc::DegenerateGeometry, fmt::format("ROI covers only {:.3f}% of the frame", 100.0 * roi.coverage()));
    }
    return {std::move(roi), vp.y, *left, *right};
}

}  // namespace spev
