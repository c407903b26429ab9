#pragma once

// Shared fixtures for unit and acceptance tests: scratch directories, a
// seeded generator for property tests and straightforward reference
// implementations used as oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spev/error.hpp"
#include "spev/frame.hpp"
#include "spev/roi.hpp"

namespace spev::test {

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("spev-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

// Error code thrown by `fn`, or nullopt when it returns normally.
template <class Fn>
std::optional<Errc> code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

// Property-test generator; every case derives from a fixed seed so
// failures reproduce.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng_); }
    bool coin() { return integer(0, 1) == 1; }

    // Intensities in [lo, hi]; with `levels` > 0 they are snapped to a grid.
    GrayFrame frame(int w, int h, double lo = 0.0, double hi = 1.0, int levels = 0) {
        GrayFrame f(w, h);
        for (double& v : f.pixels()) {
            v = uniform(lo, hi);
            if (levels > 0) v = std::round(v * levels) / levels;
        }
        return f;
    }

    // Axis-aligned rectangle inside the frame, at least 2x2.
    RoiMask rect_roi(int w, int h) {
        const int x0 = integer(0, w - 2);
        const int y0 = integer(0, h - 2);
        const int x1 = integer(x0 + 2, w);
        const int y1 = integer(y0 + 2, h);
        return RoiMask::from_polygon(w, h,
                                     {{x0 - 0.5, y0 - 0.5}, {x1 - 0.5, y0 - 0.5}, {x1 - 0.5, y1 - 0.5}, {x0 - 0.5, y1 - 0.5}});
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Entropy of p = f / sum(f) over masked pixels, accumulated in long double
// with the log taken per distinct intensity.
inline double oracle_entropy_bits(const GrayFrame& f, const RoiMask& roi) {
    std::map<double, std::size_t> counts;
    long double total = 0.0L;
    for (int r = 0; r < f.height(); ++r)
        for (int c = 0; c < f.width(); ++c)
            if (roi.contains(r, c)) {
                ++counts[f(r, c)];
                total += f(r, c);
            }
    long double h = 0.0L;
    for (const auto& [v, n] : counts) {
        if (v <= 0.0) continue;
        const long double p = static_cast<long double>(v) / total;
        h -= static_cast<long double>(n) * p * std::log2(p);
    }
    return static_cast<double>(h);
}

inline double oracle_lambda(double v_far, double v_near, double v_h, double gap) {
    return gap * (v_far - v_h) * (v_near - v_h) / (v_near - v_far);
}

// Least squares through the normal equations, solved by Gauss-Jordan with
// partial pivoting. Columns: constant, then x^p for each listed power.
inline std::vector<double> oracle_normal_equations(const std::vector<double>& x, const std::vector<double>& y,
                                                   const std::vector<int>& powers) {
    const std::size_t m = powers.size() + 1;
    std::vector<std::vector<long double>> a(m, std::vector<long double>(m + 1, 0.0L));
    for (std::size_t s = 0; s < x.size(); ++s) {
        std::vector<long double> row{1.0L};
        for (int p : powers) row.push_back(std::pow(static_cast<long double>(x[s]), p));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) a[i][j] += row[i] * row[j];
            a[i][m] += row[i] * y[s];
        }
    }
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const long double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = static_cast<double>(a[i][m] / a[i][i]);
    return out;
}

inline double oracle_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// Spearman as Pearson over average ranks, ranks found by counting.
inline double oracle_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double less = 0.0;
            double equal = 0.0;
            for (double w : v) {
                if (w < v[i]) less += 1.0;
                if (w == v[i]) equal += 1.0;
            }
            r[i] = less + (equal + 1.0) / 2.0;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i] / n;
        mb += rb[i] / n;
    }
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Camera-calibration table of the six surveillance points: anchor rows for
// the 15 m and 9 m gaps, near anchor, horizon, and the surveyed lambdas.
struct SurveyRow {
    double far_row_15;
    double far_row_9;
    double near_row;
    double v_h;
    double lambda_15;
    double lambda_9;
};

inline const std::vector<SurveyRow>& survey_table() {
    static const std::vector<SurveyRow> rows{
        {544, 577, 650, 289.45, 12987.24, 12781.79}, {733, 791, 919, 311.41, 20657.82, 20488.87},
        {805, 885, 1076, 334.20, 19330.81, 19252.82}, {714, 762, 865, 340.47, 19463.06, 19319.91},
        {804, 884, 1076, 335.42, 19137.11, 9043.72},  {829, 880, 992, 455.48, 18441.76, 18302.38},
    };
    return rows;
}

}  // namespace spev::test
