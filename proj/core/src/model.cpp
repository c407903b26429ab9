#include "spev/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <json.hpp>

#include "spev/error.hpp"

namespace spev {

using nlohmann::json;

namespace {

constexpr double kRankTolerance = 1e-10;

bool contiguous_from_one(const std::set<int>& powers) {
    int expected = 1;
    for (int p : powers) {
        if (p != expected) return false;
        ++expected;
    }
    return true;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double distance_to_interval(double v, double lo, double hi) {
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
}

}  // namespace

void PiecewiseModel::validate() const {
    if (pieces.empty()) fail(Errc::EmptyModel, "model has no pieces");
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const auto& p = pieces[i];
        if (!(std::isfinite(p.lo) && std::isfinite(p.hi) && p.lo < p.hi)) {
            fail(Errc::MalformedModelFile, fmt::format("piece {} has invalid interval [{}, {})", i + 1, p.lo, p.hi));
        }
        if (!(std::isfinite(p.alpha) && std::isfinite(p.beta) && std::isfinite(p.gamma) && std::isfinite(p.eta))) {
            fail(Errc::MalformedModelFile, fmt::format("piece {} has non-finite coefficients", i + 1));
        }
        if (i == 0) continue;
        const auto& prev = pieces[i - 1];
        if (p.lo < prev.hi) {
            fail(Errc::OverlappingIntervals,
                 fmt::format("[{}, {}) overlaps [{}, {})", prev.lo, prev.hi, p.lo, p.hi));
        }
        if (p.lo > prev.hi) {
            fail(Errc::MalformedModelFile, fmt::format("gap between {} and {}", prev.hi, p.lo));
        }
    }
    if (flip.enabled && !(flip.lo < flip.hi)) fail(Errc::MalformedModelFile, "flip bounds need lo < hi");
}

bool PiecewiseModel::in_interval(std::size_t n, double vis) const {
    const auto& p = pieces[n];
    if (n + 1 == pieces.size()) return vis >= p.lo && vis <= p.hi;
    return vis >= p.lo && vis < p.hi;
}

double mirror_flip(double x, const FlipSpec& spec) { return spec.enabled ? (spec.lo + spec.hi) - x : x; }

std::vector<double> mirror_flip(std::span<const double> series, const FlipSpec& spec) {
    if (spec.enabled) require(spec.lo < spec.hi, Errc::InvalidArgument, "flip bounds need lo < hi");
    std::vector<double> out(series.begin(), series.end());
    for (double& x : out) x = mirror_flip(x, spec);
    return out;
}

double eval_piece(const PiecePoly& piece, double x) {
    return ((piece.gamma * x + piece.beta) * x + piece.alpha) * x + piece.eta;
}

Prediction predict(const PiecewiseModel& model, double x, std::optional<double> prev_estimate) {
    if (model.pieces.empty()) fail(Errc::EmptyModel, "model has no pieces");
    require(std::isfinite(x), Errc::InvalidArgument, "entropy ratio must be finite");

    const std::size_t n = model.pieces.size();
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = eval_piece(model.pieces[i], x);

    Prediction best;
    bool found = false;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (!model.in_interval(i, values[i])) continue;
        if (!prev_estimate) {
            best = {values[i], i, true};
            found = true;
            break;
        }
        const double gap = std::abs(values[i] - *prev_estimate);
        if (gap < best_gap) {
            best_gap = gap;
            best = {values[i], i, true};
            found = true;
        }
    }

    if (!found) {
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = model.pieces[i];
            const double d = distance_to_interval(values[i], p.lo, p.hi);
            if (d < best_dist) {
                best_dist = d;
                best = {std::clamp(values[i], p.lo, p.hi), i, false};
            }
        }
    }
    best.vis = std::clamp(best.vis, kMinVisibility, kMaxVisibility);
    return best;
}

PiecewiseModel fit(std::span<const FitSample> samples, std::span<const FitInterval> intervals, const FlipSpec& flip) {
    require(!intervals.empty(), Errc::InvalidArgument, "no fit intervals");
    for (std::size_t k = 0; k < intervals.size(); ++k) {
        const auto& iv = intervals[k];
        for (int p : iv.powers) {
            require(p >= 1 && p <= 3, Errc::InvalidArgument, fmt::format("power {} outside {{1, 2, 3}}", p));
        }
        require(iv.lo < iv.hi, Errc::InvalidArgument, fmt::format("interval [{}, {}) is empty", iv.lo, iv.hi));
        if (k > 0 && iv.lo < intervals[k - 1].hi) {
            fail(Errc::OverlappingIntervals, fmt::format("[{}, {}) overlaps [{}, {})", intervals[k - 1].lo,
                                                         intervals[k - 1].hi, iv.lo, iv.hi));
        }
    }

    // Sorting fixes the accumulation order, so the fit does not depend on
    // the order samples arrive in.
    std::vector<FitSample> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(), [](const FitSample& a, const FitSample& b) {
        return a.x != b.x ? a.x < b.x : a.vis < b.vis;
    });

    PiecewiseModel model;
    model.flip = flip;
    for (std::size_t k = 0; k < intervals.size(); ++k) {
        const auto& iv = intervals[k];
        const bool last = k + 1 == intervals.size();
        std::vector<FitSample> group;
        for (const auto& s : sorted) {
            if (s.vis >= iv.lo && (s.vis < iv.hi || (last && s.vis <= iv.hi))) group.push_back(s);
        }
        const std::size_t needed = iv.powers.size() + 2;
        if (group.size() < needed) {
            fail(Errc::InsufficientData, fmt::format("interval [{}, {}) has {} samples, needs {}", iv.lo, iv.hi,
                                                     group.size(), needed));
        }

        // Centering and scaling x keeps the design well conditioned even
        // though entropy ratios cluster tightly around 10. Centering is only
        // used when it cannot introduce excluded powers on expansion.
        double center = 0.0;
        if (contiguous_from_one(iv.powers)) {
            for (const auto& s : group) center += s.x;
            center /= static_cast<double>(group.size());
        }
        double scale = 0.0;
        for (const auto& s : group) scale = std::max(scale, std::abs(s.x - center));
        if (!(scale > 0.0)) {
            if (!iv.powers.empty()) {
                fail(Errc::SingularDesign, fmt::format("interval [{}, {}): all samples share one x", iv.lo, iv.hi));
            }
            scale = 1.0;
        }

        const std::vector<int> powers(iv.powers.begin(), iv.powers.end());
        const auto rows = static_cast<Eigen::Index>(group.size());
        const auto cols = static_cast<Eigen::Index>(powers.size() + 1);
        Eigen::MatrixXd design(rows, cols);
        Eigen::VectorXd target(rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double u = (group[r].x - center) / scale;
            design(r, 0) = 1.0;
            for (std::size_t j = 0; j < powers.size(); ++j) design(r, j + 1) = std::pow(u, powers[j]);
            target(r) = group[r].vis;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(kRankTolerance);
        if (qr.rank() < cols) {
            fail(Errc::SingularDesign,
                 fmt::format("interval [{}, {}): design rank {} < {}", iv.lo, iv.hi, qr.rank(), cols));
        }
        const Eigen::VectorXd coef = qr.solve(target);

        // Expand sum_p a_p ((x - c) / s)^p into monomials of x.
        double mono[4] = {coef(0), 0.0, 0.0, 0.0};
        for (std::size_t j = 0; j < powers.size(); ++j) {
            const int p = powers[j];
            const double a = coef(static_cast<Eigen::Index>(j + 1)) / std::pow(scale, p);
            for (int q = 0; q <= p; ++q) mono[q] += a * binomial(p, q) * std::pow(-center, p - q);
        }
        model.pieces.push_back({mono[1], mono[2], mono[3], mono[0], iv.lo, iv.hi});
    }
    model.validate();
    return model;
}

PiecewiseModel fit(std::span<const FitSample> samples, std::span<const std::pair<double, double>> intervals,
                   const std::set<int>& powers, const FlipSpec& flip) {
    std::vector<FitInterval> spec;
    spec.reserve(intervals.size());
    for (const auto& [lo, hi] : intervals) spec.push_back({lo, hi, powers});
    return fit(samples, spec, flip);
}

std::vector<FitInterval> default_fit_intervals() {
    static constexpr double edges[] = {0, 50, 60, 70, 80, 90, 100, 120, 140, 160, 180, 200, 250, 300, 350, 400, 600};
    std::vector<FitInterval> out;
    for (std::size_t i = 0; i + 1 < std::size(edges); ++i) {
        out.push_back({edges[i], edges[i + 1], edges[i] < 100 ? std::set<int>{1, 2} : std::set<int>{1, 2, 3}});
    }
    return out;
}

std::string save_model(const PiecewiseModel& model) {
    json pieces = json::array();
    for (const auto& p : model.pieces) {
        pieces.push_back(
            {{"lo", p.lo}, {"hi", p.hi}, {"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}, {"eta", p.eta}});
    }
    json j = {{"version", model.version},
              {"flip", {{"enabled", model.flip.enabled}, {"lo", model.flip.lo}, {"hi", model.flip.hi}}},
              {"pieces", pieces}};
    return j.dump(2) + "\n";
}

PiecewiseModel load_model(std::string_view text) {
    PiecewiseModel model;
    try {
        const auto j = json::parse(text);
        model.version = j.value("version", std::string("spev-1"));
        if (j.contains("flip")) {
            const auto& f = j.at("flip");
            model.flip.enabled = f.value("enabled", false);
            model.flip.lo = f.value("lo", 10.0);
            model.flip.hi = f.value("hi", 11.0);
        }
        for (const auto& p : j.at("pieces")) {
            model.pieces.push_back({p.at("alpha").get<double>(), p.at("beta").get<double>(),
                                    p.at("gamma").get<double>(), p.at("eta").get<double>(), p.at("lo").get<double>(),
                                    p.at("hi").get<double>()});
        }
    } catch (const json::exception& e) {
        fail(Errc::MalformedModelFile, e.what());
    }
    std::stable_sort(model.pieces.begin(), model.pieces.end(),
                     [](const PiecePoly& a, const PiecePoly& b) { return a.lo < b.lo; });
    model.validate();
    return model;
}

void save_model_file(const PiecewiseModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(Errc::UnreadableFile, fmt::format("cannot write model '{}'", path.string()));
    out << save_model(model);
}

PiecewiseModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::UnreadableFile, fmt::format("cannot open model '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return load_model(ss.str());
}

PiecewiseModel bundled_model() {
    PiecewiseModel m;
    m.version = "bundled";
    m.pieces = {
        {-359589.99, 17288.14, 0, 1869889.56, 0, 50},
        {883340.36, -42326.19, 0, -4608733.65, 50, 60},
        {26300.98, -1265.49, 0, -136586.32, 60, 70},
        {-6151.37, 295.69, 0, 32067.06, 70, 80},
        {-4589.69, 221.27, 0, 23884.22, 80, 90},
        {-3828.24, 184.62, 0, 19939.19, 90, 100},
        {-1811378.64, 174704.69, -5616.47, 6260153.82, 100, 120},
        {-2513504.75, 241571.93, -7738.93, 8717405.82, 120, 140},
        {4160187.44, -399757.58, 12804.13, -1.44E7, 140, 160},
        {-690609.32, 66312.66, -2122.30, 2397423.63, 160, 180},
        {272078.56, -25969.77, 826.40, -950131.19, 180, 200},
        {8489387.73, -812191.25, 25900.81, -2.96E7, 200, 250},
        {7112976.24, -677067.67, 21482.31, -2.49E7, 250, 300},
        {4330993.72, -408874.03, 12866.64, -1.53E7, 300, 350},
        {2912483.95, -271901.84, 8459.97, -1.04E7, 350, 400},
        {3.36E8, -3.19E7, 1007556.71, -1.18E9, 400, 600},
    };
    return m;
}

std::filesystem::path default_model_path() { return std::filesystem::path(SPEV_DATA_DIR) / "bundled_model.json"; }

}  // namespace spev
