#include "spev/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include <fmt/format.h>

#include "spev/error.hpp"

namespace spev {

double ape(double vis_est, double vis_ref, ApeDenominator denominator) {
    const double denom = denominator == ApeDenominator::Estimate ? vis_est : vis_ref;
    if (denom == 0.0) fail(Errc::ZeroEstimate, "relative error with a zero denominator");
    return (vis_est - vis_ref) / denom * 100.0;
}

EvalSummary summarize(std::span<const EvalRow> rows) {
    if (rows.empty()) fail(Errc::EmptyInput, "no rows to summarize");
    EvalSummary s;
    s.n = rows.size();
    s.min_ape = rows.front().ape_percent;
    s.max_ape = rows.front().ape_percent;
    std::size_t under10 = 0;
    std::size_t under20 = 0;
    double abs_sum = 0.0;
    for (const auto& r : rows) {
        const double a = std::abs(r.ape_percent);
        under10 += a < 10.0;
        under20 += a < 20.0;
        abs_sum += a;
        s.min_ape = std::min(s.min_ape, r.ape_percent);
        s.max_ape = std::max(s.max_ape, r.ape_percent);
    }
    const auto n = static_cast<double>(s.n);
    s.frac_under_10pct = under10 / n;
    s.frac_under_20pct = under20 / n;
    s.mean_abs_ape = abs_sum / n;
    return s;
}

std::vector<Prediction> track(const PiecewiseModel& model, std::span<const double> h_r) {
    std::vector<Prediction> out;
    out.reserve(h_r.size());
    std::optional<double> prev;
    for (double x : h_r) {
        out.push_back(predict(model, mirror_flip(x, model.flip), prev));
        prev = out.back().vis;
    }
    return out;
}

EvalReport evaluate_fold(const std::map<std::string, CameraDataset>& datasets, const std::string& held_out,
                         const FitConfig& config, PiecewiseModel* fitted) {
    const auto test_it = datasets.find(held_out);
    if (test_it == datasets.end()) fail(Errc::UnknownCamera, fmt::format("no dataset for camera '{}'", held_out));

    std::vector<FitSample> training;
    for (const auto& [id, data] : datasets) {
        if (id == held_out) continue;
        for (const auto& s : data.samples) training.push_back({mirror_flip(s.h_r, config.flip), s.vis});
    }
    auto model = fit(training, config.intervals, config.flip);

    const auto& samples = test_it->second.samples;
    std::vector<double> xs;
    xs.reserve(samples.size());
    for (const auto& s : samples) xs.push_back(s.h_r);
    const auto predictions = track(model, xs);

    EvalReport report;
    report.camera_id = held_out;
    report.rows.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double est = predictions[i].vis;
        report.rows.push_back({samples[i].frame_index, est, samples[i].vis, ape(est, samples[i].vis, config.denominator),
                               "spev", samples[i].h_r});
    }
    report.summary = summarize(report.rows);
    if (fitted) *fitted = std::move(model);
    return report;
}

std::map<std::string, EvalReport> leave_one_out(const std::map<std::string, CameraDataset>& datasets,
                                                const FitConfig& config, const FoldObserver& observer) {
    if (datasets.size() < 2) {
        fail(Errc::InsufficientCameras, fmt::format("leave-one-out needs at least 2 cameras, got {}", datasets.size()));
    }
    std::vector<std::string> folds;
    for (const auto& [id, data] : datasets)
        if (data.test) folds.push_back(id);
    if (folds.empty())
        for (const auto& [id, data] : datasets) folds.push_back(id);

    if (observer) {
        for (const auto& held_out : folds) {
            std::vector<std::string> trained;
            for (const auto& [id, data] : datasets)
                if (id != held_out) trained.push_back(id);
            observer(held_out, trained);
        }
    }

    std::vector<std::future<EvalReport>> jobs;
    jobs.reserve(folds.size());
    for (const auto& held_out : folds) {
        jobs.push_back(std::async(std::launch::async, [&datasets, &config, held_out] {
            return evaluate_fold(datasets, held_out, config);
        }));
    }
    std::map<std::string, EvalReport> reports;
    for (std::size_t i = 0; i < folds.size(); ++i) reports.emplace(folds[i], jobs[i].get());
    return reports;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), Errc::InvalidArgument, "spearman inputs differ in length");
    require(a.size() >= 2, Errc::InvalidArgument, "spearman needs at least two points");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean) * (ra[i] - mean);
        vb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace spev
