#include <gtest/gtest.h>

#include <algorithm>
#include <mutex>

#include "spev/error.hpp"
#include "spev/evaluation.hpp"
#include "support.hpp"

namespace spev {
namespace {

using test::code_of;

TEST(Ape, SignAndDenominator) {
    EXPECT_DOUBLE_EQ(ape(110.0, 100.0), 10.0 / 110.0 * 100.0);
    EXPECT_DOUBLE_EQ(ape(90.0, 100.0), -10.0 / 90.0 * 100.0);
    EXPECT_DOUBLE_EQ(ape(110.0, 100.0, ApeDenominator::Reference), 10.0);
    EXPECT_EQ(code_of([] { ape(0.0, 5.0); }), Errc::ZeroEstimate);
    EXPECT_EQ(code_of([] { ape(5.0, 0.0, ApeDenominator::Reference); }), Errc::ZeroEstimate);
}

TEST(Summary, CountsThresholdsOnMagnitude) {
    std::vector<EvalRow> rows;
    for (double a : {-25.0, -15.0, -5.0, 0.0, 9.99, 10.0, 19.0, 30.0}) rows.push_back({0, 1, 1, a, "spev", 10});
    const auto s = summarize(rows);
    EXPECT_EQ(s.n, 8u);
    EXPECT_DOUBLE_EQ(s.frac_under_10pct, 3.0 / 8.0);
    EXPECT_DOUBLE_EQ(s.frac_under_20pct, 6.0 / 8.0);
    EXPECT_DOUBLE_EQ(s.min_ape, -25.0);
    EXPECT_DOUBLE_EQ(s.max_ape, 30.0);
    EXPECT_DOUBLE_EQ(s.mean_abs_ape, (25 + 15 + 5 + 0 + 9.99 + 10 + 19 + 30) / 8.0);
    EXPECT_EQ(code_of([] { summarize({}); }), Errc::EmptyInput);
}

TEST(Spearman, MatchesRankOracle) {
    test::Gen gen(71);
    for (int i = 0; i < 200; ++i) {
        const int n = gen.integer(2, 40);
        std::vector<double> a;
        std::vector<double> b;
        for (int j = 0; j < n; ++j) {
            a.push_back(gen.integer(0, 8));  // many ties
            b.push_back(gen.coin() ? a.back() + gen.uniform(-3, 3) : gen.uniform(0, 8));
        }
        const double want = test::oracle_spearman(a, b);
        if (std::isnan(want)) continue;
        EXPECT_NEAR(spearman(a, b), want, 1e-12);
    }
    const std::vector<double> up{1, 2, 3, 4};
    const std::vector<double> down{8, 6, 4, 2};
    EXPECT_DOUBLE_EQ(spearman(up, down), -1.0);
    EXPECT_EQ(code_of([&] { spearman(up, std::vector<double>{1, 2}); }), Errc::InvalidArgument);
}

// Camera whose visibility is exactly linear in the ratio.
CameraDataset linear_camera(double offset, bool test_flag) {
    CameraDataset d;
    d.test = test_flag;
    for (int i = 0; i < 40; ++i) {
        const double x = 10.0 + i * 0.02;
        d.samples.push_back({i, x, 500.0 - 550.0 * (x - 10.0) + offset});
    }
    return d;
}

TEST(LeaveOneOut, FoldsFollowTestFlags) {
    std::map<std::string, CameraDataset> data{{"a", linear_camera(0, true)},
                                              {"b", linear_camera(0, false)},
                                              {"c", linear_camera(0, true)},
                                              {"d", linear_camera(0, false)}};
    FitConfig cfg;
    cfg.intervals = {{0.0, 600.0, {1}}};
    std::mutex m;
    std::map<std::string, std::vector<std::string>> seen;
    const auto reports = leave_one_out(data, cfg, [&](const std::string& held, const std::vector<std::string>& trained) {
        std::lock_guard lock(m);
        seen[held] = trained;
    });
    ASSERT_EQ(reports.size(), 2u);
    EXPECT_EQ(seen["a"], (std::vector<std::string>{"b", "c", "d"}));
    EXPECT_EQ(seen["c"], (std::vector<std::string>{"a", "b", "d"}));
    for (const auto& [id, rep] : reports) {
        EXPECT_EQ(rep.camera_id, id);
        EXPECT_EQ(rep.rows.size(), 40u);
        EXPECT_NEAR(rep.summary.mean_abs_ape, 0.0, 1e-6);
    }
    for (auto& [id, d] : data) d.test = false;
    EXPECT_EQ(leave_one_out(data, cfg).size(), 4u);
    std::map<std::string, CameraDataset> one{{"a", linear_camera(0, true)}};
    EXPECT_EQ(code_of([&] { leave_one_out(one, cfg); }), Errc::InsufficientCameras);
}

TEST(LeaveOneOut, HeldOutCameraNeverTrains) {
    // A wildly offset held-out camera must not pull the fitted model.
    std::map<std::string, CameraDataset> data{{"a", linear_camera(0, false)},
                                              {"b", linear_camera(0, false)},
                                              {"x", linear_camera(300, true)}};
    FitConfig cfg;
    cfg.intervals = {{0.0, 1000.0, {1}}};
    PiecewiseModel fitted;
    const auto rep = evaluate_fold(data, "x", cfg, &fitted);
    EXPECT_NEAR(fitted.pieces[0].alpha, -550.0, 1e-6);
    EXPECT_NEAR(rep.rows[0].vis_ref - rep.rows[0].vis_est, 300.0, 1e-6);
}

TEST(Track, CarriesPreviousEstimate) {
    PiecewiseModel m;
    m.pieces = {{0, 0, 0, 30.0, 0, 50}, {0, 0, 0, 60.0, 50, 100}};
    // Both pieces are self-consistent everywhere; the first call takes the
    // lowest piece and continuity keeps it there.
    const std::vector<double> xs{1, 2, 3};
    for (const auto& p : track(m, xs)) EXPECT_EQ(p.piece_index, 0u);
    m.pieces[0].eta = 45.0;
    m.pieces[1].eta = 52.0;
    const auto ps = track(m, xs);
    EXPECT_DOUBLE_EQ(ps[0].vis, 45.0);
    EXPECT_DOUBLE_EQ(ps[2].vis, 45.0);
    m.flip = {true, 0.0, 4.0};
    EXPECT_EQ(track(m, xs).size(), 3u);
}

}  // namespace
}  // namespace spev
