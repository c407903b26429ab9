#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "spev/error.hpp"
#include "spev/fog.hpp"
#include "spev/roi.hpp"
#include "support.hpp"

namespace spev {
namespace {

constexpr double kPi = std::numbers::pi;

// Dark road wedge on a bright surround, its borders meeting at (apex_x, apex_y).
GrayFrame road_wedge(int w, int h, double apex_x, double apex_y, double left_bottom, double right_bottom) {
    GrayFrame f(w, h, 0.7);
    for (int r = 0; r < h; ++r) {
        if (r <= apex_y) continue;
        const double t = (r - apex_y) / (h - 1 - apex_y);
        const double xl = apex_x + t * (left_bottom - apex_x);
        const double xr = apex_x + t * (right_bottom - apex_x);
        for (int c = 0; c < w; ++c) {
            if (c >= xl && c <= xr) f(r, c) = 0.2;
        }
    }
    return f;
}

TEST(Roi, LineHelpers) {
    const HoughLine diag{0.0, 3 * kPi / 4, 0};  // y = x
    EXPECT_NEAR(diag.slope(), 1.0, 1e-12);
    EXPECT_NEAR(diag.x_at(17.0), 17.0, 1e-9);
    const HoughLine anti{100.0 / std::sqrt(2.0), kPi / 4, 0};  // x + y = 100
    EXPECT_NEAR(anti.slope(), -1.0, 1e-12);
    const auto p = intersect(diag, anti);
    EXPECT_NEAR(p.x, 50.0, 1e-9);
    EXPECT_NEAR(p.y, 50.0, 1e-9);
    EXPECT_THROW(intersect(diag, HoughLine{10.0, 3 * kPi / 4, 0}), Error);
}

TEST(Roi, PolygonRasterizationCountsPixelCenters) {
    const auto m = RoiMask::from_polygon(10, 8, {{1.5, 1.5}, {6.5, 1.5}, {6.5, 4.5}, {1.5, 4.5}});
    EXPECT_EQ(m.count(), 15u);  // columns 2..6, rows 2..4
    EXPECT_TRUE(m.contains(2, 2));
    EXPECT_FALSE(m.contains(1, 2));
    EXPECT_FALSE(m.contains(2, 7));
    EXPECT_EQ(RoiMask::full(7, 5).count(), 35u);
    EXPECT_DOUBLE_EQ(RoiMask::full(7, 5).coverage(), 1.0);
}

TEST(Roi, DetectsASingleDiagonalLine) {
    GrayFrame f(120, 120, 0.1);
    for (int r = 0; r < 120; ++r)
        for (int c = 0; c < 120; ++c)
            if (c > r) f(r, c) = 0.9;
    const auto lines = detect_lane_lines(f, 0.02, 0.05, 40);
    ASSERT_FALSE(lines.empty());
    EXPECT_NEAR(std::abs(lines[0].slope()), 1.0, 0.02);
    EXPECT_NEAR(lines[0].x_at(60.0), 60.0, 1.5);
}

TEST(Roi, ConvergingBordersRecoverTheApex) {
    const auto f = road_wedge(400, 240, 200.0, 60.0, 40.0, 360.0);
    const auto lines = detect_lane_lines(f, 0.02, 0.05, 60);
    const auto res = build_roi(lines, 400, 240, 10.0);
    EXPECT_NEAR(res.horizon_row, 60.0, 1.5);
    EXPECT_LT(res.left.slope(), 0.0);
    EXPECT_GT(res.right.slope(), 0.0);
    // The trapezoid starts below the apex and is symmetric about the center.
    for (int r = 0; r < 70; ++r)
        for (int c = 0; c < 400; ++c) EXPECT_FALSE(res.roi.contains(r, c));
    std::size_t left = 0;
    std::size_t right = 0;
    for (int r = 0; r < 240; ++r)
        for (int c = 0; c < 400; ++c)
            if (res.roi.contains(r, c)) (c < 200 ? left : right)++;
    EXPECT_NEAR(static_cast<double>(left), static_cast<double>(right), 0.03 * (left + right));
}

TEST(Roi, ParallelBordersAreRejected) {
    std::vector<HoughLine> lines{{50.0, kPi / 4, 10}, {80.0, kPi / 4, 9}};
    EXPECT_THROW(build_roi(lines, 200, 200), Error);
}

TEST(Roi, FlatImageHasNoLines) {
    GrayFrame f(64, 64, 0.4);
    try {
        detect_lane_lines(f, 0.02, 0.05, 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NoLinesFound);
    }
}

TEST(Roi, SyntheticSceneHorizon) {
    SceneSpec spec;
    const auto scene = make_clear_scene(spec, 3);
    const auto smooth = gaussian_smooth(scene, 2.0, 6);
    const auto res = build_roi(detect_lane_lines(smooth, 0.02, 0.05, 100), spec.width, spec.height, 10.0);
    EXPECT_NEAR(res.horizon_row, spec.v_h, 1.0);
    EXPECT_GT(res.roi.coverage(), 0.2);
}

TEST(Roi, MaskFileCarriesComment) {
    test::ScratchDir dir("roi");
    const auto m = RoiMask::full(4, 3);
    m.save_pgm(dir / "m.pgm", "hash abc");
    const auto text = test::slurp(dir / "m.pgm");
    EXPECT_EQ(text.rfind("P5\n# hash abc\n4 3\n255\n", 0), 0u);
    EXPECT_EQ(text.size(), std::string("P5\n# hash abc\n4 3\n255\n").size() + 12);
}

}  // namespace
}  // namespace spev
