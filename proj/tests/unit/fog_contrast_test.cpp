#include <gtest/gtest.h>

#include <cmath>

#include "spev/contrast.hpp"
#include "spev/error.hpp"
#include "spev/fog.hpp"
#include "support.hpp"

namespace spev {
namespace {

using test::code_of;

TEST(Fog, ExtinctionAndVisibilityAreInverse) {
    test::Gen gen(51);
    for (int i = 0; i < 100; ++i) {
        const double vis = gen.uniform(1.0, 2000.0);
        EXPECT_NEAR(vis_from_k(k_from_vis(vis)), vis, 1e-9 * vis);
    }
    EXPECT_NEAR(k_from_vis(299.0), 0.01, 1e-15);
    EXPECT_EQ(code_of([] { k_from_vis(0.0); }), Errc::NonPositiveArgument);
    EXPECT_EQ(code_of([] { vis_from_k(-1.0); }), Errc::NonPositiveArgument);
}

TEST(Fog, KoschmiederPixelValues) {
    const auto geom = make_geometry(200.0, 300.0, 100.0, 10.0);
    const auto depth = depth_from_geometry(geom, 6, 320);
    EXPECT_TRUE(std::isinf(depth(100, 0)));
    EXPECT_TRUE(std::isinf(depth(40, 3)));
    EXPECT_NEAR(depth(200, 2), row_to_distance(200.0, geom), 1e-12);

    test::Gen gen(52);
    const auto clear = gen.frame(6, 320);
    const auto fog = FogParams::from_visibility(150.0, 0.7);
    const auto out = apply_fog(clear, depth, fog);
    for (int r = 0; r < 320; ++r) {
        for (int c = 0; c < 6; ++c) {
            const double d = depth(r, c);
            const double t = std::isinf(d) ? 0.0 : std::exp(-fog.k * d);
            EXPECT_NEAR(out(r, c), clear(r, c) * t + 0.7 * (1.0 - t), 1e-12);
        }
    }
}

TEST(Fog, ContrastDecaysWithDistanceAndDensity) {
    SceneSpec spec;
    const auto geom = scene_geometry(spec, 35.0, 20.0);
    EXPECT_NEAR(geom.lambda, spec.lambda, 1e-9);
    const auto scene = make_clear_scene(spec, 9);
    const auto seq = synth_sequence(scene, geom, std::vector<double>{400.0, 100.0, 30.0}, spec.sky);
    ASSERT_EQ(seq.size(), 3u);
    const auto roi = RoiMask::full(spec.width, spec.height);
    double prev = 2.0;
    for (const auto& s : seq) {
        EXPECT_NEAR(s.k, k_from_vis(s.vis_true), 1e-15);
        const auto prof = row_contrast(s.frame, roi);
        const double near_row = prof.rows[static_cast<std::size_t>(spec.height - 1)].contrast;
        EXPECT_LT(near_row, prev);
        prev = near_row;
    }
    EXPECT_EQ(code_of([&] { synth_sequence(scene, geom, std::vector<double>{2500.0}); }), Errc::InvalidArgument);
}

TEST(Fog, GeometricScheduleEndpoints) {
    const auto s = geometric_schedule(600.0, 20.0, 200);
    ASSERT_EQ(s.size(), 200u);
    EXPECT_DOUBLE_EQ(s.front(), 600.0);
    EXPECT_NEAR(s.back(), 20.0, 1e-9);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_NEAR(s[i] / s[i - 1], s[1] / s[0], 1e-12);
}

TEST(Fog, SceneGenerationIsSeeded) {
    SceneSpec spec;
    spec.width = 200;
    spec.height = 120;
    spec.v_h = 30.0;
    spec.lambda = 15.0 * (119 - 30);
    spec.road_left_bottom = 20;
    spec.road_right_bottom = 180;
    const auto a = make_clear_scene(spec, 5);
    const auto b = make_clear_scene(spec, 5);
    const auto c = make_clear_scene(spec, 6);
    EXPECT_TRUE(std::equal(a.pixels().begin(), a.pixels().end(), b.pixels().begin()));
    EXPECT_FALSE(std::equal(a.pixels().begin(), a.pixels().end(), c.pixels().begin()));
    for (double v : a.pixels()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    for (int col = 0; col < 200; ++col) EXPECT_DOUBLE_EQ(a(0, col), spec.sky);
}

TEST(Contrast, MichelsonPerRow) {
    GrayFrame f(4, 3, 0.5);
    f(0, 0) = 0.2;
    f(0, 1) = 0.6;
    f(1, 2) = 0.0;
    f(1, 3) = 1.0;
    const auto prof = row_contrast(f, RoiMask::full(4, 3));
    ASSERT_EQ(prof.rows.size(), 3u);
    EXPECT_NEAR(prof.rows[0].contrast, 0.5, 1e-12);
    EXPECT_NEAR(prof.rows[1].contrast, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(prof.rows[2].contrast, 0.0);
    EXPECT_DOUBLE_EQ(row_contrast(GrayFrame(3, 3, 0.0), RoiMask::full(3, 3)).rows[0].contrast, 0.0);
}

TEST(Contrast, FirstQualifyingRowBelowHorizon) {
    const auto geom = make_geometry(60.0, 90.0, 40.0, 10.0);
    ContrastProfile p;
    for (int r = 0; r < 100; ++r) p.rows.push_back({r, r >= 70 ? 0.3 : 0.01});
    p.rows[10].contrast = 0.9;  // above the horizon, ignored
    EXPECT_NEAR(contrast_visibility(p, geom, 0.05), row_to_distance(70.0, geom), 1e-12);
    for (auto& row : p.rows) row.contrast = 0.0;
    EXPECT_DOUBLE_EQ(contrast_visibility(p, geom, 0.05), 0.0);
}

TEST(Contrast, VisibilityOfAlternatingTexture) {
    // Columns alternate 0 / 1 and the airlight is 0.5, so a fogged row has
    // Michelson contrast exp(-k d) exactly.
    SceneSpec spec;
    const auto geom = scene_geometry(spec, 35.0, 20.0);
    GrayFrame clear(spec.width, spec.height);
    for (int r = 0; r < spec.height; ++r)
        for (int c = 0; c < spec.width; ++c) clear(r, c) = (c % 2) ? 1.0 : 0.0;
    const auto depth = depth_from_geometry(geom, spec.width, spec.height);
    const auto roi = RoiMask::full(spec.width, spec.height);
    for (double vis : {60.0, 100.0, 200.0}) {
        const auto fogged = apply_fog(clear, depth, FogParams::from_visibility(vis, 0.5));
        EXPECT_NEAR(contrast_visibility(fogged, roi, geom, 0.05), vis, 0.1 * vis);
    }
}

}  // namespace
}  // namespace spev
