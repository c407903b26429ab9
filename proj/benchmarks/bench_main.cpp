#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spev/entropy.hpp"
#include "spev/fog.hpp"
#include "spev/model.hpp"

namespace {

spev::GrayFrame noise_frame(int w, int h) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    spev::GrayFrame f(w, h);
    for (double& v : f.pixels()) v = u(rng);
    return f;
}

void BM_IntensityEntropy(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    const int h = w * 9 / 16;
    const auto f = noise_frame(w, h);
    const auto roi = spev::RoiMask::full(w, h);
    for (auto _ : state) benchmark::DoNotOptimize(spev::intensity_entropy(f, roi));
    state.SetItemsProcessed(state.iterations() * w * h);
}
BENCHMARK(BM_IntensityEntropy)->Arg(320)->Arg(960);

void BM_GaussianEntropy(benchmark::State& state) {
    const auto f = noise_frame(960, 540);
    const auto roi = spev::RoiMask::full(960, 540);
    for (auto _ : state) benchmark::DoNotOptimize(spev::gaussian_entropy(f, roi, 1.5, 3));
}
BENCHMARK(BM_GaussianEntropy);

void BM_ApplyFog(benchmark::State& state) {
    spev::SceneSpec spec;
    const auto clear = spev::make_clear_scene(spec, 1);
    const auto depth = spev::depth_from_geometry(spev::scene_geometry(spec, 35.0, 20.0), spec.width, spec.height);
    const auto fog = spev::FogParams::from_visibility(150.0);
    for (auto _ : state) benchmark::DoNotOptimize(spev::apply_fog(clear, depth, fog));
}
BENCHMARK(BM_ApplyFog);

void BM_FitPiecewise(benchmark::State& state) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 600.0);
    std::vector<spev::FitSample> samples;
    for (int i = 0; i < state.range(0); ++i) {
        const double vis = u(rng);
        samples.push_back({2.0 + vis / 75.0, vis});
    }
    const auto intervals = spev::default_fit_intervals();
    for (auto _ : state) benchmark::DoNotOptimize(spev::fit(samples, intervals));
}
BENCHMARK(BM_FitPiecewise)->Arg(1000)->Arg(10000);

void BM_Predict(benchmark::State& state) {
    const auto model = spev::bundled_model();
    double prev = 300.0;
    double x = 9.0;
    for (auto _ : state) {
        const auto p = spev::predict(model, x, prev);
        prev = p.vis;
        x = x > 10.5 ? 9.0 : x + 0.01;
        benchmark::DoNotOptimize(p);
    }
}
BENCHMARK(BM_Predict);

}  // namespace
BENCHMARK_MAIN();
