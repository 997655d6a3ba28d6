#include <benchmark/benchmark.h>

#include "vstab/engine.hpp"
#include "vstab/msc.hpp"
#include "vstab/registration.hpp"
#include "vstab/scene.hpp"

using namespace vstab;

namespace {

void BM_BestTranslation(benchmark::State& state) {
    const int radius = static_cast<int>(state.range(0));
    const SpatialArray ref = random_binary_texture(128, 128, 1);
    const SpatialArray moving = shift(ref, {3, -2});
    const PreparedReference prepared(ref, EccentricityWeight{});
    MatchOptions opts;
    opts.radius = radius;
    opts.weight = EccentricityWeight{};
    for (auto _ : state) benchmark::DoNotOptimize(best_translation(moving, prepared, opts));
}
BENCHMARK(BM_BestTranslation)->Arg(4)->Arg(20);

void BM_MscBestTranslation(benchmark::State& state) {
    const int radius = static_cast<int>(state.range(0));
    const SpatialArray ref = random_binary_texture(128, 128, 1);
    const SpatialArray moving = shift(ref, {3, -2});
    const PreparedReference prepared(ref, EccentricityWeight{});
    MscOptions opts;
    opts.radius = radius;
    opts.weight = EccentricityWeight{};
    for (auto _ : state) benchmark::DoNotOptimize(msc_best_translation(moving, prepared, opts));
}
BENCHMARK(BM_MscBestTranslation)->Arg(4)->Arg(20);

void BM_Compete(benchmark::State& state) {
    MscNetwork base = MscNetwork::for_radius(20, 0.5, Saturation{});
    for (std::size_t i = 0; i < base.match_neurons.size(); ++i)
        base.match_neurons[i].activation = 0.5 + 0.4 * static_cast<double>(i % 97) / 97.0;
    for (auto _ : state) {
        MscNetwork net = base;
        benchmark::DoNotOptimize(compete(net));
    }
}
BENCHMARK(BM_Compete);

void BM_EngineStep(benchmark::State& state) {
    const EyeTrace trace = generate_drift(1, 1.0, kStrongFixation.diffusion, 1000.0);
    SceneConfig scene;
    scene.gain_g = static_cast<double>(state.range(0)) / 10.0;
    EngineConfig cfg;
    cfg.backend = state.range(1) ? MatcherBackend::Msc : MatcherBackend::Functional;
    const SceneRenderer renderer(trace, scene);
    std::vector<RetinalFrame> frames;
    for (std::size_t i = 0; i < 200; ++i) frames.push_back(renderer.render_step(i));
    for (auto _ : state) {
        state.PauseTiming();
        StabilizationEngine engine(cfg, scene);
        EngineState st = engine.initialize(frames[0]);
        state.ResumeTiming();
        for (const RetinalFrame& f : frames) benchmark::DoNotOptimize(engine.step(st, f));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames.size()));
}
BENCHMARK(BM_EngineStep)->Args({0, 0})->Args({-10, 0})->Args({20, 0})->Args({-10, 1})->Unit(benchmark::kMillisecond);

void BM_RenderStep(benchmark::State& state) {
    const EyeTrace trace = generate_drift(1, 1.0, kStrongFixation.diffusion, 1000.0);
    const SceneRenderer renderer(trace, SceneConfig{});
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(renderer.render_step(i++ % trace.size()));
}
BENCHMARK(BM_RenderStep);

}  // namespace
BENCHMARK_MAIN();
