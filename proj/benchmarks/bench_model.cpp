#include <benchmark/benchmark.h>

#include "waveflow/net.hpp"
#include "waveflow/rng.hpp"
#include "waveflow/sampler.hpp"
#include "waveflow/trainer.hpp"

using namespace waveflow;

namespace {

VelocityModel bench_model(int d_model, int n_blocks) {
    EmbedderConfig cfg;
    cfg.d_model = d_model;
    cfg.d_cond = d_model;
    cfg.condition_ranges["age"] = {0.0, 1.0};
    return make_model(cfg, n_blocks, 3);
}

void BM_forward(benchmark::State& state) {
    const int grid = static_cast<int>(state.range(0));
    const VelocityModel model = bench_model(32, 2);
    const auto x = rng::normal_vec(1, 8u * grid * grid * grid);
    const std::map<std::string, double> cond = {{"age", 0.5}};
    for (auto _ : state)
        benchmark::DoNotOptimize(
            forward(model, x, grid, 0.5, cond, ConditioningMode::full));
    state.SetItemsProcessed(state.iterations() * x.size());
}

void BM_forward_backward(benchmark::State& state) {
    const int grid = static_cast<int>(state.range(0));
    const VelocityModel model = bench_model(32, 2);
    const auto x = rng::normal_vec(1, 8u * grid * grid * grid);
    const std::map<std::string, double> cond = {{"age", 0.5}};
    const std::vector<double> grad_out(x.size(), 1e-3);
    for (auto _ : state) {
        Forward fwd;
        benchmark::DoNotOptimize(
            forward(model, x, grid, 0.5, cond, ConditioningMode::full, &fwd));
        benchmark::DoNotOptimize(backward(model, fwd, grad_out));
    }
}

void BM_integrate(benchmark::State& state) {
    const VelocityModel model = bench_model(32, 2);
    SamplerConfig cfg;
    cfg.steps = static_cast<int>(state.range(0));
    cfg.solver = state.range(1) == 0 ? Solver::euler : Solver::rk4;
    cfg.seed = 5;
    cfg.condition = {{"age", 0.5}};
    cfg.side = 16;
    for (auto _ : state)
        benchmark::DoNotOptimize(integrate(model, cfg));
}

}  // namespace

BENCHMARK(BM_forward)->Arg(8)->Arg(16);
BENCHMARK(BM_forward_backward)->Arg(8);
BENCHMARK(BM_integrate)
    ->ArgsProduct({{1, 10}, {0, 1}})
    ->ArgNames({"steps", "solver"});
