#include <benchmark/benchmark.h>

#include "waveflow/rng.hpp"
#include "waveflow/wavelet.hpp"

using namespace waveflow;

namespace {

Volume3D random_volume(int side) {
    Volume3D vol = make_volume(side, side, side);
    const std::uint64_t key = rng::derive(1, "bench");
    for (std::size_t i = 0; i < vol.data.size(); ++i)
        vol.data[i] = static_cast<float>(2.0 * rng::uniform(key, i) - 1.0);
    return vol;
}

void BM_dwt3(benchmark::State& state) {
    const auto kind = static_cast<WaveletKind>(state.range(0));
    const int side = static_cast<int>(state.range(1));
    const Volume3D vol = random_volume(side);
    const WaveletFamily& fam = wavelet_family(kind);
    for (auto _ : state)
        benchmark::DoNotOptimize(dwt3(vol, fam));
    state.SetItemsProcessed(state.iterations() * vol.size());
}

void BM_roundtrip(benchmark::State& state) {
    const auto kind = static_cast<WaveletKind>(state.range(0));
    const int side = static_cast<int>(state.range(1));
    const Volume3D vol = random_volume(side);
    const WaveletFamily& fam = wavelet_family(kind);
    for (auto _ : state)
        benchmark::DoNotOptimize(idwt3(dwt3(vol, fam)));
    state.SetItemsProcessed(state.iterations() * vol.size());
}

}  // namespace

BENCHMARK(BM_dwt3)
    ->ArgsProduct({{0, 1, 2, 3, 4}, {16, 32, 64}})
    ->ArgNames({"family", "side"});
BENCHMARK(BM_roundtrip)
    ->ArgsProduct({{0, 4}, {32}})
    ->ArgNames({"family", "side"});
