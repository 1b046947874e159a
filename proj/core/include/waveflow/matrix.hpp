#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "waveflow/sampler.hpp"
#include "waveflow/trainer.hpp"

namespace waveflow {

struct ExperimentMatrix {
    std::vector<FlowKind> flows;
    std::vector<int> step_counts = {1, 2, 5, 10, 200};
    std::vector<Solver> solvers;
    std::vector<ConditioningMode> modes;
    std::vector<std::uint64_t> seeds;
};

struct MatrixConfig {
    TrainConfig base;           // training dataset, model dims, optimization
    std::string real_manifest;  // held-out evaluation set
    std::string out_dir;
    std::string checkpoint_dir;  // cells reuse <flow>_<mode>_s<seed>.ckpt when present
    bool train_missing = true;
    int n_samples = 50;  // generated per cell
};

/// One row per (flow, solver, steps, conditioning, seed) cell:
/// flow,solver,steps,conditioning,mmd,msssim,imae,kl,dice,
/// condition_proxy_spearman,wall_ms_per_sample. Deterministic per seed except
/// for the wall-clock column. Returns the CSV path.
std::string run_matrix(const ExperimentMatrix& matrix, const MatrixConfig& cfg);

struct EvaluateConfig {
    std::string real_manifest;
    std::string synth_manifest;
    std::vector<std::string> metrics = {"mmd", "msssim", "roi"};
    int n_bootstrap = 100;
    std::uint64_t seed = 1;
    std::string out_csv;
};

/// Bootstrap-resampled metric report; CSV columns metric,mean,std,n.
void run_evaluate(const EvaluateConfig& cfg);

/// Round-trip benchmark CSV (family,mean_mae,std_mae) on random volumes.
std::string wavelet_bench_csv(const std::vector<WaveletKind>& families, int n_volumes,
                              int side, std::uint64_t seed);

}  // namespace waveflow
