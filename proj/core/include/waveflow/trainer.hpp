#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "waveflow/flows.hpp"
#include "waveflow/net.hpp"
#include "waveflow/optim.hpp"
#include "waveflow/wavelet.hpp"

namespace waveflow {

struct TrainConfig {
    FlowSpec flow;
    std::int64_t steps_total = 2000;
    int batch = 4;
    double lr_max = 1e-3;  // desk-scale default; the full-scale value 3e-6 stays configurable
    double eta_min = 1e-7;
    double weight_decay = 1e-5;
    double grad_clip = 1.0;
    std::uint64_t seed = 0;
    std::string dataset;  // manifest path: one "path,condition,seed" line per sample
    ConditioningMode conditioning = ConditioningMode::full;
    int d_model = 32;
    int n_freqs = 16;
    int n_blocks = 2;
    WaveletKind family = WaveletKind::haar;
    std::string condition_var = "age";
    std::string out_dir = ".";
    std::int64_t checkpoint_interval = 0;  // 0: final checkpoint only
};

/// Flat key=value text file mirroring TrainConfig fields (see README).
TrainConfig parse_train_config(const std::string& path);

/// One decomposed training sample: wavelet coefficient tensor plus condition.
struct TrainItem {
    std::vector<double> coeffs;
    double condition = 0.0;
};

struct TrainDataset {
    int side = 0;  // volume side; coefficient grid is side/2
    std::vector<TrainItem> items;
};

/// Load every manifest entry and decompose it once up front. Relative volume
/// paths resolve against the manifest's directory.
TrainDataset load_dataset(const std::string& manifest_path, WaveletKind family);

/// Mean squared difference over all elements.
double fm_loss(std::span<const double> pred, std::span<const double> target);

/// One optimization step over a batch: sample (t, x0[, xi]) per item, build
/// the flow path, regress the velocity, average gradients, clip to
/// `grad_clip` global norm, apply AdamW. Returns the pre-update loss.
double train_step(VelocityModel& model, std::vector<ParamView>& params,
                  const std::vector<const TrainItem*>& batch, int grid,
                  const FlowSpec& flow, OptimState& optim, std::int64_t step_index,
                  const TrainConfig& cfg);

struct TrainResult {
    std::string checkpoint_path;
    std::string loss_csv_path;
};

/// Full run: deterministic per-epoch shuffling, loss log CSV (step, lr, loss),
/// checkpoints at the configured interval and at the final step.
TrainResult run_training(const TrainConfig& cfg);

}  // namespace waveflow
