#pragma once

#include <cstdint>
#include <vector>

#include "waveflow/net.hpp"

namespace waveflow {

/// AdamW with decoupled weight decay and cosine-annealed learning rate.
struct OptimState {
    std::int64_t step = 0;
    std::int64_t total_steps = 1;  // schedule horizon (last step index)
    double lr_max = 1e-3;
    double eta_min = 1e-7;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::vector<std::vector<float>> m, v;  // first/second moments per parameter
};

/// Moments sized to the model's parameters; `schedule_steps` optimization
/// steps will be taken, with lr(0) = lr_max and lr(last step) = eta_min.
OptimState make_optim_state(VelocityModel& model, std::int64_t schedule_steps,
                            double lr_max, double eta_min, double weight_decay);

/// lr(step) = eta_min + 1/2 (lr_max - eta_min)(1 + cos(pi step / total_steps))
double cosine_lr(const OptimState& state, std::int64_t step);

/// Rescale gradients in place so the global L2 norm is at most `max_norm`;
/// returns the pre-clip norm.
double clip_grad_norm(Gradients& grads, double max_norm);

/// One AdamW update over all parameters; bias-corrected moments, decoupled
/// decay, lr taken from the cosine schedule at `step_index`.
void adamw_step(OptimState& state, std::vector<ParamView>& params, const Gradients& grads,
                std::int64_t step_index);

}  // namespace waveflow
