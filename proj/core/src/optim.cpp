#include "waveflow/optim.hpp"

#include <cmath>

#include "waveflow/errors.hpp"

namespace waveflow {

OptimState make_optim_state(VelocityModel& model, std::int64_t schedule_steps,
                            double lr_max, double eta_min, double weight_decay) {
    OptimState st;
    st.lr_max = lr_max;
    st.eta_min = eta_min;
    st.weight_decay = weight_decay;
    st.total_steps = schedule_steps > 1 ? schedule_steps - 1 : 1;
    for (const auto& p : collect_params(model)) {
        st.m.emplace_back(p.data->size(), 0.0f);
        st.v.emplace_back(p.data->size(), 0.0f);
    }
    return st;
}

double cosine_lr(const OptimState& state, std::int64_t step) {
    const double frac = static_cast<double>(step) / static_cast<double>(state.total_steps);
    return state.eta_min +
           0.5 * (state.lr_max - state.eta_min) * (1.0 + std::cos(M_PI * frac));
}

double clip_grad_norm(Gradients& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads.by_param)
        for (double v : g)
            sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& g : grads.by_param)
            for (double& v : g)
                v *= scale;
    }
    return norm;
}

void adamw_step(OptimState& state, std::vector<ParamView>& params, const Gradients& grads,
                std::int64_t step_index) {
    if (params.size() != grads.by_param.size() || params.size() != state.m.size())
        throw ShapeMismatch("adamw_step: parameter/gradient/moment count mismatch");

    const double lr = cosine_lr(state, step_index);
    const double t = static_cast<double>(step_index) + 1.0;
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);

    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& theta = *params[p].data;
        const auto& g = grads.by_param[p];
        auto& m = state.m[p];
        auto& v = state.v[p];
        if (theta.size() != g.size())
            throw ShapeMismatch("adamw_step: gradient shape mismatch for " + params[p].name);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = g[i];
            const double mi = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            const double vi = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            const double update =
                m_hat / (std::sqrt(v_hat) + state.adam_eps) + state.weight_decay * theta[i];
            theta[i] = static_cast<float>(theta[i] - lr * update);
        }
    }
    state.step = step_index + 1;
}

}  // namespace waveflow
