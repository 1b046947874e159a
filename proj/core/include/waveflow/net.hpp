#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace waveflow {

struct EmbedderConfig {
    int d_model = 32;
    int d_cond = 32;   // must equal d_model (fusion by summation)
    int n_freqs = 16;  // sinusoidal time-embedding frequencies
    std::map<std::string, std::pair<double, double>> condition_ranges;
};

/// Dense layer, row-major weights w[out][in], f32 storage, f64 arithmetic.
struct Linear {
    int in = 0, out = 0;
    std::vector<float> w, b;
};

struct FiLMResBlock {
    Linear lin1, lin2;
    Linear film_time;  // d_model -> 2 d_model (scale | shift)
    Linear film_cond;
};

struct CrossAttention {
    Linear wq, wk, wv, wo;
};

struct CondEmbedder {
    Linear l1;  // 1 -> d_model
    Linear l2;  // d_model -> d_model
};

enum class ConditioningMode { full, film_only, spatial_only, unconditional };

const char* conditioning_name(ConditioningMode mode);
ConditioningMode conditioning_mode(std::string_view name);

/// Conditional velocity network over wavelet tokens: per-position tokens with
/// 8 subband channels, input projection plus fixed sinusoidal position
/// encoding, FiLM-modulated residual blocks, one cross-attention block that
/// queries the condition embedding, and an output projection back to 8
/// channels (zero-initialized so the untrained model predicts v = 0).
struct VelocityModel {
    EmbedderConfig cfg;
    Linear proj_in;   // 8 -> d_model
    Linear proj_out;  // d_model -> 8
    std::vector<FiLMResBlock> blocks;
    CrossAttention attn;
    Linear time_l1;  // 2 n_freqs -> d_model
    Linear time_l2;  // d_model -> d_model
    std::map<std::string, CondEmbedder> cond_mlps;
};

VelocityModel make_model(const EmbedderConfig& cfg, int n_blocks, std::uint64_t seed);

struct ParamView {
    std::string name;
    std::vector<float>* data;
    std::vector<int> shape;
};

std::vector<ParamView> collect_params(VelocityModel& model);
std::size_t param_count(const VelocityModel& model);

struct LinearGrad {
    std::vector<double> w, b;
};

/// Parameter gradients mirroring the model, plus the gradient wrt the input
/// tensor. Flattened in the same canonical order as collect_params.
struct Gradients {
    std::vector<std::vector<double>> by_param;  // parallel to collect_params
    std::vector<double> d_input;
};

struct ForwardCache;  // opaque; defined in net.cpp

class Forward {
  public:
    Forward();
    ~Forward();
    Forward(Forward&&) noexcept;
    Forward& operator=(Forward&&) noexcept;

    ForwardCache* cache = nullptr;
};

/// Raw sinusoidal features [sin(w_k t)..., cos(w_k t)...] with w_k geometric
/// from 1 to 1e4.
std::vector<double> time_features(double t, int n_freqs);

/// time_features followed by the model's two-layer SiLU time MLP.
std::vector<double> embed_time(const VelocityModel& model, double t);

/// Per-variable range normalization to [0,1], per-variable two-layer SiLU
/// MLP, fused by element-wise summation.
std::vector<double> embed_condition(const VelocityModel& model,
                                    const std::map<std::string, double>& values);

/// Sequential FiLM over per-token channel-normalized features:
///   h' = Norm(h) (1 + g_time) + b_time;  out = h' (1 + g_cond) + b_cond
std::vector<double> film_modulate(std::span<const double> tokens, int d_model,
                                  std::span<const double> e_time,
                                  std::span<const double> e_cond,
                                  const FiLMResBlock& block);

/// Scaled dot-product attention of spatial tokens against the single
/// condition token; residual added: out = tokens + W_O(attended).
std::vector<double> cross_attend(std::span<const double> tokens, int d_model,
                                 std::span<const double> e_cond,
                                 const CrossAttention& attn);

/// Predict the velocity tensor (same subband-major layout as the input) for a
/// half-resolution grid of side `grid`. Pass a Forward object to retain the
/// intermediates needed by backward().
std::vector<double> forward(const VelocityModel& model, std::span<const double> x,
                            int grid, double t,
                            const std::map<std::string, double>& cond,
                            ConditioningMode mode, Forward* fwd = nullptr);

/// Exact reverse-mode gradients through forward() for a scalar loss with
/// d loss / d v_pred = grad_out.
Gradients backward(const VelocityModel& model, const Forward& fwd,
                   std::span<const double> grad_out);

/// Checkpoint: UTF-8 JSON manifest [{name, shape, byte_offset}...] + '\0' +
/// concatenated little-endian f32 payload. `extras` are additional named
/// tensors stored alongside the parameters (e.g. training metadata).
void save_checkpoint(const VelocityModel& model, const std::string& path,
                     const std::map<std::string, std::vector<float>>& extras = {});
VelocityModel load_checkpoint(const std::string& path,
                              std::map<std::string, std::vector<float>>* extras = nullptr);

}  // namespace waveflow
