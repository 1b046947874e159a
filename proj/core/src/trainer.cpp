#include "waveflow/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "waveflow/errors.hpp"
#include "waveflow/rng.hpp"
#include "waveflow/volume.hpp"

namespace waveflow {

namespace {

constexpr double kTimeClamp = 1e-5;  // keeps t away from the cfm/vp endpoint singularities

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void accumulate(Gradients& total, const Gradients& part) {
    if (total.by_param.empty()) {
        total = part;
        return;
    }
    for (std::size_t p = 0; p < total.by_param.size(); ++p)
        for (std::size_t i = 0; i < total.by_param[p].size(); ++i)
            total.by_param[p][i] += part.by_param[p][i];
}

}  // namespace

TrainConfig parse_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open train config: " + path);
    TrainConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#')
            continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw DomainError("train config line " + std::to_string(lineno) +
                              " is not key=value: " + stripped);
        const std::string key = trim(stripped.substr(0, eq));
        const std::string val = trim(stripped.substr(eq + 1));
        try {
            if (key == "flow") cfg.flow.kind = flow_kind(val);
            else if (key == "epsilon") cfg.flow.epsilon = std::stod(val);
            else if (key == "vp_beta_min") cfg.flow.vp_beta_min = std::stod(val);
            else if (key == "vp_beta_max") cfg.flow.vp_beta_max = std::stod(val);
            else if (key == "steps_total") cfg.steps_total = std::stoll(val);
            else if (key == "batch") cfg.batch = std::stoi(val);
            else if (key == "lr_max") cfg.lr_max = std::stod(val);
            else if (key == "eta_min") cfg.eta_min = std::stod(val);
            else if (key == "weight_decay") cfg.weight_decay = std::stod(val);
            else if (key == "grad_clip") cfg.grad_clip = std::stod(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "dataset") cfg.dataset = val;
            else if (key == "conditioning") cfg.conditioning = conditioning_mode(val);
            else if (key == "d_model") cfg.d_model = std::stoi(val);
            else if (key == "n_freqs") cfg.n_freqs = std::stoi(val);
            else if (key == "n_blocks") cfg.n_blocks = std::stoi(val);
            else if (key == "wavelet") cfg.family = wavelet_family(val).kind;
            else if (key == "condition_var") cfg.condition_var = val;
            else if (key == "out_dir") cfg.out_dir = val;
            else if (key == "checkpoint_interval") cfg.checkpoint_interval = std::stoll(val);
            else
                throw DomainError("unknown train config key: " + key);
        } catch (const std::invalid_argument&) {
            throw DomainError("bad value for train config key " + key + ": " + val);
        }
    }
    if (cfg.steps_total < 1 || cfg.batch < 1)
        throw DomainError("steps_total and batch must be >= 1");
    return cfg;
}

TrainDataset load_dataset(const std::string& manifest_path, WaveletKind family) {
    std::ifstream in(manifest_path);
    if (!in)
        throw IoError("cannot open dataset manifest: " + manifest_path);
    const auto base = std::filesystem::path(manifest_path).parent_path();
    const WaveletFamily& fam = wavelet_family(family);

    TrainDataset ds;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#')
            continue;
        std::stringstream ss(stripped);
        std::string path_field, cond_field;
        if (!std::getline(ss, path_field, ',') || !std::getline(ss, cond_field, ','))
            throw DomainError("manifest line " + std::to_string(lineno) +
                              " is not path,condition,seed: " + stripped);
        std::filesystem::path vol_path(trim(path_field));
        if (vol_path.is_relative())
            vol_path = base / vol_path;
        const Volume3D vol = load_rawvol(vol_path.string());
        if (vol.depth != vol.height || vol.depth != vol.width)
            throw BadDims("training volumes must be cubic: " + vol_path.string());
        if (ds.side == 0)
            ds.side = vol.depth;
        else if (ds.side != vol.depth)
            throw ShapeMismatch("training volumes must share one size: " + vol_path.string());
        TrainItem item;
        item.condition = std::stod(trim(cond_field));
        item.coeffs = coeffs_to_tensor(dwt3(vol, fam));
        ds.items.push_back(std::move(item));
    }
    if (ds.items.empty())
        throw EmptySet("dataset manifest has no samples: " + manifest_path);
    return ds;
}

double fm_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size())
        throw ShapeMismatch("fm_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double train_step(VelocityModel& model, std::vector<ParamView>& params,
                  const std::vector<const TrainItem*>& batch, int grid,
                  const FlowSpec& flow, OptimState& optim, std::int64_t step_index,
                  const TrainConfig& cfg) {
    const int B = static_cast<int>(batch.size());
    Gradients total;
    double loss_sum = 0.0;

    for (int j = 0; j < B; ++j) {
        const TrainItem& item = *batch[j];
        const std::uint64_t draw = static_cast<std::uint64_t>(step_index) * B + j;
        const double t = std::clamp(rng::uniform(rng::derive(cfg.seed, "t"), draw),
                                    kTimeClamp, 1.0 - kTimeClamp);
        const auto x0 = rng::normal_vec(rng::derive(cfg.seed, "x0", draw), item.coeffs.size());
        std::vector<double> xi;
        if (flow.kind == FlowKind::vp)
            xi = rng::normal_vec(rng::derive(cfg.seed, "xi", draw), item.coeffs.size());

        const PathSample ps = path_sample(flow, x0, item.coeffs, t, xi);
        Forward fwd;
        const auto v_pred = forward(model, ps.x_t, grid, t,
                                    {{cfg.condition_var, item.condition}},
                                    cfg.conditioning, &fwd);
        loss_sum += fm_loss(v_pred, ps.v_target);

        std::vector<double> grad_out(v_pred.size());
        const double scale = 2.0 / (static_cast<double>(v_pred.size()) * B);
        for (std::size_t i = 0; i < v_pred.size(); ++i)
            grad_out[i] = scale * (v_pred[i] - ps.v_target[i]);
        accumulate(total, backward(model, fwd, grad_out));
    }

    const double loss = loss_sum / B;
    if (!std::isfinite(loss))
        throw NonFiniteState("training loss diverged");

    clip_grad_norm(total, cfg.grad_clip);
    adamw_step(optim, params, total, step_index);
    return loss;
}

TrainResult run_training(const TrainConfig& cfg) {
    const TrainDataset ds = load_dataset(cfg.dataset, cfg.family);
    const int grid = ds.side / 2;

    EmbedderConfig ecfg;
    ecfg.d_model = cfg.d_model;
    ecfg.d_cond = cfg.d_model;
    ecfg.n_freqs = cfg.n_freqs;
    ecfg.condition_ranges[cfg.condition_var] = {0.0, 1.0};
    VelocityModel model = make_model(ecfg, cfg.n_blocks, rng::derive(cfg.seed, "model"));
    auto params = collect_params(model);
    OptimState optim =
        make_optim_state(model, cfg.steps_total, cfg.lr_max, cfg.eta_min, cfg.weight_decay);

    std::filesystem::create_directories(cfg.out_dir);
    const std::string csv_path = (std::filesystem::path(cfg.out_dir) / "loss.csv").string();
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv)
        throw IoError("cannot open loss log for writing: " + csv_path);
    csv << "step,lr,loss\n";

    const std::map<std::string, std::vector<float>> extras = {
        {"meta.side", {static_cast<float>(ds.side)}},
        {"meta.family", {static_cast<float>(static_cast<int>(cfg.family))}},
    };
    const std::string ckpt_path =
        (std::filesystem::path(cfg.out_dir) / "model.ckpt").string();

    std::vector<std::size_t> order(ds.items.size());
    std::size_t cursor = order.size();  // forces a shuffle before the first step
    std::uint64_t epoch = 0;

    for (std::int64_t step = 0; step < cfg.steps_total; ++step) {
        std::vector<const TrainItem*> batch;
        batch.reserve(cfg.batch);
        for (int j = 0; j < cfg.batch; ++j) {
            if (cursor >= order.size()) {
                for (std::size_t i = 0; i < order.size(); ++i)
                    order[i] = i;
                rng::shuffle(order, rng::derive(cfg.seed, "shuffle", epoch++));
                cursor = 0;
            }
            batch.push_back(&ds.items[order[cursor++]]);
        }
        const double lr = cosine_lr(optim, step);
        const double loss = train_step(model, params, batch, grid, cfg.flow, optim, step, cfg);
        char row[96];
        std::snprintf(row, sizeof(row), "%lld,%.10g,%.10g\n",
                      static_cast<long long>(step), lr, loss);
        csv << row;

        if (cfg.checkpoint_interval > 0 && (step + 1) % cfg.checkpoint_interval == 0 &&
            step + 1 < cfg.steps_total) {
            char name[64];
            std::snprintf(name, sizeof(name), "model_%06lld.ckpt",
                          static_cast<long long>(step + 1));
            save_checkpoint(model, (std::filesystem::path(cfg.out_dir) / name).string(),
                            extras);
        }
    }
    csv.close();
    if (!csv)
        throw IoError("loss log write failed: " + csv_path);
    save_checkpoint(model, ckpt_path, extras);
    return {ckpt_path, csv_path};
}

}  // namespace waveflow
