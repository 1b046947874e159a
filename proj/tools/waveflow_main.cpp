// Command-line front end: phantom generation, training, sampling, evaluation,
// wavelet benchmarking, and the ablation matrix driver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "waveflow/errors.hpp"
#include "waveflow/matrix.hpp"
#include "waveflow/metrics.hpp"
#include "waveflow/phantom.hpp"
#include "waveflow/rng.hpp"
#include "waveflow/sampler.hpp"
#include "waveflow/trainer.hpp"

namespace fs = std::filesystem;
using namespace waveflow;

namespace {

std::vector<std::string> split_csv(const std::string& arg) {
    std::vector<std::string> out;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

std::pair<std::string, double> parse_assignment(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos)
        throw DomainError("expected name=value, got: " + arg);
    return {arg.substr(0, eq), std::stod(arg.substr(eq + 1))};
}

int cmd_phantom_gen(int count, int size, std::uint64_t seed, const std::string& out_dir,
                    const std::string& conditions) {
    fs::create_directories(out_dir);
    std::ofstream manifest(fs::path(out_dir) / "manifest.csv", std::ios::trunc);
    if (!manifest)
        throw IoError("cannot write manifest in " + out_dir);
    for (int i = 0; i < count; ++i) {
        double c;
        if (conditions == "linspace")
            c = count > 1 ? static_cast<double>(i) / (count - 1) : 0.5;
        else if (conditions == "uniform")
            c = rng::uniform(rng::derive(seed, "condition"), static_cast<std::uint64_t>(i));
        else
            throw DomainError("unknown condition scheme: " + conditions);
        const std::uint64_t sample_seed = rng::derive(seed, "phantom", i);
        const Phantom ph = gen_phantom(size, c, sample_seed);
        char name[32];
        std::snprintf(name, sizeof(name), "phantom_%04d.flv1", i);
        save_rawvol(ph.volume, (fs::path(out_dir) / name).string());
        char row[96];
        std::snprintf(row, sizeof(row), "%s,%.10g,%llu\n", name, c,
                      static_cast<unsigned long long>(sample_seed));
        manifest << row;
    }
    manifest.close();
    if (!manifest)
        throw IoError("manifest write failed in " + out_dir);
    std::cout << "wrote " << count << " phantoms to " << out_dir << "\n";
    return 0;
}

int cmd_sample(const std::string& checkpoint, const std::string& flow, int steps,
               const std::string& solver, const std::vector<std::string>& conditions,
               std::uint64_t seed, const std::string& out, int size,
               const std::string& conditioning) {
    flow_kind(flow);  // label validated, recorded in the summary line below
    std::map<std::string, std::vector<float>> extras;
    const VelocityModel model = load_checkpoint(checkpoint, &extras);

    SamplerConfig sc;
    sc.steps = steps;
    sc.solver = solver_kind(solver);
    sc.seed = seed;
    sc.mode = conditioning_mode(conditioning);
    sc.side = size > 0 ? size
              : extras.count("meta.side")
                  ? static_cast<int>(extras.at("meta.side")[0])
                  : 16;
    sc.family = extras.count("meta.family")
                    ? static_cast<WaveletKind>(static_cast<int>(extras.at("meta.family")[0]))
                    : WaveletKind::haar;
    for (const auto& assignment : conditions) {
        const auto [name, value] = parse_assignment(assignment);
        sc.condition[name] = value;
    }

    const Volume3D vol = integrate(model, sc);
    save_rawvol(vol, out);
    std::cout << "sampled flow=" << flow << " solver=" << solver << " steps=" << steps
              << " side=" << sc.side << " -> " << out << "\n";
    return 0;
}

int cmd_wavelet_bench(const std::string& families, int n, int size, std::uint64_t seed,
                      const std::string& out) {
    std::vector<WaveletKind> kinds;
    for (const auto& name : split_csv(families))
        kinds.push_back(wavelet_family(name).kind);
    if (kinds.empty())
        throw DomainError("no wavelet families given");
    const std::string csv = wavelet_bench_csv(kinds, n, size, seed);
    if (out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream file(out, std::ios::trunc);
        if (!file)
            throw IoError("cannot write " + out);
        file << csv;
    }
    return 0;
}

int cmd_matrix(const std::string& flows, const std::string& steps, const std::string& solvers,
               const std::string& conditioning, const std::string& seeds,
               const std::string& data, const std::string& real, const std::string& out_dir,
               const std::string& ckpt_dir, bool no_train, int samples, TrainConfig base) {
    ExperimentMatrix mx;
    for (const auto& f : split_csv(flows))
        mx.flows.push_back(flow_kind(f));
    mx.step_counts.clear();
    for (const auto& s : split_csv(steps))
        mx.step_counts.push_back(std::stoi(s));
    for (const auto& s : split_csv(solvers))
        mx.solvers.push_back(solver_kind(s));
    for (const auto& c : split_csv(conditioning))
        mx.modes.push_back(conditioning_mode(c));
    for (const auto& s : split_csv(seeds))
        mx.seeds.push_back(std::stoull(s));

    base.dataset = data;
    MatrixConfig cfg;
    cfg.base = base;
    cfg.real_manifest = real;
    cfg.out_dir = out_dir;
    cfg.checkpoint_dir = ckpt_dir;
    cfg.train_missing = !no_train;
    cfg.n_samples = samples;
    const std::string csv = run_matrix(mx, cfg);
    std::cout << "matrix report: " << csv << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional flow matching in a 3D wavelet domain"};
    app.require_subcommand(1);

    // phantom-gen
    auto* gen = app.add_subcommand("phantom-gen", "generate phantom volumes plus manifest");
    int gen_n = 200, gen_size = 16;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "phantoms";
    std::string gen_conditions = "uniform";
    gen->add_option("--n", gen_n, "number of phantoms")->capture_default_str();
    gen->add_option("--size", gen_size, "cubic side length (even, >= 8)")
        ->capture_default_str();
    gen->add_option("--seed", gen_seed, "master seed")->capture_default_str();
    gen->add_option("--out", gen_out, "output directory")->capture_default_str();
    gen->add_option("--conditions", gen_conditions, "condition scheme: uniform|linspace")
        ->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "run flow-matching training from a config file");
    std::string train_cfg_path;
    train->add_option("--config", train_cfg_path, "flat key=value config file")->required();

    // sample
    auto* sample = app.add_subcommand("sample", "integrate the learned ODE and write a volume");
    std::string s_ckpt, s_flow = "rfm", s_solver = "euler", s_out = "out.flv1";
    std::string s_conditioning = "full";
    int s_steps = 10, s_size = 0;
    std::uint64_t s_seed = 42;
    std::vector<std::string> s_conditions;
    sample->add_option("--checkpoint", s_ckpt, "model checkpoint")->required();
    sample->add_option("--flow", s_flow, "flow label for the run summary")
        ->capture_default_str();
    sample->add_option("--steps", s_steps, "ODE steps")->capture_default_str();
    sample->add_option("--solver", s_solver, "euler|rk4")->capture_default_str();
    sample->add_option("--condition", s_conditions,
                       "condition assignment name=value (repeatable)");
    sample->add_option("--seed", s_seed, "noise seed")->capture_default_str();
    sample->add_option("--out", s_out, "output FLV1 path")->capture_default_str();
    sample->add_option("--size", s_size, "volume side; 0 = training size from checkpoint")
        ->capture_default_str();
    sample->add_option("--conditioning", s_conditioning,
                       "full|film_only|spatial_only|unconditional")
        ->capture_default_str();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "bootstrap metric report for two sample sets");
    EvaluateConfig ecfg;
    std::string eval_metrics = "mmd,msssim,roi";
    eval->add_option("--real", ecfg.real_manifest, "real-set manifest")->required();
    eval->add_option("--synth", ecfg.synth_manifest, "synthetic-set manifest")->required();
    eval->add_option("--metrics", eval_metrics, "comma list from mmd,msssim,roi")
        ->capture_default_str();
    eval->add_option("--bootstrap", ecfg.n_bootstrap, "bootstrap resamples")
        ->capture_default_str();
    eval->add_option("--seed", ecfg.seed, "bootstrap seed")->capture_default_str();
    eval->add_option("--out", ecfg.out_csv, "report CSV path")->required();

    // wavelet-bench
    auto* bench = app.add_subcommand("wavelet-bench", "round-trip reconstruction benchmark");
    std::string b_families = "haar,db4,sym4,coif2,bior33", b_out;
    int b_n = 100, b_size = 32;
    std::uint64_t b_seed = 0;
    bench->add_option("--families", b_families, "comma list of wavelet families")
        ->capture_default_str();
    bench->add_option("--n", b_n, "number of random volumes")->capture_default_str();
    bench->add_option("--size", b_size, "volume side")->capture_default_str();
    bench->add_option("--seed", b_seed, "volume seed")->capture_default_str();
    bench->add_option("--out", b_out, "CSV path (default: stdout)");

    // matrix
    auto* matrix = app.add_subcommand("matrix", "train/sample/evaluate over an ablation grid");
    std::string m_flows = "rfm", m_steps = "1,2,5,10,200", m_solvers = "euler";
    std::string m_conditioning = "full", m_seeds = "0";
    std::string m_data, m_real, m_out = "matrix_out", m_ckpts;
    bool m_no_train = false;
    int m_samples = 50;
    TrainConfig m_base;
    matrix->add_option("--flows", m_flows, "comma list of flows")->capture_default_str();
    matrix->add_option("--steps", m_steps, "comma list of ODE step counts")
        ->capture_default_str();
    matrix->add_option("--solvers", m_solvers, "comma list of solvers")
        ->capture_default_str();
    matrix->add_option("--conditioning", m_conditioning, "comma list of conditioning modes")
        ->capture_default_str();
    matrix->add_option("--seeds", m_seeds, "comma list of seeds")->capture_default_str();
    matrix->add_option("--data", m_data, "training manifest")->required();
    matrix->add_option("--real", m_real, "held-out evaluation manifest")->required();
    matrix->add_option("--out", m_out, "report directory")->capture_default_str();
    matrix->add_option("--checkpoints", m_ckpts, "checkpoint cache directory");
    matrix->add_flag("--no-train", m_no_train, "fail instead of training missing cells");
    matrix->add_option("--samples", m_samples, "generated samples per cell")
        ->capture_default_str();
    matrix->add_option("--train-steps", m_base.steps_total, "training steps per cell")
        ->capture_default_str();
    matrix->add_option("--batch", m_base.batch, "training batch size")->capture_default_str();
    matrix->add_option("--d-model", m_base.d_model, "token embedding width")
        ->capture_default_str();
    matrix->add_option("--n-blocks", m_base.n_blocks, "residual block count")
        ->capture_default_str();
    matrix->add_option("--lr-max", m_base.lr_max, "peak learning rate")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_phantom_gen(gen_n, gen_size, gen_seed, gen_out, gen_conditions);
        if (train->parsed()) {
            const TrainResult result = run_training(parse_train_config(train_cfg_path));
            std::cout << "checkpoint: " << result.checkpoint_path << "\n"
                      << "loss log: " << result.loss_csv_path << "\n";
            return 0;
        }
        if (sample->parsed())
            return cmd_sample(s_ckpt, s_flow, s_steps, s_solver, s_conditions, s_seed, s_out,
                              s_size, s_conditioning);
        if (eval->parsed()) {
            ecfg.metrics = split_csv(eval_metrics);
            run_evaluate(ecfg);
            std::cout << "report: " << ecfg.out_csv << "\n";
            return 0;
        }
        if (bench->parsed())
            return cmd_wavelet_bench(b_families, b_n, b_size, b_seed, b_out);
        if (matrix->parsed())
            return cmd_matrix(m_flows, m_steps, m_solvers, m_conditioning, m_seeds, m_data,
                              m_real, m_out, m_ckpts, m_no_train, m_samples, m_base);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
