#include "waveflow/matrix.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "waveflow/errors.hpp"
#include "waveflow/metrics.hpp"
#include "waveflow/phantom.hpp"
#include "waveflow/rng.hpp"

namespace waveflow {

namespace {

struct EvalItem {
    Volume3D volume;
    double condition = 0.0;
};

std::vector<EvalItem> load_manifest_volumes(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in)
        throw IoError("cannot open manifest: " + manifest_path);
    const auto base = std::filesystem::path(manifest_path).parent_path();
    std::vector<EvalItem> items;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::stringstream ss(line);
        std::string path_field, cond_field;
        if (!std::getline(ss, path_field, ',') || !std::getline(ss, cond_field, ','))
            throw DomainError("manifest line is not path,condition,seed: " + line);
        std::filesystem::path vol_path(path_field);
        if (vol_path.is_relative())
            vol_path = base / vol_path;
        items.push_back({load_rawvol(vol_path.string()), std::stod(cond_field)});
    }
    if (items.empty())
        throw EmptySet("manifest has no samples: " + manifest_path);
    return items;
}

std::size_t nearest_by_condition(const std::vector<EvalItem>& items, double c) {
    std::size_t best = 0;
    double best_d = std::abs(items[0].condition - c);
    for (std::size_t i = 1; i < items.size(); ++i) {
        const double d = std::abs(items[i].condition - c);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

std::string run_matrix(const ExperimentMatrix& matrix, const MatrixConfig& cfg) {
    if (matrix.flows.empty() || matrix.step_counts.empty() || matrix.solvers.empty() ||
        matrix.modes.empty() || matrix.seeds.empty())
        throw DomainError("experiment matrix has an empty dimension");

    std::filesystem::create_directories(cfg.out_dir);
    const std::string ckpt_dir =
        cfg.checkpoint_dir.empty() ? cfg.out_dir : cfg.checkpoint_dir;
    std::filesystem::create_directories(ckpt_dir);

    const auto real = load_manifest_volumes(cfg.real_manifest);
    std::vector<std::vector<double>> real_features;
    real_features.reserve(real.size());
    for (const auto& item : real)
        real_features.push_back(volume_features(item.volume));
    std::vector<RegionMask> real_masks;
    real_masks.reserve(real.size());
    for (const auto& item : real)
        real_masks.push_back(segment_regions(item.volume));

    const std::string csv_path = (std::filesystem::path(cfg.out_dir) / "matrix.csv").string();
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv)
        throw IoError("cannot open matrix report for writing: " + csv_path);
    csv << "flow,solver,steps,conditioning,mmd,msssim,imae,kl,dice,"
           "condition_proxy_spearman,wall_ms_per_sample\n";

    for (std::uint64_t seed : matrix.seeds)
        for (FlowKind flow : matrix.flows)
            for (ConditioningMode mode : matrix.modes) {
                char name[128];
                std::snprintf(name, sizeof(name), "%s_%s_s%llu.ckpt", flow_name(flow),
                              conditioning_name(mode),
                              static_cast<unsigned long long>(seed));
                const auto ckpt = std::filesystem::path(ckpt_dir) / name;
                if (!std::filesystem::exists(ckpt)) {
                    if (!cfg.train_missing)
                        throw MissingCheckpoint("no checkpoint for matrix cell: " +
                                                ckpt.string());
                    TrainConfig tc = cfg.base;
                    tc.flow.kind = flow;
                    tc.conditioning = mode;
                    tc.seed = seed;
                    tc.out_dir =
                        (std::filesystem::path(ckpt_dir) / (std::string(name) + ".train"))
                            .string();
                    const TrainResult tr = run_training(tc);
                    std::filesystem::copy_file(tr.checkpoint_path, ckpt);
                }

                std::map<std::string, std::vector<float>> extras;
                const VelocityModel model = load_checkpoint(ckpt.string(), &extras);
                const int side = extras.count("meta.side")
                                     ? static_cast<int>(extras.at("meta.side")[0])
                                     : cfg.base.d_model;
                const auto family = extras.count("meta.family")
                                        ? static_cast<WaveletKind>(
                                              static_cast<int>(extras.at("meta.family")[0]))
                                        : WaveletKind::haar;

                for (Solver solver : matrix.solvers)
                    for (int steps : matrix.step_counts) {
                        std::vector<Volume3D> gen;
                        std::vector<double> requested;
                        gen.reserve(cfg.n_samples);
                        const auto t0 = std::chrono::steady_clock::now();
                        for (int i = 0; i < cfg.n_samples; ++i) {
                            const double c =
                                cfg.n_samples > 1
                                    ? static_cast<double>(i) / (cfg.n_samples - 1)
                                    : 0.5;
                            SamplerConfig sc;
                            sc.steps = steps;
                            sc.solver = solver;
                            sc.seed = rng::derive(seed, "matrix-sample",
                                                  static_cast<std::uint64_t>(i));
                            sc.condition = {{cfg.base.condition_var, c}};
                            sc.mode = mode;
                            sc.side = side;
                            sc.family = family;
                            gen.push_back(integrate(model, sc));
                            requested.push_back(c);
                        }
                        const auto t1 = std::chrono::steady_clock::now();
                        const double wall_ms =
                            std::chrono::duration<double, std::milli>(t1 - t0).count() /
                            cfg.n_samples;

                        std::vector<std::vector<double>> gen_features;
                        gen_features.reserve(gen.size());
                        for (const auto& g : gen)
                            gen_features.push_back(volume_features(g));
                        const double mmd = mmd2(gen_features, real_features);
                        const double msssim = intra_set_msssim(gen);

                        RegionScores roi_sum;
                        for (std::size_t i = 0; i < gen.size(); ++i) {
                            const std::size_t j = nearest_by_condition(real, requested[i]);
                            const RegionScores rs =
                                region_metrics(real[j].volume, gen[i], real_masks[j],
                                               segment_regions(gen[i]));
                            roi_sum.imae += rs.imae;
                            roi_sum.kl += rs.kl;
                            roi_sum.dice += rs.dice;
                        }
                        const double inv_n = 1.0 / static_cast<double>(gen.size());

                        std::vector<double> proxies;
                        proxies.reserve(gen.size());
                        for (const auto& g : gen)
                            proxies.push_back(condition_proxy(g));
                        const double rho = spearman(requested, proxies);

                        csv << flow_name(flow) << ',' << solver_name(solver) << ','
                            << steps << ',' << conditioning_name(mode) << ','
                            << format_g(mmd) << ',' << format_g(msssim) << ','
                            << format_g(roi_sum.imae * inv_n) << ','
                            << format_g(roi_sum.kl * inv_n) << ','
                            << format_g(roi_sum.dice * inv_n) << ',' << format_g(rho)
                            << ',' << format_g(wall_ms) << '\n';
                    }
            }
    csv.close();
    if (!csv)
        throw IoError("matrix report write failed: " + csv_path);
    return csv_path;
}

void run_evaluate(const EvaluateConfig& cfg) {
    const auto real = load_manifest_volumes(cfg.real_manifest);
    const auto synth = load_manifest_volumes(cfg.synth_manifest);

    std::ofstream csv(cfg.out_csv, std::ios::trunc);
    if (!csv)
        throw IoError("cannot open report for writing: " + cfg.out_csv);
    csv << "metric,mean,std,n\n";
    auto emit = [&](const std::string& name, std::pair<double, double> ms) {
        csv << name << ',' << format_g(ms.first) << ',' << format_g(ms.second) << ','
            << cfg.n_bootstrap << '\n';
    };

    const int items = static_cast<int>(synth.size());
    for (const std::string& metric : cfg.metrics) {
        if (metric == "mmd") {
            std::vector<std::vector<double>> real_f, synth_f;
            for (const auto& it : real)
                real_f.push_back(volume_features(it.volume));
            for (const auto& it : synth)
                synth_f.push_back(volume_features(it.volume));
            emit("mmd", bootstrap(
                            [&](const std::vector<int>& idx) {
                                std::vector<std::vector<double>> resampled;
                                resampled.reserve(idx.size());
                                for (int i : idx)
                                    resampled.push_back(synth_f[i]);
                                return mmd2(resampled, real_f);
                            },
                            cfg.n_bootstrap, items, cfg.seed));
        } else if (metric == "msssim") {
            if (synth.size() < 2)
                throw EmptySet("msssim needs at least two synthetic volumes");
            // pairwise values once; resamples average over position pairs
            std::vector<std::vector<double>> pair(synth.size(),
                                                  std::vector<double>(synth.size(), 1.0));
            for (std::size_t i = 0; i < synth.size(); ++i)
                for (std::size_t j = i + 1; j < synth.size(); ++j)
                    pair[i][j] = pair[j][i] = ms_ssim3(synth[i].volume, synth[j].volume);
            emit("msssim", bootstrap(
                               [&](const std::vector<int>& idx) {
                                   double acc = 0.0;
                                   std::size_t count = 0;
                                   for (std::size_t i = 0; i < idx.size(); ++i)
                                       for (std::size_t j = i + 1; j < idx.size(); ++j) {
                                           acc += pair[idx[i]][idx[j]];
                                           ++count;
                                       }
                                   return acc / static_cast<double>(count);
                               },
                               cfg.n_bootstrap, items, cfg.seed));
        } else if (metric == "roi") {
            std::vector<RegionScores> scores;
            scores.reserve(synth.size());
            for (const auto& s : synth) {
                const std::size_t j = nearest_by_condition(real, s.condition);
                scores.push_back(region_metrics(real[j].volume, s.volume,
                                                segment_regions(real[j].volume),
                                                segment_regions(s.volume)));
            }
            auto boot = [&](auto select) {
                return bootstrap(
                    [&](const std::vector<int>& idx) {
                        double acc = 0.0;
                        for (int i : idx)
                            acc += select(scores[i]);
                        return acc / static_cast<double>(idx.size());
                    },
                    cfg.n_bootstrap, items, cfg.seed);
            };
            emit("imae", boot([](const RegionScores& s) { return s.imae; }));
            emit("kl", boot([](const RegionScores& s) { return s.kl; }));
            emit("dice", boot([](const RegionScores& s) { return s.dice; }));
        } else {
            throw DomainError("unknown metric: " + metric);
        }
    }
    csv.close();
    if (!csv)
        throw IoError("report write failed: " + cfg.out_csv);
}

std::string wavelet_bench_csv(const std::vector<WaveletKind>& families, int n_volumes,
                              int side, std::uint64_t seed) {
    if (n_volumes < 1 || side < 2 || side % 2 != 0)
        throw DomainError("wavelet bench needs n >= 1 and an even side >= 2");
    std::vector<Volume3D> volumes;
    volumes.reserve(n_volumes);
    for (int i = 0; i < n_volumes; ++i) {
        Volume3D vol = make_volume(side, side, side);
        const std::uint64_t key = rng::derive(seed, "wavelet-bench", i);
        for (std::size_t v = 0; v < vol.data.size(); ++v)
            vol.data[v] = static_cast<float>(2.0 * rng::uniform(key, v) - 1.0);
        volumes.push_back(std::move(vol));
    }
    const auto rows = recon_benchmark(volumes, families);
    std::string csv = "family,mean_mae,std_mae\n";
    for (const auto& row : rows) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g\n", row.family.c_str(),
                      row.mean_mae, row.std_mae);
        csv += buf;
    }
    return csv;
}

}  // namespace waveflow
