// Acceptance suite: runs every gate criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "waveflow/matrix.hpp"
#include "waveflow/metrics.hpp"
#include "waveflow/net.hpp"
#include "waveflow/phantom.hpp"
#include "waveflow/rng.hpp"
#include "waveflow/sampler.hpp"
#include "waveflow/trainer.hpp"
#include "waveflow/volume.hpp"
#include "waveflow/wavelet.hpp"

using namespace waveflow;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& what, bool pass, const std::string& detail = "") {
    std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", id, what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass)
        ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_err(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

Volume3D random_volume(int side, std::uint64_t seed) {
    Volume3D vol = make_volume(side, side, side);
    const std::uint64_t key = rng::derive(seed, "acceptance-vol");
    for (std::size_t i = 0; i < vol.data.size(); ++i)
        vol.data[i] = static_cast<float>(2.0 * rng::uniform(key, i) - 1.0);
    return vol;
}

// ---------------------------------------------------------------------------
// criteria 1 + 2: wavelet reconstruction and family ordering
// ---------------------------------------------------------------------------
void wavelet_criteria() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Volume3D> volumes;
    volumes.reserve(100);
    for (int i = 0; i < 100; ++i)
        volumes.push_back(random_volume(32, 4000 + i));

    double haar_max = 0.0;
    const WaveletFamily& haar = wavelet_family(WaveletKind::haar);
    for (const auto& vol : volumes) {
        const Volume3D rec = idwt3(dwt3(vol, haar));
        for (std::size_t i = 0; i < vol.data.size(); ++i)
            haar_max = std::max(
                haar_max, std::abs(static_cast<double>(vol.data[i]) - rec.data[i]));
    }

    const std::vector<WaveletKind> fams(all_wavelet_kinds().begin(),
                                        all_wavelet_kinds().end());
    const auto rows = recon_benchmark(volumes, fams);
    const double haar_mean = rows[0].mean_mae;

    double parseval_worst = 0.0;
    for (WaveletKind kind : {WaveletKind::haar, WaveletKind::db4, WaveletKind::sym4,
                             WaveletKind::coif2}) {
        const WaveletFamily& fam = wavelet_family(kind);
        for (int i = 0; i < 100; i += 10) {
            double e_in = 0.0, e_out = 0.0;
            for (float v : volumes[i].data)
                e_in += static_cast<double>(v) * v;
            const WaveletCoeffs coeffs = dwt3(volumes[i], fam);
            for (const auto& s : coeffs.subbands)
                for (float v : s)
                    e_out += static_cast<double>(v) * v;
            parseval_worst = std::max(parseval_worst, std::abs(e_out - e_in) / e_in);
        }
    }
    const double elapsed = seconds_since(t0);

    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "haar max=%.3g mean=%.3g parseval=%.3g runtime=%.1fs", haar_max,
                  haar_mean, parseval_worst, elapsed);
    report(1, "haar round-trip + Parseval on 100 random 32^3 volumes",
           haar_max < 1e-5 && haar_mean < 1e-6 && parseval_worst < 1e-6 && elapsed < 30.0,
           detail);

    bool ordered = true;
    std::string order_detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ordered = ordered && haar_mean <= rows[i].mean_mae;
        char cell[64];
        std::snprintf(cell, sizeof(cell), "%s=%.3g ", rows[i].family.c_str(),
                      rows[i].mean_mae);
        order_detail += cell;
    }
    report(2, "haar mean round-trip MAE <= every other family", ordered, order_detail);
}

// ---------------------------------------------------------------------------
// criterion 3: flow-field exactness
// ---------------------------------------------------------------------------
void flow_exactness_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto x0 = rng::normal_vec(rng::derive(11, "x0"), 64);
    const auto x1 = rng::normal_vec(rng::derive(11, "x1"), 64);

    double worst_fd = 0.0;
    const double delta = 1e-4;
    for (FlowKind kind : {FlowKind::rfm, FlowKind::trig}) {
        FlowSpec spec;
        spec.kind = kind;
        for (int k = 0; k < 20; ++k) {
            const double t = delta + (1.0 - 2.0 * delta) * rng::uniform(12, k);
            const PathSample plus = path_sample(spec, x0, x1, t + delta);
            const PathSample minus = path_sample(spec, x0, x1, t - delta);
            const PathSample mid = path_sample(spec, x0, x1, t);
            for (std::size_t i = 0; i < x0.size(); ++i) {
                const double fd = (plus.x_t[i] - minus.x_t[i]) / (2.0 * delta);
                worst_fd = std::max(worst_fd, rel_err(fd, mid.v_target[i]));
            }
        }
    }

    double worst_cfm = 0.0;
    {
        FlowSpec rfm, cfm;
        rfm.kind = FlowKind::rfm;
        cfm.kind = FlowKind::cfm;
        for (double t = 0.0; t <= 0.999; t += 0.037) {
            const PathSample a = path_sample(rfm, x0, x1, t);
            const PathSample b = path_sample(cfm, x0, x1, t);
            for (std::size_t i = 0; i < x0.size(); ++i)
                worst_cfm = std::max(worst_cfm, rel_err(a.v_target[i], b.v_target[i]));
        }
    }

    // independent evaluation of the probability-flow field with the Tweedie
    // conditional score; the trainable target is its time reversal
    double worst_vp = 0.0;
    {
        FlowSpec spec;
        spec.kind = FlowKind::vp;
        const VPSchedule sched = spec.schedule();
        const auto xi = rng::normal_vec(rng::derive(11, "xi"), 64);
        for (double tau = 0.05; tau <= 0.95; tau += 0.005) {
            const PathSample ps = path_sample(spec, x0, x1, 1.0 - tau, xi);
            const double beta = sched.beta(tau);
            const double abar = vp_alpha_bar(sched, tau);
            const double sig2 = 1.0 - abar * abar;
            for (std::size_t i = 0; i < x1.size(); ++i) {
                const double score = -(ps.x_t[i] - abar * x1[i]) / sig2;
                const double v_pf = -0.5 * beta * ps.x_t[i] - 0.5 * beta * score;
                worst_vp = std::max(worst_vp, rel_err(ps.v_target[i], -v_pf));
            }
        }
    }
    const double elapsed = seconds_since(t0);
    char detail[256];
    std::snprintf(detail, sizeof(detail), "fd=%.3g cfm=%.3g vp=%.3g runtime=%.2fs",
                  worst_fd, worst_cfm, worst_vp, elapsed);
    report(3, "flow targets: path derivatives, cfm==rfm, vp score substitution",
           worst_fd < 1e-5 && worst_cfm < 1e-5 && worst_vp < 1e-6 && elapsed < 5.0, detail);
}

// ---------------------------------------------------------------------------
// criterion 4: VP schedule closed forms vs adaptive quadrature
// ---------------------------------------------------------------------------
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double eps,
                        int depth) {
    const double m = 0.5 * (a + b);
    const double flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, eps / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, eps / 2, depth - 1);
}

double quad(const std::function<double(double)>& f, double a, double b) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return adaptive_simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb),
                            1e-13, 40);
}

void vp_schedule_criterion() {
    const VPSchedule sched{0.1, 20.0};
    double worst_T = 0.0, worst_ab = 0.0, worst_sigma = 0.0, worst_unit = 0.0;
    for (int k = 0; k <= 50; ++k) {
        const double t = k / 50.0;
        const double T_quad = quad([&](double s) { return sched.beta(s); }, 0.0, t);
        worst_T = std::max(worst_T, std::abs(vp_T(sched, t) - T_quad));
        worst_ab =
            std::max(worst_ab, std::abs(vp_alpha_bar(sched, t) - std::exp(-0.5 * T_quad)));
        const double sigma_quad = std::sqrt(std::max(0.0, 1.0 - std::exp(-T_quad)));
        worst_sigma = std::max(worst_sigma, std::abs(vp_sigma(sched, t) - sigma_quad));
        const double a = vp_alpha_bar(sched, t), s = vp_sigma(sched, t);
        worst_unit = std::max(worst_unit, std::abs(a * a + s * s - 1.0));
    }
    char detail[256];
    std::snprintf(detail, sizeof(detail), "T=%.3g abar=%.3g sigma=%.3g unit=%.3g", worst_T,
                  worst_ab, worst_sigma, worst_unit);
    report(4, "VP schedule matches quadrature at 50 grid points",
           worst_T < 1e-8 && worst_ab < 1e-8 && worst_sigma < 1e-8 && worst_unit < 1e-12,
           detail);
}

// ---------------------------------------------------------------------------
// criterion 5: full-model gradient check
// ---------------------------------------------------------------------------
void gradient_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    EmbedderConfig cfg;
    cfg.condition_ranges["age"] = {0.0, 1.0};  // desk-scale defaults elsewhere
    VelocityModel model = make_model(cfg, 2, 21);
    const int grid = 8;  // 16^3 volume
    const auto x = rng::normal_vec(rng::derive(21, "gx"), 8u * grid * grid * grid);
    const auto target = rng::normal_vec(rng::derive(21, "gt"), x.size());
    const double t = 0.41;
    const std::map<std::string, double> cond = {{"age", 0.35}};

    auto loss = [&]() {
        return fm_loss(forward(model, x, grid, t, cond, ConditioningMode::full), target);
    };
    Forward fwd;
    const auto v = forward(model, x, grid, t, cond, ConditioningMode::full, &fwd);
    std::vector<double> grad_out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        grad_out[i] = 2.0 * (v[i] - target[i]) / static_cast<double>(v.size());
    const Gradients an = backward(model, fwd, grad_out);

    auto params = collect_params(model);
    double worst = 0.0;
    const std::uint64_t key = rng::derive(22, "probes");
    for (int probe = 0; probe < 50; ++probe) {
        const std::size_t p = rng::below(key, 2 * probe, params.size());
        const std::size_t i = rng::below(key, 2 * probe + 1, params[p].data->size());
        auto& data = *params[p].data;
        const float orig = data[i];
        const float hi = static_cast<float>(orig + 1e-4);
        const float lo = static_cast<float>(orig - 1e-4);
        data[i] = hi;
        const double lp = loss();
        data[i] = lo;
        const double lm = loss();
        data[i] = orig;
        const double fd = (lp - lm) / (static_cast<double>(hi) - static_cast<double>(lo));
        worst = std::max(worst, rel_err(fd, an.by_param[p][i]));
    }
    std::vector<double> xm(x.begin(), x.end());
    auto loss_x = [&]() {
        return fm_loss(forward(model, xm, grid, t, cond, ConditioningMode::full), target);
    };
    for (int probe = 0; probe < 20; ++probe) {
        const std::size_t i = rng::below(key, 1000 + probe, xm.size());
        const double orig = xm[i];
        xm[i] = orig + 1e-4;
        const double lp = loss_x();
        xm[i] = orig - 1e-4;
        const double lm = loss_x();
        xm[i] = orig;
        worst = std::max(worst, rel_err((lp - lm) / 2e-4, an.d_input[i]));
    }
    const double elapsed = seconds_since(t0);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "worst rel err=%.3g runtime=%.1fs", worst,
                  elapsed);
    report(5, "finite-difference sweep over 50 parameters + 20 input coordinates",
           worst < 1e-4 && elapsed < 60.0, detail);
}

// ---------------------------------------------------------------------------
// criterion 6: solver convergence orders
// ---------------------------------------------------------------------------
void solver_order_criterion() {
    auto endpoint_err = [](Solver solver, int steps) {
        const std::vector<double> x0 = {1.0, -0.5, 2.0};
        const VelocityField field = [](const std::vector<double>& x, double,
                                       std::vector<double>& v) { v = x; };
        const auto end = integrate_field(field, x0, steps, solver);
        double worst = 0.0;
        for (std::size_t i = 0; i < x0.size(); ++i)
            worst = std::max(worst, std::abs(end[i] - std::exp(1.0) * x0[i]) /
                                        std::abs(std::exp(1.0) * x0[i]));
        return worst;
    };
    auto order_of = [&](Solver solver) {
        std::vector<double> lh, le;
        for (int steps : {5, 10, 20, 40}) {
            lh.push_back(std::log(1.0 / steps));
            le.push_back(std::log(endpoint_err(solver, steps)));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(lh.size());
        for (std::size_t i = 0; i < lh.size(); ++i) {
            sx += lh[i];
            sy += le[i];
            sxx += lh[i] * lh[i];
            sxy += lh[i] * le[i];
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    const double euler_order = order_of(Solver::euler);
    const double rk4_order = order_of(Solver::rk4);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "euler=%.3f rk4=%.3f", euler_order, rk4_order);
    report(6, "measured convergence orders on the exponential oracle",
           euler_order > 0.7 && euler_order < 1.3 && rk4_order > 3.7 && rk4_order < 4.3,
           detail);
}

// ---------------------------------------------------------------------------
// criteria 7-9: toy generative quality, step trend, conditioning efficacy
// ---------------------------------------------------------------------------
struct GenerativeArtifacts {
    std::string full_ckpt;
    std::string uncond_ckpt;
    std::vector<std::vector<double>> held_features;
};

std::string make_phantom_manifest(const fs::path& dir, int count, std::uint64_t seed) {
    fs::create_directories(dir);
    std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
    for (int i = 0; i < count; ++i) {
        const double c = rng::uniform(rng::derive(seed, "cond"), i);
        const Phantom ph = gen_phantom(16, c, rng::derive(seed, "ph", i));
        char name[32];
        std::snprintf(name, sizeof(name), "p%04d.flv1", i);
        save_rawvol(ph.volume, (dir / name).string());
        manifest << name << ',' << c << ',' << i << '\n';
    }
    return (dir / "manifest.csv").string();
}

std::vector<Volume3D> sample_set(const VelocityModel& model, int count, int steps,
                                 ConditioningMode mode, std::uint64_t seed,
                                 std::vector<double>* requested) {
    std::vector<Volume3D> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double c = count > 1 ? static_cast<double>(i) / (count - 1) : 0.5;
        SamplerConfig sc;
        sc.steps = steps;
        sc.seed = rng::derive(seed, "gen", i);
        sc.condition = {{"age", c}};
        sc.mode = mode;
        sc.side = 16;
        out.push_back(integrate(model, sc));
        if (requested)
            requested->push_back(c);
    }
    return out;
}

GenerativeArtifacts generative_criteria(const fs::path& work) {
    GenerativeArtifacts art;
    const auto t0 = std::chrono::steady_clock::now();

    const std::string train_manifest = make_phantom_manifest(work / "train", 200, 101);
    TrainConfig cfg;
    cfg.dataset = train_manifest;
    cfg.flow.kind = FlowKind::rfm;
    cfg.steps_total = 2000;
    cfg.batch = 4;
    cfg.seed = 7;
    cfg.out_dir = (work / "train_full").string();
    const TrainResult tr = run_training(cfg);
    art.full_ckpt = tr.checkpoint_path;

    // window-100 smoothed loss must at least halve across the run
    double loss_head = 0.0, loss_tail = 0.0;
    {
        std::ifstream csv(tr.loss_csv_path);
        std::string line;
        std::getline(csv, line);
        std::vector<double> losses;
        while (std::getline(csv, line))
            losses.push_back(std::stod(line.substr(line.rfind(',') + 1)));
        for (int i = 0; i < 100; ++i) {
            loss_head += losses[i] / 100.0;
            loss_tail += losses[losses.size() - 100 + i] / 100.0;
        }
    }

    // held-out set from a disjoint seed stream
    for (int i = 0; i < 100; ++i) {
        const double c = rng::uniform(rng::derive(202, "cond"), i);
        art.held_features.push_back(
            volume_features(gen_phantom(16, c, rng::derive(202, "ph", i)).volume));
    }

    const VelocityModel model = load_checkpoint(art.full_ckpt);
    const auto gen = sample_set(model, 100, 10, ConditioningMode::full, 303, nullptr);
    std::vector<std::vector<double>> gen_features;
    for (const auto& g : gen)
        gen_features.push_back(volume_features(g));

    std::vector<std::vector<double>> noise_features;
    for (int i = 0; i < 100; ++i) {
        const auto x = draw_noise(8u * 8 * 8 * 8, rng::derive(404, "noise", i));
        noise_features.push_back(
            volume_features(idwt3(tensor_to_coeffs(x, WaveletKind::haar, 16, 16, 16))));
    }

    const double mmd_gen = mmd2(gen_features, art.held_features);
    const double mmd_noise = mmd2(noise_features, art.held_features);
    const double elapsed = seconds_since(t0);
    char detail[224];
    std::snprintf(detail, sizeof(detail),
                  "mmd gen=%.4g noise=%.4g ratio=%.3f loss %0.3f->%0.3f runtime=%.0fs",
                  mmd_gen, mmd_noise, mmd_gen / mmd_noise, loss_head, loss_tail, elapsed);
    report(7, "trained RFM: mmd(gen, held) < 0.2 mmd(noise, held); loss halves",
           mmd_gen < 0.2 * mmd_noise && loss_tail < 0.5 * loss_head && elapsed < 900.0,
           detail);

    // criterion 8: step-count trend with a 10% noise band
    std::vector<double> trend;
    std::string trend_detail;
    for (int steps : {1, 2, 5, 10}) {
        std::vector<std::vector<double>> f;
        for (const auto& g : sample_set(model, 100, steps, ConditioningMode::full, 303,
                                        nullptr))
            f.push_back(volume_features(g));
        trend.push_back(mmd2(f, art.held_features));
        char cell[48];
        std::snprintf(cell, sizeof(cell), "s%d=%.4g ", steps, trend.back());
        trend_detail += cell;
    }
    bool non_increasing = true;
    for (std::size_t i = 1; i < trend.size(); ++i)
        non_increasing = non_increasing && trend[i] <= 1.10 * trend[i - 1];
    report(8, "mmd over steps {1,2,5,10} non-increasing within a 10% band", non_increasing,
           trend_detail);

    return art;
}

void conditioning_criterion(const fs::path& work, GenerativeArtifacts& art) {
    TrainConfig cfg;
    cfg.dataset = (work / "train" / "manifest.csv").string();
    cfg.flow.kind = FlowKind::rfm;
    cfg.steps_total = 2000;
    cfg.batch = 4;
    cfg.seed = 7;
    cfg.conditioning = ConditioningMode::unconditional;
    cfg.out_dir = (work / "train_uncond").string();
    art.uncond_ckpt = run_training(cfg).checkpoint_path;

    const VelocityModel full_model = load_checkpoint(art.full_ckpt);
    const VelocityModel uncond_model = load_checkpoint(art.uncond_ckpt);

    auto spearman_of = [](const VelocityModel& model, ConditioningMode mode) {
        std::vector<double> requested;
        const auto gen = sample_set(model, 100, 10, mode, 505, &requested);
        std::vector<double> proxies;
        for (const auto& g : gen)
            proxies.push_back(condition_proxy(g));
        return spearman(requested, proxies);
    };
    const double rho_full = spearman_of(full_model, ConditioningMode::full);
    const double rho_uncond = spearman_of(uncond_model, ConditioningMode::unconditional);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "full=%.4f uncond=%.4f", rho_full, rho_uncond);
    report(9, "condition recovery: spearman(full) >= 0.8 and > spearman(uncond)",
           rho_full >= 0.8 && rho_full > rho_uncond, detail);
}

// ---------------------------------------------------------------------------
// criterion 10: metric oracles pass exactly as stated
// ---------------------------------------------------------------------------
void metric_oracle_criterion() {
    bool ok = true;
    std::string why;
    auto expect = [&](bool cond, const std::string& label) {
        if (!cond) {
            ok = false;
            why += label + " ";
        }
    };

    auto scalars = [](std::initializer_list<double> vs) {
        std::vector<std::vector<double>> out;
        for (double v : vs)
            out.push_back({v});
        return out;
    };

    expect(std::abs(mmd2(scalars({1.0, 2.0, 3.0}), scalars({1.0, 2.0, 3.0}))) < 1e-12,
           "mmd-identity");
    expect(std::abs(mmd2(scalars({0.0}), scalars({1.0}), 1.0) -
                    (2.0 - 2.0 * std::exp(-0.5))) < 1e-12,
           "mmd-hand-value");
    {
        bool ordering = true;
        for (int rep = 0; rep < 10; ++rep) {
            std::vector<std::vector<double>> X, Y, Z;
            for (int i = 0; i < 200; ++i) {
                X.push_back({rng::normal(rng::derive(600 + rep, "x"), i)});
                Y.push_back({rng::normal(rng::derive(600 + rep, "y"), i)});
                Z.push_back({3.0 + rng::normal(rng::derive(600 + rep, "z"), i)});
            }
            ordering = ordering && mmd2(X, Y) < mmd2(X, Z);
        }
        expect(ordering, "mmd-ordering");
    }

    const Volume3D x = random_volume(16, 777);
    expect(std::abs(ms_ssim3(x, x) - 1.0) < 1e-6, "msssim-self");
    {
        Volume3D zm = x;
        double mean = 0.0;
        for (float v : zm.data)
            mean += v;
        mean /= static_cast<double>(zm.data.size());
        for (float& v : zm.data)
            v = static_cast<float>(v - mean);
        Volume3D neg = zm;
        for (float& v : neg.data)
            v = -v;
        expect(ms_ssim3(zm, neg) <= 0.0, "msssim-negation");
        expect(std::abs(intra_set_msssim({x, x, x}) - 1.0) < 1e-6, "msssim-intra");
    }

    {
        const Phantom ph = gen_phantom(16, 0.5, 31);
        const RegionScores s = region_metrics(ph.volume, ph.volume, ph.masks, ph.masks);
        expect(s.imae == 0.0 && std::abs(s.kl) < 1e-12 && s.dice == 1.0, "roi-identity");

        RegionMask ma, mb;
        ma.labels[1] = {0, 1, 2};
        mb.labels[1] = {5, 6, 7};
        const RegionScores d = region_metrics(ph.volume, ph.volume, ma, mb);
        expect(d.dice == 0.0 && std::isfinite(d.imae) && std::isfinite(d.kl),
               "roi-disjoint");

        const Volume3D zeros = make_volume(4, 4, 4, 0.0f);
        const Volume3D ones = make_volume(4, 4, 4, 1.0f);
        RegionMask m;
        m.labels[1] = {0, 7, 21};
        expect(std::abs(region_metrics(zeros, ones, m, m).imae - 1.0) < 1e-12,
               "roi-offset");
    }

    {
        const auto [cmean, cstd] =
            bootstrap([](const std::vector<int>&) { return 2.0; }, 100, 5, 1);
        expect(cmean == 2.0 && cstd == 0.0, "bootstrap-const");
        const auto stat = [](const std::vector<int>& idx) {
            const double data[4] = {0.0, 0.0, 10.0, 10.0};
            double acc = 0.0;
            for (int i : idx)
                acc += data[i];
            return acc / static_cast<double>(idx.size());
        };
        expect(bootstrap(stat, 100, 4, 3) == bootstrap(stat, 100, 4, 3),
               "bootstrap-determinism");
        const auto [bmean, bstd] = bootstrap(stat, 10000, 4, 3);
        expect(std::abs(bmean - 5.0) < 0.2 && std::abs(bstd - 2.5) / 2.5 < 0.15,
               "bootstrap-moments");
    }

    expect(std::abs(wilcoxon_ranksum({1.0, 2.0}, {3.0, 4.0}) - 1.0 / 3.0) < 1e-12,
           "wilcoxon-exact");
    expect(wilcoxon_ranksum({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 1.0, "wilcoxon-ties");
    expect(std::abs(bonferroni(0.02, 3) - 0.06) < 1e-12 && bonferroni(0.5, 3) == 1.0,
           "bonferroni");

    report(10, "metric oracles (mmd, ms-ssim, roi, bootstrap, wilcoxon, bonferroni)", ok,
           why);
}

// ---------------------------------------------------------------------------
// criterion 11: CLI determinism
// ---------------------------------------------------------------------------
std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool dirs_byte_identical(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> names;
    for (const auto& entry : fs::directory_iterator(a))
        names.push_back(entry.path().filename());
    std::sort(names.begin(), names.end());
    if (names.empty())
        return false;
    for (const auto& name : names)
        if (!fs::exists(b / name) || slurp(a / name) != slurp(b / name))
            return false;
    return true;
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
    const std::string cmd = cli + " " + args + " >> " + log.string() + " 2>&1";
    return std::system(cmd.c_str());
}

void cli_determinism_criterion(const std::string& cli, const fs::path& work,
                               const GenerativeArtifacts& art) {
    const fs::path log = work / "cli.log";
    bool ok = true;
    std::string why;

    // phantom-gen twice -> byte-identical volumes and manifest
    for (int round = 0; round < 2; ++round) {
        const fs::path out = work / ("gen" + std::to_string(round));
        if (run_cli(cli, "phantom-gen --n 5 --size 16 --seed 9 --out " + out.string(),
                    log) != 0) {
            ok = false;
            why += "phantom-gen-exit ";
        }
    }
    if (!dirs_byte_identical(work / "gen0", work / "gen1")) {
        ok = false;
        why += "phantom-gen-bytes ";
    }

    // wavelet-bench twice
    for (int round = 0; round < 2; ++round) {
        const fs::path out = work / ("bench" + std::to_string(round) + ".csv");
        if (run_cli(cli,
                    "wavelet-bench --families haar,db4 --n 5 --size 16 --seed 2 --out " +
                        out.string(),
                    log) != 0) {
            ok = false;
            why += "wavelet-bench-exit ";
        }
    }
    if (slurp(work / "bench0.csv") != slurp(work / "bench1.csv")) {
        ok = false;
        why += "wavelet-bench-bytes ";
    }

    // sample twice from the trained checkpoint
    for (int round = 0; round < 2; ++round) {
        const fs::path out = work / ("sample" + std::to_string(round) + ".flv1");
        if (run_cli(cli,
                    "sample --checkpoint " + art.full_ckpt +
                        " --flow rfm --steps 5 --solver euler --condition age=0.7 "
                        "--seed 42 --out " +
                        out.string(),
                    log) != 0) {
            ok = false;
            why += "sample-exit ";
        }
    }
    if (slurp(work / "sample0.flv1") != slurp(work / "sample1.flv1")) {
        ok = false;
        why += "sample-bytes ";
    }

    // evaluate twice over the generated phantoms
    for (int round = 0; round < 2; ++round) {
        const fs::path out = work / ("eval" + std::to_string(round) + ".csv");
        if (run_cli(cli,
                    "evaluate --real " + (work / "gen0" / "manifest.csv").string() +
                        " --synth " + (work / "gen1" / "manifest.csv").string() +
                        " --metrics mmd,roi --bootstrap 20 --seed 1 --out " + out.string(),
                    log) != 0) {
            ok = false;
            why += "evaluate-exit ";
        }
    }
    if (slurp(work / "eval0.csv") != slurp(work / "eval1.csv")) {
        ok = false;
        why += "evaluate-bytes ";
    }

    // error paths exit nonzero with a one-line diagnostic
    if (run_cli(cli, "sample --checkpoint /nonexistent.ckpt --out x.flv1", log) == 0) {
        ok = false;
        why += "error-exit-code ";
    }

    report(11, "CLI reruns with equal seeds are byte-identical; errors exit nonzero", ok,
           why);
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    fs::path work = "acceptance_work";
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--cli")
            cli = argv[i + 1];
        else if (flag == "--workdir")
            work = argv[i + 1];
    }
    fs::create_directories(work);

    wavelet_criteria();          // 1, 2
    flow_exactness_criterion();  // 3
    vp_schedule_criterion();     // 4
    gradient_criterion();        // 5
    solver_order_criterion();    // 6
    metric_oracle_criterion();   // 10

    GenerativeArtifacts art = generative_criteria(work);  // 7, 8
    conditioning_criterion(work, art);                    // 9

    if (!cli.empty())
        cli_determinism_criterion(cli, work, art);  // 11
    else
        report(11, "CLI determinism", false, "no --cli path given");

    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures;
}
