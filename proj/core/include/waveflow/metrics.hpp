#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "waveflow/phantom.hpp"
#include "waveflow/volume.hpp"

namespace waveflow {

/// Biased (V-statistic) squared maximum mean discrepancy with Gaussian kernel
/// k(a,b) = exp(-|a-b|^2 / (2 sigma^2)). bandwidth <= 0 selects the median
/// heuristic over pairwise distances in X union Y.
double mmd2(const std::vector<std::vector<double>>& X,
            const std::vector<std::vector<double>>& Y, double bandwidth = 0.0);

/// 2x average-pooled, flattened voxel features for raw-volume MMD.
std::vector<double> volume_features(const Volume3D& vol);

struct MsSsimConfig {
    int scales = 3;
    int window = 7;        // clamped to the smallest side at each scale
    double sigma = 1.5;    // Gaussian window std
    double range_lo = -1.0;
    double range_hi = 1.0;
};

/// 3D multi-scale structural similarity: Gaussian-windowed local statistics,
/// contrast/structure at every scale, luminance at the coarsest, 2x average
/// pooling between scales. Standard 5-scale weights truncated and
/// renormalized. Negative similarity terms are floored at zero before the
/// weighted product.
double ms_ssim3(const Volume3D& a, const Volume3D& b, const MsSsimConfig& cfg = {});

/// Mean pairwise MS-SSIM within a set (diversity proxy; higher = less diverse).
double intra_set_msssim(const std::vector<Volume3D>& set, const MsSsimConfig& cfg = {});

struct RegionScores {
    double imae = 0.0;
    double kl = 0.0;
    double dice = 0.0;
};

/// Region-averaged intensity MAE, histogram KL divergence (64 shared bins,
/// add-one smoothing), and Dice overlap. iMAE and KL are computed over the
/// union of the real and synthetic voxel sets per region; Dice over the raw
/// sets. Averaged across all regions present in either mask.
RegionScores region_metrics(const Volume3D& real_vol, const Volume3D& synth_vol,
                            const RegionMask& real_mask, const RegionMask& synth_mask);

/// n resamples (with replacement, size `items`) of a statistic over index
/// multisets; returns (mean, population std), deterministic from seed.
std::pair<double, double> bootstrap(const std::function<double(const std::vector<int>&)>& stat,
                                    int n, int items, std::uint64_t seed);

/// Two-sided rank-sum p value: exact enumeration when |X|+|Y| <= 12, normal
/// approximation with tie correction otherwise. Ties take midranks.
double wilcoxon_ranksum(const std::vector<double>& X, const std::vector<double>& Y);

/// min(1, m p)
double bonferroni(double p, int m);

/// Spearman rank correlation (midranks); 0 when either side has zero rank
/// variance.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace waveflow
