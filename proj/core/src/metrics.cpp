#include "waveflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "waveflow/errors.hpp"
#include "waveflow/rng.hpp"

namespace waveflow {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// midranks (average rank of tied values), 1-based
std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]])
            ++j;
        const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

struct Dims {
    int d, h, w;
    std::size_t count() const { return static_cast<std::size_t>(d) * h * w; }
};

std::vector<double> gaussian_kernel(int width, double sigma) {
    std::vector<double> k(width);
    const double c = (width - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < width; ++i) {
        k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k)
        v /= sum;
    return k;
}

// valid-region separable filtering along one axis
std::vector<double> filter_axis(const std::vector<double>& in, Dims& dims, int axis,
                                const std::vector<double>& kernel) {
    const int L = static_cast<int>(kernel.size());
    Dims out_dims = dims;
    (axis == 0 ? out_dims.d : axis == 1 ? out_dims.h : out_dims.w) -= L - 1;
    std::vector<double> out(out_dims.count());

    for (int d = 0; d < out_dims.d; ++d)
        for (int h = 0; h < out_dims.h; ++h)
            for (int w = 0; w < out_dims.w; ++w) {
                double acc = 0.0;
                for (int m = 0; m < L; ++m) {
                    const int sd = d + (axis == 0 ? m : 0);
                    const int sh = h + (axis == 1 ? m : 0);
                    const int sw = w + (axis == 2 ? m : 0);
                    acc += kernel[m] *
                           in[(static_cast<std::size_t>(sd) * dims.h + sh) * dims.w + sw];
                }
                out[(static_cast<std::size_t>(d) * out_dims.h + h) * out_dims.w + w] = acc;
            }
    dims = out_dims;
    return out;
}

std::vector<double> filter3(const std::vector<double>& in, Dims dims,
                            const std::vector<double>& kernel, Dims& out_dims) {
    Dims cur = dims;
    auto x = filter_axis(in, cur, 0, kernel);
    x = filter_axis(x, cur, 1, kernel);
    x = filter_axis(x, cur, 2, kernel);
    out_dims = cur;
    return x;
}

std::vector<double> avg_pool2(const std::vector<double>& in, Dims dims, Dims& out_dims) {
    out_dims = {dims.d / 2, dims.h / 2, dims.w / 2};
    std::vector<double> out(out_dims.count());
    for (int d = 0; d < out_dims.d; ++d)
        for (int h = 0; h < out_dims.h; ++h)
            for (int w = 0; w < out_dims.w; ++w) {
                double acc = 0.0;
                for (int dz = 0; dz < 2; ++dz)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx)
                            acc += in[(static_cast<std::size_t>(2 * d + dz) * dims.h +
                                       (2 * h + dy)) *
                                          dims.w +
                                      (2 * w + dx)];
                out[(static_cast<std::size_t>(d) * out_dims.h + h) * out_dims.w + w] =
                    acc / 8.0;
            }
    return out;
}

struct ScaleStats {
    double cs = 0.0;
    double luminance = 0.0;
};

ScaleStats ssim_scale_stats(const std::vector<double>& a, const std::vector<double>& b,
                            Dims dims, const MsSsimConfig& cfg) {
    const int min_side = std::min({dims.d, dims.h, dims.w});
    const int win = std::min(cfg.window, min_side);
    const auto kernel = gaussian_kernel(win, cfg.sigma);

    std::vector<double> a2(a.size()), b2(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a2[i] = a[i] * a[i];
        b2[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    Dims od{};
    const auto mu_a = filter3(a, dims, kernel, od);
    const auto mu_b = filter3(b, dims, kernel, od);
    const auto e_a2 = filter3(a2, dims, kernel, od);
    const auto e_b2 = filter3(b2, dims, kernel, od);
    const auto e_ab = filter3(ab, dims, kernel, od);

    const double L = cfg.range_hi - cfg.range_lo;
    const double C1 = (0.01 * L) * (0.01 * L);
    const double C2 = (0.03 * L) * (0.03 * L);

    double cs_sum = 0.0, l_sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double va = std::max(0.0, e_a2[i] - mu_a[i] * mu_a[i]);
        const double vb = std::max(0.0, e_b2[i] - mu_b[i] * mu_b[i]);
        const double vab = e_ab[i] - mu_a[i] * mu_b[i];
        cs_sum += (2.0 * vab + C2) / (va + vb + C2);
        l_sum += (2.0 * mu_a[i] * mu_b[i] + C1) / (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + C1);
    }
    const double n = static_cast<double>(mu_a.size());
    return {cs_sum / n, l_sum / n};
}

constexpr double kMsSsimWeights5[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

double normal_sf2(double z) {  // two-sided tail probability of |Z| >= z
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace

double mmd2(const std::vector<std::vector<double>>& X,
            const std::vector<std::vector<double>>& Y, double bandwidth) {
    if (X.empty() || Y.empty())
        throw EmptySet("mmd2 on empty sample set");
    const std::size_t dim = X.front().size();
    for (const auto& v : X)
        if (v.size() != dim)
            throw ShapeMismatch("mmd2: inconsistent feature dims");
    for (const auto& v : Y)
        if (v.size() != dim)
            throw ShapeMismatch("mmd2: inconsistent feature dims");

    double sigma = bandwidth;
    if (sigma <= 0.0) {
        // median heuristic over pairwise distances in X ∪ Y
        std::vector<const std::vector<double>*> all;
        for (const auto& v : X) all.push_back(&v);
        for (const auto& v : Y) all.push_back(&v);
        std::vector<double> dists;
        dists.reserve(all.size() * (all.size() - 1) / 2);
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = i + 1; j < all.size(); ++j)
                dists.push_back(std::sqrt(sq_dist(*all[i], *all[j])));
        if (dists.empty()) {
            sigma = 1.0;
        } else {
            std::sort(dists.begin(), dists.end());
            const std::size_t m = dists.size();
            sigma = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
            if (sigma <= 0.0)
                sigma = 1.0;
        }
    }

    const double inv = 1.0 / (2.0 * sigma * sigma);
    auto kernel_mean = [&](const std::vector<std::vector<double>>& A,
                           const std::vector<std::vector<double>>& B) {
        double acc = 0.0;
        for (const auto& a : A)
            for (const auto& b : B)
                acc += std::exp(-sq_dist(a, b) * inv);
        return acc / (static_cast<double>(A.size()) * static_cast<double>(B.size()));
    };
    return kernel_mean(X, X) + kernel_mean(Y, Y) - 2.0 * kernel_mean(X, Y);
}

std::vector<double> volume_features(const Volume3D& vol) {
    Dims dims{vol.depth, vol.height, vol.width};
    std::vector<double> data(vol.data.begin(), vol.data.end());
    Dims od{};
    return avg_pool2(data, dims, od);
}

double ms_ssim3(const Volume3D& a, const Volume3D& b, const MsSsimConfig& cfg) {
    if (a.depth != b.depth || a.height != b.height || a.width != b.width)
        throw ShapeMismatch("ms_ssim3: volume dims differ");
    if (cfg.scales < 1 || cfg.scales > 5)
        throw DomainError("ms_ssim3: scales must be in [1, 5]");
    const int min_side = std::min({a.depth, a.height, a.width});
    if (min_side >> (cfg.scales - 1) < 2)
        throw TooSmall("ms_ssim3: volume too small for requested scale count");

    double wsum = 0.0;
    for (int s = 0; s < cfg.scales; ++s)
        wsum += kMsSsimWeights5[s];

    Dims dims{a.depth, a.height, a.width};
    std::vector<double> va(a.data.begin(), a.data.end());
    std::vector<double> vb(b.data.begin(), b.data.end());

    double result = 1.0;
    for (int s = 0; s < cfg.scales; ++s) {
        const ScaleStats st = ssim_scale_stats(va, vb, dims, cfg);
        const double weight = kMsSsimWeights5[s] / wsum;
        result *= std::pow(std::max(0.0, st.cs), weight);
        if (s == cfg.scales - 1)
            result *= std::pow(std::max(0.0, st.luminance), weight);
        else {
            Dims od{};
            va = avg_pool2(va, dims, od);
            vb = avg_pool2(vb, dims, od);
            dims = od;
        }
    }
    return result;
}

double intra_set_msssim(const std::vector<Volume3D>& set, const MsSsimConfig& cfg) {
    if (set.size() < 2)
        throw EmptySet("intra_set_msssim needs at least two volumes");
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = i + 1; j < set.size(); ++j) {
            acc += ms_ssim3(set[i], set[j], cfg);
            ++pairs;
        }
    return acc / static_cast<double>(pairs);
}

RegionScores region_metrics(const Volume3D& real_vol, const Volume3D& synth_vol,
                            const RegionMask& real_mask, const RegionMask& synth_mask) {
    if (real_vol.depth != synth_vol.depth || real_vol.height != synth_vol.height ||
        real_vol.width != synth_vol.width)
        throw ShapeMismatch("region_metrics: volume dims differ");

    std::set<int> labels;
    for (const auto& [label, voxels] : real_mask.labels)
        if (!voxels.empty())
            labels.insert(label);
    for (const auto& [label, voxels] : synth_mask.labels)
        if (!voxels.empty())
            labels.insert(label);
    if (labels.empty())
        throw NoRegions("region_metrics: no labeled voxels in either mask");

    static const std::vector<std::size_t> kEmpty;
    constexpr int kBins = 64;
    RegionScores total;
    for (int label : labels) {
        const auto ra = real_mask.labels.find(label);
        const auto rb = synth_mask.labels.find(label);
        const auto& A = ra == real_mask.labels.end() ? kEmpty : ra->second;
        const auto& B = rb == synth_mask.labels.end() ? kEmpty : rb->second;

        std::vector<std::size_t> uni;
        uni.reserve(A.size() + B.size());
        std::set_union(A.begin(), A.end(), B.begin(), B.end(), std::back_inserter(uni));

        // intensity MAE over the union voxel set
        double mae = 0.0;
        for (std::size_t v : uni)
            mae += std::abs(static_cast<double>(real_vol.data[v]) - synth_vol.data[v]);
        mae /= static_cast<double>(uni.size());

        // 64-bin histograms over shared edges spanning the union's value range
        double lo = real_vol.data[uni[0]], hi = lo;
        for (std::size_t v : uni) {
            lo = std::min({lo, static_cast<double>(real_vol.data[v]),
                           static_cast<double>(synth_vol.data[v])});
            hi = std::max({hi, static_cast<double>(real_vol.data[v]),
                           static_cast<double>(synth_vol.data[v])});
        }
        double p[kBins], q[kBins];
        std::fill(p, p + kBins, 1.0);  // add-one smoothing
        std::fill(q, q + kBins, 1.0);
        const double width = hi - lo;
        auto bin_of = [&](double x) {
            if (width <= 0.0)
                return 0;
            return std::min(kBins - 1, static_cast<int>((x - lo) / width * kBins));
        };
        for (std::size_t v : uni) {
            p[bin_of(real_vol.data[v])] += 1.0;
            q[bin_of(synth_vol.data[v])] += 1.0;
        }
        const double psum = static_cast<double>(uni.size()) + kBins;
        double kl = 0.0;
        for (int k = 0; k < kBins; ++k)
            kl += (p[k] / psum) * std::log(p[k] / q[k]);

        // Dice over the raw (non-union) label sets
        std::vector<std::size_t> inter;
        std::set_intersection(A.begin(), A.end(), B.begin(), B.end(),
                              std::back_inserter(inter));
        const double dice = 2.0 * static_cast<double>(inter.size()) /
                            static_cast<double>(A.size() + B.size());

        total.imae += mae;
        total.kl += kl;
        total.dice += dice;
    }
    const double n = static_cast<double>(labels.size());
    return {total.imae / n, total.kl / n, total.dice / n};
}

std::pair<double, double> bootstrap(const std::function<double(const std::vector<int>&)>& stat,
                                    int n, int items, std::uint64_t seed) {
    if (n < 1 || items < 1)
        throw DomainError("bootstrap: n and items must be >= 1");
    const std::uint64_t key = rng::derive(seed, "bootstrap");
    std::vector<double> values(n);
    std::vector<int> indices(items);
    for (int r = 0; r < n; ++r) {
        for (int i = 0; i < items; ++i)
            indices[i] = static_cast<int>(rng::below(
                key, static_cast<std::uint64_t>(r) * items + i, items));
        values[r] = stat(indices);
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi)
        return {*lo, 0.0};  // constant statistic: exactly zero dispersion
    double mean = 0.0;
    for (double v : values)
        mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values)
        var += (v - mean) * (v - mean);
    var /= n;
    return {mean, std::sqrt(var)};
}

double wilcoxon_ranksum(const std::vector<double>& X, const std::vector<double>& Y) {
    if (X.empty() || Y.empty())
        throw EmptySet("wilcoxon_ranksum on empty sample");
    const std::size_t n = X.size(), m = Y.size(), N = n + m;

    std::vector<double> combined;
    combined.reserve(N);
    combined.insert(combined.end(), X.begin(), X.end());
    combined.insert(combined.end(), Y.begin(), Y.end());
    const auto ranks = midranks(combined);

    double w_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        w_obs += ranks[i];

    if (N <= 12) {
        // exact null distribution by enumerating all C(N, n) rank splits
        std::size_t total = 0, le = 0, ge = 0;
        const double eps = 1e-9;
        for (std::uint32_t mask = 0; mask < (1u << N); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != n)
                continue;
            double w = 0.0;
            for (std::size_t i = 0; i < N; ++i)
                if (mask & (1u << i))
                    w += ranks[i];
            ++total;
            if (w <= w_obs + eps)
                ++le;
            if (w >= w_obs - eps)
                ++ge;
        }
        const double p_le = static_cast<double>(le) / total;
        const double p_ge = static_cast<double>(ge) / total;
        return std::min(1.0, 2.0 * std::min(p_le, p_ge));
    }

    // normal approximation with tie correction
    const double mu = static_cast<double>(n) * (N + 1) / 2.0;
    std::map<double, int> tie_counts;
    for (double v : combined)
        ++tie_counts[v];
    double tie_term = 0.0;
    for (const auto& [value, count] : tie_counts)
        tie_term += static_cast<double>(count) * count * count - count;
    const double var = static_cast<double>(n) * m / 12.0 *
                       (static_cast<double>(N + 1) -
                        tie_term / (static_cast<double>(N) * (N - 1)));
    if (var <= 0.0)
        return 1.0;
    const double z = (w_obs - mu) / std::sqrt(var);
    return normal_sf2(z);
}

double bonferroni(double p, int m) {
    return std::min(1.0, p * static_cast<double>(m));
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ShapeMismatch("spearman: size mismatch");
    if (a.size() < 2)
        throw EmptySet("spearman needs at least two points");
    const auto ra = midranks(a);
    const auto rb = midranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0)
        return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace waveflow
