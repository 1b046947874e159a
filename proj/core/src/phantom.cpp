#include "waveflow/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "waveflow/errors.hpp"
#include "waveflow/rng.hpp"

namespace waveflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kRadiusMinFrac = 0.15;
constexpr double kRadiusMaxFrac = 0.35;
constexpr double kShellFrac = 0.10;
constexpr double kCoreIntensity = 0.8;
constexpr double kShellIntensity = -0.2;
constexpr double kBackground = -1.0;
constexpr double kPerturbAmp = 0.05;
constexpr double kProxyThreshold = 0.3;

}  // namespace

Phantom gen_phantom(int n, double condition, std::uint64_t seed) {
    if (n < 8 || n % 2 != 0)
        throw BadDims("phantom side must be even and >= 8");
    if (condition < 0.0 || condition > 1.0)
        throw DomainError("phantom condition outside [0, 1]");

    const double r_core = (kRadiusMinFrac + condition * (kRadiusMaxFrac - kRadiusMinFrac)) * n;
    const double r_shell = r_core + kShellFrac * n;
    const double center = (n - 1) / 2.0;

    const std::uint64_t key = rng::derive(seed, "phantom");
    double phase[3], cycles[3];
    for (int a = 0; a < 3; ++a) {
        phase[a] = rng::uniform(key, static_cast<std::uint64_t>(a)) * kTwoPi;
        cycles[a] = 1.0 + rng::below(key, 8 + a, 2);  // 1 or 2 periods across the cube
    }

    Phantom ph;
    ph.condition = condition;
    ph.seed = seed;
    ph.volume = make_volume(n, n, n, 0.0f, Provenance::synthetic);

    std::size_t idx = 0;
    for (int d = 0; d < n; ++d) {
        const double zd = d - center;
        const double cz = std::cos(kTwoPi * cycles[0] * d / n + phase[0]);
        for (int h = 0; h < n; ++h) {
            const double yd = h - center;
            const double cy = std::cos(kTwoPi * cycles[1] * h / n + phase[1]);
            for (int w = 0; w < n; ++w, ++idx) {
                const double xd = w - center;
                const double dist = std::sqrt(zd * zd + yd * yd + xd * xd);
                double v;
                if (dist < r_core) {
                    v = kCoreIntensity;
                    ph.masks.labels[kRegionCore].push_back(idx);
                } else if (dist < r_shell) {
                    v = kShellIntensity;
                    ph.masks.labels[kRegionShell].push_back(idx);
                } else {
                    v = kBackground;
                }
                const double cx = std::cos(kTwoPi * cycles[2] * w / n + phase[2]);
                v += kPerturbAmp * cz * cy * cx;
                ph.volume.data[idx] = static_cast<float>(std::clamp(v, -1.0, 1.0));
            }
        }
    }
    return ph;
}

double condition_proxy(const Volume3D& vol) {
    std::size_t count = 0;
    for (float v : vol.data)
        if (v > kProxyThreshold)
            ++count;
    if (count == 0)
        return 0.0;
    const int n = vol.depth;  // proxy assumes a cubic volume
    const double r_est = std::cbrt(3.0 * static_cast<double>(count) / (4.0 * M_PI));
    const double c = (r_est / n - kRadiusMinFrac) / (kRadiusMaxFrac - kRadiusMinFrac);
    return std::clamp(c, 0.0, 1.0);
}

RegionMask segment_regions(const Volume3D& vol) {
    // thresholds sit midway between the phantom intensity zones
    const double shell_lo = 0.5 * (kBackground + kShellIntensity);  // -0.6
    RegionMask mask;
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        const float v = vol.data[i];
        if (v > kProxyThreshold)
            mask.labels[kRegionCore].push_back(i);
        else if (v > shell_lo)
            mask.labels[kRegionShell].push_back(i);
    }
    return mask;
}

}  // namespace waveflow
