#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "waveflow/volume.hpp"

namespace waveflow {

/// Label -> sorted voxel indices. Label 1 is the core sphere, label 2 the shell.
struct RegionMask {
    std::map<int, std::vector<std::size_t>> labels;
};

constexpr int kRegionCore = 1;
constexpr int kRegionShell = 2;

struct Phantom {
    Volume3D volume;     // cubic, side n, values in [-1, 1]
    double condition;    // in [0, 1]
    RegionMask masks;
    std::uint64_t seed;
};

/// Deterministic condition-controlled phantom: centered core sphere of radius
/// r(c) = (0.15 + 0.2 c) * n at intensity +0.8, shell of thickness 0.1 * n at
/// -0.2, background -1.0, plus a seeded low-frequency cosine perturbation of
/// amplitude <= 0.05. Requires n >= 8 and even.
Phantom gen_phantom(int n, double condition, std::uint64_t seed);

/// Estimate of the generating condition: counts voxels above 0.3 and inverts
/// the analytic radius-count relation, clamped to [0, 1].
double condition_proxy(const Volume3D& vol);

/// Threshold segmentation matching the phantom intensity zones; used to derive
/// masks for generated volumes where no ground truth exists.
RegionMask segment_regions(const Volume3D& vol);

}  // namespace waveflow
