#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace waveflow {

enum class Provenance { nifti, rawvol, synthetic, generated };

/// Dense 3D scalar field, depth-major row-major storage:
/// index = (d * height + h) * width + w.
struct Volume3D {
    int depth = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;
    Provenance provenance = Provenance::synthetic;

    std::size_t size() const { return data.size(); }

    float& at(int d, int h, int w) {
        return data[(static_cast<std::size_t>(d) * height + h) * width + w];
    }
    float at(int d, int h, int w) const {
        return data[(static_cast<std::size_t>(d) * height + h) * width + w];
    }
};

Volume3D make_volume(int depth, int height, int width, float fill = 0.0f,
                     Provenance prov = Provenance::synthetic);

struct PreprocessConfig {
    double clip_lo_pct = 0.5;            // in [0, 100)
    double clip_hi_pct = 99.5;           // in (clip_lo_pct, 100]
    std::pair<double, double> out_range = {-1.0, 1.0};
    std::array<int, 3> pad_to = {0, 0, 0};  // target (depth, height, width), each even
};

/// Minimal single-file little-endian NIfTI-1 reader.
/// Accepted datatypes: uint8, int16, int32, float32, float64; dim[0] must be 3.
/// Axis convention: dim[1]=width, dim[2]=height, dim[3]=depth.
Volume3D load_nifti(const std::string& path);

/// FLV1 raw format: magic "FLV1" | u32 D | u32 H | u32 W | D*H*W f32, little-endian.
Volume3D load_rawvol(const std::string& path);
void save_rawvol(const Volume3D& vol, const std::string& path);

/// Percentile with linear interpolation between order statistics (inclusive).
double percentile(std::vector<float> values, double pct);

/// Replication padding to target dims; per-axis split is
/// (floor(total/2), ceil(total/2)) before/after.
Volume3D pad_replicate(const Volume3D& vol, const std::array<int, 3>& target);

/// Percentile clip, affine rescale to out_range, then replication padding.
/// A degenerate clip window (constant volume) maps every voxel to the
/// midpoint of out_range.
Volume3D preprocess(const Volume3D& vol, const PreprocessConfig& cfg);

}  // namespace waveflow
