#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "waveflow/volume.hpp"

namespace waveflow {

enum class WaveletKind { haar, db4, sym4, coif2, bior33 };

/// Analysis/synthesis filter bank. For the orthonormal families (haar, db4,
/// sym4, coif2) the rec filters are the time-reverses of the dec filters; the
/// high-pass sign convention is fixed so that haar dec_hi = [-1, 1]/sqrt(2).
struct WaveletFamily {
    WaveletKind kind;
    std::string name;
    std::vector<float> dec_lo, dec_hi, rec_lo, rec_hi;
    bool orthonormal;
};

const WaveletFamily& wavelet_family(WaveletKind kind);
const WaveletFamily& wavelet_family(std::string_view name);
const std::array<WaveletKind, 5>& all_wavelet_kinds();

/// Single-level 8-subband decomposition at half resolution per axis. Subbands
/// are ordered [LLL, LLH, LHL, LHH, HLL, HLH, HHL, HHH]; the letters name the
/// filter applied along (depth, height, width) in that order.
struct WaveletCoeffs {
    std::array<std::vector<float>, 8> subbands;
    WaveletKind family = WaveletKind::haar;
    int depth = 0, height = 0, width = 0;  // original volume dims

    std::size_t subband_size() const {
        return static_cast<std::size_t>(depth / 2) * (height / 2) * (width / 2);
    }
};

constexpr std::array<const char*, 8> kSubbandNames = {"LLL", "LLH", "LHL", "LHH",
                                                      "HLL", "HLH", "HHL", "HHH"};

/// Separable single-level DWT with periodized (circular) boundaries,
/// filter+downsample-by-2 along depth, then height, then width. Dims must be
/// even.
WaveletCoeffs dwt3(const Volume3D& vol, const WaveletFamily& family);

/// Exact inverse of dwt3 up to floating-point rounding.
Volume3D idwt3(const WaveletCoeffs& coeffs);

/// Flat coefficient tensor in subband-major order
/// [subband][depth/2][height/2][width/2], promoted to double.
std::vector<double> coeffs_to_tensor(const WaveletCoeffs& coeffs);
WaveletCoeffs tensor_to_coeffs(const std::vector<double>& tensor, WaveletKind family,
                               int depth, int height, int width);

struct ReconRow {
    std::string family;
    double mean_mae;
    double std_mae;
};

/// Per-family mean and std of voxelwise round-trip |x - idwt3(dwt3(x))|,
/// averaged per volume and then across volumes.
std::vector<ReconRow> recon_benchmark(const std::vector<Volume3D>& volumes,
                                      const std::vector<WaveletKind>& families);

}  // namespace waveflow
