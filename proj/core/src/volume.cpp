#include "waveflow/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "waveflow/errors.hpp"

namespace waveflow {

namespace {

constexpr int kNiftiHeaderSize = 348;

// NIfTI-1 datatype codes
constexpr std::int16_t DT_UINT8 = 2;
constexpr std::int16_t DT_INT16 = 4;
constexpr std::int16_t DT_INT32 = 8;
constexpr std::int16_t DT_FLOAT32 = 16;
constexpr std::int16_t DT_FLOAT64 = 64;

template <typename T>
T read_le(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));  // little-endian host assumed for this subset
    return v;
}

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open file: " + path);
    in.seekg(0, std::ios::end);
    const auto n = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> buf(n);
    if (n > 0)
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (!in)
        throw IoError("read failed: " + path);
    return buf;
}

void check_finite(const Volume3D& vol, const std::string& path) {
    for (float v : vol.data)
        if (!std::isfinite(v))
            throw NonFiniteData("non-finite voxel value in " + path);
}

template <typename T>
void convert_payload(const unsigned char* src, std::size_t count, float slope, float inter,
                     std::vector<float>& out) {
    const bool scaled = slope != 0.0f;
    for (std::size_t i = 0; i < count; ++i) {
        T raw;
        std::memcpy(&raw, src + i * sizeof(T), sizeof(T));
        float v = static_cast<float>(raw);
        if (scaled)
            v = v * slope + inter;
        out[i] = v;
    }
}

}  // namespace

Volume3D make_volume(int depth, int height, int width, float fill, Provenance prov) {
    if (depth <= 0 || height <= 0 || width <= 0)
        throw BadDims("volume dims must be positive");
    Volume3D vol;
    vol.depth = depth;
    vol.height = height;
    vol.width = width;
    vol.provenance = prov;
    vol.data.assign(static_cast<std::size_t>(depth) * height * width, fill);
    return vol;
}

Volume3D load_nifti(const std::string& path) {
    const auto buf = read_file(path);
    if (buf.size() >= 2 && buf[0] == 0x1f && buf[1] == 0x8b)
        throw UnsupportedDatatype("compressed NIfTI streams are not supported: " + path);
    if (buf.size() < kNiftiHeaderSize)
        throw MalformedHeader("file shorter than a NIfTI-1 header: " + path);

    const auto sizeof_hdr = read_le<std::int32_t>(buf.data());
    if (sizeof_hdr != kNiftiHeaderSize) {
        std::int32_t swapped;
        unsigned char rev[4] = {buf[3], buf[2], buf[1], buf[0]};
        std::memcpy(&swapped, rev, 4);
        if (swapped == kNiftiHeaderSize)
            throw MalformedHeader("big-endian NIfTI headers are not supported: " + path);
        throw MalformedHeader("bad sizeof_hdr in NIfTI header: " + path);
    }
    if (std::memcmp(buf.data() + 344, "n+1\0", 4) != 0)
        throw MalformedHeader("bad magic (expected single-file \"n+1\"): " + path);

    std::int16_t dim[8];
    for (int i = 0; i < 8; ++i)
        dim[i] = read_le<std::int16_t>(buf.data() + 40 + 2 * i);
    if (dim[0] != 3)
        throw MalformedHeader("only 3-dimensional NIfTI volumes are supported: " + path);
    if (dim[1] <= 0 || dim[2] <= 0 || dim[3] <= 0)
        throw MalformedHeader("non-positive dimension in NIfTI header: " + path);

    const auto datatype = read_le<std::int16_t>(buf.data() + 70);
    const auto vox_offset = read_le<float>(buf.data() + 108);
    const auto scl_slope = read_le<float>(buf.data() + 112);
    const auto scl_inter = read_le<float>(buf.data() + 116);

    std::size_t elem_size;
    switch (datatype) {
        case DT_UINT8: elem_size = 1; break;
        case DT_INT16: elem_size = 2; break;
        case DT_INT32: elem_size = 4; break;
        case DT_FLOAT32: elem_size = 4; break;
        case DT_FLOAT64: elem_size = 8; break;
        default:
            throw UnsupportedDatatype("unsupported NIfTI datatype code " +
                                      std::to_string(datatype) + ": " + path);
    }

    const auto offset = static_cast<std::size_t>(vox_offset);
    if (vox_offset < kNiftiHeaderSize || static_cast<float>(offset) != vox_offset)
        throw MalformedHeader("bad vox_offset in NIfTI header: " + path);

    // width = dim[1] (axial), height = dim[2] (coronal), depth = dim[3] (sagittal)
    Volume3D vol = make_volume(dim[3], dim[2], dim[1], 0.0f, Provenance::nifti);
    const std::size_t count = vol.size();
    if (buf.size() < offset + count * elem_size)
        throw TruncatedData("NIfTI voxel payload shorter than header dims imply: " + path);

    const unsigned char* src = buf.data() + offset;
    switch (datatype) {
        case DT_UINT8: convert_payload<std::uint8_t>(src, count, scl_slope, scl_inter, vol.data); break;
        case DT_INT16: convert_payload<std::int16_t>(src, count, scl_slope, scl_inter, vol.data); break;
        case DT_INT32: convert_payload<std::int32_t>(src, count, scl_slope, scl_inter, vol.data); break;
        case DT_FLOAT32: convert_payload<float>(src, count, scl_slope, scl_inter, vol.data); break;
        case DT_FLOAT64: convert_payload<double>(src, count, scl_slope, scl_inter, vol.data); break;
        default: break;
    }
    check_finite(vol, path);
    return vol;
}

Volume3D load_rawvol(const std::string& path) {
    const auto buf = read_file(path);
    if (buf.size() < 16)
        throw MalformedHeader("file shorter than an FLV1 header: " + path);
    if (std::memcmp(buf.data(), "FLV1", 4) != 0)
        throw MalformedHeader("bad magic (expected \"FLV1\"): " + path);

    const auto d = read_le<std::uint32_t>(buf.data() + 4);
    const auto h = read_le<std::uint32_t>(buf.data() + 8);
    const auto w = read_le<std::uint32_t>(buf.data() + 12);
    if (d == 0 || h == 0 || w == 0)
        throw MalformedHeader("zero dimension in FLV1 header: " + path);
    const std::uint64_t count = static_cast<std::uint64_t>(d) * h * w;
    if (count > (1ull << 31))
        throw MalformedHeader("implausible FLV1 dims: " + path);
    if (buf.size() < 16 + count * 4)
        throw TruncatedData("FLV1 payload shorter than header dims imply: " + path);

    Volume3D vol = make_volume(static_cast<int>(d), static_cast<int>(h), static_cast<int>(w),
                               0.0f, Provenance::rawvol);
    std::memcpy(vol.data.data(), buf.data() + 16, count * 4);
    check_finite(vol, path);
    return vol;
}

void save_rawvol(const Volume3D& vol, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open file for writing: " + path);
    out.write("FLV1", 4);
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(vol.depth),
                                   static_cast<std::uint32_t>(vol.height),
                                   static_cast<std::uint32_t>(vol.width)};
    out.write(reinterpret_cast<const char*>(dims), 12);
    out.write(reinterpret_cast<const char*>(vol.data.data()),
              static_cast<std::streamsize>(vol.data.size() * 4));
    if (!out)
        throw IoError("write failed: " + path);
}

double percentile(std::vector<float> values, double pct) {
    if (values.empty())
        throw EmptySet("percentile of empty value set");
    if (pct < 0.0 || pct > 100.0)
        throw DomainError("percentile rank outside [0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= values.size())
        return values.back();
    return values[lo] + frac * (static_cast<double>(values[lo + 1]) - values[lo]);
}

Volume3D pad_replicate(const Volume3D& vol, const std::array<int, 3>& target) {
    const int td = target[0], th = target[1], tw = target[2];
    if (td < vol.depth || th < vol.height || tw < vol.width)
        throw BadDims("pad target smaller than input dims");
    const int bd = (td - vol.depth) / 2;
    const int bh = (th - vol.height) / 2;
    const int bw = (tw - vol.width) / 2;

    Volume3D out = make_volume(td, th, tw, 0.0f, vol.provenance);
    for (int d = 0; d < td; ++d) {
        const int sd = std::clamp(d - bd, 0, vol.depth - 1);
        for (int h = 0; h < th; ++h) {
            const int sh = std::clamp(h - bh, 0, vol.height - 1);
            for (int w = 0; w < tw; ++w) {
                const int sw = std::clamp(w - bw, 0, vol.width - 1);
                out.at(d, h, w) = vol.at(sd, sh, sw);
            }
        }
    }
    return out;
}

Volume3D preprocess(const Volume3D& vol, const PreprocessConfig& cfg) {
    if (vol.data.empty())
        throw EmptySet("preprocess of empty volume");
    if (!(cfg.clip_lo_pct >= 0.0 && cfg.clip_lo_pct < 100.0) ||
        !(cfg.clip_hi_pct > cfg.clip_lo_pct && cfg.clip_hi_pct <= 100.0))
        throw DomainError("invalid clip percentiles");
    for (int t : cfg.pad_to)
        if (t % 2 != 0)
            throw BadDims("pad target dims must be even");

    const double p_lo = percentile(vol.data, cfg.clip_lo_pct);
    const double p_hi = percentile(vol.data, cfg.clip_hi_pct);
    const double out_lo = cfg.out_range.first;
    const double out_hi = cfg.out_range.second;

    Volume3D scaled = vol;
    if (p_hi == p_lo) {
        // degenerate clip window: map everything to the midpoint
        const float mid = static_cast<float>(0.5 * (out_lo + out_hi));
        std::fill(scaled.data.begin(), scaled.data.end(), mid);
    } else {
        const double scale = (out_hi - out_lo) / (p_hi - p_lo);
        for (float& v : scaled.data) {
            const double c = std::clamp(static_cast<double>(v), p_lo, p_hi);
            v = static_cast<float>(out_lo + (c - p_lo) * scale);
        }
    }
    return pad_replicate(scaled, cfg.pad_to);
}

}  // namespace waveflow
