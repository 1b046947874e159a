#include "waveflow/wavelet.hpp"

#include <cmath>
#include <cstring>

#include "waveflow/errors.hpp"

namespace waveflow {

namespace {

std::vector<float> to_f32(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<float>(v[i]);
    return out;
}

// dec_hi[m] = (-1)^(m+1) dec_lo[L-1-m]; reproduces haar dec_hi = [-1, 1]/sqrt(2)
std::vector<double> quadrature_mirror(const std::vector<double>& lo) {
    const std::size_t L = lo.size();
    std::vector<double> hi(L);
    for (std::size_t m = 0; m < L; ++m)
        hi[m] = ((m % 2 == 0) ? -1.0 : 1.0) * lo[L - 1 - m];
    return hi;
}

std::vector<float> reversed(const std::vector<float>& v) {
    return {v.rbegin(), v.rend()};
}

WaveletFamily make_orthonormal(WaveletKind kind, std::string name,
                               const std::vector<double>& dec_lo) {
    WaveletFamily f;
    f.kind = kind;
    f.name = std::move(name);
    f.dec_lo = to_f32(dec_lo);
    f.dec_hi = to_f32(quadrature_mirror(dec_lo));
    f.rec_lo = reversed(f.dec_lo);
    f.rec_hi = reversed(f.dec_hi);
    f.orthonormal = true;
    return f;
}

const std::array<WaveletFamily, 5>& families() {
    static const std::array<WaveletFamily, 5> table = [] {
        const double s = std::sqrt(0.5);
        std::array<WaveletFamily, 5> t = {
            make_orthonormal(WaveletKind::haar, "haar", {s, s}),
            make_orthonormal(WaveletKind::db4, "db4",
                             {-0.010597401784997278, 0.032883011666982945,
                              0.030841381835986965, -0.18703481171888114,
                              -0.027983769416983849, 0.63088076792959036,
                              0.71484657055254153, 0.23037781330885523}),
            make_orthonormal(WaveletKind::sym4, "sym4",
                             {-0.075765714789273325, -0.029635527645998951,
                              0.49761866763201545, 0.80373875180591614,
                              0.29785779560527736, -0.099219543576847216,
                              -0.012603967262037833, 0.032223100604042702}),
            make_orthonormal(WaveletKind::coif2, "coif2",
                             {-0.00072054944536451221, -0.0018232088707029932,
                              0.0056114348193944995, 0.023680171946334084,
                              -0.059434418646456898, -0.076488599078306393,
                              0.41700518442169254, 0.81272363544554228,
                              0.38611006682116222, -0.067372554721963018,
                              -0.041464936781759151, 0.016387336463522112}),
            WaveletFamily{},
        };
        WaveletFamily& b = t[4];
        b.kind = WaveletKind::bior33;
        b.name = "bior33";
        b.orthonormal = false;
        b.dec_lo = to_f32({0.066291260736238842, -0.19887378220871652,
                           -0.15467960838455727, 0.99436891104358249,
                           0.99436891104358249, -0.15467960838455727,
                           -0.19887378220871652, 0.066291260736238842});
        b.dec_hi = to_f32({0.0, 0.0, -0.17677669529663689, 0.53033008588991071,
                           -0.53033008588991071, 0.17677669529663689, 0.0, 0.0});
        b.rec_lo = to_f32({0.0, 0.0, 0.17677669529663689, 0.53033008588991071,
                           0.53033008588991071, 0.17677669529663689, 0.0, 0.0});
        b.rec_hi = to_f32({0.066291260736238842, 0.19887378220871652,
                           -0.15467960838455727, -0.99436891104358249,
                           0.99436891104358249, 0.15467960838455727,
                           -0.19887378220871652, -0.066291260736238842});
        return t;
    }();
    return table;
}

// One analysis pass along a line of even length N (periodized):
//   approx[k] = sum_m dec_lo[m] * x[(2k+m) mod N]
//   detail[k] = sum_m dec_hi[m] * x[(2k+m) mod N]
// Output layout: [approx | detail], each N/2 long.
void analyze_line(const float* in, float* out, int n, const WaveletFamily& f) {
    const int half = n / 2;
    const int L = static_cast<int>(f.dec_lo.size());
    for (int k = 0; k < half; ++k) {
        float a = 0.0f, d = 0.0f;
        for (int m = 0; m < L; ++m) {
            const float x = in[(2 * k + m) % n];
            a += f.dec_lo[m] * x;
            d += f.dec_hi[m] * x;
        }
        out[k] = a;
        out[half + k] = d;
    }
}

// Adjoint-style synthesis, exact inverse of analyze_line:
//   x[(2k+m) mod N] += approx[k] * rec_lo[L-1-m] + detail[k] * rec_hi[L-1-m]
void synthesize_line(const float* in, float* out, int n, const WaveletFamily& f) {
    const int half = n / 2;
    const int L = static_cast<int>(f.rec_lo.size());
    for (int i = 0; i < n; ++i)
        out[i] = 0.0f;
    for (int k = 0; k < half; ++k) {
        const float a = in[k];
        const float d = in[half + k];
        for (int m = 0; m < L; ++m)
            out[(2 * k + m) % n] += a * f.rec_lo[L - 1 - m] + d * f.rec_hi[L - 1 - m];
    }
}

enum class Pass { analysis, synthesis };

// Apply a 1D pass along one axis of a (D,H,W) tensor stored depth-major.
void transform_axis(std::vector<float>& data, int D, int H, int W, int axis,
                    const WaveletFamily& f, Pass pass) {
    const int n = axis == 0 ? D : axis == 1 ? H : W;
    const std::size_t stride = axis == 0 ? static_cast<std::size_t>(H) * W
                             : axis == 1 ? static_cast<std::size_t>(W)
                                         : 1;
    std::vector<float> line(n), result(n);

    if (axis == 0) {
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w) {
                const std::size_t base = static_cast<std::size_t>(h) * W + w;
                for (int i = 0; i < n; ++i)
                    line[i] = data[base + i * stride];
                if (pass == Pass::analysis)
                    analyze_line(line.data(), result.data(), n, f);
                else
                    synthesize_line(line.data(), result.data(), n, f);
                for (int i = 0; i < n; ++i)
                    data[base + i * stride] = result[i];
            }
    } else if (axis == 1) {
        for (int d = 0; d < D; ++d)
            for (int w = 0; w < W; ++w) {
                const std::size_t base = (static_cast<std::size_t>(d) * H) * W + w;
                for (int i = 0; i < n; ++i)
                    line[i] = data[base + i * stride];
                if (pass == Pass::analysis)
                    analyze_line(line.data(), result.data(), n, f);
                else
                    synthesize_line(line.data(), result.data(), n, f);
                for (int i = 0; i < n; ++i)
                    data[base + i * stride] = result[i];
            }
    } else {
        for (int d = 0; d < D; ++d)
            for (int h = 0; h < H; ++h) {
                const std::size_t base = (static_cast<std::size_t>(d) * H + h) * W;
                for (int i = 0; i < n; ++i)
                    line[i] = data[base + i];
                if (pass == Pass::analysis)
                    analyze_line(line.data(), result.data(), n, f);
                else
                    synthesize_line(line.data(), result.data(), n, f);
                for (int i = 0; i < n; ++i)
                    data[base + i] = result[i];
            }
    }
}

}  // namespace

const WaveletFamily& wavelet_family(WaveletKind kind) {
    return families()[static_cast<std::size_t>(kind)];
}

const WaveletFamily& wavelet_family(std::string_view name) {
    for (const auto& f : families())
        if (f.name == name)
            return f;
    throw DomainError("unknown wavelet family: " + std::string(name));
}

const std::array<WaveletKind, 5>& all_wavelet_kinds() {
    static const std::array<WaveletKind, 5> kinds = {
        WaveletKind::haar, WaveletKind::db4, WaveletKind::sym4, WaveletKind::coif2,
        WaveletKind::bior33};
    return kinds;
}

WaveletCoeffs dwt3(const Volume3D& vol, const WaveletFamily& family) {
    if (vol.depth % 2 != 0 || vol.height % 2 != 0 || vol.width % 2 != 0)
        throw BadDims("dwt3 requires even dims");
    const int D = vol.depth, H = vol.height, W = vol.width;

    std::vector<float> work = vol.data;
    transform_axis(work, D, H, W, 0, family, Pass::analysis);
    transform_axis(work, D, H, W, 1, family, Pass::analysis);
    transform_axis(work, D, H, W, 2, family, Pass::analysis);

    WaveletCoeffs coeffs;
    coeffs.family = family.kind;
    coeffs.depth = D;
    coeffs.height = H;
    coeffs.width = W;
    const int hd = D / 2, hh = H / 2, hw = W / 2;
    for (auto& s : coeffs.subbands)
        s.resize(coeffs.subband_size());
    // octant (low|high) per axis -> subband index 4*depth_hi + 2*height_hi + width_hi
    for (int d = 0; d < D; ++d)
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w) {
                const int band = 4 * (d >= hd) + 2 * (h >= hh) + (w >= hw);
                const std::size_t dst =
                    (static_cast<std::size_t>(d % hd) * hh + (h % hh)) * hw + (w % hw);
                coeffs.subbands[band][dst] = work[(static_cast<std::size_t>(d) * H + h) * W + w];
            }
    return coeffs;
}

Volume3D idwt3(const WaveletCoeffs& coeffs) {
    const int D = coeffs.depth, H = coeffs.height, W = coeffs.width;
    if (D <= 0 || H <= 0 || W <= 0 || D % 2 != 0 || H % 2 != 0 || W % 2 != 0)
        throw ShapeMismatch("idwt3: invalid original dims");
    const std::size_t expected = coeffs.subband_size();
    for (const auto& s : coeffs.subbands)
        if (s.size() != expected)
            throw ShapeMismatch("idwt3: inconsistent subband size");

    const int hd = D / 2, hh = H / 2, hw = W / 2;
    std::vector<float> work(static_cast<std::size_t>(D) * H * W);
    for (int d = 0; d < D; ++d)
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w) {
                const int band = 4 * (d >= hd) + 2 * (h >= hh) + (w >= hw);
                const std::size_t src =
                    (static_cast<std::size_t>(d % hd) * hh + (h % hh)) * hw + (w % hw);
                work[(static_cast<std::size_t>(d) * H + h) * W + w] = coeffs.subbands[band][src];
            }

    const WaveletFamily& family = wavelet_family(coeffs.family);
    transform_axis(work, D, H, W, 2, family, Pass::synthesis);
    transform_axis(work, D, H, W, 1, family, Pass::synthesis);
    transform_axis(work, D, H, W, 0, family, Pass::synthesis);

    Volume3D vol = make_volume(D, H, W, 0.0f, Provenance::generated);
    vol.data = std::move(work);
    return vol;
}

std::vector<double> coeffs_to_tensor(const WaveletCoeffs& coeffs) {
    const std::size_t n = coeffs.subband_size();
    std::vector<double> out(8 * n);
    for (int s = 0; s < 8; ++s)
        for (std::size_t i = 0; i < n; ++i)
            out[s * n + i] = coeffs.subbands[s][i];
    return out;
}

WaveletCoeffs tensor_to_coeffs(const std::vector<double>& tensor, WaveletKind family,
                               int depth, int height, int width) {
    WaveletCoeffs coeffs;
    coeffs.family = family;
    coeffs.depth = depth;
    coeffs.height = height;
    coeffs.width = width;
    const std::size_t n = coeffs.subband_size();
    if (tensor.size() != 8 * n)
        throw ShapeMismatch("tensor_to_coeffs: element count does not match dims");
    for (int s = 0; s < 8; ++s) {
        coeffs.subbands[s].resize(n);
        for (std::size_t i = 0; i < n; ++i)
            coeffs.subbands[s][i] = static_cast<float>(tensor[s * n + i]);
    }
    return coeffs;
}

std::vector<ReconRow> recon_benchmark(const std::vector<Volume3D>& volumes,
                                      const std::vector<WaveletKind>& families_arg) {
    std::vector<ReconRow> rows;
    for (WaveletKind kind : families_arg) {
        const WaveletFamily& family = wavelet_family(kind);
        std::vector<double> maes;
        maes.reserve(volumes.size());
        for (const auto& vol : volumes) {
            const Volume3D recon = idwt3(dwt3(vol, family));
            double acc = 0.0;
            for (std::size_t i = 0; i < vol.data.size(); ++i)
                acc += std::abs(static_cast<double>(vol.data[i]) - recon.data[i]);
            maes.push_back(acc / static_cast<double>(vol.data.size()));
        }
        double mean = 0.0;
        for (double m : maes)
            mean += m;
        mean /= static_cast<double>(maes.size());
        double var = 0.0;
        for (double m : maes)
            var += (m - mean) * (m - mean);
        var /= static_cast<double>(maes.size());
        rows.push_back({family.name, mean, std::sqrt(var)});
    }
    return rows;
}

}  // namespace waveflow
