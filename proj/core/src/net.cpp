#include "waveflow/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "waveflow/errors.hpp"
#include "waveflow/rng.hpp"

namespace waveflow {

namespace {

constexpr double kNormFloor = 1e-5;
constexpr double kTwoPi = 6.283185307179586476925287;

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

void linear_fwd(const Linear& L, const double* x, double* y) {
    for (int o = 0; o < L.out; ++o) {
        double acc = L.b[o];
        const float* row = L.w.data() + static_cast<std::size_t>(o) * L.in;
        for (int i = 0; i < L.in; ++i)
            acc += static_cast<double>(row[i]) * x[i];
        y[o] = acc;
    }
}

// dx may be null; both grad buffers accumulate
void linear_bwd(const Linear& L, const double* x, const double* dy, LinearGrad& g,
                double* dx) {
    for (int o = 0; o < L.out; ++o) {
        const double d = dy[o];
        g.b[o] += d;
        double* grow = g.w.data() + static_cast<std::size_t>(o) * L.in;
        for (int i = 0; i < L.in; ++i)
            grow[i] += d * x[i];
    }
    if (dx) {
        for (int i = 0; i < L.in; ++i) {
            double acc = 0.0;
            for (int o = 0; o < L.out; ++o)
                acc += static_cast<double>(L.w[static_cast<std::size_t>(o) * L.in + i]) * dy[o];
            dx[i] += acc;
        }
    }
}

Linear make_linear(int in, int out, std::uint64_t key, bool zero_init) {
    Linear L;
    L.in = in;
    L.out = out;
    L.w.assign(static_cast<std::size_t>(in) * out, 0.0f);
    L.b.assign(out, 0.0f);
    if (!zero_init) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (std::size_t i = 0; i < L.w.size(); ++i)
            L.w[i] = static_cast<float>((2.0 * rng::uniform(key, i) - 1.0) * scale);
    }
    return L;
}

template <typename ModelT, typename Fn>
void visit_linears(ModelT& m, Fn&& fn) {
    fn("proj_in", m.proj_in);
    fn("proj_out", m.proj_out);
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const std::string p = "blocks." + std::to_string(b) + ".";
        fn(p + "lin1", m.blocks[b].lin1);
        fn(p + "lin2", m.blocks[b].lin2);
        fn(p + "film_time", m.blocks[b].film_time);
        fn(p + "film_cond", m.blocks[b].film_cond);
    }
    fn("attn.wq", m.attn.wq);
    fn("attn.wk", m.attn.wk);
    fn("attn.wv", m.attn.wv);
    fn("attn.wo", m.attn.wo);
    fn("time.l1", m.time_l1);
    fn("time.l2", m.time_l2);
    for (auto& [name, ce] : m.cond_mlps) {
        fn("cond." + name + ".l1", ce.l1);
        fn("cond." + name + ".l2", ce.l2);
    }
}

// Fixed sinusoidal position code for token `tok` on a cubic grid of side g.
// Channels cycle through (axis, frequency, sin/cos); frequencies are capped at
// the grid Nyquist rate.
void position_encoding(int grid, int d, int tok, double* pe) {
    const int pos[3] = {tok / (grid * grid), (tok / grid) % grid, tok % grid};
    int fmax = 0;
    while ((2 << (fmax + 1)) <= grid)
        ++fmax;
    for (int c = 0; c < d; ++c) {
        const int axis = c % 3;
        const int k = c / 3;
        const int f = std::min(k / 2, fmax);
        const double theta = kTwoPi * static_cast<double>(1 << f) * pos[axis] / grid;
        pe[c] = (k % 2 == 0) ? std::sin(theta) : std::cos(theta);
    }
}

struct BlockCache {
    std::vector<double> h_in;             // n*d, block input
    std::vector<double> mu, sdev;         // n
    std::vector<char> floored;            // n, variance at/below floor
    std::vector<double> hn, h1, h2, z1, a1;  // n*d
    std::vector<double> gt, bt, gc, bc;   // d
};

}  // namespace

struct ForwardCache {
    int grid = 0, n = 0, d = 0;
    ConditioningMode mode = ConditioningMode::full;
    std::vector<double> x;
    std::vector<double> raw_t, z1_t, a1_t, e_t;
    struct CondCache {
        double nv = 0.0;
        std::vector<double> z1, a1;
    };
    std::map<std::string, CondCache> cond;
    std::vector<double> e_c;
    std::vector<double> h0;
    std::vector<BlockCache> block;
    bool attn_applied = false;
    std::vector<double> attn_in, q, k, v, scores, weights;
    std::vector<double> h_final;
};

Forward::Forward() = default;
Forward::~Forward() { delete cache; }
Forward::Forward(Forward&& other) noexcept : cache(other.cache) { other.cache = nullptr; }
Forward& Forward::operator=(Forward&& other) noexcept {
    std::swap(cache, other.cache);
    return *this;
}

const char* conditioning_name(ConditioningMode mode) {
    switch (mode) {
        case ConditioningMode::full: return "full";
        case ConditioningMode::film_only: return "film_only";
        case ConditioningMode::spatial_only: return "spatial_only";
        case ConditioningMode::unconditional: return "unconditional";
    }
    return "?";
}

ConditioningMode conditioning_mode(std::string_view name) {
    if (name == "full") return ConditioningMode::full;
    if (name == "film_only") return ConditioningMode::film_only;
    if (name == "spatial_only") return ConditioningMode::spatial_only;
    if (name == "unconditional") return ConditioningMode::unconditional;
    throw DomainError("unknown conditioning mode: " + std::string(name));
}

VelocityModel make_model(const EmbedderConfig& cfg, int n_blocks, std::uint64_t seed) {
    if (cfg.d_model <= 0 || cfg.n_freqs <= 0 || n_blocks <= 0)
        throw DomainError("model dims must be positive");
    if (cfg.d_cond != cfg.d_model)
        throw DomainError("d_cond must equal d_model (summation fusion)");
    if (cfg.condition_ranges.empty())
        throw DomainError("condition_ranges must be nonempty");
    for (const auto& [name, range] : cfg.condition_ranges)
        if (!(range.second > range.first))
            throw DomainError("empty condition range for variable " + name);

    VelocityModel m;
    m.cfg = cfg;
    const int d = cfg.d_model;
    m.blocks.resize(n_blocks);
    m.attn = {};
    m.proj_in = make_linear(8, d, rng::derive(seed, "init/proj_in"), false);
    m.proj_out = make_linear(d, 8, 0, true);  // zero map: untrained model predicts v = 0
    for (int b = 0; b < n_blocks; ++b) {
        const std::string p = "init/blocks." + std::to_string(b) + ".";
        m.blocks[b].lin1 = make_linear(d, d, rng::derive(seed, p + "lin1"), false);
        m.blocks[b].lin2 = make_linear(d, d, rng::derive(seed, p + "lin2"), false);
        m.blocks[b].film_time = make_linear(d, 2 * d, rng::derive(seed, p + "film_time"), false);
        m.blocks[b].film_cond = make_linear(d, 2 * d, rng::derive(seed, p + "film_cond"), false);
    }
    m.attn.wq = make_linear(d, d, rng::derive(seed, "init/attn.wq"), false);
    m.attn.wk = make_linear(d, d, rng::derive(seed, "init/attn.wk"), false);
    m.attn.wv = make_linear(d, d, rng::derive(seed, "init/attn.wv"), false);
    m.attn.wo = make_linear(d, d, rng::derive(seed, "init/attn.wo"), false);
    m.time_l1 = make_linear(2 * cfg.n_freqs, d, rng::derive(seed, "init/time.l1"), false);
    m.time_l2 = make_linear(d, d, rng::derive(seed, "init/time.l2"), false);
    for (const auto& [name, range] : cfg.condition_ranges) {
        CondEmbedder ce;
        ce.l1 = make_linear(1, d, rng::derive(seed, "init/cond." + name + ".l1"), false);
        ce.l2 = make_linear(d, d, rng::derive(seed, "init/cond." + name + ".l2"), false);
        m.cond_mlps.emplace(name, std::move(ce));
    }
    return m;
}

std::vector<ParamView> collect_params(VelocityModel& model) {
    std::vector<ParamView> out;
    visit_linears(model, [&](const std::string& name, Linear& L) {
        out.push_back({name + ".w", &L.w, {L.out, L.in}});
        out.push_back({name + ".b", &L.b, {L.out}});
    });
    return out;
}

std::size_t param_count(const VelocityModel& model) {
    std::size_t n = 0;
    visit_linears(const_cast<VelocityModel&>(model), [&](const std::string&, Linear& L) {
        n += L.w.size() + L.b.size();
    });
    return n;
}

std::vector<double> time_features(double t, int n_freqs) {
    if (t < 0.0 || t > 1.0)
        throw DomainError("time outside [0, 1]");
    std::vector<double> out(2 * n_freqs);
    for (int k = 0; k < n_freqs; ++k) {
        const double omega =
            n_freqs > 1 ? std::pow(1e4, static_cast<double>(k) / (n_freqs - 1)) : 1.0;
        out[k] = std::sin(omega * t);
        out[n_freqs + k] = std::cos(omega * t);
    }
    return out;
}

namespace {

void compute_time_path(const VelocityModel& m, double t, ForwardCache& c) {
    const int d = m.cfg.d_model;
    c.raw_t = time_features(t, m.cfg.n_freqs);
    c.z1_t.resize(d);
    linear_fwd(m.time_l1, c.raw_t.data(), c.z1_t.data());
    c.a1_t.resize(d);
    for (int i = 0; i < d; ++i)
        c.a1_t[i] = silu(c.z1_t[i]);
    c.e_t.resize(d);
    linear_fwd(m.time_l2, c.a1_t.data(), c.e_t.data());
}

void compute_cond_path(const VelocityModel& m, const std::map<std::string, double>& values,
                       ForwardCache& c) {
    const int d = m.cfg.d_model;
    c.e_c.assign(d, 0.0);
    if (c.mode == ConditioningMode::unconditional)
        return;  // e_cond fixed to the zero vector
    for (const auto& [name, value] : values) {
        const auto range_it = m.cfg.condition_ranges.find(name);
        if (range_it == m.cfg.condition_ranges.end())
            throw UnknownVariable("undeclared condition variable: " + name);
        const auto [lo, hi] = range_it->second;
        if (value < lo || value > hi)
            throw OutOfRange("condition " + name + " outside declared range");
        const auto mlp_it = m.cond_mlps.find(name);
        if (mlp_it == m.cond_mlps.end())
            throw UnknownVariable("no embedder for condition variable: " + name);

        ForwardCache::CondCache cc;
        cc.nv = (value - lo) / (hi - lo);
        cc.z1.resize(d);
        linear_fwd(mlp_it->second.l1, &cc.nv, cc.z1.data());
        cc.a1.resize(d);
        for (int i = 0; i < d; ++i)
            cc.a1[i] = silu(cc.z1[i]);
        std::vector<double> out(d);
        linear_fwd(mlp_it->second.l2, cc.a1.data(), out.data());
        for (int i = 0; i < d; ++i)
            c.e_c[i] += out[i];
        c.cond.emplace(name, std::move(cc));
    }
    for (const auto& [name, mlp] : m.cond_mlps)
        if (!values.count(name))
            throw UnknownVariable("missing value for declared condition variable: " + name);
}

void norm_token(const double* h, int d, double& mu, double& sdev, bool& floored, double* hn) {
    double m = 0.0;
    for (int i = 0; i < d; ++i)
        m += h[i];
    m /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i)
        var += (h[i] - m) * (h[i] - m);
    var /= d;
    floored = var <= kNormFloor;
    const double s = std::sqrt(std::max(var, kNormFloor));
    for (int i = 0; i < d; ++i)
        hn[i] = (h[i] - m) / s;
    mu = m;
    sdev = s;
}

void run_block(const VelocityModel& m, const FiLMResBlock& blk, ConditioningMode mode,
               const std::vector<double>& e_t, const std::vector<double>& e_c,
               std::vector<double>& H, int n, BlockCache& bc) {
    const int d = m.cfg.d_model;
    bc.h_in = H;
    bc.mu.resize(n);
    bc.sdev.resize(n);
    bc.floored.resize(n);
    bc.hn.resize(static_cast<std::size_t>(n) * d);
    bc.h1.resize(bc.hn.size());
    bc.h2.resize(bc.hn.size());
    bc.z1.resize(bc.hn.size());
    bc.a1.resize(bc.hn.size());

    std::vector<double> film(2 * d);
    linear_fwd(blk.film_time, e_t.data(), film.data());
    bc.gt.assign(film.begin(), film.begin() + d);
    bc.bt.assign(film.begin() + d, film.end());
    if (mode == ConditioningMode::spatial_only) {
        bc.gc.assign(d, 0.0);  // film_cond output zeroed in this ablation
        bc.bc.assign(d, 0.0);
    } else {
        linear_fwd(blk.film_cond, e_c.data(), film.data());
        bc.gc.assign(film.begin(), film.begin() + d);
        bc.bc.assign(film.begin() + d, film.end());
    }

    for (int tok = 0; tok < n; ++tok) {
        double* h = H.data() + static_cast<std::size_t>(tok) * d;
        double* hn = bc.hn.data() + static_cast<std::size_t>(tok) * d;
        double* h1 = bc.h1.data() + static_cast<std::size_t>(tok) * d;
        double* h2 = bc.h2.data() + static_cast<std::size_t>(tok) * d;
        double* z1 = bc.z1.data() + static_cast<std::size_t>(tok) * d;
        double* a1 = bc.a1.data() + static_cast<std::size_t>(tok) * d;

        bool fl;
        norm_token(h, d, bc.mu[tok], bc.sdev[tok], fl, hn);
        bc.floored[tok] = fl ? 1 : 0;
        for (int i = 0; i < d; ++i)
            h1[i] = hn[i] * (1.0 + bc.gt[i]) + bc.bt[i];
        for (int i = 0; i < d; ++i)
            h2[i] = h1[i] * (1.0 + bc.gc[i]) + bc.bc[i];
        linear_fwd(blk.lin1, h2, z1);
        for (int i = 0; i < d; ++i)
            a1[i] = silu(z1[i]);
        std::vector<double> z2(d);
        linear_fwd(blk.lin2, a1, z2.data());
        for (int i = 0; i < d; ++i)
            h[i] += z2[i];  // residual
    }
}

void run_attention(const VelocityModel& m, std::vector<double>& H, int n, ForwardCache& c) {
    const int d = m.cfg.d_model;
    c.attn_in = H;
    c.q.resize(static_cast<std::size_t>(n) * d);
    c.k.resize(d);
    c.v.resize(d);
    c.scores.resize(n);
    c.weights.resize(n);
    linear_fwd(m.attn.wk, c.e_c.data(), c.k.data());
    linear_fwd(m.attn.wv, c.e_c.data(), c.v.data());
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    // softmax over the single key is exactly 1, so attended == V for every
    // token; o = wo(V) is shared
    std::vector<double> o(d);
    linear_fwd(m.attn.wo, c.v.data(), o.data());
    for (int tok = 0; tok < n; ++tok) {
        double* q = c.q.data() + static_cast<std::size_t>(tok) * d;
        linear_fwd(m.attn.wq, c.attn_in.data() + static_cast<std::size_t>(tok) * d, q);
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            s += q[i] * c.k[i];
        c.scores[tok] = s * scale;
        c.weights[tok] = 1.0;  // exp(s - s) / sum == 1 for a single key
        double* h = H.data() + static_cast<std::size_t>(tok) * d;
        for (int i = 0; i < d; ++i)
            h[i] += c.weights[tok] * o[i];
    }
    c.attn_applied = true;
}

}  // namespace

std::vector<double> embed_time(const VelocityModel& model, double t) {
    ForwardCache c;
    compute_time_path(model, t, c);
    return c.e_t;
}

std::vector<double> embed_condition(const VelocityModel& model,
                                    const std::map<std::string, double>& values) {
    ForwardCache c;
    c.mode = ConditioningMode::full;
    compute_cond_path(model, values, c);
    return c.e_c;
}

std::vector<double> film_modulate(std::span<const double> tokens, int d_model,
                                  std::span<const double> e_time,
                                  std::span<const double> e_cond,
                                  const FiLMResBlock& block) {
    if (tokens.size() % d_model != 0)
        throw ShapeMismatch("film_modulate: token buffer not a multiple of d_model");
    const int d = d_model;
    const int n = static_cast<int>(tokens.size()) / d;
    std::vector<double> film(2 * d);
    linear_fwd(block.film_time, e_time.data(), film.data());
    std::vector<double> gt(film.begin(), film.begin() + d), bt(film.begin() + d, film.end());
    linear_fwd(block.film_cond, e_cond.data(), film.data());
    std::vector<double> gc(film.begin(), film.begin() + d), bc(film.begin() + d, film.end());

    std::vector<double> out(tokens.size());
    std::vector<double> hn(d);
    for (int tok = 0; tok < n; ++tok) {
        double mu, s;
        bool fl;
        norm_token(tokens.data() + static_cast<std::size_t>(tok) * d, d, mu, s, fl, hn.data());
        for (int i = 0; i < d; ++i) {
            const double h1 = hn[i] * (1.0 + gt[i]) + bt[i];
            out[static_cast<std::size_t>(tok) * d + i] = h1 * (1.0 + gc[i]) + bc[i];
        }
    }
    return out;
}

std::vector<double> cross_attend(std::span<const double> tokens, int d_model,
                                 std::span<const double> e_cond,
                                 const CrossAttention& attn) {
    if (tokens.size() % d_model != 0)
        throw ShapeMismatch("cross_attend: token buffer not a multiple of d_model");
    const int d = d_model;
    const int n = static_cast<int>(tokens.size()) / d;
    std::vector<double> k(d), v(d), q(d), o(d);
    linear_fwd(attn.wk, e_cond.data(), k.data());
    linear_fwd(attn.wv, e_cond.data(), v.data());
    std::vector<double> out(tokens.begin(), tokens.end());
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int tok = 0; tok < n; ++tok) {
        linear_fwd(attn.wq, tokens.data() + static_cast<std::size_t>(tok) * d, q.data());
        double score = 0.0;
        for (int i = 0; i < d; ++i)
            score += q[i] * k[i];
        score *= scale;
        const double weight = 1.0;  // softmax over a single key
        std::vector<double> att(d);
        for (int i = 0; i < d; ++i)
            att[i] = weight * v[i];
        linear_fwd(attn.wo, att.data(), o.data());
        for (int i = 0; i < d; ++i)
            out[static_cast<std::size_t>(tok) * d + i] += o[i];
    }
    return out;
}

std::vector<double> forward(const VelocityModel& model, std::span<const double> x,
                            int grid, double t,
                            const std::map<std::string, double>& cond,
                            ConditioningMode mode, Forward* fwd) {
    const int d = model.cfg.d_model;
    const int n = grid * grid * grid;
    if (x.size() != static_cast<std::size_t>(8) * n)
        throw ShapeMismatch("forward: input size must be 8 * grid^3");

    ForwardCache local;
    ForwardCache* cache_ptr = &local;
    if (fwd) {
        delete fwd->cache;
        fwd->cache = new ForwardCache();
        cache_ptr = fwd->cache;
    }
    ForwardCache& c = *cache_ptr;
    c.grid = grid;
    c.n = n;
    c.d = d;
    c.mode = mode;
    c.x.assign(x.begin(), x.end());

    compute_time_path(model, t, c);
    compute_cond_path(model, cond, c);

    // tokens: project 8 subband channels, add fixed position code
    c.h0.resize(static_cast<std::size_t>(n) * d);
    std::vector<double> xtok(8), pe(d);
    for (int tok = 0; tok < n; ++tok) {
        for (int s = 0; s < 8; ++s)
            xtok[s] = x[static_cast<std::size_t>(s) * n + tok];
        double* h = c.h0.data() + static_cast<std::size_t>(tok) * d;
        linear_fwd(model.proj_in, xtok.data(), h);
        position_encoding(grid, d, tok, pe.data());
        for (int i = 0; i < d; ++i)
            h[i] += pe[i];
    }

    std::vector<double> H = c.h0;
    c.block.resize(model.blocks.size());
    for (std::size_t b = 0; b < model.blocks.size(); ++b)
        run_block(model, model.blocks[b], mode, c.e_t, c.e_c, H, n, c.block[b]);

    if (mode != ConditioningMode::film_only)
        run_attention(model, H, n, c);

    c.h_final = H;
    std::vector<double> v_pred(static_cast<std::size_t>(8) * n);
    std::vector<double> ytok(8);
    for (int tok = 0; tok < n; ++tok) {
        linear_fwd(model.proj_out, H.data() + static_cast<std::size_t>(tok) * d, ytok.data());
        for (int s = 0; s < 8; ++s)
            v_pred[static_cast<std::size_t>(s) * n + tok] = ytok[s];
    }
    return v_pred;
}

Gradients backward(const VelocityModel& model, const Forward& fwd,
                   std::span<const double> grad_out) {
    if (!fwd.cache)
        throw StaleCache("backward without a cached forward");
    const ForwardCache& c = *fwd.cache;
    const int d = c.d;
    const int n = c.n;
    if (grad_out.size() != static_cast<std::size_t>(8) * n)
        throw StaleCache("backward: grad_out shape disagrees with cached forward");

    // grads mirror the model; flattened at the end in collect_params order
    std::map<const Linear*, LinearGrad> store;
    visit_linears(const_cast<VelocityModel&>(model), [&](const std::string&, Linear& L) {
        store[&L] = {std::vector<double>(L.w.size(), 0.0), std::vector<double>(L.b.size(), 0.0)};
    });
    auto G = [&](const Linear& L) -> LinearGrad& { return store.at(&L); };

    std::vector<double> de_t(d, 0.0), de_c(d, 0.0);
    std::vector<double> dH(static_cast<std::size_t>(n) * d, 0.0);

    // proj_out
    {
        std::vector<double> dy(8);
        for (int tok = 0; tok < n; ++tok) {
            for (int s = 0; s < 8; ++s)
                dy[s] = grad_out[static_cast<std::size_t>(s) * n + tok];
            linear_bwd(model.proj_out, c.h_final.data() + static_cast<std::size_t>(tok) * d,
                       dy.data(), G(model.proj_out),
                       dH.data() + static_cast<std::size_t>(tok) * d);
        }
    }

    // attention (skipped entirely under film_only)
    if (c.attn_applied) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        std::vector<double> datt(d), dV(d, 0.0), dK(d, 0.0), dq(d);
        for (int tok = 0; tok < n; ++tok) {
            const double* do_tok = dH.data() + static_cast<std::size_t>(tok) * d;
            // out = h + wo(att); residual part of dH stays in place
            std::fill(datt.begin(), datt.end(), 0.0);
            linear_bwd(model.attn.wo, c.v.data(), do_tok, G(model.attn.wo), datt.data());
            const double w = c.weights[tok];
            double dw = 0.0;
            for (int i = 0; i < d; ++i) {
                dV[i] += w * datt[i];
                dw += datt[i] * c.v[i];
            }
            // softmax over one key: dscore = w (dw - w dw) = 0; kept general
            const double dscore = w * (dw - w * dw);
            std::fill(dq.begin(), dq.end(), 0.0);
            for (int i = 0; i < d; ++i) {
                dq[i] = dscore * c.k[i] * scale;
                dK[i] += dscore * c.q[static_cast<std::size_t>(tok) * d + i] * scale;
            }
            linear_bwd(model.attn.wq, c.attn_in.data() + static_cast<std::size_t>(tok) * d,
                       dq.data(), G(model.attn.wq),
                       dH.data() + static_cast<std::size_t>(tok) * d);
        }
        linear_bwd(model.attn.wk, c.e_c.data(), dK.data(), G(model.attn.wk), de_c.data());
        linear_bwd(model.attn.wv, c.e_c.data(), dV.data(), G(model.attn.wv), de_c.data());
    }

    // blocks in reverse
    for (std::size_t bi = model.blocks.size(); bi-- > 0;) {
        const FiLMResBlock& blk = model.blocks[bi];
        const BlockCache& bc = c.block[bi];
        std::vector<double> dgt(d, 0.0), dbt(d, 0.0), dgc(d, 0.0), dbc(d, 0.0);
        std::vector<double> da1(d), dz1(d), dh2(d), dh1(d), dhn(d), dh(d);
        for (int tok = 0; tok < n; ++tok) {
            const std::size_t off = static_cast<std::size_t>(tok) * d;
            const double* dz2 = dH.data() + off;  // residual: d out = d z2
            std::fill(da1.begin(), da1.end(), 0.0);
            linear_bwd(blk.lin2, bc.a1.data() + off, dz2, G(blk.lin2), da1.data());
            for (int i = 0; i < d; ++i)
                dz1[i] = da1[i] * silu_grad(bc.z1[off + i]);
            std::fill(dh2.begin(), dh2.end(), 0.0);
            linear_bwd(blk.lin1, bc.h2.data() + off, dz1.data(), G(blk.lin1), dh2.data());
            for (int i = 0; i < d; ++i) {
                dh1[i] = dh2[i] * (1.0 + bc.gc[i]);
                dgc[i] += dh2[i] * bc.h1[off + i];
                dbc[i] += dh2[i];
            }
            for (int i = 0; i < d; ++i) {
                dhn[i] = dh1[i] * (1.0 + bc.gt[i]);
                dgt[i] += dh1[i] * bc.hn[off + i];
                dbt[i] += dh1[i];
            }
            // affine-free channel norm backward
            double mean_dhn = 0.0, mean_dhn_hn = 0.0;
            for (int i = 0; i < d; ++i) {
                mean_dhn += dhn[i];
                mean_dhn_hn += dhn[i] * bc.hn[off + i];
            }
            mean_dhn /= d;
            mean_dhn_hn /= d;
            const double inv_s = 1.0 / bc.sdev[tok];
            if (bc.floored[tok]) {
                for (int i = 0; i < d; ++i)
                    dh[i] = (dhn[i] - mean_dhn) * inv_s;
            } else {
                for (int i = 0; i < d; ++i)
                    dh[i] = (dhn[i] - mean_dhn - bc.hn[off + i] * mean_dhn_hn) * inv_s;
            }
            for (int i = 0; i < d; ++i)
                dH[off + i] += dh[i];  // skip path already in dH; add branch path
        }
        // film layers
        std::vector<double> dfilm(2 * d);
        std::copy(dgt.begin(), dgt.end(), dfilm.begin());
        std::copy(dbt.begin(), dbt.end(), dfilm.begin() + d);
        linear_bwd(blk.film_time, c.e_t.data(), dfilm.data(), G(blk.film_time), de_t.data());
        if (c.mode != ConditioningMode::spatial_only) {
            std::copy(dgc.begin(), dgc.end(), dfilm.begin());
            std::copy(dbc.begin(), dbc.end(), dfilm.begin() + d);
            linear_bwd(blk.film_cond, c.e_c.data(), dfilm.data(), G(blk.film_cond), de_c.data());
        }
    }

    // input projection; position code is constant
    Gradients out;
    out.d_input.assign(static_cast<std::size_t>(8) * n, 0.0);
    {
        std::vector<double> xtok(8), dx(8);
        for (int tok = 0; tok < n; ++tok) {
            for (int s = 0; s < 8; ++s)
                xtok[s] = c.x[static_cast<std::size_t>(s) * n + tok];
            std::fill(dx.begin(), dx.end(), 0.0);
            linear_bwd(model.proj_in, xtok.data(), dH.data() + static_cast<std::size_t>(tok) * d,
                       G(model.proj_in), dx.data());
            for (int s = 0; s < 8; ++s)
                out.d_input[static_cast<std::size_t>(s) * n + tok] = dx[s];
        }
    }

    // time path
    {
        std::vector<double> da1(d, 0.0), dz1(d);
        linear_bwd(model.time_l2, c.a1_t.data(), de_t.data(), G(model.time_l2), da1.data());
        for (int i = 0; i < d; ++i)
            dz1[i] = da1[i] * silu_grad(c.z1_t[i]);
        linear_bwd(model.time_l1, c.raw_t.data(), dz1.data(), G(model.time_l1), nullptr);
    }

    // condition path; under unconditional e_cond is a constant zero vector
    if (c.mode != ConditioningMode::unconditional) {
        for (const auto& [name, cc] : c.cond) {
            const CondEmbedder& ce = model.cond_mlps.at(name);
            std::vector<double> da1(d, 0.0), dz1(d);
            linear_bwd(ce.l2, cc.a1.data(), de_c.data(), G(ce.l2), da1.data());
            for (int i = 0; i < d; ++i)
                dz1[i] = da1[i] * silu_grad(cc.z1[i]);
            linear_bwd(ce.l1, &cc.nv, dz1.data(), G(ce.l1), nullptr);
        }
    }

    // flatten in canonical order
    visit_linears(const_cast<VelocityModel&>(model), [&](const std::string&, Linear& L) {
        out.by_param.push_back(std::move(store.at(&L).w));
        out.by_param.push_back(std::move(store.at(&L).b));
    });
    return out;
}

void save_checkpoint(const VelocityModel& model, const std::string& path,
                     const std::map<std::string, std::vector<float>>& extras) {
    nlohmann::json manifest = nlohmann::json::array();
    std::vector<const std::vector<float>*> payloads;
    std::size_t offset = 0;

    auto add = [&](const std::string& name, const std::vector<float>& data,
                   std::vector<int> shape) {
        manifest.push_back({{"name", name}, {"shape", shape}, {"byte_offset", offset}});
        payloads.push_back(&data);
        offset += data.size() * sizeof(float);
    };

    auto& m = const_cast<VelocityModel&>(model);
    for (const auto& p : collect_params(m))
        add(p.name, *p.data, p.shape);
    std::map<std::string, std::vector<float>> ranges;
    for (const auto& [name, range] : model.cfg.condition_ranges)
        ranges["cond_range." + name] = {static_cast<float>(range.first),
                                        static_cast<float>(range.second)};
    for (const auto& [name, data] : ranges)
        add(name, data, {static_cast<int>(data.size())});
    for (const auto& [name, data] : extras)
        add(name, data, {static_cast<int>(data.size())});

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open checkpoint for writing: " + path);
    const std::string header = manifest.dump();
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.put('\0');
    for (const auto* data : payloads)
        out.write(reinterpret_cast<const char*>(data->data()),
                  static_cast<std::streamsize>(data->size() * sizeof(float)));
    if (!out)
        throw IoError("checkpoint write failed: " + path);
}

VelocityModel load_checkpoint(const std::string& path,
                              std::map<std::string, std::vector<float>>* extras) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingCheckpoint("cannot open checkpoint: " + path);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto sep = blob.find('\0');
    if (sep == std::string::npos)
        throw MalformedHeader("checkpoint missing manifest separator: " + path);

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(blob.substr(0, sep));
    } catch (const nlohmann::json::exception& e) {
        throw MalformedHeader("checkpoint manifest is not valid JSON: " + std::string(e.what()));
    }
    if (!manifest.is_array())
        throw MalformedHeader("checkpoint manifest must be a JSON array");

    struct Entry {
        std::vector<int> shape;
        std::size_t offset = 0;
        std::size_t count = 0;
    };
    std::map<std::string, Entry> entries;
    std::size_t total = 0;
    for (const auto& item : manifest) {
        Entry e;
        e.shape = item.at("shape").get<std::vector<int>>();
        e.offset = item.at("byte_offset").get<std::size_t>();
        e.count = 1;
        for (int s : e.shape)
            e.count *= static_cast<std::size_t>(s);
        total += e.count * sizeof(float);
        entries[item.at("name").get<std::string>()] = e;
    }
    const std::size_t payload_size = blob.size() - sep - 1;
    if (payload_size != total)
        throw TruncatedData("checkpoint payload length mismatch: " + path);

    auto read_tensor = [&](const Entry& e) {
        std::vector<float> data(e.count);
        std::memcpy(data.data(), blob.data() + sep + 1 + e.offset, e.count * sizeof(float));
        return data;
    };

    // reconstruct architecture from parameter shapes
    const auto proj_it = entries.find("proj_in.w");
    const auto time_it = entries.find("time.l1.w");
    if (proj_it == entries.end() || time_it == entries.end())
        throw MalformedHeader("checkpoint missing core parameters: " + path);
    EmbedderConfig cfg;
    cfg.d_model = proj_it->second.shape.at(0);
    cfg.d_cond = cfg.d_model;
    cfg.n_freqs = time_it->second.shape.at(1) / 2;
    int n_blocks = 0;
    for (const auto& [name, e] : entries)
        if (name.rfind("blocks.", 0) == 0)
            n_blocks = std::max(n_blocks, std::stoi(name.substr(7)) + 1);
    for (const auto& [name, e] : entries)
        if (name.rfind("cond_range.", 0) == 0) {
            const auto data = read_tensor(e);
            if (data.size() != 2)
                throw MalformedHeader("bad cond_range entry in checkpoint: " + name);
            cfg.condition_ranges[name.substr(11)] = {data[0], data[1]};
        }

    VelocityModel model = make_model(cfg, n_blocks, 0);
    std::set<std::string> consumed;
    for (auto& p : collect_params(model)) {
        const auto it = entries.find(p.name);
        if (it == entries.end())
            throw MalformedHeader("checkpoint missing parameter " + p.name);
        if (it->second.shape != p.shape)
            throw ShapeMismatch("checkpoint shape mismatch for " + p.name);
        *p.data = read_tensor(it->second);
        consumed.insert(p.name);
    }
    if (extras) {
        extras->clear();
        for (const auto& [name, e] : entries)
            if (!consumed.count(name) && name.rfind("cond_range.", 0) != 0)
                (*extras)[name] = read_tensor(e);
    }
    return model;
}

}  // namespace waveflow
