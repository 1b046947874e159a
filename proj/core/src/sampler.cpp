#include "waveflow/sampler.hpp"

#include <cmath>

#include "waveflow/errors.hpp"
#include "waveflow/rng.hpp"

namespace waveflow {

namespace {

void check_finite(const std::vector<double>& x) {
    for (double v : x)
        if (!std::isfinite(v))
            throw NonFiniteState("ODE state diverged (non-finite value)");
}

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] += a * x[i];
}

}  // namespace

const char* solver_name(Solver s) {
    return s == Solver::euler ? "euler" : "rk4";
}

Solver solver_kind(std::string_view name) {
    if (name == "euler") return Solver::euler;
    if (name == "rk4") return Solver::rk4;
    throw DomainError("unknown solver: " + std::string(name));
}

std::vector<double> draw_noise(std::size_t count, std::uint64_t seed) {
    return rng::normal_vec(rng::derive(seed, "noise"), count);
}

std::vector<double> integrate_field(const VelocityField& field, std::vector<double> x,
                                    int steps, Solver solver) {
    if (steps < 1)
        throw DomainError("integrate: steps must be >= 1");
    const double h = 1.0 / steps;
    std::vector<double> k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()),
        tmp(x.size());

    for (int k = 0; k < steps; ++k) {
        const double t = k * h;
        if (solver == Solver::euler) {
            field(x, t, k1);
            axpy(x, h, k1);
        } else {
            field(x, t, k1);
            tmp = x;
            axpy(tmp, 0.5 * h, k1);
            field(tmp, t + 0.5 * h, k2);
            tmp = x;
            axpy(tmp, 0.5 * h, k2);
            field(tmp, t + 0.5 * h, k3);
            tmp = x;
            axpy(tmp, h, k3);
            field(tmp, t + h, k4);
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_finite(x);
    }
    return x;
}

Volume3D integrate(const VelocityModel& model, const SamplerConfig& cfg) {
    if (cfg.side < 2 || cfg.side % 2 != 0)
        throw BadDims("sampler volume side must be even and >= 2");
    const int grid = cfg.side / 2;
    const std::size_t count = static_cast<std::size_t>(8) * grid * grid * grid;

    std::vector<double> x = draw_noise(count, cfg.seed);
    const VelocityField field = [&](const std::vector<double>& state, double t,
                                    std::vector<double>& v) {
        v = forward(model, state, grid, t, cfg.condition, cfg.mode);
    };
    x = integrate_field(field, std::move(x), cfg.steps, cfg.solver);

    WaveletCoeffs coeffs = tensor_to_coeffs(x, cfg.family, cfg.side, cfg.side, cfg.side);
    Volume3D vol = idwt3(coeffs);
    vol.provenance = Provenance::generated;
    return vol;
}

}  // namespace waveflow
