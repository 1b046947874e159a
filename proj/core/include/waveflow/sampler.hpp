#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "waveflow/net.hpp"
#include "waveflow/volume.hpp"
#include "waveflow/wavelet.hpp"

namespace waveflow {

enum class Solver { euler, rk4 };

const char* solver_name(Solver s);
Solver solver_kind(std::string_view name);

struct SamplerConfig {
    int steps = 10;
    Solver solver = Solver::euler;
    std::uint64_t seed = 0;
    std::map<std::string, double> condition;
    ConditioningMode mode = ConditioningMode::full;
    int side = 16;                           // output volume side (even)
    WaveletKind family = WaveletKind::haar;  // synthesis basis
};

/// Counter-based deterministic standard normal draws.
std::vector<double> draw_noise(std::size_t count, std::uint64_t seed);

/// Velocity field callback: v = field(x, t).
using VelocityField =
    std::function<void(const std::vector<double>& x, double t, std::vector<double>& v)>;

/// Fixed-step left-endpoint integration of dx/dt = field(x, t) over [0, 1];
/// throws NonFiniteState if the state diverges.
std::vector<double> integrate_field(const VelocityField& field, std::vector<double> x,
                                    int steps, Solver solver);

/// Draw seeded Gaussian wavelet coefficients, integrate the learned velocity
/// field, invert the wavelet transform.
Volume3D integrate(const VelocityModel& model, const SamplerConfig& cfg);

}  // namespace waveflow
