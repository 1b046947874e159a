#include "waveflow/flows.hpp"

#include <cmath>

#include "waveflow/errors.hpp"

namespace waveflow {

namespace {
constexpr double kHalfPi = 1.5707963267948966192313217;
}

const char* flow_name(FlowKind kind) {
    switch (kind) {
        case FlowKind::rfm: return "rfm";
        case FlowKind::cfm: return "cfm";
        case FlowKind::vp: return "vp";
        case FlowKind::trig: return "trig";
    }
    return "?";
}

FlowKind flow_kind(std::string_view name) {
    if (name == "rfm") return FlowKind::rfm;
    if (name == "cfm") return FlowKind::cfm;
    if (name == "vp") return FlowKind::vp;
    if (name == "trig") return FlowKind::trig;
    throw DomainError("unknown flow kind: " + std::string(name));
}

double vp_T(const VPSchedule& sched, double t) {
    return sched.beta_min * t + 0.5 * (sched.beta_max - sched.beta_min) * t * t;
}

double vp_alpha_bar(const VPSchedule& sched, double t) {
    return std::exp(-0.5 * vp_T(sched, t));
}

double vp_sigma(const VPSchedule& sched, double t) {
    const double a = vp_alpha_bar(sched, t);
    return std::sqrt(1.0 - a * a);
}

PathSample path_sample(const FlowSpec& spec, std::span<const double> x0,
                       std::span<const double> x1, double t,
                       std::span<const double> xi) {
    if (x0.size() != x1.size())
        throw ShapeMismatch("path_sample: x0 and x1 differ in size");
    if (t < 0.0 || t > 1.0)
        throw DomainError("path_sample: t outside [0, 1]");

    const std::size_t n = x0.size();
    PathSample out;
    out.t = t;
    out.x_t.resize(n);
    out.v_target.resize(n);

    switch (spec.kind) {
        case FlowKind::rfm:
            for (std::size_t i = 0; i < n; ++i) {
                out.x_t[i] = (1.0 - t) * x0[i] + t * x1[i];
                out.v_target[i] = x1[i] - x0[i];
            }
            break;
        case FlowKind::cfm: {
            const double denom = 1.0 - t + spec.epsilon;
            for (std::size_t i = 0; i < n; ++i) {
                out.x_t[i] = (1.0 - t) * x0[i] + t * x1[i];
                out.v_target[i] = (x1[i] - out.x_t[i]) / denom;
            }
            break;
        }
        case FlowKind::trig: {
            const double c = std::cos(kHalfPi * t);
            const double s = std::sin(kHalfPi * t);
            for (std::size_t i = 0; i < n; ++i) {
                out.x_t[i] = c * x0[i] + s * x1[i];
                out.v_target[i] = kHalfPi * (-s * x0[i] + c * x1[i]);
            }
            break;
        }
        case FlowKind::vp: {
            if (xi.size() != n)
                throw ShapeMismatch("path_sample: vp requires caller-supplied xi of matching size");
            const VPSchedule sched = spec.schedule();
            const double tau = 1.0 - t;
            const double T = vp_T(sched, tau);
            const double alpha = std::exp(-0.5 * T);   // e^{-T/2}
            const double alpha2 = std::exp(-T);        // e^{-T}
            const double sigma = std::sqrt(1.0 - alpha2);
            const double beta = sched.beta(tau);
            const double denom = 1.0 - alpha2 + spec.epsilon;
            for (std::size_t i = 0; i < n; ++i) {
                out.x_t[i] = alpha * x1[i] + sigma * xi[i];
                out.v_target[i] = -0.5 * beta * (alpha2 * out.x_t[i] - alpha * x1[i]) / denom;
            }
            break;
        }
    }
    return out;
}

}  // namespace waveflow
