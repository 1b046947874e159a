#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace waveflow {

enum class FlowKind { rfm, cfm, vp, trig };

const char* flow_name(FlowKind kind);
FlowKind flow_kind(std::string_view name);

/// Linear variance schedule beta(t) = beta_min + t (beta_max - beta_min) with
/// its closed-form integral T, signal scale alpha_bar and noise scale sigma.
struct VPSchedule {
    double beta_min = 0.1;
    double beta_max = 20.0;

    double beta(double t) const { return beta_min + t * (beta_max - beta_min); }
};

double vp_T(const VPSchedule& sched, double t);          // integral of beta over [0, t]
double vp_alpha_bar(const VPSchedule& sched, double t);  // exp(-T/2)
double vp_sigma(const VPSchedule& sched, double t);      // sqrt(1 - alpha_bar^2)

struct FlowSpec {
    FlowKind kind = FlowKind::rfm;
    double epsilon = 1e-8;
    double vp_beta_min = 0.1;
    double vp_beta_max = 20.0;

    VPSchedule schedule() const { return {vp_beta_min, vp_beta_max}; }
};

struct PathSample {
    std::vector<double> x_t;
    std::vector<double> v_target;
    double t = 0.0;
};

/// Interpolation state and exact target velocity at flow time t in [0, 1]
/// (noise at t=0, data at t=1):
///   rfm:  x_t = (1-t) x0 + t x1,                v = x1 - x0
///   cfm:  same x_t,                             v = (x1 - x_t) / (1 - t + eps)
///   trig: x_t = cos(pi t/2) x0 + sin(pi t/2) x1,
///         v = (pi/2)(-sin(pi t/2) x0 + cos(pi t/2) x1)
///   vp:   with diffusion time tau = 1 - t and caller-supplied noise xi:
///         x_t = alpha_bar(tau) x1 + sigma(tau) xi,
///         v = -1/2 beta(tau) (e^{-T(tau)} x_t - e^{-T(tau)/2} x1)
///             / (1 - e^{-T(tau)} + eps)
/// The vp target is the time-reversed probability-flow field with the
/// conditional (Tweedie) score substituted, expressed in noise-to-data time.
PathSample path_sample(const FlowSpec& spec, std::span<const double> x0,
                       std::span<const double> x1, double t,
                       std::span<const double> xi = {});

}  // namespace waveflow
