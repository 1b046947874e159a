#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "waveflow/errors.hpp"
#include "waveflow/flows.hpp"
#include "waveflow/rng.hpp"

using namespace waveflow;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    return rng::normal_vec(rng::derive(seed, "flow-test"), n);
}

}  // namespace

TEST_SUITE("flows") {

TEST_CASE("rfm midpoint: x_t = w/2, v = w") {
    const std::vector<double> x0(4, 0.0);
    const std::vector<double> x1 = {1.0, -2.0, 3.0, 0.5};
    FlowSpec spec;
    spec.kind = FlowKind::rfm;
    const PathSample ps = path_sample(spec, x0, x1, 0.5);
    for (std::size_t i = 0; i < x1.size(); ++i) {
        CHECK(ps.x_t[i] == doctest::Approx(0.5 * x1[i]));
        CHECK(ps.v_target[i] == doctest::Approx(x1[i]));
    }
}

TEST_CASE("trig endpoint t=1: x_t = x1, v = -(pi/2) x0") {
    const std::vector<double> x0 = {2.0, -1.0};
    const std::vector<double> x1 = {0.5, 4.0};
    FlowSpec spec;
    spec.kind = FlowKind::trig;
    const PathSample ps = path_sample(spec, x0, x1, 1.0);
    for (std::size_t i = 0; i < x1.size(); ++i) {
        CHECK(ps.x_t[i] == doctest::Approx(x1[i]).epsilon(1e-12));
        CHECK(ps.v_target[i] == doctest::Approx(-M_PI / 2.0 * x0[i]).epsilon(1e-12));
    }
}

TEST_CASE("cfm scalar example: v ~ 1 at t = 0.5") {
    FlowSpec spec;
    spec.kind = FlowKind::cfm;
    const std::vector<double> x0 = {0.0}, x1 = {1.0};
    const PathSample ps = path_sample(spec, x0, x1, 0.5);
    CHECK(ps.x_t[0] == doctest::Approx(0.5));
    CHECK(ps.v_target[0] == doctest::Approx(0.5 / (0.5 + 1e-8)));
}

TEST_CASE("cfm target equals rfm target for t <= 0.999") {
    const auto x0 = random_vec(32, 1);
    const auto x1 = random_vec(32, 2);
    FlowSpec rfm, cfm;
    rfm.kind = FlowKind::rfm;
    cfm.kind = FlowKind::cfm;
    for (double t : {0.0, 0.1, 0.37, 0.5, 0.73, 0.9, 0.99, 0.999}) {
        const PathSample a = path_sample(rfm, x0, x1, t);
        const PathSample b = path_sample(cfm, x0, x1, t);
        for (std::size_t i = 0; i < x0.size(); ++i)
            CHECK(oracles::rel_err(a.v_target[i], b.v_target[i]) < 1e-5);
    }
}

TEST_CASE("rfm and trig targets match central finite differences of the path") {
    const auto x0 = random_vec(16, 3);
    const auto x1 = random_vec(16, 4);
    const double delta = 1e-4;
    for (FlowKind kind : {FlowKind::rfm, FlowKind::trig}) {
        FlowSpec spec;
        spec.kind = kind;
        for (int k = 0; k < 20; ++k) {
            const double t = delta + (1.0 - 2.0 * delta) * rng::uniform(77, k);
            const PathSample plus = path_sample(spec, x0, x1, t + delta);
            const PathSample minus = path_sample(spec, x0, x1, t - delta);
            const PathSample mid = path_sample(spec, x0, x1, t);
            for (std::size_t i = 0; i < x0.size(); ++i) {
                const double fd = (plus.x_t[i] - minus.x_t[i]) / (2.0 * delta);
                CHECK(oracles::rel_err(fd, mid.v_target[i]) < 1e-5);
            }
        }
    }
}

TEST_CASE("trig coefficients satisfy cos^2 + sin^2 = 1") {
    for (int k = 0; k <= 100; ++k) {
        const double t = k / 100.0;
        const double c = std::cos(M_PI / 2.0 * t), s = std::sin(M_PI / 2.0 * t);
        CHECK(std::abs(c * c + s * s - 1.0) < 1e-12);
    }
}

TEST_CASE("vp schedule closed forms match adaptive quadrature of beta") {
    const VPSchedule sched{0.1, 20.0};
    CHECK(vp_T(sched, 0.0) == 0.0);
    CHECK(vp_alpha_bar(sched, 0.0) == 1.0);
    CHECK(vp_sigma(sched, 0.0) == 0.0);
    CHECK(vp_T(sched, 1.0) == doctest::Approx(10.05).epsilon(1e-12));
    CHECK(vp_T(sched, 0.5) == doctest::Approx(2.5375).epsilon(1e-12));
    CHECK(vp_alpha_bar(sched, 1.0) == doctest::Approx(std::exp(-5.025)).epsilon(1e-12));

    const auto beta = [&](double s) { return sched.beta(s); };
    for (int k = 0; k <= 50; ++k) {
        const double t = k / 50.0;
        const double T_quad = oracles::adaptive_simpson(beta, 0.0, t);
        CHECK(std::abs(vp_T(sched, t) - T_quad) < 1e-8);
        CHECK(std::abs(vp_alpha_bar(sched, t) - std::exp(-0.5 * T_quad)) < 1e-8);
        const double a = vp_alpha_bar(sched, t);
        CHECK(std::abs(vp_sigma(sched, t) - std::sqrt(1.0 - a * a)) < 1e-8);
        CHECK(std::abs(a * a + vp_sigma(sched, t) * vp_sigma(sched, t) - 1.0) < 1e-12);
    }
}

TEST_CASE("vp target matches the score-substituted probability-flow field") {
    // independent route: v_PF(x, tau) = -1/2 beta x - 1/2 beta * score with the
    // conditional score -(x_t - abar x1)/sigma^2, evaluated in diffusion time;
    // generation runs the reverse direction, so the trainable target is -v_PF.
    const auto x1 = random_vec(24, 5);
    const auto xi = random_vec(24, 6);
    FlowSpec spec;
    spec.kind = FlowKind::vp;
    const VPSchedule sched = spec.schedule();
    for (double tau : {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95}) {
        const double t_flow = 1.0 - tau;
        const PathSample ps = path_sample(spec, std::vector<double>(24, 0.0), x1, t_flow, xi);
        const double beta = sched.beta(tau);
        const double abar = vp_alpha_bar(sched, tau);
        const double sig2 = 1.0 - abar * abar;
        for (std::size_t i = 0; i < x1.size(); ++i) {
            const double score = -(ps.x_t[i] - abar * x1[i]) / sig2;
            const double v_pf = -0.5 * beta * ps.x_t[i] - 0.5 * beta * score;
            CHECK(oracles::rel_err(ps.v_target[i], -v_pf) < 1e-6);
        }
    }
}

TEST_CASE("vp with xi = 0 follows the noise-free signal trajectory") {
    // zero noise means zero conditional score, so the magnitude reduces to
    // 1/2 beta(tau) |x_t|; the sign is positive in noise-to-data time
    const std::vector<double> x1 = {1.0, -2.0};
    const std::vector<double> xi = {0.0, 0.0};
    FlowSpec spec;
    spec.kind = FlowKind::vp;
    const VPSchedule sched = spec.schedule();
    const double t_flow = 0.5;
    const double tau = 0.5;
    const PathSample ps = path_sample(spec, std::vector<double>(2, 0.0), x1, t_flow, xi);
    const double beta = sched.beta(tau);
    for (std::size_t i = 0; i < x1.size(); ++i) {
        CHECK(ps.x_t[i] == doctest::Approx(vp_alpha_bar(sched, tau) * x1[i]));
        CHECK(oracles::rel_err(ps.v_target[i], 0.5 * beta * ps.x_t[i]) < 1e-6);
    }
}

TEST_CASE("shape and domain errors") {
    FlowSpec spec;
    spec.kind = FlowKind::rfm;
    const std::vector<double> a(4, 0.0), b(5, 0.0);
    CHECK_THROWS_AS(path_sample(spec, a, b, 0.5), ShapeMismatch);
    const std::vector<double> c(4, 0.0);
    CHECK_THROWS_AS(path_sample(spec, a, c, 1.5), DomainError);
    CHECK_THROWS_AS(path_sample(spec, a, c, -0.1), DomainError);
    FlowSpec vp;
    vp.kind = FlowKind::vp;
    CHECK_THROWS_AS(path_sample(vp, a, c, 0.5), ShapeMismatch);  // missing xi
}

}  // TEST_SUITE
