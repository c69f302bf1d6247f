#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "tfim/dynamics.hpp"

using namespace tfim;
using std::numbers::pi;

namespace {

// Independent reference: classical RK4 with a fixed tiny step on the linear ramp.
std::pair<cplx, cplx> rk4_linear(double ka, double T, double t_end, int steps) {
    const cplx i{0, 1};
    const double c2 = std::pow(std::cos(ka / 2), 2), sk = std::sin(ka);
    auto rhs = [&](double t, cplx u, cplx v) {
        const double g = t / T, al = 2 - 4 * g * c2, be = 2 * g * sk;
        return std::pair<cplx, cplx>{-i * (-al * u + be * v), -i * (al * v + be * u)};
    };
    cplx u = 1, v = 0;
    const double h = t_end / steps;
    for (int s = 0; s < steps; ++s) {
        const double t = s * h;
        auto [a1, b1] = rhs(t, u, v);
        auto [a2, b2] = rhs(t + h / 2, u + h / 2 * a1, v + h / 2 * b1);
        auto [a3, b3] = rhs(t + h / 2, u + h / 2 * a2, v + h / 2 * b2);
        auto [a4, b4] = rhs(t + h, u + h * a3, v + h * b3);
        u += h / 6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    return {u, v};
}

}  // namespace

TEST_CASE("ground branch is a unit eigenvector with eigenvalue -eps") {
    for (double ka : {0.1, 1.0, 3.0})
        for (double g : {0.0, 0.3, 0.5, 0.9, 1.0}) {
            const auto gs = ground_branch(ka, g);
            const double c2 = std::pow(std::cos(ka / 2), 2);
            const double al = 2 - 4 * g * c2, be = 2 * g * std::sin(ka), eps = single_particle_energy(ka, g);
            CHECK(std::norm(gs.u) + std::norm(gs.v) == doctest::Approx(1.0).epsilon(1e-15));
            // [[-al, be], [be, al]] (u, v) = -eps (u, v)
            CHECK(std::abs(-al * gs.u + be * gs.v + eps * gs.u) < 1e-13);
            CHECK(std::abs(be * gs.u + al * gs.v + eps * gs.v) < 1e-13);
        }
}

TEST_CASE("Magnus integrator agrees with an independent RK4 reference") {
    const ChainSpec spec(8);
    const double T = 20.0;
    const auto sched = Schedule::linear(T);
    IntegrationOptions opt;
    opt.rtol = 1e-12;
    for (double k : positive_momenta(spec)) {
        const auto states = integrate_mode(spec, k, sched, {7.3, T}, opt);
        const auto [u, v] = rk4_linear(k, T, T, 200000);
        CHECK(std::abs(states[1].u - u) < 1e-8);
        CHECK(std::abs(states[1].v - v) < 1e-8);
        CHECK(std::abs(1 - std::norm(states[1].u) - std::norm(states[1].v)) < 1e-10);
    }
}

TEST_CASE("sudden limit leaves the initial state: p_k = cos^2(ka/2) at g = 1") {
    const ChainSpec spec(8);
    const auto sched = Schedule::linear(1e-6);
    const auto traj = integrate_modes(spec, sched, {1e-6});
    const auto p = excitation_probability(traj.state(0), spec, 1.0);
    const auto ks = positive_momenta(spec);
    for (std::size_t i = 0; i < ks.size(); ++i) CHECK(p[i] == doctest::Approx(std::pow(std::cos(ks[i] / 2), 2)).epsilon(1e-9));
}

TEST_CASE("slow sweep follows the adiabatic solution including its phase") {
    const ChainSpec spec(8);
    for (auto make : {+[](const ChainSpec&) { return Schedule::linear(4000.0); },
                      +[](const ChainSpec& s) { return Schedule::gap_adapted(2, s, 1500.0); }}) {
        const auto sched = make(spec);
        const double T = sched.total_time();
        const std::vector<double> times{0.25 * T, 0.5 * T, T};
        const auto traj = integrate_modes(spec, sched, times);
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            for (std::size_t m = 0; m < traj.momenta().size(); ++m) {
                const auto& s = traj.get(ti, m);
                const auto ad = adiabatic_solution(spec, s.k, sched, times[ti]);
                const cplx overlap = std::conj(ad.u) * s.u + std::conj(ad.v) * s.v;
                CHECK(std::abs(overlap - 1.0) < 0.01);
                CHECK(s.theta == doctest::Approx(dynamical_phase(spec, s.k, sched, times[ti])).epsilon(1e-7));
            }
        }
        CHECK(traj.max_norm_drift() < 1e-10);
    }
}

TEST_CASE("excitation probability decreases with slower sweeps") {
    const ChainSpec spec(8);
    double prev = 1.0;
    for (double T : {2.0, 20.0, 200.0}) {
        const auto traj = integrate_modes(spec, Schedule::linear(T), {T});
        const double p0 = excitation_probability(traj.state(0), spec, 1.0)[0];
        CHECK(p0 < prev);
        prev = p0;
    }
}

TEST_CASE("worker count does not change results") {
    const ChainSpec spec(12);
    const auto sched = Schedule::gap_adapted(1, spec, 80.0);
    IntegrationOptions one, three;
    three.workers = 3;
    const auto a = integrate_modes(spec, sched, {10.0, 80.0}, one);
    const auto b = integrate_modes(spec, sched, {10.0, 80.0}, three);
    for (std::size_t m = 0; m < a.momenta().size(); ++m) {
        CHECK(a.get(1, m).u == b.get(1, m).u);
        CHECK(a.get(1, m).v == b.get(1, m).v);
    }
}

TEST_CASE("mode integration rejects bad input") {
    const ChainSpec spec(8);
    CHECK_THROWS(integrate_mode(spec, 0.1, Schedule::linear(1.0), {0.5}));
    CHECK_THROWS(integrate_mode(spec, pi / 8, Schedule::linear(1.0), {0.5, 0.2}));
    CHECK_THROWS(integrate_mode(spec, pi / 8, Schedule::step_wise(8, 1.0), {0.5}));
}

TEST_CASE("trajectory CSV") {
    const ChainSpec spec(4);
    const auto sched = Schedule::linear(3.0);
    const auto traj = integrate_modes(spec, sched, {0.0, 3.0});
    std::ostringstream os;
    write_trajectory_csv(os, traj, spec, sched);
    const auto s = os.str();
    CHECK(s.rfind("t,g,k,re_u,im_u,re_v,im_v,p_k\r\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 2 * 2);
}
