#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tfim/chain_model.hpp"
#include "tfim/schedules.hpp"

using namespace tfim;
using std::numbers::pi;

TEST_CASE("schedule kind names") {
    for (auto k : {ScheduleKind::linear, ScheduleKind::gap_adapted_1, ScheduleKind::gap_adapted_2,
                   ScheduleKind::step_wise})
        CHECK(parse_schedule_kind(to_string(k)) == k);
    CHECK_THROWS(parse_schedule_kind("quadratic"));
}

TEST_CASE("linear schedule") {
    const auto s = Schedule::linear(50.0);
    CHECK(s.g_of_t(0) == 0.0);
    CHECK(s.g_of_t(50) == 1.0);
    CHECK(s.g_of_t(12.5) == doctest::Approx(0.25));
    CHECK(s.g_dot(3) == doctest::Approx(0.02));
    CHECK(s.t_of_g(0.4) == doctest::Approx(20));
    CHECK_THROWS_AS(s.g_of_t(-1), std::domain_error);
    CHECK_THROWS_AS(s.g_of_t(50.001), std::domain_error);
    CHECK_THROWS(Schedule::linear(0.0));
}

TEST_CASE("gap-adapted schedules follow g_dot = c DeltaE^p") {
    const ChainSpec spec(16);
    for (int p : {1, 2}) {
        CAPTURE(p);
        const double T = 300.0;
        const auto s = Schedule::gap_adapted(p, spec, T);
        CHECK(s.power() == p);
        CHECK(s.g_of_t(0) == 0.0);
        CHECK(s.g_of_t(T) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.rate_constant() == doctest::Approx(inverse_gap_integral(spec, p) / T).epsilon(1e-12));
        for (double t : {1.0, 37.0, 150.0, 222.2, 299.0}) {
            const double g = s.g_of_t(t);
            const double h = 1e-3;
            const double fd = (s.g_of_t(t + h) - s.g_of_t(t - h)) / (2 * h);
            CHECK(fd == doctest::Approx(s.rate_constant() * std::pow(fundamental_gap(spec, g), p)).epsilon(1e-5));
            CHECK(s.g_dot(t) == doctest::Approx(fd).epsilon(1e-5));
            CHECK(s.t_of_g(g) == doctest::Approx(t).epsilon(1e-8));
        }
        // symmetric sweep: half time at g = 1/2
        CHECK(s.t_of_g(0.5) == doctest::Approx(T / 2).epsilon(1e-9));
    }
}

TEST_CASE("schedule JSON round trip and validation") {
    const ChainSpec spec(8);
    const auto s = Schedule::gap_adapted(2, spec, 40.0, 1024);
    const auto r = Schedule::from_json(s.to_json());
    CHECK(r.kind() == s.kind());
    CHECK(r.total_time() == s.total_time());
    CHECK(r.g_of_t(13.0) == s.g_of_t(13.0));
    CHECK_THROWS(Schedule::from_json({{"kind", "linear"}, {"T", -1.0}}));
    CHECK_THROWS(Schedule::from_json({{"kind", "gap-adapted-1"}, {"T", 10.0}}));  // needs n
    CHECK_THROWS(Schedule::from_json({{"kind", "bogus"}, {"T", 10.0}}));
}

TEST_CASE("adiabatic runtime reaches the requested ratio") {
    for (auto kind : {ScheduleKind::linear, ScheduleKind::gap_adapted_1, ScheduleKind::gap_adapted_2}) {
        for (int n : {8, 32}) {
            const ChainSpec spec(n);
            const double T = runtime_for_adiabaticity(kind, n, 0.1);
            const Schedule s = kind == ScheduleKind::linear ? Schedule::linear(T)
                               : Schedule::gap_adapted(kind == ScheduleKind::gap_adapted_1 ? 1 : 2, spec, T);
            const double ka = pi / n;
            double worst = 0;
            for (int i = 0; i <= 2000; ++i) {
                const double g = i / 2000.0;
                const double eps = single_particle_energy(ka, g);
                worst = std::max(worst, s.g_dot_at(g) * std::sin(ka) / std::pow(eps, 3));
            }
            CHECK(worst == doctest::Approx(0.1).epsilon(1e-4));
        }
    }
    CHECK_THROWS(runtime_for_adiabaticity(ScheduleKind::step_wise, 8, 0.1));
    CHECK_THROWS(runtime_for_adiabaticity(ScheduleKind::linear, 8, 0.0));
}

TEST_CASE("adiabatic runtime scaling with n") {
    auto slope = [](ScheduleKind k) {
        const double a = runtime_for_adiabaticity(k, 64, 0.1), b = runtime_for_adiabaticity(k, 128, 0.1);
        return std::log(b / a) / std::log(2.0);
    };
    CHECK(slope(ScheduleKind::linear) == doctest::Approx(2.0).epsilon(0.02));
    CHECK(slope(ScheduleKind::gap_adapted_2) == doctest::Approx(1.0).epsilon(0.02));
    const double s1 = slope(ScheduleKind::gap_adapted_1);  // n ln n
    CHECK(s1 > 1.05);
    CHECK(s1 < 1.4);
}

TEST_CASE("step-wise path weights") {
    const auto w0 = stepwise_hamiltonian_weights({5, 1, 0.0});
    CHECK(w0.transverse == std::vector<double>(5, 1.0));
    CHECK(w0.bonds == std::vector<double>(4, 0.0));
    const auto w1 = stepwise_hamiltonian_weights({5, 1, 1.0});
    CHECK(w1.transverse == std::vector<double>{0, 0, 1, 1, 1});
    CHECK(w1.bonds == std::vector<double>{1, 0, 0, 0});
    const auto w3 = stepwise_hamiltonian_weights({5, 3, 0.25});
    CHECK(w3.transverse == std::vector<double>{0, 0, 0, 0.75, 1});
    CHECK(w3.bonds == std::vector<double>{1, 1, 0.25, 0});
    const auto end = stepwise_hamiltonian_weights({5, 4, 1.0});
    CHECK(end.transverse == std::vector<double>(5, 0.0));
    CHECK(end.bonds == std::vector<double>(4, 1.0));
    CHECK_THROWS_AS(stepwise_hamiltonian_weights({5, 0, 0.5}), std::out_of_range);
    CHECK_THROWS_AS(stepwise_hamiltonian_weights({5, 5, 0.5}), std::out_of_range);
    CHECK_THROWS_AS(stepwise_hamiltonian_weights({5, 2, 1.5}), std::out_of_range);

    const auto s = Schedule::step_wise(5, 40.0);
    const auto pos = stepwise_position(s, 25.0);
    CHECK(pos.step == 3);
    CHECK(pos.s == doctest::Approx(0.5));
    CHECK(uniform_weights(4, 0.25).bonds.size() == 4);
}
