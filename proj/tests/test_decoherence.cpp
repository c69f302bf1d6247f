#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tfim/decoherence.hpp"
#include "tfim/exact_oracle.hpp"

using namespace tfim;
using std::numbers::pi;

namespace {

Schedule schedule_for(ScheduleKind kind, const ChainSpec& spec, double T) {
    if (kind == ScheduleKind::linear) return Schedule::linear(T);
    return Schedule::gap_adapted(kind == ScheduleKind::gap_adapted_1 ? 1 : 2, spec, T);
}

// Composite Simpson of a complex function on [a, b], m even.
template <class F>
cplx simpson(F f, double a, double b, int m) {
    const double h = (b - a) / m;
    cplx s = f(a) + f(b);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Brute force for the switched linear ramp: real segment minus the ray at g=0
// plus the ray at g=1, each by plain Simpson with a cumulative phase.
cplx switched_brute_force(double ka, double T, double omega, double lambda) {
    const cplx i{0, 1};
    auto M = [&](cplx g) { return excitation_matrix_element_unchecked(ka, g); };
    auto dE = [&](cplx g) { return 2.0 * single_particle_energy(ka, g); };
    const int m = 200000;
    // real segment, phase by cumulative trapezoid on a finer grid than the oscillation
    cplx core = 0, phi = 0, prev_rate = T * (dE(0.0) - omega);
    const double h = 1.0 / m;
    std::vector<cplx> vals(m + 1);
    vals[0] = T * M(0.0);
    for (int j = 1; j <= m; ++j) {
        const double g = j * h;
        const cplx rate = T * (dE(g) - omega);
        // Simpson on the sub-interval for the phase increment
        const cplx mid = T * (dE(g - 0.5 * h) - omega);
        phi += h / 6.0 * (prev_rate + 4.0 * mid + rate);
        prev_rate = rate;
        vals[j] = T * M(g) * std::exp(i * phi);
    }
    const cplx phi1 = phi;
    for (int j = 0; j <= m; ++j) core += (j == 0 || j == m ? 1.0 : (j % 2 ? 4.0 : 2.0)) * vals[j];
    core *= h / 3.0;

    auto ray = [&](double g0, cplx phi0) {
        const double Y = 60.0 / (T * (dE(g0).real() - omega));
        const double hy = Y / m;
        cplx p = phi0, acc = 0;
        cplx prev = i * T * (dE(g0) - omega);
        std::vector<cplx> v(m + 1);
        v[0] = i * T * M(g0) * std::exp(i * p);
        for (int j = 1; j <= m; ++j) {
            const cplx g(g0, j * hy);
            const cplx rate = i * T * (dE(g) - omega);
            const cplx mid = i * T * (dE(cplx(g0, (j - 0.5) * hy)) - omega);
            p += hy / 6.0 * (prev + 4.0 * mid + rate);
            prev = rate;
            v[j] = i * T * M(g) * std::exp(i * p);
        }
        for (int j = 0; j <= m; ++j) acc += (j == 0 || j == m ? 1.0 : (j % 2 ? 4.0 : 2.0)) * v[j];
        return acc * hy / 3.0;
    };
    return cplx(0, -lambda) * (core - ray(0.0, 0.0) + ray(1.0, phi1));
}

}  // namespace

TEST_CASE("amplitude is linear in lambda") {
    const ChainSpec spec(8);
    const auto s = Schedule::linear(100);
    for (double w : {-0.3, 0.2, 1.5}) {
        const cplx a1 = amplitude_numeric(spec, s, pi / 8, w, 1e-3);
        const cplx a2 = amplitude_numeric(spec, s, pi / 8, w, 2e-3);
        CHECK(std::abs(a2 - 2.0 * a1) <= 1e-15 * std::abs(a2));
    }
    CHECK(amplitude_numeric(spec, s, pi / 8, 1.0, 0.0) == cplx(0.0));
}

TEST_CASE("only positive grid momenta label a channel") {
    const ChainSpec spec(8);
    const auto s = Schedule::linear(50);
    CHECK_THROWS_AS(amplitude_numeric(spec, s, -pi / 8, 1.0, 1e-3), std::domain_error);
    CHECK_THROWS_AS(amplitude_numeric(spec, s, 0.3, 1.0, 1e-3), std::domain_error);
    CHECK_THROWS_AS(amplitude_numeric(spec, Schedule::step_wise(8, 50), pi / 8, 1.0, 1e-3), std::invalid_argument);
}

TEST_CASE("bound dominates the amplitude on random parameters") {
    std::mt19937 rng(20261015);
    std::uniform_real_distribution<double> uw(-1.0, 3.0), uT(10.0, 500.0);
    const int ns[] = {8, 16, 32};
    const ScheduleKind kinds[] = {ScheduleKind::linear, ScheduleKind::gap_adapted_1, ScheduleKind::gap_adapted_2};
    for (int trial = 0; trial < 100; ++trial) {
        const ChainSpec spec(ns[rng() % 3]);
        const auto ks = positive_momenta(spec);
        const double k = ks[rng() % ks.size()];
        const double w = uw(rng), T = uT(rng);
        const auto s = schedule_for(kinds[rng() % 3], spec, T);
        const double a = std::abs(amplitude_numeric(spec, s, k, w, 1e-3));
        const double b = amplitude_bound(spec, s, k, w, 1e-3);
        CHECK(a <= b * (1 + 1e-9));
    }
}

TEST_CASE("saddle point matches the numeric amplitude wherever it claims validity") {
    int valid = 0;
    for (auto kind : {ScheduleKind::linear, ScheduleKind::gap_adapted_1, ScheduleKind::gap_adapted_2})
        for (int n : {8, 16, 32, 64, 128}) {
            const ChainSpec spec(n);
            const double k = lowest_momentum(spec);
            const auto s = schedule_for(kind, spec, runtime_for_adiabaticity(kind, n, 0.1));
            for (double w : {0.3, 0.55, 0.85, 1.2, 1.5}) {
                if (w <= 4 * std::sin(k / 2)) continue;
                const auto sp = amplitude_saddle_point(spec, s, k, w, 1e-3);
                if (!sp.valid) continue;
                ++valid;
                const double r = std::abs(sp.value) / std::abs(amplitude_numeric(spec, s, k, w, 1e-3));
                CHECK(r >= 0.8);
                CHECK(r <= 1.25);
            }
        }
    CHECK(valid >= 10);
}

TEST_CASE("saddle positions against the small-omega expansion") {
    const ChainSpec spec(32);
    const double k = pi / 32, w = 0.5;
    const auto sp = amplitude_saddle_point(spec, Schedule::linear(1000), k, w, 1e-3);
    // exact root of 2 eps = omega
    CHECK(2 * single_particle_energy(k, sp.g_plus) == doctest::Approx(w).epsilon(1e-12));
    CHECK(2 * single_particle_energy(k, sp.g_minus) == doctest::Approx(w).epsilon(1e-12));
    CHECK(sp.g_offset_small_omega == doctest::Approx(std::sqrt(w * w - 4 * k * k) / 8).epsilon(1e-14));
    CHECK(std::abs((sp.g_plus - 0.5) - sp.g_offset_small_omega) < 1e-3);
    // stationary point on the boundary
    const auto edge = amplitude_saddle_point(spec, Schedule::linear(1000), k, 4.0, 1e-3);
    CHECK(edge.g_minus == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_FALSE(edge.valid);
    CHECK_THROWS_AS(amplitude_saddle_point(spec, Schedule::linear(1000), k, 0.15, 1e-3), std::domain_error);
}

TEST_CASE("first-order amplitude matches the explicit boson oracle") {
    const ChainSpec spec(4);
    for (double T : {80.0, 160.0})
        for (double k : {pi / 4, 3 * pi / 4})
            for (double w : {2.0, 3.0, 0.5, -1.0}) {
                const auto s = Schedule::linear(T);
                const auto o = oracle::boson_oracle_amplitude(spec, s, k, w, 1e-3);
                const double a = std::abs(amplitude_numeric(spec, s, k, w, 1e-3));
                CAPTURE(T);
                CAPTURE(k);
                CAPTURE(w);
                CHECK(o.magnitude == doctest::Approx(a).epsilon(0.05));
            }
}

TEST_CASE("switched endpoints: contour value equals brute-force segment plus rays") {
    const double ka = pi / 8;
    const ChainSpec spec(8);
    for (double w : {0.1, -0.3, 0.5}) {
        const double T = 5.0;
        ResponseOptions o;
        o.endpoints = EndpointTreatment::switched;
        o.rtol = 1e-9;
        const cplx a = amplitude_numeric(spec, Schedule::linear(T), ka, w, 1.0, o);
        const cplx ref = switched_brute_force(ka, T, w, 1.0);
        CAPTURE(w);
        CHECK(std::abs(a - ref) <= 1e-6 * std::abs(ref));
    }
}

TEST_CASE("switched sub-gap amplitude decays at the imaginary-saddle rate") {
    const ChainSpec spec(8);
    const double ka = pi / 8, w = 0.1;
    // rate by direct quadrature of Im Phi up to the complex saddle
    const double s = std::sin(ka / 2), c = std::cos(ka / 2);
    const double yc = std::sqrt(s * s - w * w / 16) / (2 * c);
    const double R = simpson([&](double y) { return cplx(4 * std::sqrt(std::max(0.0, s * s - 4 * c * c * y * y)) - w); },
                             0.0, yc, 20000)
                         .real();
    CHECK(imaginary_saddle_rate(ka, w) == doctest::Approx(R).epsilon(1e-6));
    ResponseOptions o;
    o.endpoints = EndpointTreatment::switched;
    std::vector<double> T, y;
    for (double t : {100.0, 200.0, 300.0, 400.0}) {
        T.push_back(t);
        // the complex saddle carries a 1/sqrt(T) prefactor
        y.push_back(std::log(std::abs(amplitude_numeric(spec, Schedule::linear(t), ka, w, 1e-3, o))) + 0.5 * std::log(t));
    }
    double mt = 0, my = 0;
    for (int i = 0; i < 4; ++i) mt += T[i] / 4, my += y[i] / 4;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 4; ++i) sxy += (T[i] - mt) * (y[i] - my), sxx += (T[i] - mt) * (T[i] - mt);
    CHECK(sxy / sxx == doctest::Approx(-R).epsilon(0.02));
    // negative frequencies sit further below the gap
    const double neg = std::abs(amplitude_numeric(spec, Schedule::linear(200), ka, -0.3, 1e-3, o));
    CHECK(neg < 0.1 * amplitude_bound(spec, Schedule::linear(200), ka, 0.1, 1e-3));
}

TEST_CASE("suppressed estimate") {
    const ChainSpec spec(8);
    const double ka = pi / 8;
    const auto e1 = amplitude_suppressed_estimate(spec, Schedule::linear(100), ka, 0.1, 1e-3);
    const auto e2 = amplitude_suppressed_estimate(spec, Schedule::linear(200), ka, 0.1, 1e-3);
    REQUIRE(e1.derived);
    CHECK(std::log(e1.value) - std::log(e2.value) == doctest::Approx(100 * ka * ka / 2).epsilon(1e-12));
    const auto e3 = amplitude_suppressed_estimate(spec, Schedule::gap_adapted(1, spec, 100), ka, 0.1, 1e-3);
    CHECK_FALSE(e3.derived);
    CHECK_THROWS_AS(amplitude_suppressed_estimate(spec, Schedule::linear(100), ka, 1.0, 1e-3), std::domain_error);
}

TEST_CASE("scaling fit") {
    std::vector<double> x, y;
    for (double v : {8.0, 16.0, 32.0, 64.0, 128.0}) {
        x.push_back(v);
        y.push_back(3.0 / v);
    }
    const auto f = scaling_fit(x, y);
    CHECK(f.exponent == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(f.stderr_ < 1e-3);
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.points == 5);
    CHECK_THROWS_AS(scaling_fit({1, 2, 3}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(scaling_fit({1, 2, 3, 4}, {1, -2, 3, 4}), std::invalid_argument);
    // noisy data gets a nonzero error bar
    const auto g = scaling_fit({1, 2, 3, 4, 5}, {1, 2.2, 2.9, 4.3, 4.8});
    CHECK(g.stderr_ > 0.01);
}

TEST_CASE("bath spectra") {
    const CouplingConstant lam(1e-3);
    CHECK_THROWS_AS(BathSpectrum::ohmic(0.0, lam), std::invalid_argument);
    CHECK_THROWS_AS(BathSpectrum::flat(1.0, 0.5, lam), std::invalid_argument);
    CHECK_THROWS_AS(BathSpectrum::monochromatic(0.3, lam, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(BathSpectrum::monochromatic(NAN, lam), std::invalid_argument);

    const auto oh = BathSpectrum::ohmic(0.5, lam);
    const double kept = simpson([&](double w) { return cplx(oh.density(w)); }, 0.0, 2.0, 4000).real();
    CHECK(kept + oh.truncated_weight() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(oh.density(-0.1) == 0.0);
    CHECK_FALSE(oh.warnings().empty());  // 9% of the weight lies beyond omega = 2
    CHECK(BathSpectrum::ohmic(0.1, lam).warnings().empty());
    CHECK_FALSE(BathSpectrum::monochromatic(2.5, lam).warnings().empty());
    CHECK(BathSpectrum::flat(0.2, 0.6, lam).density(0.4) == doctest::Approx(2.5));

    for (const auto& b : {oh, BathSpectrum::flat(0.2, 0.6, lam, 2.0), BathSpectrum::monochromatic(0.3, lam)}) {
        const auto back = BathSpectrum::from_json(b.to_json());
        CHECK(back.to_json() == b.to_json());
    }
    CHECK_THROWS_AS(parse_bath_kind("thermal"), std::invalid_argument);
}

TEST_CASE("total excitation probability") {
    const ChainSpec spec(8);
    const auto s = Schedule::linear(runtime_for_adiabaticity(ScheduleKind::linear, 8, 0.1));
    const auto p1 = total_excitation_probability(spec, s, BathSpectrum::ohmic(0.5, CouplingConstant(1e-3)));
    const auto p2 = total_excitation_probability(spec, s, BathSpectrum::ohmic(0.5, CouplingConstant(2e-3)));
    CHECK(p1.incoherent > 0);
    CHECK(p2.incoherent == doctest::Approx(4 * p1.incoherent).epsilon(1e-9));
    CHECK(p1.channels.size() == 4);
    CHECK_FALSE(p1.breakdown);

    // worker count does not change the numbers
    TotalProbabilityOptions par;
    par.workers = 3;
    const auto p3 = total_excitation_probability(spec, s, BathSpectrum::ohmic(0.5, CouplingConstant(1e-3)), par);
    CHECK(p3.incoherent == p1.incoherent);
    CHECK(p3.coherent == p1.coherent);

    // cold monochromatic bath below every pair gap, smooth switching: exponentially small
    TotalProbabilityOptions sw;
    sw.response.endpoints = EndpointTreatment::switched;
    const auto cold = total_excitation_probability(spec, Schedule::linear(400),
                                                   BathSpectrum::monochromatic(0.1, CouplingConstant(1e-3)), sw);
    CHECK(cold.incoherent < 1e-20);
    CHECK(cold.coherent == doctest::Approx(cold.incoherent).epsilon(1e-12));

    // a strong coupling reports breakdown instead of clipping
    const auto strong = total_excitation_probability(spec, Schedule::linear(400),
                                                     BathSpectrum::monochromatic(1.5, CouplingConstant(5.0)));
    CHECK(strong.breakdown);
    CHECK(strong.incoherent > 1.0);
}

TEST_CASE("table 1 cell bookkeeping") {
    Table1Cell c;
    c.predicted_n = 1.0;
    c.predicted_omega = -1.0;
    c.n_fit.exponent = 1.15;
    CHECK_FALSE(c.pass(0.2));  // omega fit missing
    c.omega_fit = ScalingFit{};
    c.omega_fit->exponent = -0.85;
    CHECK(c.pass(0.2));
    c.omega_fit->exponent = -0.75;
    CHECK_FALSE(c.pass(0.2));

    const auto cell = table1_cell(ScheduleKind::linear, Table1Column::saddle);
    CHECK(cell.n_points.size() == 5);
    CHECK(cell.omega_points.size() == 7);
    CHECK(cell.n_fit.exponent == doctest::Approx(1.0).epsilon(0.2));
    CHECK_THROWS_AS(table1_cell(ScheduleKind::step_wise, Table1Column::bound), std::invalid_argument);
}
