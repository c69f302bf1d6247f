#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tfim/quadrature.hpp"

using namespace tfim::quad;
using std::numbers::pi;

TEST_CASE("Gauss-Legendre is exact to degree 2n-1") {
    for (int n : {1, 2, 5, 12}) {
        const auto& r = gauss_legendre(n);
        REQUIRE(r.nodes.size() == static_cast<std::size_t>(n));
        for (int p = 0; p < 2 * n; ++p) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
            const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
            CHECK(s == doctest::Approx(exact).epsilon(1e-14).scale(1));
        }
    }
}

TEST_CASE("smooth integration") {
    CHECK(integrate_smooth([](double x) { return std::exp(x); }, 0, 1) ==
          doctest::Approx(std::exp(1.0) - 1).epsilon(1e-14));
    // kink at a breakpoint
    CHECK(integrate_smooth([](double x) { return std::abs(x - 0.3); }, 0, 1, 1e-13, {0.3}) ==
          doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-14));
}

TEST_CASE("Chebyshev panel interpolates and integrates") {
    const double a = 0.2, b = 1.7;
    const auto x = ChebyshevPanel::nodes(a, b, 24);
    CHECK(x.front() == doctest::Approx(b));
    CHECK(x.back() == doctest::Approx(a));
    std::vector<cplx> v;
    for (double xi : x) v.push_back({std::sin(xi), std::cos(2 * xi)});
    const ChebyshevPanel p(a, b, v);
    for (double t : {0.2, 0.5, 1.1, 1.7}) {
        CHECK(std::abs(p(t) - cplx(std::sin(t), std::cos(2 * t))) < 1e-13);
        const cplx ref(std::cos(a) - std::cos(t), 0.5 * (std::sin(2 * t) - std::sin(2 * a)));
        CHECK(std::abs(p.integral_to(t) - ref) < 1e-13);
    }
}

TEST_CASE("oscillatory quadrature: linear phase") {
    for (double w : {3.0, 300.0, 3e4}) {
        OscillatoryIntegrand in;
        in.amplitude = [](double) { return cplx(1.0); };
        in.phase_rate = [w](double) { return cplx(w); };
        in.smoothness = [](double) { return 0.25; };
        OscillatoryOptions opt;
        opt.rtol = 1e-10;
        const auto r = integrate_oscillatory(in, 0, 1, 0.0, opt);
        const cplx i{0, 1};
        const cplx exact = (std::exp(i * w) - 1.0) / (i * w);
        CHECK(std::abs(r.value - exact) <= 1e-9 * std::abs(exact));
        CHECK(std::abs(r.end_phase - cplx(w)) < 1e-9 * w);
        CHECK(r.oscillations == doctest::Approx(w / (2 * pi)).epsilon(1e-9));
        if (w > 1e3) CHECK(r.levin_panels > 0);
    }
}

TEST_CASE("oscillatory quadrature: chirp with a stationary endpoint") {
    // int_0^1 2x exp(i L x^2) dx = (exp(iL) - 1) / (iL)
    const double L = 2000.0;
    OscillatoryIntegrand in;
    in.amplitude = [](double x) { return cplx(2 * x); };
    in.phase_rate = [L](double x) { return cplx(2 * L * x); };
    in.smoothness = [](double) { return 0.2; };
    OscillatoryOptions opt;
    opt.rtol = 1e-9;
    const auto r = integrate_oscillatory(in, 0, 1, 0.0, opt);
    const cplx i{0, 1};
    const cplx exact = (std::exp(i * L) - 1.0) / (i * L);
    CHECK(std::abs(r.value - exact) <= 1e-8 * std::abs(exact));
}

TEST_CASE("oscillatory quadrature: decaying complex phase") {
    // int_0^Y exp(i(w + i d) y) dy
    const cplx rate(40.0, 5.0);
    OscillatoryIntegrand in;
    in.amplitude = [](double) { return cplx(1.0); };
    in.phase_rate = [rate](double) { return rate; };
    in.smoothness = [](double) { return 1.0; };
    OscillatoryOptions opt;
    opt.rtol = 1e-11;
    const double Y = 12.0;
    const auto r = integrate_oscillatory(in, 0, Y, 0.0, opt);
    const cplx i{0, 1};
    const cplx exact = (std::exp(i * rate * Y) - 1.0) / (i * rate);
    CHECK(std::abs(r.value - exact) <= 1e-10 * std::abs(exact));
}

TEST_CASE("oscillatory quadrature reports non-convergence") {
    OscillatoryIntegrand in;
    in.amplitude = [](double x) { return cplx(std::abs(std::sin(1e4 * x))); };
    in.phase_rate = [](double) { return cplx(0.0); };
    OscillatoryOptions opt;
    opt.rtol = 1e-14;
    opt.max_panels = 50;
    CHECK_THROWS_AS(integrate_oscillatory(in, 0, 1, 0.0, opt), QuadratureError);
}

TEST_CASE("phase integration") {
    const auto ph = integrate_phase([](double x) { return cplx(std::cos(x)); }, [](double) { return 0.5; }, 0, 3);
    CHECK(std::abs(ph - cplx(std::sin(3.0))) < 1e-14);
}
