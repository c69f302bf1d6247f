#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tfim/chain_model.hpp"

using namespace tfim;
using std::numbers::pi;

TEST_CASE("chain spec validation") {
    CHECK_THROWS_AS(ChainSpec(1), std::invalid_argument);
    CHECK_THROWS_AS(ChainSpec(7), std::invalid_argument);
    CHECK_THROWS_AS(ChainSpec(8, 0.0), std::invalid_argument);
    CHECK_NOTHROW(ChainSpec(8, 0.5));
}

TEST_CASE("momentum grid is antiperiodic and symmetric") {
    const ChainSpec spec(8, 2.0);
    const auto ks = momentum_grid(spec);
    REQUIRE(ks.size() == 8);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CHECK(ks[i] == doctest::Approx(-ks[ks.size() - 1 - i]).epsilon(1e-15));
        CHECK(spec.on_grid(ks[i]));
    }
    CHECK(ks.front() * spec.a() == doctest::Approx(-7 * pi / 8));
    CHECK(lowest_momentum(spec) == doctest::Approx(pi / 16));
    CHECK_FALSE(spec.on_grid(0.0));
    CHECK(positive_momenta(spec).size() == 4);
}

TEST_CASE("single particle energy closed forms") {
    // critical point: 2 sin(ka/2); endpoints: 2
    CHECK(single_particle_energy(pi / 4, 0.5) == doctest::Approx(0.76536686473017956).epsilon(1e-15));
    CHECK(single_particle_energy(0.3, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(single_particle_energy(0.3, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    // no cancellation near the critical point
    const double ka = 1e-6;
    CHECK(single_particle_energy(ka, 0.5) == doctest::Approx(2 * std::sin(ka / 2)).epsilon(1e-14));
}

TEST_CASE("energy equals the textbook radicand and is symmetric about g = 1/2") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double ka = pi * U(rng), g = U(rng);
        const double c2 = std::pow(std::cos(ka / 2), 2);
        const double ref = 2 * std::sqrt(1 - 4 * g * (1 - g) * c2);
        CHECK(single_particle_energy(ka, g) == doctest::Approx(ref).epsilon(1e-12));
        CHECK(single_particle_energy(ka, g) == doctest::Approx(single_particle_energy(ka, 1 - g)).epsilon(1e-14));
        // eps^2 = alpha^2 + beta^2
        const double alpha = 2 - 4 * g * c2, beta = 2 * g * std::sin(ka);
        CHECK(std::pow(single_particle_energy(ka, g), 2) ==
              doctest::Approx(alpha * alpha + beta * beta).epsilon(1e-12));
    }
}

TEST_CASE("mode coefficients check inputs") {
    const ChainSpec spec(8);
    CHECK_THROWS_AS(mode_coefficients(spec, 0.1, 0.5), std::domain_error);
    CHECK_THROWS_AS(mode_coefficients(spec, pi / 8, 1.5), std::domain_error);
    const auto m = mode_coefficients(spec, 3 * pi / 8, 0.25);
    CHECK(m.alpha == doctest::Approx(2 - std::pow(std::cos(3 * pi / 16), 2)));
    CHECK(m.beta == doctest::Approx(0.5 * std::sin(3 * pi / 8)));
}

TEST_CASE("ground energy and gap against dense diagonalisation") {
    // frozen from an independent dense diagonalisation of the spin chain (even sector)
    CHECK(ground_energy(ChainSpec(4), 0.3) == doctest::Approx(-2.9369327514034729).epsilon(1e-13));
    CHECK(ground_energy(ChainSpec(6), 0.5) == doctest::Approx(-3.8637033051564504).epsilon(1e-13));
    CHECK(ground_energy(ChainSpec(8), 0.8) == doctest::Approx(-6.500399371785063).epsilon(1e-13));
    CHECK(fundamental_gap(ChainSpec(4), 0.3) == doctest::Approx(2.1279667362125338).epsilon(1e-13));
    CHECK(fundamental_gap(ChainSpec(8), 0.8) == doctest::Approx(2.4798662854156666).epsilon(1e-13));
}

TEST_CASE("pair matrix element") {
    const ChainSpec spec(8);
    // n = 8, k = 3 pi / 8, g = 1: |M| = 2 sin(3 pi / 8)
    const auto m = excitation_matrix_element(spec, 3 * pi / 8, 1.0);
    CHECK(std::abs(m) == doctest::Approx(1.8477590650225735).epsilon(1e-14));
    CHECK(m.real() == doctest::Approx(0.0));
    CHECK(std::abs(excitation_matrix_element(spec, pi / 8, 0.0)) == doctest::Approx(0.0));
    CHECK_THROWS(excitation_matrix_element(spec, -pi / 8, 0.5));
    // complex continuation agrees on the real axis
    const auto mc = excitation_matrix_element_unchecked(3 * pi / 8, {0.7, 0.0});
    CHECK(std::abs(mc - excitation_matrix_element(spec, 3 * pi / 8, 0.7)) < 1e-14);
}

TEST_CASE("coupling constant") {
    CHECK_THROWS(CouplingConstant(0.0));
    CHECK_THROWS(CouplingConstant(-1e-3));
    CHECK(CouplingConstant(1e-3).weak());
    CHECK_FALSE(CouplingConstant(0.5).weak());
}
