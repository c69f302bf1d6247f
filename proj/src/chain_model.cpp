#include "tfim/chain_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tfim/kernels.hpp"

namespace tfim {

using std::numbers::pi;

ChainSpec::ChainSpec(int n, double a) : n_(n), a_(a) {
    if (n < 2) throw std::invalid_argument("chain size n must be >= 2, got " + std::to_string(n));
    if (n % 2 != 0)
        throw std::invalid_argument("chain size n must be even (k,-k pairing), got " +
                                    std::to_string(n));
    if (!(a > 0.0) || !std::isfinite(a))
        throw std::invalid_argument("lattice spacing a must be positive and finite");
}

bool ChainSpec::on_grid(double k) const {
    // k a n / pi must be an odd integer with |k a| < pi
    const double m = k * a_ * n_ / pi;
    const double nearest = std::round(m);
    if (std::abs(m - nearest) > 1e-9) return false;
    const long odd = static_cast<long>(nearest);
    return (odd % 2 != 0) && std::abs(odd) < n_;
}

std::vector<double> momentum_grid(const ChainSpec& spec) {
    const int n = spec.n();
    std::vector<double> k;
    k.reserve(static_cast<std::size_t>(n));
    for (int m = -n / 2; m < n / 2; ++m) k.push_back(pi * (2 * m + 1) / (spec.a() * n));
    return k;
}

std::vector<double> positive_momenta(const ChainSpec& spec) {
    const int n = spec.n();
    std::vector<double> k;
    k.reserve(static_cast<std::size_t>(n / 2));
    for (int m = 0; m < n / 2; ++m) k.push_back(pi * (2 * m + 1) / (spec.a() * n));
    return k;
}

double lowest_momentum(const ChainSpec& spec) { return pi / (spec.a() * spec.n()); }

double single_particle_energy(double ka, double g) {
    const double s = std::sin(0.5 * ka);
    const double c = std::cos(0.5 * ka);
    return 2.0 * std::hypot(s, (1.0 - 2.0 * g) * c);
}

std::complex<double> single_particle_energy(double ka, std::complex<double> g) {
    const double s = std::sin(0.5 * ka);
    const double c = std::cos(0.5 * ka);
    const std::complex<double> d = 1.0 - 2.0 * g;
    return 2.0 * std::sqrt(s * s + d * d * (c * c));
}

namespace {

void check_g(double g) {
    if (!(g >= 0.0 && g <= 1.0))
        throw std::domain_error("interpolation parameter g must lie in [0, 1], got " +
                                std::to_string(g));
}

void check_k(const ChainSpec& spec, double k) {
    if (!spec.on_grid(k))
        throw std::domain_error("momentum " + std::to_string(k) + " is not on the grid of n=" +
                                std::to_string(spec.n()));
}

}  // namespace

ModeCoefficients mode_coefficients(const ChainSpec& spec, double k, double g) {
    check_k(spec, k);
    check_g(g);
    const double ka = k * spec.a();
    const double c = std::cos(0.5 * ka);
    return {2.0 - 4.0 * g * c * c, 2.0 * g * std::sin(ka), single_particle_energy(ka, g)};
}

double fundamental_gap(const ChainSpec& spec, double g) {
    check_g(g);
    return 2.0 * single_particle_energy(lowest_momentum(spec) * spec.a(), g);
}

double ground_energy(const ChainSpec& spec, double g) {
    check_g(g);
    const auto ks = positive_momenta(spec);
    std::vector<double> sin2(ks.size()), cos2(ks.size()), eps(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const double h = 0.5 * ks[i] * spec.a();
        sin2[i] = std::sin(h) * std::sin(h);
        cos2[i] = std::cos(h) * std::cos(h);
    }
    kernels::energy_over_modes(g, sin2, cos2, eps);
    // epsilon is even in k: the negative half contributes the same sum
    double sum = 0.0;
    for (double e : eps) sum += e;
    return -sum;
}

std::complex<double> excitation_matrix_element_unchecked(double ka, std::complex<double> g) {
    return std::complex<double>(0.0, 4.0 * std::sin(ka)) * g / single_particle_energy(ka, g);
}

std::complex<double> excitation_matrix_element(const ChainSpec& spec, double k, double g) {
    check_k(spec, k);
    check_g(g);
    if (!(k > 0.0)) throw std::domain_error("channel momentum must be positive");
    const double ka = k * spec.a();
    return {0.0, 4.0 * g * std::sin(ka) / single_particle_energy(ka, g)};
}

CouplingConstant::CouplingConstant(double lambda) : lambda_(lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("coupling lambda must be positive and finite");
}

}  // namespace tfim
