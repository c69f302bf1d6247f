#pragma once

// Instantaneous description of the periodic transverse-field Ising chain
//
//   H(g) = -sum_j [ (1 - g) sigma^x_j + g sigma^z_j sigma^z_{j+1} ]
//
// in its even bit-flip parity sector, where the Jordan-Wigner fermions obey
// antiperiodic boundary conditions and the momenta are k = pi (2m+1) / (a n).
// All formulas carry the product k*a.

#include <complex>
#include <vector>

namespace tfim {

class ChainSpec {
public:
    /// Throws std::invalid_argument unless n >= 2, n even, a > 0.
    explicit ChainSpec(int n, double a = 1.0);

    int n() const { return n_; }
    double a() const { return a_; }

    /// True when k is one of the n grid momenta (to 1e-9 in units of pi/(a n)).
    bool on_grid(double k) const;

    friend bool operator==(const ChainSpec&, const ChainSpec&) = default;

private:
    int n_;
    double a_;
};

/// All n momenta, ascending, symmetric under k -> -k.
std::vector<double> momentum_grid(const ChainSpec& spec);
/// The n/2 positive momenta, ascending. Each labels the channel (k, -k).
std::vector<double> positive_momenta(const ChainSpec& spec);
/// Smallest positive momentum pi/(a n).
double lowest_momentum(const ChainSpec& spec);

struct ModeCoefficients {
    double alpha;
    double beta;
    double epsilon;
};

/// 2 sqrt(1 - 4 g (1-g) cos^2(ka/2)), evaluated as
/// 2 sqrt(sin^2(ka/2) + (1-2g)^2 cos^2(ka/2)) so that the critical region
/// g ~ 1/2, ka ~ 0 does not cancel.
double single_particle_energy(double ka, double g);

/// alpha = 2 - 4 g cos^2(ka/2), beta = 2 g sin(ka), epsilon as above.
/// Throws std::domain_error if k is off-grid or g is outside [0, 1].
ModeCoefficients mode_coefficients(const ChainSpec& spec, double k, double g);

/// 2 epsilon at the lowest momentum: the even-sector gap.
double fundamental_gap(const ChainSpec& spec, double g);

/// Quasi-particle vacuum energy -1/2 sum_k epsilon_k.
double ground_energy(const ChainSpec& spec, double g);

/// <k,-k| sum_j sigma^x_j |0> for the pair state gamma_k^+ gamma_{-k}^+ |0>.
///
/// Value: 4 i g sin(ka) / epsilon_k. The phase follows the convention
/// c_k = u_k gamma_k + i v_k^* gamma_{-k}^+ with real positive u_k at the
/// ground-state branch; only the modulus is physical. Requires k > 0.
std::complex<double> excitation_matrix_element(const ChainSpec& spec, double k, double g);

/// Same as excitation_matrix_element but accepts any g (used for complex-time
/// continuation inside the decoherence quadrature).
std::complex<double> excitation_matrix_element_unchecked(double ka, std::complex<double> g);
std::complex<double> single_particle_energy(double ka, std::complex<double> g);

/// Weak system-bath coupling lambda > 0. Values above 0.1 are accepted but
/// weak() reports false: first-order response is then questionable.
class CouplingConstant {
public:
    explicit CouplingConstant(double lambda);
    double value() const { return lambda_; }
    bool weak() const { return lambda_ <= 0.1; }

private:
    double lambda_;
};

}  // namespace tfim
