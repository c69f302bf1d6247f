#pragma once

// Quadrature building blocks: Gauss-Legendre rules, adaptive integration of
// smooth functions, Chebyshev panels, and an adaptive Levin/Clenshaw-Curtis
// integrator for integrals of the form
//
//   I = int_a^b F(x) exp(i Phi(x)) dx,   Phi(x) = Phi(a) + int_a^x phi(x') dx'
//
// where F and the phase rate phi are smooth on the scale given by the caller.

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfim::quad {

using cplx = std::complex<double>;

struct Rule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule (cached per n, thread-safe).
const Rule& gauss_legendre(int n);

/// Adaptive Gauss-Kronrod (boost) on [a, b] split at the given interior breakpoints.
double integrate_smooth(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-13, const std::vector<double>& breakpoints = {});

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Chebyshev-Lobatto interpolant of degree N on [a, b], built from values at
/// x_j = (a+b)/2 + (b-a)/2 cos(pi j / N), j = 0..N (so x_0 = b, x_N = a).
class ChebyshevPanel {
public:
    static std::vector<double> nodes(double a, double b, int degree);

    ChebyshevPanel(double a, double b, std::vector<cplx> values);

    cplx operator()(double x) const;
    /// int_a^x of the interpolant.
    cplx integral_to(double x) const;
    cplx integral() const { return integral_to(b_); }

private:
    double a_, b_;
    std::vector<cplx> coeff_;   // Chebyshev coefficients
    std::vector<cplx> anti_;    // antiderivative coefficients, zero at a
};

struct OscillatoryIntegrand {
    std::function<cplx(double)> amplitude;     // F(x)
    std::function<cplx(double)> phase_rate;    // dPhi/dx (may be complex: Im > 0 decays)
    std::function<double(double)> smoothness;  // length over which F, phi are polynomial-like
    // Optional: fills F and phi at all panel nodes at once. Used instead of
    // amplitude/phase_rate when set.
    std::function<void(const std::vector<double>& x, std::vector<cplx>& f, std::vector<cplx>& rate)> batch;
};

struct OscillatoryOptions {
    double rtol = 1e-6;
    double atol = 0.0;
    int degree = 32;          // Chebyshev degree per panel (even)
    int max_panels = 400000;
    double levin_min_phase = 6.0;  // radians of phase change before Levin is tried
};

struct OscillatoryResult {
    cplx value;
    double error = 0.0;        // estimated absolute error
    cplx end_phase;            // Phi(b)
    double oscillations = 0.0; // |Re(Phi(b) - Phi(a))| / (2 pi)
    int panels = 0;
    int levin_panels = 0;
};

OscillatoryResult integrate_oscillatory(const OscillatoryIntegrand& integrand, double a, double b,
                                        cplx phase_at_a, const OscillatoryOptions& opt = {});

/// Integral of the phase rate alone (Phi(b) - Phi(a)) with the same panelling.
cplx integrate_phase(const std::function<cplx(double)>& phase_rate,
                     const std::function<double(double)>& smoothness, double a, double b);

}  // namespace tfim::quad
