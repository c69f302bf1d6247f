#pragma once

// First-order bath-induced excitation of the sweep.
//
// For a channel s = (k,-k) and a bath frequency omega the spectral amplitude is
//
//   A(omega) = -i lambda int_0^T M(t) exp(i Phi(t)) dt,
//   Phi(t)   = -omega t + int_0^t DeltaE(t') dt',   DeltaE = 2 eps_k,
//
// with M = <k,-k| sum_j sigma^x_j |0>. Everything is integrated in the g
// variable (dt = dg / g_dot), which keeps the integrand smooth for all three
// uniform schedules.

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfim/chain_model.hpp"
#include "tfim/schedules.hpp"

namespace tfim {

using cplx = std::complex<double>;

/// A decoherence channel: matrix element and level spacing as analytic
/// functions of g (complex g is needed for the endpoint contours).
struct ResponseChannel {
    std::function<cplx(cplx g)> matrix_element;
    std::function<cplx(cplx g)> gap;
    std::function<double(double g)> gap_slope;  // d gap / dg on the real axis
    double crossing_width = 0.5;  // distance of the nearest complex singularity from g = 1/2
    std::optional<double> ka;     // set for the pair channel; enables the vectorised path
};

/// The (k,-k) pair channel: M = 4 i g sin(ka)/eps_k, gap = 2 eps_k.
ResponseChannel pair_channel(const ChainSpec& spec, double k);

enum class EndpointTreatment {
    sharp,     // coupling on during [0, T] exactly
    switched,  // endpoint terms removed by steepest-descent rays (linear schedule only)
};

struct ResponseOptions {
    double rtol = 1e-6;
    EndpointTreatment endpoints = EndpointTreatment::sharp;
    int degree = 32;
};

struct ResponseResult {
    cplx value;              // including the -i lambda prefactor
    double error = 0.0;      // estimated absolute error
    double oscillations = 0.0;
    int panels = 0;
    int levin_panels = 0;
};

/// The response integral for an arbitrary channel. Throws
/// std::invalid_argument for step-wise schedules or a switched treatment on a
/// non-linear schedule, quad::QuadratureError on non-convergence.
ResponseResult response_integral(const ResponseChannel& channel, const Schedule& schedule, double omega,
                                 double lambda, const ResponseOptions& opt = {});

cplx amplitude_numeric(const ChainSpec& spec, const Schedule& schedule, double k, double omega, double lambda,
                       const ResponseOptions& opt = {});

struct SaddlePointResult {
    cplx value;                  // coherent two-saddle sum, -i lambda included
    cplx minus, plus;            // individual saddle contributions (with -i lambda)
    double g_minus = 0.0, g_plus = 0.0;
    double t_minus = 0.0, t_plus = 0.0;
    double g_offset_small_omega = 0.0;  // sqrt(omega^2 - 4 (ka)^2)/8, the small-omega expansion
    double next_order = 0.0;     // g_dot(t*) / (omega sqrt(omega^2 - 16 sin^2(ka/2)))
    /// Size of the first asymptotic correction of each saddle plus the sharp
    /// endpoint terms, relative to |value|.
    double error_estimate = 0.0;
    bool valid = false;
    /// sqrt(|minus|^2 + |plus|^2): the saddle magnitude without the
    /// interference between the two saddles.
    double incoherent_magnitude() const;
};

/// Two-saddle stationary-phase estimate. Throws std::domain_error unless
/// 4 sin(ka/2) < omega <= 4 (a real saddle inside the sweep).
SaddlePointResult amplitude_saddle_point(const ChainSpec& spec, const Schedule& schedule, double k, double omega,
                                         double lambda);

/// lambda int_0^T |M| dt, an upper bound on |amplitude_numeric| for every omega.
double amplitude_bound(const ChainSpec& spec, const Schedule& schedule, double k, double omega, double lambda);

struct SuppressedEstimate {
    bool derived = false;   // only the linear schedule has a closed form
    double value = 0.0;     // lambda exp(-T (ka)^2 / 2) when derived
};

/// Sub-gap estimate. Throws std::domain_error for omega >= 4 sin(ka/2).
SuppressedEstimate amplitude_suppressed_estimate(const ChainSpec& spec, const Schedule& schedule, double k,
                                                 double omega, double lambda);

/// Imaginary part of the phase at the complex saddle per unit T for the
/// linear schedule: |A| ~ exp(-T * rate) for 0 <= omega < 4 sin(ka/2).
double imaginary_saddle_rate(double ka, double omega);

// ---------------------------------------------------------------------------
// Baths

enum class BathKind { monochromatic, ohmic, flat };

class BathSpectrum {
public:
    static BathSpectrum monochromatic(double omega0, CouplingConstant lambda, double normalization = 1.0);
    /// f = norm * omega / omega_c^2 * exp(-omega / omega_c) on omega > 0.
    static BathSpectrum ohmic(double omega_c, CouplingConstant lambda, double normalization = 1.0);
    /// f = norm / (omega_max - omega_min) on [omega_min, omega_max].
    static BathSpectrum flat(double omega_min, double omega_max, CouplingConstant lambda, double normalization = 1.0);

    BathKind kind() const { return kind_; }
    double lambda() const { return lambda_.value(); }
    double normalization() const { return norm_; }
    double density(double omega) const;
    /// Integration range; the ohmic tail is cut at omega = 2.
    std::pair<double, double> support() const;
    /// Fraction of int f lost to the cut.
    double truncated_weight() const;
    /// Non-empty when the bath reaches omega >= 2 (not cold).
    std::vector<std::string> warnings() const;

    double omega0() const { return p0_; }
    double omega_c() const { return p0_; }

    nlohmann::json to_json() const;
    static BathSpectrum from_json(const nlohmann::json& j);

private:
    BathSpectrum(BathKind kind, double p0, double p1, CouplingConstant lambda, double norm);
    BathKind kind_;
    double p0_, p1_;
    CouplingConstant lambda_;
    double norm_;
};

BathKind parse_bath_kind(std::string_view name);
std::string_view to_string(BathKind kind);

enum class AmplitudeMethod { numeric, saddle_point, bound };
std::string_view to_string(AmplitudeMethod m);

struct SpectralAmplitude {
    double k = 0.0;
    double omega = 0.0;
    cplx value;
    AmplitudeMethod method = AmplitudeMethod::numeric;
};

struct ChannelProbability {
    double k = 0.0;
    double incoherent = 0.0;  // int f |A|^2 domega
    double coherent = 0.0;    // |int f A domega|^2
    double coherent_error = 0.0;
    int numeric_points = 0;
    int fallback_points = 0;
};

struct TotalProbability {
    double incoherent = 0.0;  // sum over k and omega of probabilities
    double coherent = 0.0;    // sum over k of |int f A domega|^2
    double coherent_error = 0.0;  // estimate; the omega grid is refined for the incoherent sum only
    std::vector<ChannelProbability> channels;
    bool breakdown = false;   // a total exceeded 1
    std::vector<std::string> warnings;
};

struct TotalProbabilityOptions {
    ResponseOptions response;
    int workers = 1;
    double probability_rtol = 1e-3;  // adaptive omega quadrature, per channel
    double max_panel_width = 0.05;   // initial omega panels
};

/// Sums channel probabilities over all positive k. Each (k, omega) amplitude
/// uses amplitude_numeric; on quadrature failure it falls back to the saddle
/// estimate (or the bound below the gap) and records the method.
TotalProbability total_excitation_probability(const ChainSpec& spec, const Schedule& schedule,
                                              const BathSpectrum& bath,
                                              const TotalProbabilityOptions& opt = {});

// ---------------------------------------------------------------------------
// Scaling fits

struct ScalingFit {
    double exponent = 0.0;
    double stderr_ = 0.0;
    double intercept = 0.0;
    int points = 0;
    nlohmann::json to_json(const std::string& target) const;
};

/// Least-squares slope of log y against log x. Needs >= 4 points, all positive.
ScalingFit scaling_fit(const std::vector<double>& x, const std::vector<double>& y);

enum class Table1Column { saddle, bound };  // omega >> 2ka ; omega ~ 2ka

struct Table1Options {
    std::vector<int> ns{8, 16, 32, 64, 128};
    double adiabaticity = 0.1;       // run time from runtime_for_adiabaticity
    double omega_saddle = 1.5;       // fixed omega of the saddle-column n sweep
    int omega_sweep_n = 128;
    std::vector<double> omega_sweep{0.3, 0.4, 0.55, 0.7, 0.85, 1.0, 1.2};
    double lambda = 1e-3;
    double tolerance = 0.2;
};

struct Table1Point {
    int n = 0;
    double ka = 0.0;
    double omega = 0.0;
    double T = 0.0;
    double value = 0.0;       // amplitude magnitude
    double normalized = 0.0;  // value with the predicted non-fitted power-law factors divided out
    double coherent = 0.0;    // |two-saddle sum| (saddle column)
    double numeric = 0.0;     // |amplitude_numeric| at the same point (saddle column)
    bool valid = true;
};

struct Table1Cell {
    ScheduleKind kind = ScheduleKind::linear;
    Table1Column column = Table1Column::saddle;
    std::string prediction;  // the big-O expression
    double predicted_n = 0.0;
    std::optional<double> predicted_omega;
    ScalingFit n_fit;
    std::optional<ScalingFit> omega_fit;
    std::vector<Table1Point> n_points, omega_points;
    bool pass(double tolerance) const;
};

/// One Table 1 cell. The saddle column uses the fundamental channel
/// ka = pi/n: n sweep at fixed omega (normalised by ka), omega sweep at fixed
/// n. The bound column sets omega = 2ka and sweeps n (normalised by omega for
/// the linear schedule, whose prediction carries an explicit omega).
Table1Cell table1_cell(ScheduleKind kind, Table1Column column, const Table1Options& opt = {});

std::string_view to_string(Table1Column c);

}  // namespace tfim
