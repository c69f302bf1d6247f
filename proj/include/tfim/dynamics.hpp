#pragma once

// Bogoliubov mode dynamics for the uniform sweep. Each positive momentum k
// carries a pair (u_k, v_k) obeying
//
//   i du/dt = -alpha_k u + beta_k v,   i dv/dt = alpha_k v + beta_k u
//
// The instantaneous ground branch is (alpha+eps, -beta)/N with
// N = sqrt(2 eps^2 + 2 alpha eps); with these equations it picks up the
// phase exp(+i Theta_k), Theta_k(t) = int_0^t eps_k dt'.

#include <complex>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "tfim/chain_model.hpp"
#include "tfim/schedules.hpp"

namespace tfim {

using cplx = std::complex<double>;

struct ModePair {
    cplx u;
    cplx v;
};

struct ModeState {
    double k;
    cplx u;
    cplx v;
    double theta;  // accumulated int_0^t eps_k dt'
};

struct BogoliubovState {
    double t = 0.0;
    std::vector<ModeState> modes;  // ascending positive k
};

/// Theta_k(t) by quadrature in g (tolerance ~1e-13 relative).
double dynamical_phase(const ChainSpec& spec, double k, const Schedule& schedule, double t);

/// Instantaneous ground-branch pair without the phase factor: real, unit norm.
ModePair ground_branch(double ka, double g);

/// Closed-form adiabatic pair (alpha+eps, -beta) exp(i Theta)/N at time t.
ModePair adiabatic_solution(const ChainSpec& spec, double k, const Schedule& schedule, double t);

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IntegrationOptions {
    double rtol = 1e-12;  // per-step local error bound (norm-1 states)
    int workers = 1;
};

/// Integrated states at each requested time, for every positive k.
class Trajectory {
public:
    Trajectory(std::vector<double> times, std::vector<double> momenta);

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& momenta() const { return momenta_; }

    /// Distinct (time, mode) slots; safe to call concurrently for different modes.
    void set(std::size_t time_index, std::size_t mode_index, const ModeState& s);
    const ModeState& get(std::size_t time_index, std::size_t mode_index) const;
    BogoliubovState state(std::size_t time_index) const;

    /// max over modes and times of |1 - |u|^2 - |v|^2|.
    double max_norm_drift() const;

private:
    std::vector<double> times_;
    std::vector<double> momenta_;
    std::vector<ModeState> slots_;  // time-major
};

/// Integrates one mode from the t=0 ground branch through the ascending t_grid
/// with an adaptive fourth-order Magnus scheme (exact SU(2) exponentials,
/// step-doubling error control). Throws IntegrationError on step underflow.
std::vector<ModeState> integrate_mode(const ChainSpec& spec, double k, const Schedule& schedule,
                                      const std::vector<double>& t_grid,
                                      const IntegrationOptions& opt = {});

/// integrate_mode for every positive k, distributed over opt.workers threads.
Trajectory integrate_modes(const ChainSpec& spec, const Schedule& schedule,
                           const std::vector<double>& t_grid, const IntegrationOptions& opt = {});

/// p_k = |u_gs v - v_gs u|^2 against the instantaneous ground branch at g.
double pair_excitation_probability(double ka, double g, cplx u, cplx v);
std::vector<double> excitation_probability(const BogoliubovState& state, const ChainSpec& spec,
                                           double g);

/// CSV columns t,g,k,re_u,im_u,re_v,im_v,p_k.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory, const ChainSpec& spec,
                          const Schedule& schedule);

}  // namespace tfim
