#include "tfim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <ostream>

#include "tfim/csv.hpp"
#include "tfim/parallel.hpp"
#include "tfim/quadrature.hpp"

namespace tfim {

namespace {

void require_uniform(const Schedule& schedule) {
    if (schedule.kind() == ScheduleKind::step_wise)
        throw std::invalid_argument("mode dynamics need a uniform (linear or gap-adapted) schedule");
}

}  // namespace

double dynamical_phase(const ChainSpec& spec, double k, const Schedule& schedule, double t) {
    require_uniform(schedule);
    const double g = schedule.g_of_t(t);
    const double ka = k * spec.a();
    const double w = 0.25 * ka;
    return quad::integrate_smooth(
        [&](double x) { return single_particle_energy(ka, x) * schedule.dt_dg(x); }, 0.0, g, 1e-14,
        {0.5 - w, 0.5, 0.5 + w});
}

ModePair ground_branch(double ka, double g) {
    const double c = std::cos(0.5 * ka);
    const double alpha = 2.0 - 4.0 * g * c * c;
    const double beta = 2.0 * g * std::sin(ka);
    const double eps = single_particle_energy(ka, g);
    // alpha + eps without cancellation when alpha < 0
    const double upper = alpha >= 0.0 ? alpha + eps : beta * beta / (eps - alpha);
    const double norm = std::hypot(upper, beta);
    return {upper / norm, -beta / norm};
}

ModePair adiabatic_solution(const ChainSpec& spec, double k, const Schedule& schedule, double t) {
    if (!spec.on_grid(k)) throw std::domain_error("adiabatic_solution: momentum not on grid");
    const double g = schedule.g_of_t(t);
    const ModePair gs = ground_branch(k * spec.a(), g);
    const cplx phase = std::polar(1.0, dynamical_phase(spec, k, schedule, t));
    return {gs.u * phase, gs.v * phase};
}

// ---------------------------------------------------------------------------

Trajectory::Trajectory(std::vector<double> times, std::vector<double> momenta)
    : times_(std::move(times)), momenta_(std::move(momenta)), slots_(times_.size() * momenta_.size()) {}

void Trajectory::set(std::size_t ti, std::size_t mi, const ModeState& s) {
    slots_[ti * momenta_.size() + mi] = s;
}

const ModeState& Trajectory::get(std::size_t ti, std::size_t mi) const {
    return slots_[ti * momenta_.size() + mi];
}

BogoliubovState Trajectory::state(std::size_t ti) const {
    BogoliubovState s;
    s.t = times_.at(ti);
    s.modes.assign(slots_.begin() + static_cast<std::ptrdiff_t>(ti * momenta_.size()),
                   slots_.begin() + static_cast<std::ptrdiff_t>((ti + 1) * momenta_.size()));
    return s;
}

double Trajectory::max_norm_drift() const {
    double worst = 0.0;
    for (const auto& s : slots_)
        worst = std::max(worst, std::abs(1.0 - std::norm(s.u) - std::norm(s.v)));
    return worst;
}

// ---------------------------------------------------------------------------

namespace {

struct MagnusMode {
    double ka;
    const Schedule* schedule;

    struct Coeff {
        double alpha, beta, eps;
    };

    Coeff at(double t) const {
        const double g = schedule->g_of_t(std::clamp(t, 0.0, schedule->total_time()));
        const double c = std::cos(0.5 * ka);
        return {2.0 - 4.0 * g * c * c, 2.0 * g * std::sin(ka), single_particle_energy(ka, g)};
    }

    // One fourth-order Magnus step: Omega = -i theta.sigma with
    // H = -alpha sigma_z + beta sigma_x sampled at the two Gauss points.
    void step(double t, double h, cplx& u, cplx& v, double& theta) const {
        constexpr double r = 0.28867513459481288225;  // sqrt(3)/6
        const Coeff c1 = at(t + h * (0.5 - r));
        const Coeff c2 = at(t + h * (0.5 + r));
        const double tx = 0.5 * h * (c1.beta + c2.beta);
        const double ty = r * h * h * (c1.alpha * c2.beta - c2.alpha * c1.beta);
        const double tz = -0.5 * h * (c1.alpha + c2.alpha);
        const double mag = std::sqrt(tx * tx + ty * ty + tz * tz);
        const double cs = std::cos(mag);
        const double sn = mag > 0.0 ? std::sin(mag) / mag : 1.0;
        const cplx i{0.0, 1.0};
        // exp(-i theta.sigma) = cos|theta| - i sin|theta| (theta.sigma)/|theta|
        const cplx m00 = cs - i * sn * tz;
        const cplx m01 = -i * sn * cplx(tx, -ty);
        const cplx m10 = -i * sn * cplx(tx, ty);
        const cplx m11 = cs + i * sn * tz;
        const cplx nu = m00 * u + m01 * v;
        const cplx nv = m10 * u + m11 * v;
        u = nu;
        v = nv;
        theta += 0.5 * h * (c1.eps + c2.eps);
    }
};

}  // namespace

std::vector<ModeState> integrate_mode(const ChainSpec& spec, double k, const Schedule& schedule,
                                      const std::vector<double>& t_grid, const IntegrationOptions& opt) {
    require_uniform(schedule);
    if (!spec.on_grid(k) || !(k > 0.0)) throw std::domain_error("integrate_mode: k must be a positive grid momentum");
    if (!(opt.rtol >= 1e-15)) throw std::invalid_argument("integrate_mode: rtol must be >= 1e-15");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()) ||
        (!t_grid.empty() && (t_grid.front() < 0.0 || t_grid.back() > schedule.total_time())))
        throw std::invalid_argument("integrate_mode: t_grid must be ascending within [0, T]");

    const MagnusMode mode{k * spec.a(), &schedule};
    std::vector<ModeState> out;
    out.reserve(t_grid.size());

    cplx u = 1.0, v = 0.0;  // ground branch at g = 0
    double theta = 0.0, t = 0.0;
    double h = std::min(0.05, schedule.total_time() / 16.0);
    for (double target : t_grid) {
        while (t < target) {
            const double remaining = target - t;
            const bool last = h >= remaining;
            const double step = last ? remaining : h;

            cplx u1 = u, v1 = v, u2 = u, v2 = v;
            double th1 = theta, th2 = theta;
            mode.step(t, step, u1, v1, th1);
            mode.step(t, 0.5 * step, u2, v2, th2);
            mode.step(t + 0.5 * step, 0.5 * step, u2, v2, th2);
            const double err = std::max(std::abs(u1 - u2), std::abs(v1 - v2)) / 15.0;

            if (err <= opt.rtol) {
                t = last ? target : t + step;
                u = u2;
                v = v2;
                theta = th2;
            }
            const double factor = err > 0.0 ? 0.9 * std::pow(opt.rtol / err, 0.2) : 4.0;
            const double next = step * std::clamp(factor, 0.2, 4.0);
            if (err <= opt.rtol && last) {
                h = std::max(h, next);  // do not let a short landing step shrink h
            } else {
                h = next;
            }
            if (h < 1e-14 * std::max(1.0, t))
                throw IntegrationError(fmt::format(
                    "mode integration step underflow at k={:.17g}, t={:.17g} (h={:.3e})", k, t, h));
        }
        out.push_back({k, u, v, theta});
    }
    return out;
}

Trajectory integrate_modes(const ChainSpec& spec, const Schedule& schedule,
                           const std::vector<double>& t_grid, const IntegrationOptions& opt) {
    const auto ks = positive_momenta(spec);
    Trajectory traj(t_grid, ks);
    parallel_for(ks.size(), opt.workers, [&](std::size_t m) {
        const auto states = integrate_mode(spec, ks[m], schedule, t_grid, opt);
        for (std::size_t ti = 0; ti < states.size(); ++ti) traj.set(ti, m, states[ti]);
    });
    return traj;
}

double pair_excitation_probability(double ka, double g, cplx u, cplx v) {
    const ModePair gs = ground_branch(ka, g);
    return std::norm(gs.u * v - gs.v * u);
}

std::vector<double> excitation_probability(const BogoliubovState& state, const ChainSpec& spec, double g) {
    std::vector<double> p;
    p.reserve(state.modes.size());
    for (const auto& m : state.modes) p.push_back(pair_excitation_probability(m.k * spec.a(), g, m.u, m.v));
    return p;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const ChainSpec& spec,
                          const Schedule& schedule) {
    CsvWriter csv(os);
    csv.header({"t", "g", "k", "re_u", "im_u", "re_v", "im_v", "p_k"});
    for (std::size_t ti = 0; ti < traj.times().size(); ++ti) {
        const double t = traj.times()[ti];
        const double g = schedule.g_of_t(t);
        for (std::size_t mi = 0; mi < traj.momenta().size(); ++mi) {
            const auto& s = traj.get(ti, mi);
            csv.row(t, g, s.k, s.u.real(), s.u.imag(), s.v.real(), s.v.imag(),
                    pair_excitation_probability(s.k * spec.a(), g, s.u, s.v));
        }
    }
}

}  // namespace tfim
