#include "tfim/decoherence.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "tfim/kernels.hpp"
#include "tfim/parallel.hpp"
#include "tfim/quadrature.hpp"

namespace tfim {

using std::numbers::pi;

ResponseChannel pair_channel(const ChainSpec& spec, double k) {
    if (!spec.on_grid(k) || !(k > 0.0)) throw std::domain_error("channel momentum must be a positive grid momentum");
    const double ka = k * spec.a();
    const double c2 = std::pow(std::cos(0.5 * ka), 2);
    ResponseChannel ch;
    ch.matrix_element = [ka](cplx g) { return excitation_matrix_element_unchecked(ka, g); };
    ch.gap = [ka](cplx g) { return 2.0 * single_particle_energy(ka, g); };
    ch.gap_slope = [ka, c2](double g) { return -16.0 * (1.0 - 2.0 * g) * c2 / single_particle_energy(ka, g); };
    ch.crossing_width = 0.5 * std::tan(0.5 * ka);
    ch.ka = ka;
    return ch;
}

namespace {

void require_uniform(const Schedule& schedule) {
    if (schedule.kind() == ScheduleKind::step_wise)
        throw std::invalid_argument("response integrals need a uniform (linear or gap-adapted) schedule");
}

// Width of the avoided crossing that sets the panel size near g = 1/2.
double crossing_scale(const ResponseChannel& ch, const Schedule& schedule) {
    double b = ch.crossing_width;
    if (schedule.spec()) b = std::min(b, 0.5 * std::tan(0.5 * lowest_momentum(*schedule.spec()) * schedule.spec()->a()));
    return std::max(b, 1e-12);
}

struct Piece {
    quad::OscillatoryIntegrand integrand;
    double a, b;
    cplx phase_a;
};

quad::OscillatoryIntegrand core_integrand(const ResponseChannel& ch, const Schedule& schedule, double omega,
                                          double b) {
    quad::OscillatoryIntegrand in;
    in.smoothness = [b](double g) { return std::min(0.125, 0.75 * std::hypot(g - 0.5, b)); };
    in.amplitude = [&ch, &schedule](double g) { return ch.matrix_element(g) * schedule.dt_dg(g); };
    in.phase_rate = [&ch, &schedule, omega](double g) { return (ch.gap(g) - omega) * schedule.dt_dg(g); };
    if (ch.ka) {
        // vectorised pair channel: eps_k (and the fundamental gap for adapted schedules) at all nodes
        const double ka = *ch.ka;
        const double s2 = std::pow(std::sin(0.5 * ka), 2), c2 = std::pow(std::cos(0.5 * ka), 2);
        const double sk = std::sin(ka);
        const int p = schedule.power();
        const double rate = schedule.rate_constant();
        double s21 = 0.0, c21 = 0.0;
        if (p > 0) {
            const double ka1 = lowest_momentum(*schedule.spec()) * schedule.spec()->a();
            s21 = std::pow(std::sin(0.5 * ka1), 2);
            c21 = std::pow(std::cos(0.5 * ka1), 2);
        }
        const double T = schedule.total_time();
        in.batch = [=](const std::vector<double>& x, std::vector<cplx>& f, std::vector<cplx>& r) {
            std::vector<double> eps(x.size()), eps1(p > 0 ? x.size() : 0);
            kernels::energy_over_g(s2, c2, x, eps);
            if (p > 0) kernels::energy_over_g(s21, c21, x, eps1);
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double dtdg = p == 0 ? T : 1.0 / (rate * std::pow(2.0 * eps1[j], p));
                f[j] = cplx(0.0, 4.0 * x[j] * sk / eps[j] * dtdg);
                r[j] = (2.0 * eps[j] - omega) * dtdg;
            }
        };
    }
    return in;
}

// Steepest-descent ray g0 + i y, y in [0, Y]: contributes sign * int i T M e^{i Phi} dy.
quad::OscillatoryIntegrand ray_integrand(const ResponseChannel& ch, double T, double omega, double g0, double sign,
                                         double Y) {
    quad::OscillatoryIntegrand in;
    const cplx i{0.0, 1.0};
    in.amplitude = [&ch, T, g0, sign, i](double y) { return sign * i * T * ch.matrix_element(cplx(g0, y)); };
    in.phase_rate = [&ch, T, g0, omega, i](double y) { return i * T * (ch.gap(cplx(g0, y)) - omega); };
    in.smoothness = [Y](double) { return Y / 8.0; };
    return in;
}

// Below the gap the real-axis integral minus its endpoint terms equals the
// integral along 0 + iY -> v -> 1 + iY, where v = 1/2 + i y_v is the complex
// saddle (gap(v) = omega) or, when omega <= 0, a point just below the branch
// point 1/2 + i b. The branch cut runs upward from there, so the swept region
// is analytic, and along the path |exp(i Phi)| peaks near v: no cancellation.
std::vector<Piece> sub_gap_contour(const ResponseChannel& ch, double T, double omega) {
    const cplx i{0.0, 1.0};
    const double yb = ch.crossing_width;
    auto excess = [&](double y) { return ch.gap(cplx(0.5, y)).real() - omega; };
    double yv = 0.95 * yb;
    if (excess(yv) < 0.0) {
        double lo = 0.0, hi = yv;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * yb; ++it) {
            const double mid = 0.5 * (lo + hi);
            (excess(mid) > 0.0 ? lo : hi) = mid;
        }
        yv = 0.5 * (lo + hi);
    }
    const cplx vertex(0.5, yv);
    const cplx branch(0.5, yb);

    // Phi at the vertex: along the real axis to 1/2, then straight up
    auto real_rate = [&](double g) { return cplx(T * (ch.gap(g).real() - omega)); };
    auto up_rate = [&](double y) { return i * T * (ch.gap(cplx(0.5, y)) - omega); };
    auto smooth_real = [yb](double g) { return std::min(0.125, 0.75 * std::hypot(g - 0.5, yb)); };
    const cplx phi_v = quad::integrate_phase(real_rate, smooth_real, 0.0, 0.5) +
                       quad::integrate_phase(up_rate, [yb, yv](double y) { return 0.75 * std::max(yb - y, 1e-3 * yb); }, 0.0, yv);

    // top of the path: exp(i Phi) there must be negligible against the vertex
    const double decay = T * (ch.gap(0.0).real() - omega);
    double Y = std::max(2.0 * yb, (phi_v.imag() + 40.0) / decay);
    auto ray_rate = [&](double y) { return i * T * (ch.gap(cplx(0.0, y)) - omega); };
    cplx phi_top;
    for (int it = 0;; ++it) {
        phi_top = quad::integrate_phase(ray_rate, [Y](double) { return Y / 16.0; }, 0.0, Y);
        if (phi_top.imag() >= phi_v.imag() + 36.0) break;
        if (it == 30) throw quad::QuadratureError("sub-gap contour: endpoint rays do not decay");
        Y *= 1.5;
    }

    std::vector<Piece> pieces;
    const cplx ends[3] = {cplx(0.0, Y), vertex, cplx(1.0, Y)};
    for (int seg = 0; seg < 2; ++seg) {
        const cplx a = ends[seg], d = ends[seg + 1] - ends[seg];
        quad::OscillatoryIntegrand in;
        in.amplitude = [&ch, a, d, T](double tau) { return T * ch.matrix_element(a + tau * d) * d; };
        in.phase_rate = [&ch, a, d, T, omega](double tau) { return T * (ch.gap(a + tau * d) - omega) * d; };
        in.smoothness = [a, d, branch](double tau) {
            return std::min(0.125, 0.75 * std::abs(a + tau * d - branch) / std::abs(d));
        };
        pieces.push_back({std::move(in), 0.0, 1.0, seg == 0 ? phi_top : cplx(0.0)});
    }
    return pieces;
}

// Magnitude of the first correction to the stationary-phase value of
// int F e^{i Phi} dg at a saddle g0 (F = M dt/dg, Phi' = (gap - omega) dt/dg):
//   |F''/(2F Phi2)| + |F' Phi3/(2F Phi2^2)| + |Phi4/(8 Phi2^2)| + |5 Phi3^2/(24 Phi2^3)|.
// Derivatives by central differences on a step tied to the saddle width.
double first_correction(const ResponseChannel& ch, const Schedule& schedule, double omega, double g0) {
    auto F = [&](double g) { return std::abs(ch.matrix_element(g)) * schedule.dt_dg(g); };
    auto P1 = [&](double g) { return (ch.gap(g).real() - omega) * schedule.dt_dg(g); };
    const double phi2_est = ch.gap_slope(g0) * schedule.dt_dg(g0);
    const double w = std::sqrt(2.0 * pi / std::abs(phi2_est));
    const double reach = std::hypot(g0 - 0.5, ch.crossing_width);
    double h = std::min({0.1 * w, 0.05 * reach, 0.25 * g0, 0.25 * (1.0 - g0)});
    if (!(h > 0.0)) return std::numeric_limits<double>::infinity();
    const double f0 = F(g0);
    const double fm = F(g0 - h), fp = F(g0 + h);
    const double f1 = (fp - fm) / (2 * h), f2 = (fp - 2 * f0 + fm) / (h * h);
    const double pm2 = P1(g0 - 2 * h), pm = P1(g0 - h), p0 = P1(g0), pp = P1(g0 + h), pp2 = P1(g0 + 2 * h);
    const double phi2 = (pp - pm) / (2 * h);
    const double phi3 = (pp - 2 * p0 + pm) / (h * h);
    const double phi4 = (pp2 - 2 * pp + 2 * pm - pm2) / (2 * h * h * h);
    return std::abs(f2 / (2 * f0 * phi2)) + std::abs(f1 * phi3 / (2 * f0 * phi2 * phi2)) +
           std::abs(phi4 / (8 * phi2 * phi2)) + std::abs(5 * phi3 * phi3 / (24 * phi2 * phi2 * phi2));
}

}  // namespace

ResponseResult response_integral(const ResponseChannel& ch, const Schedule& schedule, double omega, double lambda,
                                 const ResponseOptions& opt) {
    require_uniform(schedule);
    if (!std::isfinite(omega)) throw std::invalid_argument("omega must be finite");
    if (!(opt.rtol > 0.0)) throw std::invalid_argument("rtol must be positive");
    ResponseResult out;
    if (lambda == 0.0) return out;

    const double b = crossing_scale(ch, schedule);
    std::vector<Piece> pieces;
    pieces.push_back({core_integrand(ch, schedule, omega, b), 0.0, 1.0, 0.0});

    const bool switched = opt.endpoints == EndpointTreatment::switched;
    bool chained = false;  // pieces form one contour: each starts at the previous end phase
    if (switched) {
        if (!schedule.analytic())
            throw std::invalid_argument("switched endpoints need the linear schedule (analytic continuation of g(t))");
        const double T = schedule.total_time();
        for (double g0 : {0.0, 1.0})
            if (!(ch.gap(g0).real() > omega))
                throw std::invalid_argument(fmt::format(
                    "switched endpoints need omega below the endpoint gap {:.6g}", ch.gap(g0).real()));
        if (omega >= ch.gap(0.5).real()) {
            // real saddles: keep the real axis and remove the endpoint terms
            // with steepest-descent rays g0 + i y
            for (double g0 : {0.0, 1.0}) {
                const double Y = 46.0 / (T * (ch.gap(g0).real() - omega));
                pieces.push_back({ray_integrand(ch, T, omega, g0, g0 == 0.0 ? -1.0 : 1.0, Y), 0.0, Y, 0.0});
            }
        } else {
            pieces = sub_gap_contour(ch, T, omega);
            chained = true;
        }
    }

    quad::OscillatoryOptions qo;
    qo.rtol = opt.rtol;
    qo.degree = opt.degree;
    std::vector<quad::OscillatoryResult> res(pieces.size());
    auto evaluate = [&](std::size_t i) {
        if (chained && i > 0) pieces[i].phase_a = res[i - 1].end_phase;
        if (!chained && i == 2) pieces[2].phase_a = res[0].end_phase;  // upper ray continues Phi(g = 1)
        res[i] = quad::integrate_oscillatory(pieces[i].integrand, pieces[i].a, pieces[i].b, pieces[i].phase_a, qo);
    };
    for (std::size_t i = 0; i < pieces.size(); ++i) evaluate(i);

    // The switched value can be far smaller than its pieces: tighten to an
    // absolute target set by the current total until the sum is resolved.
    for (int pass = 0; pass < 4; ++pass) {
        cplx total = 0.0;
        double err = 0.0;
        for (const auto& r : res) {
            total += r.value;
            err += r.error;
        }
        if (err <= opt.rtol * std::abs(total) || pieces.size() == 1) break;
        if (pass == 3)
            throw quad::QuadratureError(fmt::format(
                "switched response integral unresolved: error {:.3e} vs |A| {:.3e} after cancellation", err,
                std::abs(total)));
        qo.rtol = 0.0;
        qo.atol = std::max(0.25 * opt.rtol * std::abs(total) / static_cast<double>(pieces.size()), 1e-300);
        for (std::size_t i = 0; i < pieces.size(); ++i)
            if (res[i].error > qo.atol) evaluate(i);
    }

    cplx total = 0.0;
    for (const auto& r : res) {
        total += r.value;
        out.error += r.error;
        out.panels += r.panels;
        out.levin_panels += r.levin_panels;
    }
    out.oscillations = res[0].oscillations;
    const cplx pref(0.0, -lambda);
    out.value = pref * total;
    out.error *= std::abs(lambda);
    return out;
}

cplx amplitude_numeric(const ChainSpec& spec, const Schedule& schedule, double k, double omega, double lambda,
                       const ResponseOptions& opt) {
    return response_integral(pair_channel(spec, k), schedule, omega, lambda, opt).value;
}

// ---------------------------------------------------------------------------

double SaddlePointResult::incoherent_magnitude() const { return std::hypot(std::abs(minus), std::abs(plus)); }

SaddlePointResult amplitude_saddle_point(const ChainSpec& spec, const Schedule& schedule, double k, double omega,
                                         double lambda) {
    require_uniform(schedule);
    const ResponseChannel ch = pair_channel(spec, k);
    const double ka = *ch.ka;
    const double s = std::sin(0.5 * ka), c = std::cos(0.5 * ka);
    if (!(omega > 4.0 * s))
        throw std::domain_error(fmt::format("no real saddle: omega={} <= minimal pair gap {}", omega, 4.0 * s));
    if (omega > 4.0) throw std::domain_error(fmt::format("no saddle inside the sweep: omega={} > 4", omega));

    SaddlePointResult r;
    const double offset = std::sqrt(std::max(0.0, omega * omega / 16.0 - s * s)) / (2.0 * c);
    r.g_minus = std::max(0.0, 0.5 - offset);
    r.g_plus = std::min(1.0, 0.5 + offset);
    r.g_offset_small_omega = std::sqrt(std::max(0.0, omega * omega - 4.0 * ka * ka)) / 8.0;

    const double T = schedule.total_time();
    const double b = crossing_scale(ch, schedule);
    auto smooth = [b](double g) { return std::min(0.125, 0.75 * std::hypot(g - 0.5, b)); };
    auto rate = [&](double g) { return cplx((ch.gap(g).real() - omega) * schedule.dt_dg(g)); };

    double worst_gdot = 0.0;
    bool endpoints_ok = true;
    double width[2], correction[2];
    cplx contrib[2];
    const double gs[2] = {r.g_minus, r.g_plus};
    double ts[2];
    double phase_prev = 0.0, g_prev = 0.0;
    for (int j = 0; j < 2; ++j) {
        const double g = gs[j];
        ts[j] = schedule.t_of_g(g);
        const double gdot = schedule.g_dot_at(g);
        worst_gdot = std::max(worst_gdot, gdot);
        phase_prev += quad::integrate_phase(rate, smooth, g_prev, g).real();
        g_prev = g;
        const double phi2 = ch.gap_slope(g) * gdot;
        width[j] = std::sqrt(2.0 * pi / std::abs(phi2));
        const double quarter = phi2 > 0 ? 0.25 * pi : -0.25 * pi;
        contrib[j] = ch.matrix_element(g) * width[j] * std::polar(1.0, phase_prev + quarter);
        if (!std::isfinite(width[j])) endpoints_ok = false;
        correction[j] = first_correction(ch, schedule, omega, g);
    }
    r.t_minus = ts[0];
    r.t_plus = ts[1];
    // a saddle within half a stationary-phase width of an endpoint (or of the
    // other saddle) is not isolated
    if (ts[0] < 0.5 * width[0] || T - ts[1] < 0.5 * width[1] || ts[1] - ts[0] < 0.5 * (width[0] + width[1]))
        endpoints_ok = false;
    r.next_order = worst_gdot / (omega * std::sqrt(omega * omega - 16.0 * s * s));
    const cplx pref(0.0, -lambda);
    r.minus = pref * contrib[0];
    r.plus = pref * contrib[1];
    r.value = r.minus + r.plus;
    // leading sharp-endpoint terms |F / Phi'| in g
    double ends = 0.0;
    for (double g0 : {0.0, 1.0})
        ends += std::abs(ch.matrix_element(g0)) / std::abs(ch.gap(g0).real() - omega);
    r.error_estimate = (correction[0] * std::abs(contrib[0]) + correction[1] * std::abs(contrib[1]) + ends) /
                       std::abs(r.value / pref);
    r.valid = endpoints_ok && r.next_order <= 0.1 && r.error_estimate <= 0.1;
    return r;
}

double amplitude_bound(const ChainSpec& spec, const Schedule& schedule, double k, double /*omega*/, double lambda) {
    require_uniform(schedule);
    const ResponseChannel ch = pair_channel(spec, k);
    const double b = crossing_scale(ch, schedule);
    const double v = quad::integrate_smooth([&](double g) { return std::abs(ch.matrix_element(g)) * schedule.dt_dg(g); },
                                            0.0, 1.0, 1e-10, {0.5 - b, 0.5, 0.5 + b});
    return std::abs(lambda) * v;
}

SuppressedEstimate amplitude_suppressed_estimate(const ChainSpec& spec, const Schedule& schedule, double k,
                                                 double omega, double lambda) {
    const ResponseChannel ch = pair_channel(spec, k);
    const double ka = *ch.ka;
    if (!(omega < 4.0 * std::sin(0.5 * ka)))
        throw std::domain_error(fmt::format("omega={} is not below the minimal pair gap {}", omega, 4.0 * std::sin(0.5 * ka)));
    SuppressedEstimate e;
    if (schedule.kind() != ScheduleKind::linear) return e;
    e.derived = true;
    e.value = std::abs(lambda) * std::exp(-schedule.total_time() * ka * ka / 2.0);
    return e;
}

double imaginary_saddle_rate(double ka, double omega) {
    const double s = std::abs(std::sin(0.5 * ka)), c = std::cos(0.5 * ka);
    if (!(omega < 4.0 * s)) throw std::domain_error("imaginary saddle needs omega below the minimal pair gap");
    if (omega <= 0.0) return (s * s * pi / 2.0 - omega * s / 2.0) / c;  // up to the branch point
    const double u = std::sqrt(s * s - omega * omega / 16.0);
    return (s * s * std::asin(std::min(1.0, u / s)) - omega * u / 4.0) / c;
}

// ---------------------------------------------------------------------------
// Bath spectra

namespace {

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw std::invalid_argument(fmt::format("bath {} must be finite", what));
}

}  // namespace

BathSpectrum::BathSpectrum(BathKind kind, double p0, double p1, CouplingConstant lambda, double norm)
    : kind_(kind), p0_(p0), p1_(p1), lambda_(lambda), norm_(norm) {
    require_finite(p0, "parameter");
    require_finite(p1, "parameter");
    if (!(norm >= 0.0) || !std::isfinite(norm)) throw std::invalid_argument("bath normalization must be finite and >= 0");
}

BathSpectrum BathSpectrum::monochromatic(double omega0, CouplingConstant lambda, double normalization) {
    return BathSpectrum(BathKind::monochromatic, omega0, 0.0, lambda, normalization);
}

BathSpectrum BathSpectrum::ohmic(double omega_c, CouplingConstant lambda, double normalization) {
    if (!(omega_c > 0.0)) throw std::invalid_argument("ohmic cutoff omega_c must be > 0");
    return BathSpectrum(BathKind::ohmic, omega_c, 0.0, lambda, normalization);
}

BathSpectrum BathSpectrum::flat(double omega_min, double omega_max, CouplingConstant lambda, double normalization) {
    if (!(omega_max > omega_min)) throw std::invalid_argument("flat bath needs omega_min < omega_max");
    return BathSpectrum(BathKind::flat, omega_min, omega_max, lambda, normalization);
}

double BathSpectrum::density(double omega) const {
    switch (kind_) {
    case BathKind::monochromatic: return 0.0;  // a delta at omega0, handled separately
    case BathKind::ohmic:
        return omega > 0.0 ? norm_ * omega / (p0_ * p0_) * std::exp(-omega / p0_) : 0.0;
    case BathKind::flat:
        return omega >= p0_ && omega <= p1_ ? norm_ / (p1_ - p0_) : 0.0;
    }
    return 0.0;
}

std::pair<double, double> BathSpectrum::support() const {
    switch (kind_) {
    case BathKind::monochromatic: return {p0_, p0_};
    case BathKind::ohmic: return {0.0, 2.0};
    case BathKind::flat: return {p0_, p1_};
    }
    return {0.0, 0.0};
}

double BathSpectrum::truncated_weight() const {
    if (kind_ != BathKind::ohmic) return 0.0;
    const double x = 2.0 / p0_;
    return (1.0 + x) * std::exp(-x);
}

std::vector<std::string> BathSpectrum::warnings() const {
    std::vector<std::string> w;
    const double top = support().second;
    if (top >= 2.0 && kind_ != BathKind::ohmic)
        w.push_back(fmt::format("bath reaches omega = {:.6g} >= 2: the environment is not cold compared with the "
                                "initial gap",
                                top));
    if (truncated_weight() > 1e-3)
        w.push_back(fmt::format("ohmic tail beyond omega = 2 holds {:.3g} of the spectral weight and is dropped",
                                truncated_weight()));
    if (!lambda_.weak()) w.push_back(fmt::format("lambda = {} is not weak; first-order response is questionable", lambda()));
    return w;
}

nlohmann::json BathSpectrum::to_json() const {
    nlohmann::json j{{"kind", std::string(to_string(kind_))}, {"lambda", lambda()}, {"normalization", norm_}};
    switch (kind_) {
    case BathKind::monochromatic: j["omega0"] = p0_; break;
    case BathKind::ohmic: j["omega_c"] = p0_; break;
    case BathKind::flat:
        j["omega_min"] = p0_;
        j["omega_max"] = p1_;
        break;
    }
    return j;
}

BathSpectrum BathSpectrum::from_json(const nlohmann::json& j) {
    const BathKind kind = parse_bath_kind(j.at("kind").get<std::string>());
    const CouplingConstant lambda(j.value("lambda", 1e-3));
    const double norm = j.value("normalization", 1.0);
    switch (kind) {
    case BathKind::monochromatic: return monochromatic(j.at("omega0").get<double>(), lambda, norm);
    case BathKind::ohmic: return ohmic(j.value("omega_c", 0.5), lambda, norm);
    case BathKind::flat: return flat(j.at("omega_min").get<double>(), j.at("omega_max").get<double>(), lambda, norm);
    }
    throw std::invalid_argument("unknown bath kind");
}

BathKind parse_bath_kind(std::string_view name) {
    if (name == "monochromatic") return BathKind::monochromatic;
    if (name == "ohmic") return BathKind::ohmic;
    if (name == "flat") return BathKind::flat;
    throw std::invalid_argument(fmt::format("unknown bath kind '{}' (monochromatic, ohmic, flat)", name));
}

std::string_view to_string(BathKind kind) {
    switch (kind) {
    case BathKind::monochromatic: return "monochromatic";
    case BathKind::ohmic: return "ohmic";
    case BathKind::flat: return "flat";
    }
    return "?";
}

std::string_view to_string(AmplitudeMethod m) {
    switch (m) {
    case AmplitudeMethod::numeric: return "numeric";
    case AmplitudeMethod::saddle_point: return "saddle-point";
    case AmplitudeMethod::bound: return "bound";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Total probability

namespace {

SpectralAmplitude spectral_amplitude(const ChainSpec& spec, const Schedule& schedule, double k, double omega,
                                     double lambda, const ResponseOptions& ropt) {
    SpectralAmplitude a{k, omega, {}, AmplitudeMethod::numeric};
    try {
        a.value = amplitude_numeric(spec, schedule, k, omega, lambda, ropt);
        return a;
    } catch (const quad::QuadratureError&) {
    }
    const double min_gap = 4.0 * std::sin(0.5 * k * spec.a());
    if (omega > min_gap && omega <= 4.0) {
        const SaddlePointResult sp = amplitude_saddle_point(spec, schedule, k, omega, lambda);
        if (sp.valid) {
            a.value = sp.value;
            a.method = AmplitudeMethod::saddle_point;
            return a;
        }
    }
    a.value = amplitude_bound(spec, schedule, k, omega, lambda);
    a.method = AmplitudeMethod::bound;
    return a;
}

struct OmegaPanel {
    double a, b;
    double inc;     // int f |A|^2
    cplx coh;       // int f A
    double err_inc, err_coh;
};

// One channel: global adaptive Gauss-Kronrod (7/15) over the bath support.
ChannelProbability channel_probability(const ChainSpec& spec, const Schedule& schedule, const BathSpectrum& bath,
                                       double k, const TotalProbabilityOptions& opt, std::vector<std::string>& notes) {
    ChannelProbability cp;
    cp.k = k;
    const double lambda = bath.lambda();
    auto eval = [&](double w) {
        const SpectralAmplitude a = spectral_amplitude(spec, schedule, k, w, lambda, opt.response);
        ++(a.method == AmplitudeMethod::numeric ? cp.numeric_points : cp.fallback_points);
        return a.value;
    };
    if (bath.kind() == BathKind::monochromatic) {
        const cplx A = eval(bath.omega0());
        cp.incoherent = bath.normalization() * std::norm(A);
        cp.coherent = std::norm(bath.normalization() * A);
        return cp;
    }

    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    const auto& xk = GK::abscissa();   // xk[0] = 0, odd indices are Gauss nodes
    const auto& wk = GK::weights();
    const auto& wg = boost::math::quadrature::gauss<double, 7>::weights();
    auto panel = [&](double a, double b) {
        OmegaPanel p{a, b, 0.0, {}, 0.0, 0.0};
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double g_inc = 0.0;
        cplx g_coh;
        for (std::size_t i = 0; i < xk.size(); ++i) {
            for (int sgn : {1, -1}) {
                if (i == 0 && sgn < 0) continue;
                const double w = c + sgn * h * xk[i];
                const double f = bath.density(w);
                const cplx A = f > 0.0 ? eval(w) : cplx(0.0);
                p.inc += wk[i] * f * std::norm(A);
                p.coh += wk[i] * f * A;
                if (i % 2 == 0) {  // Gauss nodes of the embedded 7-point rule
                    g_inc += wg[i / 2] * f * std::norm(A);
                    g_coh += wg[i / 2] * f * A;
                }
            }
        }
        p.inc *= h;
        p.coh *= h;
        p.err_inc = std::abs(p.inc - h * g_inc);
        p.err_coh = std::abs(p.coh - h * g_coh);
        return p;
    };

    const auto [lo, hi] = bath.support();
    const double width = std::min(opt.max_panel_width, hi - lo);
    const int n0 = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
    std::vector<OmegaPanel> panels;
    for (int i = 0; i < n0; ++i) panels.push_back(panel(lo + (hi - lo) * i / n0, lo + (hi - lo) * (i + 1) / n0));

    const double rtol = std::max(opt.probability_rtol, 1e-8);
    const int max_panels = 20000;
    for (;;) {
        double inc = 0.0, e_inc = 0.0, e_coh = 0.0;
        cplx coh;
        for (const auto& p : panels) {
            inc += p.inc;
            coh += p.coh;
            e_inc += p.err_inc;
            e_coh += p.err_coh;
        }
        // only the incoherent sum drives refinement; the coherent one is
        // reported with its (pessimistic) error estimate
        if (e_inc <= rtol * inc || inc == 0.0) {
            cp.coherent_error = e_coh * (2.0 * std::abs(coh) + e_coh);
            break;
        }
        if (static_cast<int>(panels.size()) >= max_panels) {
            notes.push_back(fmt::format("k={:.6g}: omega quadrature stopped at {} panels (relative error {:.2g})", k,
                                        panels.size(), e_inc / inc));
            cp.coherent_error = e_coh * (2.0 * std::abs(coh) + e_coh);
            break;
        }
        // split the panels carrying the largest share of the error
        std::vector<std::size_t> order(panels.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return panels[x].err_inc > panels[y].err_inc; });
        const std::size_t nsplit = std::max<std::size_t>(1, order.size() / 8);
        std::vector<OmegaPanel> next;
        std::vector<bool> split(panels.size(), false);
        for (std::size_t i = 0; i < nsplit; ++i) split[order[i]] = true;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            if (!split[i]) {
                next.push_back(panels[i]);
                continue;
            }
            const double m = 0.5 * (panels[i].a + panels[i].b);
            next.push_back(panel(panels[i].a, m));
            next.push_back(panel(m, panels[i].b));
        }
        panels = std::move(next);
    }
    cplx coh;
    for (const auto& p : panels) {
        cp.incoherent += p.inc;
        coh += p.coh;
    }
    cp.coherent = std::norm(coh);
    return cp;
}

}  // namespace

TotalProbability total_excitation_probability(const ChainSpec& spec, const Schedule& schedule,
                                              const BathSpectrum& bath, const TotalProbabilityOptions& opt) {
    TotalProbability tp;
    tp.warnings = bath.warnings();
    const std::vector<double> ks = positive_momenta(spec);
    tp.channels.resize(ks.size());
    std::vector<std::vector<std::string>> notes(ks.size());
    parallel_for(ks.size(), opt.workers, [&](std::size_t i) {
        tp.channels[i] = channel_probability(spec, schedule, bath, ks[i], opt, notes[i]);
    });
    // fixed summation order, independent of the worker count
    for (std::size_t i = 0; i < ks.size(); ++i) {
        tp.incoherent += tp.channels[i].incoherent;
        tp.coherent += tp.channels[i].coherent;
        tp.coherent_error += tp.channels[i].coherent_error;
        tp.warnings.insert(tp.warnings.end(), notes[i].begin(), notes[i].end());
        if (tp.channels[i].fallback_points > 0)
            tp.warnings.push_back(fmt::format("k={:.6g}: {} of {} amplitudes from analytic fallbacks", ks[i],
                                              tp.channels[i].fallback_points,
                                              tp.channels[i].fallback_points + tp.channels[i].numeric_points));
    }
    if (tp.incoherent > 1.0 || tp.coherent > 1.0) {
        tp.breakdown = true;
        tp.warnings.push_back("total excitation probability exceeds 1: first-order response has broken down");
    }
    return tp;
}

// ---------------------------------------------------------------------------
// Scaling fits and Table 1

ScalingFit scaling_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("scaling_fit: x and y differ in length");
    if (x.size() < 4) throw std::invalid_argument(fmt::format("scaling_fit needs >= 4 points, got {}", x.size()));
    const std::size_t m = x.size();
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw std::invalid_argument(fmt::format("scaling_fit: non-positive data ({}, {})", x[i], y[i]));
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("scaling_fit: all x equal");
    ScalingFit f;
    f.exponent = sxy / sxx;
    f.intercept = my - f.exponent * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - f.intercept - f.exponent * lx[i];
        rss += r * r;
    }
    f.stderr_ = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
    f.points = static_cast<int>(m);
    return f;
}

nlohmann::json ScalingFit::to_json(const std::string& target) const {
    return {{"target", target}, {"exponent", exponent}, {"stderr", stderr_}, {"intercept", intercept}, {"points", points}};
}

std::string_view to_string(Table1Column c) { return c == Table1Column::saddle ? "saddle" : "bound"; }

bool Table1Cell::pass(double tolerance) const {
    if (std::abs(n_fit.exponent - predicted_n) > tolerance) return false;
    if (predicted_omega && (!omega_fit || std::abs(omega_fit->exponent - *predicted_omega) > tolerance)) return false;
    return true;
}

namespace {

Schedule make_schedule(ScheduleKind kind, const ChainSpec& spec, double T) {
    switch (kind) {
    case ScheduleKind::linear: return Schedule::linear(T);
    case ScheduleKind::gap_adapted_1: return Schedule::gap_adapted(1, spec, T);
    case ScheduleKind::gap_adapted_2: return Schedule::gap_adapted(2, spec, T);
    case ScheduleKind::step_wise: break;
    }
    throw std::invalid_argument("Table 1 covers the linear and gap-adapted schedules only");
}

Table1Point saddle_point_value(ScheduleKind kind, int n, double omega, const Table1Options& opt) {
    const ChainSpec spec(n);
    const double k = lowest_momentum(spec);
    Table1Point p;
    p.n = n;
    p.ka = k * spec.a();
    p.omega = omega;
    p.T = runtime_for_adiabaticity(kind, n, opt.adiabaticity, spec.a());
    const Schedule schedule = make_schedule(kind, spec, p.T);
    const SaddlePointResult sp = amplitude_saddle_point(spec, schedule, k, omega, opt.lambda);
    p.coherent = std::abs(sp.value);
    p.numeric = std::abs(amplitude_numeric(spec, schedule, k, omega, opt.lambda));
    // each saddle has the predicted size; their interference is not part of it
    p.value = sp.incoherent_magnitude();
    p.valid = sp.valid;
    return p;
}

}  // namespace

Table1Cell table1_cell(ScheduleKind kind, Table1Column column, const Table1Options& opt) {
    Table1Cell cell;
    cell.kind = kind;
    cell.column = column;
    const int p = kind == ScheduleKind::linear ? 0 : kind == ScheduleKind::gap_adapted_1 ? 1 : 2;
    if (kind == ScheduleKind::step_wise) throw std::invalid_argument("Table 1 has no step-wise row");

    std::vector<double> xn, yn;
    if (column == Table1Column::saddle) {
        static const char* pred[] = {"O(lambda ka omega^-1 n)", "O(lambda ka omega^-3/2 sqrt(n))",
                                     "O(lambda ka omega^-2)"};
        cell.prediction = pred[p];
        cell.predicted_n = p == 0 ? 1.0 : p == 1 ? 0.5 : 0.0;
        cell.predicted_omega = p == 0 ? -1.0 : p == 1 ? -1.5 : -2.0;
        for (int n : opt.ns) {
            Table1Point pt = saddle_point_value(kind, n, opt.omega_saddle, opt);
            pt.normalized = pt.value / pt.ka;
            xn.push_back(n);
            yn.push_back(pt.normalized);
            cell.n_points.push_back(pt);
        }
        std::vector<double> xw, yw;
        for (double w : opt.omega_sweep) {
            Table1Point pt = saddle_point_value(kind, opt.omega_sweep_n, w, opt);
            pt.normalized = pt.value;
            xw.push_back(w);
            yw.push_back(pt.value);
            cell.omega_points.push_back(pt);
        }
        cell.omega_fit = scaling_fit(xw, yw);
    } else {
        static const char* pred[] = {"O(lambda n^2 omega ln omega)", "O(lambda n ln n)", "O(lambda n)"};
        cell.prediction = pred[p];
        // power-law factors only: the logarithms are not fitted
        cell.predicted_n = p == 0 ? 2.0 : 1.0;
        for (int n : opt.ns) {
            const ChainSpec spec(n);
            const double k = lowest_momentum(spec);
            Table1Point pt;
            pt.n = n;
            pt.ka = k * spec.a();
            pt.omega = 2.0 * pt.ka;
            pt.T = runtime_for_adiabaticity(kind, n, opt.adiabaticity, spec.a());
            pt.value = amplitude_bound(spec, make_schedule(kind, spec, pt.T), k, pt.omega, opt.lambda);
            pt.normalized = p == 0 ? pt.value / pt.omega : pt.value;
            xn.push_back(n);
            yn.push_back(pt.normalized);
            cell.n_points.push_back(pt);
        }
    }
    cell.n_fit = scaling_fit(xn, yn);
    return cell;
}

}  // namespace tfim
