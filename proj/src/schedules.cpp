#include "tfim/schedules.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tfim/quadrature.hpp"

namespace tfim {

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::linear: return "linear";
        case ScheduleKind::gap_adapted_1: return "gap-adapted-1";
        case ScheduleKind::gap_adapted_2: return "gap-adapted-2";
        case ScheduleKind::step_wise: return "step-wise";
    }
    return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
    if (name == "linear") return ScheduleKind::linear;
    if (name == "gap-adapted-1") return ScheduleKind::gap_adapted_1;
    if (name == "gap-adapted-2") return ScheduleKind::gap_adapted_2;
    if (name == "step-wise") return ScheduleKind::step_wise;
    throw std::invalid_argument("unknown schedule kind '" + std::string(name) +
                                "' (expected linear, gap-adapted-1, gap-adapted-2, step-wise)");
}

namespace {

void check_time(double total_time) {
    if (!(total_time > 0.0) || !std::isfinite(total_time))
        throw std::invalid_argument("total time T must be positive and finite");
}

double fundamental_gap_any(double lowest_ka, double g) {
    return 2.0 * single_particle_energy(lowest_ka, g);
}

}  // namespace

double inverse_gap_integral(const ChainSpec& spec, int power) {
    if (power == 0) return 1.0;
    const double ka = lowest_momentum(spec) * spec.a();
    return quad::integrate_smooth(
        [&](double g) { return std::pow(fundamental_gap_any(ka, g), -power); }, 0.0, 1.0, 1e-14,
        {0.5 - 0.25 * ka, 0.5, 0.5 + 0.25 * ka});
}

Schedule Schedule::linear(double total_time) {
    check_time(total_time);
    Schedule s;
    s.kind_ = ScheduleKind::linear;
    s.total_time_ = total_time;
    s.rate_ = 1.0 / total_time;
    return s;
}

Schedule Schedule::step_wise(int n, double total_time) {
    check_time(total_time);
    if (n < 2) throw std::invalid_argument("step-wise schedule needs n >= 2");
    Schedule s;
    s.kind_ = ScheduleKind::step_wise;
    s.total_time_ = total_time;
    s.n_ = n;
    s.rate_ = 1.0 / total_time;
    return s;
}

Schedule Schedule::gap_adapted(int power, const ChainSpec& spec, double total_time, int resolution) {
    check_time(total_time);
    if (power != 1 && power != 2) throw std::invalid_argument("gap-adapted power must be 1 or 2");
    if (resolution < 16) throw std::invalid_argument("tabulation resolution must be >= 16");
    Schedule s;
    s.kind_ = power == 1 ? ScheduleKind::gap_adapted_1 : ScheduleKind::gap_adapted_2;
    s.total_time_ = total_time;
    s.spec_ = spec;
    s.n_ = spec.n();
    s.resolution_ = resolution;
    s.lowest_ka_ = lowest_momentum(spec) * spec.a();
    s.rate_ = inverse_gap_integral(spec, power) / total_time;

    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 1>;
    const double ka = s.lowest_ka_, c = s.rate_;
    auto rhs = [ka, c, power](const State& x, State& dxdt, double) {
        dxdt[0] = c * std::pow(fundamental_gap_any(ka, x[0]), power);
    };
    State x{0.0};
    auto stepper = odeint::make_dense_output(1e-13, 1e-12, total_time / resolution,
                                             odeint::runge_kutta_dopri5<State>());
    s.tab_t_.push_back(0.0);
    s.tab_g_.push_back(0.0);
    odeint::integrate_adaptive(stepper, rhs, x, 0.0, total_time, total_time / resolution,
                               [&](const State& st, double t) {
                                   if (t <= s.tab_t_.back()) return;
                                   s.tab_t_.push_back(t);
                                   s.tab_g_.push_back(st[0]);
                               });
    if (s.tab_t_.back() < total_time) {
        s.tab_t_.push_back(total_time);
        s.tab_g_.push_back(x[0]);
    }
    s.tab_gdot_.resize(s.tab_g_.size());
    for (std::size_t i = 0; i < s.tab_g_.size(); ++i) s.tab_gdot_[i] = s.g_dot_at(s.tab_g_[i]);
    return s;
}

int Schedule::power() const {
    switch (kind_) {
        case ScheduleKind::gap_adapted_1: return 1;
        case ScheduleKind::gap_adapted_2: return 2;
        default: return 0;
    }
}

double Schedule::g_dot_at(double g) const {
    const int p = power();
    if (p == 0) return rate_;
    return rate_ * std::pow(fundamental_gap_any(lowest_ka_, g), p);
}

double Schedule::dt_dg(double g) const { return 1.0 / g_dot_at(g); }

double Schedule::t_of_g(double g) const {
    if (!(g >= 0.0 && g <= 1.0)) throw std::domain_error("t_of_g: g outside [0, 1]");
    if (power() == 0) return g * total_time_;
    const double w = 0.25 * lowest_ka_;
    return quad::integrate_smooth([this](double x) { return dt_dg(x); }, 0.0, g, 1e-14,
                                  {0.5 - w, 0.5, 0.5 + w});
}

double Schedule::g_of_t(double t) const {
    if (!(t >= 0.0 && t <= total_time_))
        throw std::domain_error("time " + std::to_string(t) + " outside [0, T=" +
                                std::to_string(total_time_) + "]");
    if (power() == 0) return std::min(1.0, t / total_time_);
    auto it = std::upper_bound(tab_t_.begin(), tab_t_.end(), t);
    std::size_t i1 = static_cast<std::size_t>(std::distance(tab_t_.begin(), it));
    if (i1 >= tab_t_.size()) return std::min(1.0, tab_g_.back());
    if (i1 == 0) i1 = 1;
    const std::size_t i0 = i1 - 1;
    const double h = tab_t_[i1] - tab_t_[i0];
    const double u = (t - tab_t_[i0]) / h;
    const double u2 = u * u, u3 = u2 * u;
    const double g = (2 * u3 - 3 * u2 + 1) * tab_g_[i0] + (u3 - 2 * u2 + u) * h * tab_gdot_[i0] +
                     (-2 * u3 + 3 * u2) * tab_g_[i1] + (u3 - u2) * h * tab_gdot_[i1];
    return std::clamp(g, tab_g_[i0], std::min(1.0, tab_g_[i1]));
}

double Schedule::g_dot(double t) const { return g_dot_at(g_of_t(t)); }

nlohmann::json Schedule::to_json() const {
    nlohmann::json j;
    j["kind"] = std::string(to_string(kind_));
    j["T"] = total_time_;
    if (n_ > 0) j["n"] = n_;
    if (resolution_ > 0) j["resolution"] = resolution_;
    return j;
}

Schedule Schedule::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("schedule: expected a JSON object");
    if (!j.contains("kind") || !j.contains("T"))
        throw std::invalid_argument("schedule: fields 'kind' and 'T' are required");
    const ScheduleKind kind = parse_schedule_kind(j.at("kind").get<std::string>());
    const double total_time = j.at("T").get<double>();
    auto need_n = [&]() {
        if (!j.contains("n")) throw std::invalid_argument("schedule: field 'n' required for this kind");
        return j.at("n").get<int>();
    };
    switch (kind) {
        case ScheduleKind::linear: return linear(total_time);
        case ScheduleKind::step_wise: return step_wise(need_n(), total_time);
        default: {
            const int res = j.value("resolution", 4096);
            return gap_adapted(kind == ScheduleKind::gap_adapted_1 ? 1 : 2, ChainSpec(need_n()),
                               total_time, res);
        }
    }
}

double runtime_for_adiabaticity(ScheduleKind kind, int n, double adiabaticity, double a) {
    if (!(adiabaticity > 0.0)) throw std::invalid_argument("adiabaticity bound must be positive");
    int p = 0;
    switch (kind) {
        case ScheduleKind::linear: p = 0; break;
        case ScheduleKind::gap_adapted_1: p = 1; break;
        case ScheduleKind::gap_adapted_2: p = 2; break;
        default:
            throw std::invalid_argument("runtime_for_adiabaticity: unsupported kind '" +
                                        std::string(to_string(kind)) + "'");
    }
    const ChainSpec spec(n, a);
    const double ka = lowest_momentum(spec) * a;
    const double eps_min = single_particle_energy(ka, 0.5);
    return inverse_gap_integral(spec, p) * std::pow(2.0, p) * std::sin(ka) *
           std::pow(eps_min, p - 3) / adiabaticity;
}

TermWeights stepwise_hamiltonian_weights(const StepWisePath& path) {
    const int n = path.n;
    if (n < 2) throw std::out_of_range("step-wise path needs n >= 2");
    if (path.step < 1 || path.step > n - 1)
        throw std::out_of_range("step " + std::to_string(path.step) + " outside 1.." +
                                std::to_string(n - 1));
    if (!(path.s >= 0.0 && path.s <= 1.0)) throw std::out_of_range("step parameter s outside [0, 1]");
    TermWeights w{std::vector<double>(static_cast<std::size_t>(n), 1.0),
                  std::vector<double>(static_cast<std::size_t>(n - 1), 0.0)};
    // sites and bonds are 0-based here: bond b couples sites b and b+1
    auto apply = [&](int step, double s) {
        if (step == 1) {
            w.transverse[0] = 1.0 - s;
            w.transverse[1] = 1.0 - s;
            w.bonds[0] = s;
        } else {
            w.transverse[static_cast<std::size_t>(step)] = 1.0 - s;
            w.bonds[static_cast<std::size_t>(step - 1)] = s;
        }
    };
    for (int j = 1; j < path.step; ++j) apply(j, 1.0);
    apply(path.step, path.s);
    return w;
}

TermWeights uniform_weights(int n, double g) {
    return {std::vector<double>(static_cast<std::size_t>(n), 1.0 - g),
            std::vector<double>(static_cast<std::size_t>(n), g)};
}

StepWisePath stepwise_position(const Schedule& schedule, double t) {
    if (schedule.kind() != ScheduleKind::step_wise)
        throw std::invalid_argument("stepwise_position needs a step-wise schedule");
    const double progress = schedule.g_of_t(t);
    const int n = schedule.chain_size();
    const int steps = n - 1;
    const double x = progress * steps;
    const int idx = std::min(static_cast<int>(std::floor(x)), steps - 1);
    return {n, idx + 1, std::clamp(x - idx, 0.0, 1.0)};
}

}  // namespace tfim
