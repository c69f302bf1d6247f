#pragma once

// Interpolation schedules g(t), 0 <= t <= T, with g(0) = 0 and g(T) = 1.
//
//   linear          g = t / T
//   gap_adapted_1   dg/dt = c * DeltaE(g)      DeltaE = fundamental gap
//   gap_adapted_2   dg/dt = c * DeltaE(g)^2
//   step_wise       spatial sweep replacing sigma^x terms by bonds one site at
//                   a time; g reports the fraction of the path traversed
//
// The adapted schedules are tabulated once at construction by integrating the
// autonomous ODE; queries interpolate the tabulation (cubic Hermite with the
// exact ODE slope). Everything that only needs g, such as dt/dg and t(g), is
// evaluated in closed form or by quadrature in g instead.

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tfim/chain_model.hpp"

namespace tfim {

enum class ScheduleKind { linear, gap_adapted_1, gap_adapted_2, step_wise };

std::string_view to_string(ScheduleKind kind);
/// Accepts "linear", "gap-adapted-1", "gap-adapted-2", "step-wise".
ScheduleKind parse_schedule_kind(std::string_view name);

class Schedule {
public:
    static Schedule linear(double total_time);
    static Schedule gap_adapted(int power, const ChainSpec& spec, double total_time,
                                int resolution = 4096);
    static Schedule step_wise(int n, double total_time);

    ScheduleKind kind() const { return kind_; }
    double total_time() const { return total_time_; }
    const std::optional<ChainSpec>& spec() const { return spec_; }
    /// Chain size the schedule was built for (0 for linear).
    int chain_size() const { return n_; }
    int resolution() const { return resolution_; }
    /// 0 for linear and step-wise, p for gap_adapted_p.
    int power() const;
    /// Rate constant c of dg/dt = c DeltaE^p (1/T for linear).
    double rate_constant() const { return rate_; }

    /// Throws std::domain_error unless 0 <= t <= T.
    double g_of_t(double t) const;
    /// From the defining ODE at g(t), not by finite differences.
    double g_dot(double t) const;

    /// dg/dt as a function of g.
    double g_dot_at(double g) const;
    /// dt/dg = 1 / g_dot_at(g).
    double dt_dg(double g) const;
    /// Inverse of g_of_t, by quadrature of dt/dg.
    double t_of_g(double g) const;

    /// Tabulated (t, g) pairs (empty for closed-form kinds).
    const std::vector<double>& table_t() const { return tab_t_; }
    const std::vector<double>& table_g() const { return tab_g_; }

    /// True for kinds where g(t) is an entire function of complex t (linear).
    bool analytic() const { return kind_ == ScheduleKind::linear; }

    /// {kind, T, n, resolution}
    nlohmann::json to_json() const;
    static Schedule from_json(const nlohmann::json& j);

private:
    Schedule() = default;

    ScheduleKind kind_ = ScheduleKind::linear;
    double total_time_ = 1.0;
    std::optional<ChainSpec> spec_;
    int n_ = 0;
    int resolution_ = 0;
    double rate_ = 1.0;
    double lowest_ka_ = 0.0;
    std::vector<double> tab_t_, tab_g_, tab_gdot_;
};

/// int_0^1 DeltaE(g)^(-p) dg for the fundamental gap of spec.
double inverse_gap_integral(const ChainSpec& spec, int power);

/// Run-time T for which max_t g_dot |<k1,-k1| dH/dg |0>| / DeltaE^2 equals
/// adiabaticity for the lowest channel k1 = pi/(a n). With the matrix element
/// 4 sin(ka)/eps_k the ratio is g_dot sin(ka)/eps^3, maximal at g = 1/2, so
///   T = I_p 2^p sin(k1 a) eps_min^(p-3) / adiabaticity,  I_p as above.
/// Scales as n^2, n ln n, n for p = 0, 1, 2.
double runtime_for_adiabaticity(ScheduleKind kind, int n, double adiabaticity, double a = 1.0);

// ---------------------------------------------------------------------------
// Step-wise spatial sweep on an open chain
//
// Boundary Hamiltonians: H_0 = -sum sigma^x_j; step 1 turns sigma^x_1 and
// sigma^x_2 into sigma^z_1 sigma^z_2; step j >= 2 turns sigma^x_{j+1} into
// sigma^z_j sigma^z_{j+1}. Steps run 1..n-1 and interpolate linearly in s.

struct StepWisePath {
    int n;
    int step;  // 1..n-1
    double s;  // [0, 1]
};

struct TermWeights {
    std::vector<double> transverse;  // h_j, size n
    std::vector<double> bonds;       // J_j couples j and j+1, size n-1 (open) or n (periodic)
};

/// H = -sum h_j sigma^x_j - sum J_j sigma^z_j sigma^z_{j+1}. Throws
/// std::out_of_range for step outside 1..n-1 or s outside [0, 1].
TermWeights stepwise_hamiltonian_weights(const StepWisePath& path);

/// Uniform weights h_j = 1-g, J_j = g with the periodic bond included.
TermWeights uniform_weights(int n, double g);

/// Step and local s at time t of a step-wise schedule (equal time per step).
StepWisePath stepwise_position(const Schedule& schedule, double t);

}  // namespace tfim
