#pragma once

// Experiment configuration and orchestration behind the tfim command line.
// Every run writes plot-ready CSV files plus summary.json into the output
// directory; the summary lists the inputs hash, the files, and the built-in
// checks with their verdicts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfim/decoherence.hpp"
#include "tfim/schedules.hpp"

namespace tfim {

enum class ExperimentKind { spectrum, dynamics, decoherence, scaling, stepwise, oracle_check };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

/// Thrown for schema violations; the message starts with the JSON path.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::linear;
    /// Run time; when absent it follows from runtime_for_adiabaticity.
    std::optional<double> T;
    double adiabaticity = 0.1;
    int resolution = 4096;
};

struct SuppressionConfig {
    double omega = 0.1;
    std::vector<double> Ts{100, 200, 300, 400};
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::spectrum;
    std::vector<int> ns{8};
    ScheduleConfig schedule;
    nlohmann::json bath{{"kind", "ohmic"}, {"omega_c", 0.5}, {"lambda", 1e-3}, {"normalization", 1.0}};
    std::vector<double> omegas{0.5, 1.0, 1.5};
    double rtol = 1e-6;
    EndpointTreatment endpoints = EndpointTreatment::sharp;
    std::string out = "out";
    std::uint64_t seed = 1;

    // kind specific
    int channels = 6;                     // spectrum: lowest channels per n
    int g_points = 201;                   // spectrum: g grid
    int t_points = 101;                   // dynamics: output times
    std::vector<double> gs{0.0, 0.25, 0.5, 0.75, 1.0};  // oracle-check
    std::string preset = "table1";        // scaling: table1 | growth
    std::optional<SuppressionConfig> suppression;       // decoherence: T sweep

    nlohmann::json to_json() const;
    /// Strict: unknown keys and out-of-range values raise ConfigError.
    static ExperimentConfig from_json(const nlohmann::json& j);
    /// Module preconditions and resource guards, checked before any work.
    void validate() const;
    BathSpectrum bath_spectrum() const;
    Schedule make_schedule(int n) const;
    double run_time(int n) const;
};

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct ExperimentResult {
    std::string inputs_hash;
    std::vector<std::string> outputs;  // file names inside config.out
    std::vector<Check> checks;
    nlohmann::json info = nlohmann::json::object();
    std::vector<std::string> warnings;
    bool passed() const;
    nlohmann::json summary(const ExperimentConfig& config) const;
};

/// Runs the pipeline for config.kind and writes its files plus summary.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

enum class FigureKind { fig1, table1, suppression };

/// Plot-ready CSV files. fig1: (g, dE_1.., omega lines) per n; table1: one file
/// per cell; suppression: (T, ln|A|, predicted slope). Returns file names.
std::vector<std::string> emit_figure_data(FigureKind kind, const ExperimentConfig& config,
                                          ExperimentResult* result = nullptr);

}  // namespace tfim
