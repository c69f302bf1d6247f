#include <CLI11.hpp>
#include <fmt/format.h>
#include <fstream>
#include <iostream>

#include "tfim/experiment.hpp"

using namespace tfim;

namespace {

struct Overrides {
    std::string config;
    std::vector<int> n;
    std::optional<double> T;
    std::string schedule;
    std::vector<double> omega;
    std::string bath;
    std::optional<double> lambda;
    std::optional<double> adiabaticity;
    std::string out;
    std::string preset;
    std::string endpoints;
};

// "ohmic", "ohmic:0.5", "monochromatic:0.3", "flat:0.2:0.6" or a JSON object
nlohmann::json parse_bath(const std::string& spec, nlohmann::json base) {
    if (!spec.empty() && spec.front() == '{') return nlohmann::json::parse(spec);
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = spec.find(':', start);
        parts.push_back(spec.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    nlohmann::json j{{"kind", parts[0]},
                     {"lambda", base.value("lambda", 1e-3)},
                     {"normalization", base.value("normalization", 1.0)}};
    auto num = [&](std::size_t i) { return std::stod(parts.at(i)); };
    if (parts[0] == "ohmic")
        j["omega_c"] = parts.size() > 1 ? num(1) : 0.5;
    else if (parts[0] == "monochromatic")
        j["omega0"] = num(1);
    else if (parts[0] == "flat") {
        j["omega_min"] = num(1);
        j["omega_max"] = num(2);
    } else {
        throw ConfigError(fmt::format("--bath: unknown kind '{}'", parts[0]));
    }
    return j;
}

int run(ExperimentKind kind, const Overrides& o) {
    nlohmann::json j = nlohmann::json::object();
    if (!o.config.empty()) {
        std::ifstream is(o.config);
        if (!is) throw ConfigError(fmt::format("--config: cannot open {}", o.config));
        try {
            j = nlohmann::json::parse(is);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(fmt::format("--config {}: {}", o.config, e.what()));
        }
        if (j.contains("kind") && j["kind"] != std::string(to_string(kind)))
            throw ConfigError(fmt::format("kind: config says {} but the subcommand is {}", j["kind"].dump(),
                                          to_string(kind)));
    }
    j["kind"] = std::string(to_string(kind));
    if (!o.n.empty()) j["ns"] = o.n;
    if (o.T) j["schedule"]["T"] = *o.T;
    if (!o.schedule.empty()) j["schedule"]["kind"] = o.schedule;
    if (o.adiabaticity) j["schedule"]["adiabaticity"] = *o.adiabaticity;
    if (!o.omega.empty()) j["omegas"] = o.omega;
    if (!o.bath.empty()) j["bath"] = parse_bath(o.bath, j.value("bath", nlohmann::json::object()));
    if (o.lambda) {
        if (!j.contains("bath")) j["bath"] = ExperimentConfig{}.bath;
        j["bath"]["lambda"] = *o.lambda;
    }
    if (!o.out.empty()) j["out"] = o.out;
    if (!o.preset.empty()) j["preset"] = o.preset;
    if (!o.endpoints.empty()) j["endpoints"] = o.endpoints;

    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    const ExperimentResult r = run_experiment(cfg);
    std::cout << fmt::format("{} -> {} ({} files, inputs {})\n", to_string(kind), cfg.out, r.outputs.size(),
                             r.inputs_hash);
    for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
    for (const auto& c : r.checks)
        std::cout << fmt::format("{} {}: {:.6g} (threshold {:.6g}){}\n", c.pass ? "PASS" : "FAIL", c.name, c.value,
                                 c.threshold, c.detail.empty() ? "" : "  " + c.detail);
    return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transverse-field Ising chain sweeps: spectra, mode dynamics, bath-induced excitations.\n"
                 "Worker threads: TFIM_WORKERS (default 1, 'auto' for all cores)."};
    app.require_subcommand(1);
    Overrides o;
    struct Sub {
        ExperimentKind kind;
        const char* help;
    };
    const Sub subs[] = {
        {ExperimentKind::spectrum, "pair gaps dE_k(g) of the lowest channels (Fig. 1 data)"},
        {ExperimentKind::dynamics, "integrate the Bogoliubov modes through the sweep"},
        {ExperimentKind::decoherence, "bath-induced amplitudes per (k, omega) and total probability"},
        {ExperimentKind::scaling, "Table 1 exponent fits (preset table1) or P_total vs n (preset growth)"},
        {ExperimentKind::stepwise, "minimum gaps of the step-wise and uniform sweeps (exact diagonalisation)"},
        {ExperimentKind::oracle_check, "dense diagonalisation against the fermionic solution"},
    };
    ExperimentKind chosen = ExperimentKind::spectrum;
    for (const auto& s : subs) {
        CLI::App* sc = app.add_subcommand(std::string(to_string(s.kind)), s.help);
        sc->add_option("--config", o.config, "JSON experiment config");
        sc->add_option("--n", o.n, "chain sizes (repeat or comma separated)")->delimiter(',');
        sc->add_option("--T", o.T, "run time (default: from the adiabaticity bound)");
        sc->add_option("--schedule", o.schedule, "linear | gap-adapted-1 | gap-adapted-2 | step-wise");
        sc->add_option("--omega", o.omega, "bath frequencies (comma separated)")->delimiter(',');
        sc->add_option("--bath", o.bath, "ohmic[:omega_c] | monochromatic:omega0 | flat:min:max | JSON");
        sc->add_option("--lambda", o.lambda, "system-bath coupling");
        sc->add_option("--adiabaticity", o.adiabaticity, "adiabaticity bound that fixes T when --T is absent");
        sc->add_option("--out", o.out, "output directory");
        sc->add_option("--preset", o.preset, "scaling preset: table1 | growth");
        sc->add_option("--endpoints", o.endpoints, "sharp | switched coupling at t = 0, T");
        sc->callback([&chosen, k = s.kind] { chosen = k; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    try {
        return run(chosen, o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
