#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaussdrift/environment.hpp"
#include "gaussdrift/propagator.hpp"

namespace gaussdrift {

enum class CoherenceMode { kAveragedOperator, kMeanOfNorms };
enum class Separation { kPosition, kMomentum, kMixed };

/// Full run configuration. Loaded from a flat key-value file with dotted
/// keys (e.g. `bath.temperature = 0.5`); unknown keys are an error.
struct RunConfig {
    // Desk-scale defaults, calibrated so decay constants for the default
    // separations are measurable with 200 realizations on a laptop: a slow
    // dilute bath whose transits are adiabatic on the trap timescale, with
    // the vicinity boundary far enough out that the pair interaction is weak
    // when particles are added or removed.
    ExperimentHamiltonian::Params model{
        .epsilon = 2.0, .width = 25.0, .m_env = 0.25};
    BathParams bath{.temperature = 4.0,
                    .density = 8.2e-7,
                    .mass = 0.25,
                    .env_width = 2.0,
                    .vicinity_radius = 58.0};
    IntegratorOptions ode{.rel_tol = 1e-8, .abs_tol = 1e-10};

    std::vector<double> delta_x_list = {10.0, 20.0, 30.0, 40.0};
    double t_max = 20.0;   // oscillator periods
    int n_samples = 80;    // uniform measurement times including t = 0
    int n_realizations = 200;
    std::uint64_t master_seed = 20250809;
    int threads = 0;       // 0 = auto
    std::string output_dir = ".";
    CoherenceMode coherence_mode = CoherenceMode::kAveragedOperator;
    Separation separation = Separation::kPosition;

    std::vector<std::string> warnings;
};

/// Parses and validates a config file. Defaults apply to absent keys;
/// constraint violations and unknown keys throw a config error naming the
/// key and line.
RunConfig load_config(const std::string& path);

/// Same, from in-memory text (used by tests and for the config echo).
RunConfig parse_config(const std::string& text);

/// Validates constraints on an assembled config (also called by the
/// parsers). Throws a config error naming the violated key.
void validate_config(RunConfig& config);

/// Serializes the effective configuration as key = value lines.
std::string config_echo(const RunConfig& config);

const char* to_string(CoherenceMode mode);
const char* to_string(Separation separation);

}  // namespace gaussdrift
