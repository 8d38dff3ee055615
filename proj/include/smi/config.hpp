// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smi/precoder.hpp"
#include "smi/scene.hpp"

namespace smi {

enum class Command {
    metrics,
    validate,
    sweep_ns,
    sweep_k,
    sweep_power,
    dof,
    optimize_sensing,
    optimize_isac,
    tradeoff,
};

enum class OutputFormat { csv, json };

/// Covariance the metric commands evaluate at each grid point.
enum class PrecoderChoice { isotropic, smi_optimal, upper_bound_optimal };

enum class RateUnit { nats, bits };

struct ExperimentSpec {
    SceneConfig scene;
    std::optional<Command> command;
    std::vector<double> grid;
    Index mc_trials = 5000;
    std::string output_path;  // empty: standard output, no manifest
    OutputFormat format = OutputFormat::csv;
    PrecoderChoice precoder = PrecoderChoice::isotropic;
    GpSettings gp;
    AdmmSettings admm;  // admm.rate_floor is already in nats
    RateUnit rate_unit = RateUnit::nats;
    /// Tradeoff grid entries are fractions of the water-filling capacity.
    bool rate_grid_relative = false;
    /// Sensing SNRs (dB) of the noise ladder used by `dof`, increasing.
    std::vector<double> dof_snr_db{20.0, 30.0, 40.0, 50.0, 60.0};
    /// Angle range of the seeded draws, when angles were not listed.
    std::optional<std::pair<double, double>> angle_range_deg;
    /// Sensing SNR in dB when σ_s² was derived from it; kept so sweeps over
    /// power can hold σ_s² fixed while reporting the original setting.
    std::optional<double> sensing_snr_db;
    unsigned threads = 1;

    /// Resolved key/value pairs in a fixed order, for the run manifest.
    std::vector<std::pair<std::string, std::string>> resolved() const;
};

const char* command_name(Command c);
std::optional<Command> parse_command(const std::string& name);

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, duplicate
/// keys, and malformed values raise ConfigError naming the line and key.
ExperimentSpec parse_config(const std::string& text);

/// Converts a power in dBm to watts.
double dbm_to_watts(double dbm);

/// Draws `count` angles uniformly in [lo, hi] degrees from the angle stream
/// of `seed`, returned in radians.
std::vector<double> draw_angles(std::uint64_t seed, Index count, double lo_deg, double hi_deg);

/// Re-seeds the scene after a CLI override: redraws angles if they came from
/// a range, and leaves listed angles untouched.
void apply_seed(ExperimentSpec& spec, std::uint64_t seed);

}  // namespace smi
