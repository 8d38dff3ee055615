// SPDX-License-Identifier: Apache-2.0
// smi_experiment: evaluate, validate, and optimize sensing/ISAC designs from a
// key = value config file.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "smi/config.hpp"
#include "smi/errors.hpp"
#include "smi/experiment.hpp"

namespace {

const char* kCommands =
    "metrics | validate | sweep-ns | sweep-k | sweep-power | dof | optimize-sensing | optimize-isac | tradeoff";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensing mutual information experiments"};
    std::string command;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::optional<long long> mc_trials;
    std::optional<std::string> output;
    std::optional<std::string> format;

    app.add_option("command", command, std::string("one of: ") + kCommands);
    app.add_option("--config", config_path, "config file (key = value lines)")->required();
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--threads", threads, "Monte-Carlo worker threads")->check(CLI::Range(1u, 1024u));
    app.add_option("--mc-trials", mc_trials, "override mc_trials (0 skips Monte Carlo)");
    app.add_option("--output", output, "result file; a .manifest.json is written next to it");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : smi::kExitConfig;
    }

    smi::ExperimentSpec spec;
    try {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw smi::ConfigError("cannot read config file '" + config_path + "'");
        std::ostringstream text;
        text << in.rdbuf();
        spec = smi::parse_config(text.str());
        if (!command.empty()) {
            spec.command = smi::parse_command(command);
            if (!spec.command) throw smi::ConfigError("unknown command '" + command + "' (expected " + kCommands + ")");
        }
        if (!spec.command) throw smi::ConfigError(std::string("no command given (expected ") + kCommands + ")");
        if (seed) smi::apply_seed(spec, *seed);
        if (mc_trials) {
            if (*mc_trials < 0 || *mc_trials == 1) throw smi::ConfigError("--mc-trials must be 0 or >= 2");
            spec.mc_trials = static_cast<smi::Index>(*mc_trials);
        }
        if (output) spec.output_path = *output;
        if (format) spec.format = *format == "json" ? smi::OutputFormat::json : smi::OutputFormat::csv;
        spec.threads = threads;
    } catch (const smi::Error& e) {
        std::cerr << config_path << ": " << e.what() << '\n';
        return smi::kExitConfig;
    }
    return smi::run(spec, std::cout, std::cerr);
}
