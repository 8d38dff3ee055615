// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "smi/config.hpp"

namespace smi {

/// Columns shared by every metric-style command.
extern const std::vector<std::string> kMetricColumns;

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    /// Scalar facts about the run (final objective, stop reason, ...).
    std::vector<std::pair<std::string, std::string>> summary;
};

/// Runs the command in `spec` and returns its table. Library errors propagate.
ResultTable execute(const ExperimentSpec& spec);

/// Numbers with 12 significant digits; NaN is written as "nan".
std::string to_csv(const ResultTable& table);
std::string to_json(const ResultTable& table);
std::string manifest_json(const ExperimentSpec& spec, const ResultTable& table);

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInfeasible = 3, kExitNumerical = 4 };

/// Executes and writes the result (to spec.output_path, or `out` when empty)
/// plus `<output>.manifest.json`. Errors are reported on `err` and mapped to
/// exit codes.
int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

}  // namespace smi
