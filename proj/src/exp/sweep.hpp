#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace pb::exp {

struct SweepResult {
    int cells = 0;
    int runs = 0;
    int failed_runs = 0;
};

// Sweep document: {"base": <experiment config>, "aggregators": [...],
// "grid": {"dotted.key": [values...], ...}}. Aggregator entries are a kind
// string or an object merged into the aggregator section (optional "name"
// for the column/directory label). Grid keys are crossed in sorted order and
// every cell runs once per aggregator into <output_dir>/cell_NNN/<name>/.
// summary.csv lists the grid point, best test accuracy per aggregator, the
// winning aggregator, and any per-run failures (recorded, not fatal; failed
// runs leave an error.txt in their directory). Cells run concurrently up to
// `jobs` threads; outputs do not depend on the schedule.
SweepResult run_sweep(const nlohmann::json& doc, const std::string& output_dir, int jobs);

SweepResult run_sweep_file(const std::string& sweep_path, const std::string& output_dir, int jobs);

}  // namespace pb::exp
