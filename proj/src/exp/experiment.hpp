#pragma once

#include <string>
#include <vector>

#include "exp/config.hpp"
#include "train/trainer.hpp"

namespace pb::exp {

struct MetricsRow {
    long t = 0;
    double train_loss = 0.0;
    double test_acc = 0.0;
    double grad_norm_sq = 0.0;
    double xi_hat = 0.0;
    double a_hat = 0.0;
    double sigma2_hat_max = 0.0;
    double agg_dev = 0.0;
};

struct RunResult {
    std::vector<MetricsRow> rows;
    double best_test_acc = 0.0;   // NaN when no test set
    double final_test_acc = 0.0;  // last row's value
    train::Schedule schedule;     // gamma/alpha actually used
};

// Column order is fixed; floats go out with 17 significant digits so the file
// round-trips exactly.
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

// Runs one experiment and writes metrics.csv + manifest.json into the output
// directory (output_dir_override, when nonempty, replaces cfg.output_dir and
// is what the manifest records). On divergence the rows logged so far are
// still written before the error propagates.
RunResult run_experiment(ExperimentConfig cfg, const std::string& output_dir_override = "");

nlohmann::json make_manifest(const ExperimentConfig& cfg);

}  // namespace pb::exp
