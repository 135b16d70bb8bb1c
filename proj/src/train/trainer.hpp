#pragma once

#include <vector>

#include "agg/aggregators.hpp"
#include "attacks/attacks.hpp"
#include "core/types.hpp"
#include "models/model.hpp"

namespace pb::train {

struct WorkerState {
    int id = 0;
    bool poisoned = false;
    std::vector<Sample> samples;   // local shard contents, static flips applied
    std::vector<double> momentum;  // valid after the first step
    RngStream sample_stream;
};

struct TrainOptions {
    HyperParams hp;
    agg::AggregatorSpec agg;
    attacks::AttackSpec attack;
    int batch = 1;                   // samples drawn per worker per step; 0 = full shard
    double divergence_limit = 1e8;   // guard on ||x||
};

// Distributed stochastic momentum under a server-side aggregator. Workers
// draw one sample (or a batch) from their shard each round, update a local
// momentum, and send it; the server aggregates all W momenta and takes a
// gradient step. Poisoned workers follow the protocol exactly and differ only
// in the labels they train on.
class Trainer {
public:
    Trainer(const models::LossModel& model, const TrainOptions& opt,
            std::vector<std::vector<Sample>> worker_samples, ModelParams x0);

    // One full round; throws DivergenceError when the iterate leaves the
    // trusted range.
    void step();

    long t() const { return t_; }
    const ModelParams& params() const { return x_; }
    const std::vector<WorkerState>& workers() const { return workers_; }
    const TrainOptions& options() const { return opt_; }

    // Distance from the last aggregate to the regular workers' mean momentum.
    double agg_dev() const;

    // Exact full-shard quantities at the current iterate. The global loss and
    // gradient average over regular workers only; poisoned workers enter
    // through the disturbance measure and the variance maximum.
    double train_loss() const;
    std::vector<double> global_gradient() const;
    double measure_xi() const;
    double measure_a() const;             // NaN when nothing is poisoned
    double measure_sigma2(int worker) const;
    double measure_sigma2_max() const;

    // Mean gradient over a worker's shard with the labels that worker
    // actually reports at the current iterate.
    std::vector<double> worker_full_gradient(int w) const;

    // All logged metrics from one sweep over the shards (each worker's full
    // gradient is computed once and reused).
    struct MetricsBundle {
        double train_loss = 0.0;
        double grad_norm_sq = 0.0;
        double xi_hat = 0.0;
        double a_hat = 0.0;
        double sigma2_hat_max = 0.0;
    };
    MetricsBundle metrics_bundle() const;

private:
    int effective_label(const WorkerState& worker, const Sample& s) const;
    double sigma2_against(const WorkerState& ws, const std::vector<double>& mean) const;

    const models::LossModel& model_;
    TrainOptions opt_;
    std::vector<WorkerState> workers_;
    agg::ServerAggregator server_;
    ModelParams x_;
    long t_ = 0;
    std::vector<std::vector<double>> momenta_scratch_;
    std::vector<double> last_agg_;
    bool has_last_agg_ = false;
};

enum class ScheduleKind { RobustAgg, Mean };

struct Schedule {
    double gamma = 0.0;
    double alpha = 0.0;
};

// Step size and momentum from the convergence analysis: gamma is the minimum
// of the variance-balancing term and 1/(8L); alpha = 8*L*gamma clamped to 1.
// sigma = 0 collapses to gamma = 1/(8L), alpha = 1.
Schedule theorem_schedule(ScheduleKind kind, double F0, double L, double sigma,
                          double rho_or_delta, int R, long T);

}  // namespace pb::train
