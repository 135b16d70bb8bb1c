#include "train/trainer.hpp"

#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/vec.hpp"

namespace pb::train {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Trainer::Trainer(const models::LossModel& model, const TrainOptions& opt,
                 std::vector<std::vector<Sample>> worker_samples, ModelParams x0)
    : model_(model),
      opt_(opt),
      server_(opt.agg, opt.hp.W, model.param_dim()),
      x_(std::move(x0)) {
    validate(opt_.hp);
    const int W = opt_.hp.W;
    const int np = opt_.attack.num_poisoned;
    if (int(worker_samples.size()) != W)
        throw ConfigError("trainer: got " + std::to_string(worker_samples.size()) +
                          " shards for W=" + std::to_string(W));
    if (opt_.attack.kind == attacks::AttackKind::None && np != 0)
        throw ConfigError("attack.num_poisoned: must be 0 when attack.kind is none");
    if (np != W - opt_.hp.R)
        throw ConfigError("attack.num_poisoned: must equal W - R (got " + std::to_string(np) +
                          ", W-R=" + std::to_string(W - opt_.hp.R) + ")");
    if (opt_.batch < 0) throw ConfigError("hyper.batch: must be >= 0");
    if (int(x_.size()) != model_.param_dim())
        throw PropertyError("trainer: initial params have wrong dimension");

    workers_.reserve(W);
    for (int w = 0; w < W; ++w) {
        if (worker_samples[w].empty())
            throw ConfigError("trainer: worker " + std::to_string(w) + " has an empty shard");
        WorkerState ws{w, w >= W - np, std::move(worker_samples[w]), {},
                       derive_stream(opt_.hp.seed, std::uint64_t(w), "sample")};
        if (ws.poisoned && opt_.attack.kind == attacks::AttackKind::StaticFlip) {
            RngStream ps = derive_stream(opt_.hp.seed, std::uint64_t(w), "static-poison");
            attacks::apply_static_poisoning(ws.samples, model_.num_classes(),
                                            opt_.attack.flip_prob, ps);
        }
        workers_.push_back(std::move(ws));
    }
    momenta_scratch_.resize(W);
}

int Trainer::effective_label(const WorkerState& worker, const Sample& s) const {
    if (worker.poisoned && opt_.attack.kind == attacks::AttackKind::DynamicFlip)
        return attacks::dynamic_flip(model_, x_, s);
    return s.label;
}

void Trainer::step() {
    const double alpha = opt_.hp.alpha;
    std::vector<double> g(model_.param_dim());
    for (WorkerState& w : workers_) {
        std::fill(g.begin(), g.end(), 0.0);
        if (opt_.batch == 0) {
            const double scale = 1.0 / double(w.samples.size());
            for (const Sample& s : w.samples)
                model_.add_gradient(x_, s.feature, effective_label(w, s), scale, g);
        } else {
            const double scale = 1.0 / double(opt_.batch);
            for (int i = 0; i < opt_.batch; ++i) {
                const Sample& s = w.samples[w.sample_stream.next_below(w.samples.size())];
                model_.add_gradient(x_, s.feature, effective_label(w, s), scale, g);
            }
        }
        if (t_ == 0 || alpha == 1.0) {
            w.momentum = g;
        } else {
            for (std::size_t j = 0; j < g.size(); ++j)
                w.momentum[j] = (1.0 - alpha) * w.momentum[j] + alpha * g[j];
        }
    }

    for (int w = 0; w < opt_.hp.W; ++w) momenta_scratch_[w] = workers_[w].momentum;
    last_agg_ = server_.apply(momenta_scratch_);
    has_last_agg_ = true;
    vec::axpy(x_, -opt_.hp.gamma, last_agg_);
    ++t_;

    if (!vec::all_finite(x_))
        throw DivergenceError(t_ - 1, opt_.hp.gamma,
                              "divergence at step " + std::to_string(t_ - 1) +
                                  ": non-finite parameters (gamma=" +
                                  std::to_string(opt_.hp.gamma) + ")");
    double n = vec::norm(x_);
    if (n > opt_.divergence_limit)
        throw DivergenceError(t_ - 1, opt_.hp.gamma,
                              "divergence at step " + std::to_string(t_ - 1) + ": ||x|| = " +
                                  std::to_string(n) + " exceeds " +
                                  std::to_string(opt_.divergence_limit) +
                                  " (gamma=" + std::to_string(opt_.hp.gamma) + ")");
}

double Trainer::agg_dev() const {
    if (!has_last_agg_) return kNaN;
    std::vector<double> reg(model_.param_dim(), 0.0);
    for (int w = 0; w < opt_.hp.R; ++w) vec::add_inplace(reg, workers_[w].momentum);
    vec::scale_inplace(reg, 1.0 / double(opt_.hp.R));
    return vec::dist(last_agg_, reg);
}

double Trainer::train_loss() const {
    double acc = 0.0;
    for (int w = 0; w < opt_.hp.R; ++w)
        acc += models::mean_loss(model_, x_, workers_[w].samples);
    return acc / double(opt_.hp.R);
}

std::vector<double> Trainer::worker_full_gradient(int w) const {
    const WorkerState& ws = workers_.at(w);
    std::vector<double> g(model_.param_dim(), 0.0);
    const double scale = 1.0 / double(ws.samples.size());
    for (const Sample& s : ws.samples)
        model_.add_gradient(x_, s.feature, effective_label(ws, s), scale, g);
    return g;
}

std::vector<double> Trainer::global_gradient() const {
    std::vector<double> g(model_.param_dim(), 0.0);
    for (int w = 0; w < opt_.hp.R; ++w) {
        const std::vector<Sample>& shard = workers_[w].samples;
        const double scale = 1.0 / (double(opt_.hp.R) * double(shard.size()));
        for (const Sample& s : shard) model_.add_gradient(x_, s.feature, s.label, scale, g);
    }
    return g;
}

double Trainer::measure_xi() const {
    std::vector<double> global = global_gradient();
    double worst = 0.0;
    for (int w = 0; w < opt_.hp.R; ++w)
        worst = std::max(worst, vec::dist(worker_full_gradient(w), global));
    return worst;
}

double Trainer::measure_a() const {
    if (opt_.attack.num_poisoned == 0) return kNaN;
    std::vector<double> global = global_gradient();
    double worst = 0.0;
    for (int w = opt_.hp.R; w < opt_.hp.W; ++w)
        worst = std::max(worst, vec::dist(worker_full_gradient(w), global));
    return worst;
}

double Trainer::sigma2_against(const WorkerState& ws, const std::vector<double>& mean) const {
    std::vector<double> g(model_.param_dim());
    double acc = 0.0;
    for (const Sample& s : ws.samples) {
        std::fill(g.begin(), g.end(), 0.0);
        model_.add_gradient(x_, s.feature, effective_label(ws, s), 1.0, g);
        acc += vec::dist_sq(g, mean);
    }
    return acc / double(ws.samples.size());
}

double Trainer::measure_sigma2(int worker) const {
    return sigma2_against(workers_.at(worker), worker_full_gradient(worker));
}

double Trainer::measure_sigma2_max() const {
    double worst = 0.0;
    for (int w = 0; w < opt_.hp.W; ++w) worst = std::max(worst, measure_sigma2(w));
    return worst;
}

Trainer::MetricsBundle Trainer::metrics_bundle() const {
    const int W = opt_.hp.W;
    const int R = opt_.hp.R;
    std::vector<std::vector<double>> grads(W);
    for (int w = 0; w < W; ++w) grads[w] = worker_full_gradient(w);

    std::vector<double> global(model_.param_dim(), 0.0);
    for (int w = 0; w < R; ++w) vec::add_inplace(global, grads[w]);
    vec::scale_inplace(global, 1.0 / double(R));

    MetricsBundle out;
    out.train_loss = train_loss();
    out.grad_norm_sq = vec::norm_sq(global);
    for (int w = 0; w < R; ++w) out.xi_hat = std::max(out.xi_hat, vec::dist(grads[w], global));
    if (opt_.attack.num_poisoned == 0) {
        out.a_hat = kNaN;
    } else {
        for (int w = R; w < W; ++w) out.a_hat = std::max(out.a_hat, vec::dist(grads[w], global));
    }
    for (int w = 0; w < W; ++w)
        out.sigma2_hat_max = std::max(out.sigma2_hat_max, sigma2_against(workers_[w], grads[w]));
    return out;
}

Schedule theorem_schedule(ScheduleKind kind, double F0, double L, double sigma,
                          double rho_or_delta, int R, long T) {
    if (!(L > 0.0)) throw ConfigError("theorem_schedule: L must be > 0");
    if (F0 < 0.0) throw ConfigError("theorem_schedule: F0 must be >= 0");
    if (sigma < 0.0) throw ConfigError("theorem_schedule: sigma must be >= 0");
    if (R < 1) throw ConfigError("theorem_schedule: R must be >= 1");
    const double s2 = sigma * sigma;
    const double Rr = double(R) + 1.0 / double(R);
    double num, den;
    if (kind == ScheduleKind::RobustAgg) {
        const double rho2 = rho_or_delta * rho_or_delta;
        num = 4.0 * F0 + 15.0 * rho2 * Rr * s2 / (8.0 * L);
        den = double(T) * 40.0 * L * s2 * (3.0 * rho2 * Rr + 2.0 / double(R));
    } else {
        const double d2 = rho_or_delta * rho_or_delta;
        num = 4.0 * F0 + 30.0 * d2 * s2 / (8.0 * L);
        den = double(T) * 40.0 * L * s2 * (6.0 * d2 + 2.0 / double(R));
    }
    Schedule sch;
    const double cap = 1.0 / (8.0 * L);
    sch.gamma = (den > 0.0) ? std::min(std::sqrt(num / den), cap) : cap;
    sch.alpha = std::min(1.0, 8.0 * L * sch.gamma);
    return sch;
}

}  // namespace pb::train
