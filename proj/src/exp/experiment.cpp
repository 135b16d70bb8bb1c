#include "exp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>

#include "agg/aggregators.hpp"
#include "attacks/attacks.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/vec.hpp"
#include "data/dataset.hpp"
#include "models/model.hpp"

namespace pb::exp {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct LoadedData {
    data::Dataset train;
    data::Dataset test;  // may be empty
};

std::string resolve_idx_path(const std::string& dir, const std::string& name) {
    const fs::path plain = fs::path(dir) / name;
    if (fs::exists(plain)) return plain.string();
    const fs::path gz = fs::path(dir) / (name + ".gz");
    if (fs::exists(gz)) return gz.string();
    return plain.string();  // let the loader report the missing file
}

data::Dataset take_per_class(const data::Dataset& ds, int per_class) {
    data::Dataset out;
    out.num_classes = ds.num_classes;
    out.feature_dim = ds.feature_dim;
    out.name = ds.name + "-subset";
    std::vector<int> seen(ds.num_classes, 0);
    for (const Sample& s : ds.samples)
        if (seen[s.label]++ < per_class) out.samples.push_back(s);
    return out;
}

LoadedData build_datasets(const DatasetConfig& d) {
    LoadedData out;
    if (d.kind == "synth") {
        RngStream tr = derive_stream(d.data_seed, 0, "synth-train");
        out.train = data::synth_blobs(d.classes, d.dim, d.per_class, d.spread, tr);
        if (d.test_per_class > 0) {
            RngStream te = derive_stream(d.data_seed, 1, "synth-test");
            out.test = data::synth_blobs(d.classes, d.dim, d.test_per_class, d.spread, te);
        }
    } else if (d.kind == "digits") {
        RngStream tr = derive_stream(d.template_seed, 1, "digits-train");
        out.train = data::synth_digits(d.per_class, d.noise, d.template_seed, tr);
        if (d.test_per_class > 0) {
            RngStream te = derive_stream(d.template_seed, 2, "digits-test");
            out.test = data::synth_digits(d.test_per_class, d.noise, d.template_seed, te);
        }
    } else {
        std::string dir = d.dir;
        if (dir.empty()) {
            const char* env = std::getenv("POISONBENCH_DATA_DIR");
            dir = (env != nullptr && env[0] != '\0') ? env : ".";
        }
        out.train = data::load_idx(resolve_idx_path(dir, d.train_images),
                                   resolve_idx_path(dir, d.train_labels));
        if (d.subset_per_class > 0) out.train = take_per_class(out.train, d.subset_per_class);
        if (!d.test_images.empty()) {
            out.test = data::load_idx(resolve_idx_path(dir, d.test_images),
                                      resolve_idx_path(dir, d.test_labels));
            if (d.test_subset_per_class > 0)
                out.test = take_per_class(out.test, d.test_subset_per_class);
        }
    }
    return out;
}

attacks::AttackKind attack_kind(const std::string& s) {
    if (s == "none") return attacks::AttackKind::None;
    if (s == "static_flip") return attacks::AttackKind::StaticFlip;
    return attacks::AttackKind::DynamicFlip;
}

// Standard smoothness estimate for softmax cross-entropy over features a:
// max ||a||^2 / 2.
double estimate_softmax_L(const std::vector<std::vector<Sample>>& worker_samples) {
    double worst = 0.0;
    for (const auto& shard : worker_samples)
        for (const Sample& s : shard) worst = std::max(worst, vec::norm_sq(s.feature));
    return worst / 2.0;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Status::Internal, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(Status::Internal, "short write to " + path.string());
}

void write_outputs(const ExperimentConfig& cfg, const std::vector<MetricsRow>& rows) {
    fs::create_directories(cfg.output_dir);
    write_text_file(fs::path(cfg.output_dir) / "metrics.csv", metrics_to_csv(rows));
    write_text_file(fs::path(cfg.output_dir) / "manifest.json", make_manifest(cfg).dump(2) + "\n");
}

}  // namespace

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "t,train_loss,test_acc,grad_norm_sq,xi_hat,a_hat,sigma2_hat_max,agg_dev\n";
    for (const MetricsRow& r : rows) {
        out += std::to_string(r.t);
        for (double v : {r.train_loss, r.test_acc, r.grad_norm_sq, r.xi_hat, r.a_hat,
                         r.sigma2_hat_max, r.agg_dev}) {
            out += ',';
            out += fmt_g(v);
        }
        out += '\n';
    }
    return out;
}

nlohmann::json make_manifest(const ExperimentConfig& cfg) {
    return {{"format", kManifestFormat}, {"code_version", kCodeVersion}, {"config", to_json(cfg)}};
}

RunResult run_experiment(ExperimentConfig cfg, const std::string& output_dir_override) {
    if (!output_dir_override.empty()) cfg.output_dir = output_dir_override;
    validate_config(cfg);

    LoadedData ds = build_datasets(cfg.dataset);
    if (ds.train.samples.empty()) throw ConfigError("dataset: training set came up empty");
    const int K = ds.train.num_classes;
    const int d = ds.train.feature_dim;
    const HyperConfig& h = cfg.hyper;

    std::vector<data::Shard> shards;
    {
        RngStream pstream = derive_stream(h.seed, 0, "partition");
        if (cfg.partition.kind == "iid") {
            shards = data::partition_iid(ds.train.samples.size(), h.W, pstream);
        } else if (cfg.partition.kind == "dirichlet") {
            shards = data::partition_dirichlet(ds.train, h.W, cfg.partition.beta, pstream);
        } else {
            if (h.W != K)
                throw ConfigError("partition.kind: one_class requires hyper.W (" +
                                  std::to_string(h.W) + ") to equal the dataset's class count (" +
                                  std::to_string(K) + ")");
            shards = data::partition_one_class(ds.train, h.W);
        }
    }
    std::vector<std::vector<Sample>> worker_samples(h.W);
    for (int w = 0; w < h.W; ++w) {
        worker_samples[w].reserve(shards[w].indices.size());
        for (std::size_t idx : shards[w].indices) worker_samples[w].push_back(ds.train.samples[idx]);
    }

    std::unique_ptr<models::LossModel> model = cfg.model.kind == "softmax"
                                                   ? models::make_softmax_model(K, d)
                                                   : models::make_mlp_model(K, d);
    const ModelParams x0 = model->init_params(h.seed);

    train::TrainOptions opt;
    opt.hp = HyperParams{h.W, h.R, h.T, h.gamma, h.alpha, h.seed};
    opt.batch = h.batch;
    opt.agg.kind = agg::agg_kind_from_string(cfg.aggregator.kind);
    opt.agg.assumed_regular =
        cfg.aggregator.assumed_regular == 0 ? h.R : cfg.aggregator.assumed_regular;
    opt.agg.cc_tau = cfg.aggregator.cc_tau;
    opt.agg.cc_iters = cfg.aggregator.cc_iters;
    opt.agg.cc_start_previous = cfg.aggregator.cc_start == "previous";
    opt.attack.kind = attack_kind(cfg.attack.kind);
    opt.attack.flip_prob = cfg.attack.flip_prob;
    opt.attack.num_poisoned = opt.attack.kind == attacks::AttackKind::None ? 0 : h.W - h.R;

    if (h.schedule == "theorem") {
        train::Trainer probe(*model, opt, worker_samples, x0);
        const double sigma = std::sqrt(probe.measure_sigma2_max());
        double L = h.L;
        if (L == 0.0) {
            L = estimate_softmax_L(worker_samples);
            if (!(L > 0.0))
                throw ConfigError("hyper.L: cannot be estimated from all-zero features");
        }
        const double F0 = h.F0 >= 0.0 ? h.F0 : probe.train_loss();
        train::Schedule sched;
        if (opt.agg.kind == agg::AggKind::Mean) {
            const double delta = 1.0 - double(h.R) / double(h.W);
            sched = train::theorem_schedule(train::ScheduleKind::Mean, F0, L, sigma, delta, h.R,
                                            h.T);
        } else {
            const int assumed = opt.agg.assumed_regular;
            const double delta_a = 1.0 - double(assumed) / double(h.W);
            const double rho =
                agg::rho_formula(opt.agg.kind, delta_a, model->param_dim(), assumed);
            sched = train::theorem_schedule(train::ScheduleKind::RobustAgg, F0, L, sigma, rho,
                                            h.R, h.T);
        }
        opt.hp.gamma = sched.gamma;
        opt.hp.alpha = sched.alpha;
    }

    train::Trainer trainer(*model, opt, std::move(worker_samples), x0);

    const long T = h.T;
    const long interval = cfg.log_every > 0 ? cfg.log_every : std::max<long>(1, (T + 199) / 200);
    auto should_log = [&](long t) { return t == 0 || t == T || t % interval == 0; };
    auto test_accuracy = [&]() {
        return ds.test.samples.empty() ? kNaN
                                       : models::accuracy(*model, trainer.params(), ds.test.samples);
    };
    auto make_row = [&](long t) {
        const train::Trainer::MetricsBundle b = trainer.metrics_bundle();
        return MetricsRow{t,        b.train_loss, test_accuracy(), b.grad_norm_sq,
                          b.xi_hat, b.a_hat,      b.sigma2_hat_max, kNaN};
    };

    RunResult res;
    res.schedule = {opt.hp.gamma, opt.hp.alpha};
    try {
        for (long t = 0; t < T; ++t) {
            if (should_log(t)) {
                MetricsRow row = make_row(t);
                trainer.step();
                row.agg_dev = trainer.agg_dev();
                res.rows.push_back(row);
            } else {
                trainer.step();
            }
        }
        res.rows.push_back(make_row(T));
    } catch (const DivergenceError&) {
        write_outputs(cfg, res.rows);
        throw;
    }

    res.best_test_acc = kNaN;
    for (const MetricsRow& r : res.rows)
        if (!std::isnan(r.test_acc) && !(res.best_test_acc >= r.test_acc))
            res.best_test_acc = r.test_acc;
    res.final_test_acc = res.rows.back().test_acc;

    write_outputs(cfg, res.rows);
    return res;
}

}  // namespace pb::exp
