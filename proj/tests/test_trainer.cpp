#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "core/error.hpp"
#include "core/vec.hpp"
#include "data/dataset.hpp"
#include "helpers.hpp"
#include "theory/theory.hpp"
#include "train/trainer.hpp"

using namespace pb;
using namespace pb::train;

namespace {

struct Setup {
    std::unique_ptr<models::LossModel> model;
    std::vector<std::vector<Sample>> shards;
};

// Small softmax problem with one shard per worker.
Setup make_setup(int W, int per_worker, std::uint64_t seed) {
    Setup s;
    int classes = 3, dim = 4;
    s.model = models::make_softmax_model(classes, dim);
    auto samples = testutil::toy_samples(classes, dim, (per_worker * W + classes - 1) / classes + 1,
                                         seed);
    auto stream = derive_stream(seed, 0, "setup-partition");
    auto shards = data::partition_iid(samples.size(), W, stream);
    for (const auto& sh : shards) {
        std::vector<Sample> local;
        for (auto i : sh.indices) local.push_back(samples[i]);
        local.resize(per_worker);
        s.shards.push_back(std::move(local));
    }
    return s;
}

TrainOptions base_options(int W, int R) {
    TrainOptions opt;
    opt.hp.W = W;
    opt.hp.R = R;
    opt.hp.T = 10;
    opt.hp.gamma = 0.05;
    opt.hp.alpha = 0.3;
    opt.hp.seed = 77;
    opt.agg.kind = agg::AggKind::Mean;
    opt.agg.assumed_regular = R;
    opt.attack.kind = attacks::AttackKind::None;
    opt.attack.num_poisoned = 0;
    return opt;
}

}  // namespace

TEST_CASE("a full-momentum run is plain distributed sgd") {
    auto setup = make_setup(4, 6, 1);
    auto opt = base_options(4, 4);
    opt.hp.alpha = 1.0;
    ModelParams x0 = setup.model->init_params(opt.hp.seed);
    Trainer tr(*setup.model, opt, setup.shards, x0);

    // Reference loop: same per-worker draw streams, gradient step on the mean.
    ModelParams x = x0;
    std::vector<RngStream> streams;
    for (int w = 0; w < 4; ++w) streams.push_back(derive_stream(opt.hp.seed, w, "sample"));
    for (int t = 0; t < 5; ++t) {
        tr.step();
        std::vector<std::vector<double>> grads;
        for (int w = 0; w < 4; ++w) {
            auto j = streams[w].next_below(setup.shards[w].size());
            grads.push_back(setup.model->sample_gradient(x, setup.shards[w][j]));
        }
        vec::axpy(x, -opt.hp.gamma, agg::mean_agg(grads));
        REQUIRE(testutil::bits_equal(tr.params(), x));
    }
}

TEST_CASE("momentum starts at the first gradient and then mixes") {
    auto setup = make_setup(2, 5, 3);
    auto opt = base_options(2, 2);
    opt.hp.alpha = 0.25;
    ModelParams x0 = setup.model->init_params(opt.hp.seed);
    Trainer tr(*setup.model, opt, setup.shards, x0);

    std::vector<RngStream> streams;
    for (int w = 0; w < 2; ++w) streams.push_back(derive_stream(opt.hp.seed, w, "sample"));
    std::vector<std::vector<double>> m(2);
    ModelParams x = x0;
    for (int t = 0; t < 4; ++t) {
        tr.step();
        for (int w = 0; w < 2; ++w) {
            auto j = streams[w].next_below(setup.shards[w].size());
            auto g = setup.model->sample_gradient(x, setup.shards[w][j]);
            if (t == 0) {
                m[w] = g;  // first round adopts the gradient outright
            } else {
                vec::scale_inplace(m[w], 1.0 - opt.hp.alpha);
                vec::axpy(m[w], opt.hp.alpha, g);
            }
        }
        vec::axpy(x, -opt.hp.gamma, agg::mean_agg(m));
        REQUIRE(testutil::bits_equal(tr.params(), x));
        REQUIRE(testutil::bits_equal(tr.workers()[0].momentum, m[0]));
    }
}

TEST_CASE("robust aggregators with no poisoned slots degenerate to the mean") {
    auto setup = make_setup(5, 6, 9);
    auto mk = [&](agg::AggKind k) {
        auto opt = base_options(5, 5);
        opt.agg.kind = k;
        opt.agg.assumed_regular = 5;
        opt.agg.cc_tau = 1e300;
        opt.agg.cc_start_previous = false;
        return Trainer(*setup.model, opt, setup.shards, setup.model->init_params(77));
    };
    Trainer mean = mk(agg::AggKind::Mean);
    Trainer tri = mk(agg::AggKind::TriMean);
    Trainer faba = mk(agg::AggKind::Faba);
    Trainer cc = mk(agg::AggKind::CC);
    for (int t = 0; t < 6; ++t) {
        mean.step();
        tri.step();
        faba.step();
        cc.step();
        REQUIRE(testutil::bits_equal(tri.params(), mean.params()));
        REQUIRE(testutil::bits_equal(faba.params(), mean.params()));
        REQUIRE(testutil::bits_equal(cc.params(), mean.params()));
    }
}

TEST_CASE("a poisoned worker with zero flip probability behaves like a regular one") {
    auto setup = make_setup(3, 8, 13);
    auto opt_clean = base_options(3, 3);
    auto opt_p0 = base_options(3, 2);
    opt_p0.attack.kind = attacks::AttackKind::StaticFlip;
    opt_p0.attack.flip_prob = 0.0;
    opt_p0.attack.num_poisoned = 1;

    Trainer clean(*setup.model, opt_clean, setup.shards, setup.model->init_params(77));
    Trainer p0(*setup.model, opt_p0, setup.shards, setup.model->init_params(77));
    CHECK(p0.workers()[2].poisoned);
    for (int t = 0; t < 6; ++t) {
        clean.step();
        p0.step();
        REQUIRE(testutil::bits_equal(p0.params(), clean.params()));
        REQUIRE(testutil::bits_equal(p0.workers()[2].momentum, clean.workers()[2].momentum));
    }
}

TEST_CASE("static poisoning flips shard labels at construction") {
    auto setup = make_setup(3, 8, 21);
    auto opt = base_options(3, 2);
    opt.attack.kind = attacks::AttackKind::StaticFlip;
    opt.attack.flip_prob = 1.0;
    opt.attack.num_poisoned = 1;
    Trainer tr(*setup.model, opt, setup.shards, setup.model->init_params(77));
    const auto& w2 = tr.workers()[2];
    REQUIRE(w2.samples.size() == setup.shards[2].size());
    for (size_t i = 0; i < w2.samples.size(); ++i) {
        CHECK(w2.samples[i].label == attacks::static_flip(setup.shards[2][i].label, 3));
        CHECK(testutil::bits_equal(w2.samples[i].feature, setup.shards[2][i].feature));
    }
    // Regular workers keep their labels.
    for (size_t i = 0; i < tr.workers()[0].samples.size(); ++i)
        CHECK(tr.workers()[0].samples[i].label == setup.shards[0][i].label);
}

TEST_CASE("measured constants are finite, ordered, and flag the unpoisoned case") {
    auto setup = make_setup(4, 6, 31);
    auto opt = base_options(4, 4);
    Trainer clean(*setup.model, opt, setup.shards, setup.model->init_params(77));
    CHECK(std::isnan(clean.measure_a()));
    CHECK(clean.measure_xi() >= 0.0);
    CHECK(clean.measure_sigma2_max() >= 0.0);

    auto optp = base_options(4, 3);
    optp.attack.kind = attacks::AttackKind::StaticFlip;
    optp.attack.num_poisoned = 1;
    Trainer poisoned(*setup.model, optp, setup.shards, setup.model->init_params(77));
    CHECK(poisoned.measure_a() >= 0.0);

    auto bundle = poisoned.metrics_bundle();
    CHECK(bundle.train_loss == doctest::Approx(poisoned.train_loss()).epsilon(1e-12));
    CHECK(bundle.grad_norm_sq ==
          doctest::Approx(vec::norm_sq(poisoned.global_gradient())).epsilon(1e-12));
    CHECK(bundle.xi_hat == doctest::Approx(poisoned.measure_xi()).epsilon(1e-12));
    CHECK(bundle.a_hat == doctest::Approx(poisoned.measure_a()).epsilon(1e-12));
    CHECK(bundle.sigma2_hat_max ==
          doctest::Approx(poisoned.measure_sigma2_max()).epsilon(1e-12));

    // sigma2 per worker: variance of sample gradients around the local mean.
    auto g0 = poisoned.worker_full_gradient(0);
    double manual = 0.0;
    const auto& w0 = poisoned.workers()[0];
    for (const auto& s : w0.samples)
        manual += vec::dist_sq(setup.model->sample_gradient(poisoned.params(), s), g0);
    manual /= double(w0.samples.size());
    CHECK(poisoned.measure_sigma2(0) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("train_loss and global_gradient average regular workers only") {
    auto setup = make_setup(3, 5, 41);
    auto opt = base_options(3, 2);
    opt.attack.kind = attacks::AttackKind::StaticFlip;
    opt.attack.num_poisoned = 1;
    Trainer tr(*setup.model, opt, setup.shards, setup.model->init_params(77));

    double loss = 0.0;
    std::vector<double> grad(setup.model->param_dim(), 0.0);
    for (int w = 0; w < 2; ++w) {
        loss += models::mean_loss(*setup.model, tr.params(), tr.workers()[w].samples);
        vec::add_inplace(grad, models::full_gradient(*setup.model, tr.params(),
                                                     tr.workers()[w].samples));
    }
    vec::scale_inplace(grad, 0.5);
    CHECK(tr.train_loss() == doctest::Approx(loss / 2.0).epsilon(1e-12));
    CHECK(vec::dist(tr.global_gradient(), grad) < 1e-12);
}

TEST_CASE("agg_dev is zero for the mean without poisoning and positive under attack") {
    auto setup = make_setup(4, 6, 51);
    auto opt = base_options(4, 4);
    Trainer tr(*setup.model, opt, setup.shards, setup.model->init_params(77));
    CHECK(std::isnan(tr.agg_dev()));  // no step taken yet
    tr.step();
    CHECK(tr.agg_dev() <= 1e-15);

    auto optp = base_options(4, 3);
    optp.agg.kind = agg::AggKind::TriMean;
    optp.attack.kind = attacks::AttackKind::StaticFlip;
    optp.attack.num_poisoned = 1;
    Trainer trp(*setup.model, optp, setup.shards, setup.model->init_params(77));
    trp.step();
    CHECK(trp.agg_dev() >= 0.0);
    CHECK(std::isfinite(trp.agg_dev()));
}

TEST_CASE("divergence raises a typed error with the failing step") {
    auto q = theory::make_quadratic_instance(4, 3, 1.0, 1.0, 1);
    auto model = theory::make_quadratic_model(q);
    auto shards = theory::quadratic_shards(q);
    TrainOptions opt;
    opt.hp.W = 4;
    opt.hp.R = 4;
    opt.hp.gamma = 3.0;  // |1 - gamma*L| = 2: geometric blowup
    opt.hp.alpha = 1.0;
    opt.hp.seed = 1;
    opt.agg.assumed_regular = 4;
    opt.batch = 0;
    opt.divergence_limit = 1e6;
    Trainer tr(*model, opt, shards, {1.0, 1.0});
    try {
        for (int t = 0; t < 200; ++t) tr.step();
        FAIL_CHECK("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step() >= 0);
        CHECK(e.gamma() == 3.0);
        CHECK(e.status() == Status::Divergence);
    }
}

TEST_CASE("dynamic flipping relabels per iteration against the current model") {
    auto setup = make_setup(3, 6, 61);
    auto opt = base_options(3, 2);
    opt.attack.kind = attacks::AttackKind::DynamicFlip;
    opt.attack.num_poisoned = 1;
    Trainer tr(*setup.model, opt, setup.shards, setup.model->init_params(77));
    // Shard labels stay untouched; the flip happens on the fly.
    for (size_t i = 0; i < tr.workers()[2].samples.size(); ++i)
        CHECK(tr.workers()[2].samples[i].label == setup.shards[2][i].label);
    CHECK_NOTHROW(tr.step());
    CHECK_NOTHROW(tr.step());
    CHECK(vec::all_finite(tr.params()));
}

TEST_CASE("schedule from the analysis matches the closed form") {
    auto s = theorem_schedule(ScheduleKind::RobustAgg, 1.0, 1.0, 1.0, 0.0, 10, 100);
    CHECK(s.gamma == doctest::Approx(0.07071067811865475).epsilon(1e-15));
    CHECK(s.alpha == doctest::Approx(0.5656854249492381).epsilon(1e-15));

    // No gradient noise: the cap 1/(8L) binds and momentum switches off.
    auto cap = theorem_schedule(ScheduleKind::RobustAgg, 1.0, 2.0, 0.0, 0.5, 10, 1000);
    CHECK(cap.gamma == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
    CHECK(cap.alpha == 1.0);

    auto mean = theorem_schedule(ScheduleKind::Mean, 1.0, 1.0, 1.0, 0.1, 9, 500);
    CHECK(mean.gamma > 0.0);
    CHECK(mean.gamma <= 1.0 / 8.0);
    CHECK(mean.alpha == doctest::Approx(8.0 * mean.gamma).epsilon(1e-15));

    // More iterations shrink the step.
    auto longer = theorem_schedule(ScheduleKind::RobustAgg, 1.0, 1.0, 1.0, 0.0, 10, 10000);
    CHECK(longer.gamma < s.gamma);
}
