#include "theory/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <vector>

#include "agg/aggregators.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/vec.hpp"
#include "theory/theory.hpp"
#include "train/trainer.hpp"

namespace pb::theory {
namespace {

std::string strf(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

std::vector<double> aggregate_once(agg::AggKind kind, const std::vector<std::vector<double>>& ys,
                                   int assumed) {
    switch (kind) {
        case agg::AggKind::Mean: return agg::mean_agg(ys);
        case agg::AggKind::TriMean: return agg::trimean_agg(ys, assumed);
        case agg::AggKind::CC: return agg::cc_agg(ys, 1.0, 1, vec::zeros(ys.front().size()));
        case agg::AggKind::Faba: return agg::faba_agg(ys, assumed);
    }
    throw Error(Status::Internal, "aggregate_once: bad kind");
}

struct QuadRun {
    double avg_grad_sq = 0.0;
};

QuadRun run_quadratic(agg::AggKind kind, const QuadraticInstance& q, long T, double gamma) {
    auto model = make_quadratic_model(q);
    train::TrainOptions opt;
    opt.hp.W = q.W;
    opt.hp.R = q.R;
    opt.hp.T = T;
    opt.hp.gamma = gamma;
    opt.hp.alpha = 1.0;
    opt.hp.seed = 7;
    opt.agg.kind = kind;
    opt.agg.assumed_regular = q.R;
    opt.attack.kind = attacks::AttackKind::StaticFlip;
    opt.attack.flip_prob = 0.0;  // labels untouched; only the roles differ
    opt.attack.num_poisoned = q.W - q.R;
    train::Trainer trainer(*model, opt, quadratic_shards(q), model->init_params(opt.hp.seed));
    double acc = 0.0;
    for (long t = 0; t < T; ++t) {
        trainer.step();
        acc += vec::norm_sq(quad_global_gradient(q, trainer.params()));
    }
    return {acc / static_cast<double>(T)};
}

}  // namespace

std::vector<CheckResult> check_contraction_certificates(int trials, std::uint64_t seed) {
    std::vector<CheckResult> out;
    struct Cell {
        agg::AggKind kind;
        double delta;
    };
    std::vector<Cell> cells;
    for (double d : {0.1, 0.2, 0.3, 0.4}) cells.push_back({agg::AggKind::TriMean, d});
    for (double d : {0.1, 0.2, 0.3, 0.4}) cells.push_back({agg::AggKind::CC, d});
    for (double d : {0.1, 0.2, 0.3}) cells.push_back({agg::AggKind::Faba, d});

    const int W = 10;
    int stream_idx = 0;
    for (const Cell& cell : cells) {
        const int R = W - static_cast<int>(std::lround(cell.delta * W));
        for (int dim : {1, 3, 10}) {
            agg::AggregatorSpec spec;
            spec.kind = cell.kind;
            spec.assumed_regular = R;
            agg::CertifyOptions opt;
            opt.trials = trials;
            opt.W = W;
            opt.R = R;
            opt.dim = dim;
            RngStream stream = derive_stream(seed, stream_idx++, "certify");
            const agg::CertifyResult res = agg::certify_contraction(spec, opt, stream);
            const double rho = agg::rho_formula(cell.kind, cell.delta, dim, R);
            const bool pass = res.counted > 0 && res.max_ratio <= rho + 1e-9;
            out.push_back({strf("contraction.%s.delta%.1f.dim%d", agg::to_string(cell.kind).c_str(),
                                cell.delta, dim),
                           pass,
                           strf("max_ratio=%.9f certified=%.9f trials=%d", res.max_ratio, rho,
                                res.counted)});
        }
    }
    return out;
}

std::vector<CheckResult> check_impossibility() {
    std::vector<CheckResult> out;
    struct Case {
        int W;
        int R;
        double rho;
    };
    // First two sit at delta >= 1/2 where no choice of rho can work; the last
    // two probe delta < 1/2 with rho below the universal floor.
    const Case cases[] = {{10, 5, 1.0}, {10, 4, 1.0}, {10, 7, 0.5}, {10, 6, 0.9}};

    for (const Case& c : cases) {
        const double delta = 1.0 - static_cast<double>(c.R) / c.W;
        const IndistinguishablePair pair = build_indistinguishable_sets(c.W, c.R, c.rho);

        auto sorted_values = [](const std::vector<std::vector<double>>& set) {
            std::vector<double> v;
            v.reserve(set.size());
            for (const auto& y : set) v.push_back(y.at(0));
            std::sort(v.begin(), v.end());
            return v;
        };
        const bool same_multiset = sorted_values(pair.set1) == sorted_values(pair.set2);
        out.push_back({strf("indistinguishable.delta%.1f.rho%.1f.multiset", delta, c.rho),
                       same_multiset,
                       strf("regime=%d ybar1=%.9f ybar2=%.9f", pair.regime, pair.ybar1,
                            pair.ybar2)});

        for (agg::AggKind kind : {agg::AggKind::Mean, agg::AggKind::TriMean, agg::AggKind::CC,
                                  agg::AggKind::Faba}) {
            // TriMean needs 2*assumed - W >= 1, so past the half point it runs
            // with the smallest legal survivor count instead of R itself.
            int assumed = c.R;
            if (kind == agg::AggKind::TriMean && 2 * assumed - c.W < 1) assumed = c.W / 2 + 1;

            const std::vector<double> o1 = aggregate_once(kind, pair.set1, assumed);
            const std::vector<double> o2 = aggregate_once(kind, pair.set2, assumed);
            const bool identical = o1.at(0) == o2.at(0);
            const double dev1 = std::fabs(o1.at(0) - pair.ybar1);
            const double dev2 = std::fabs(o2.at(0) - pair.ybar2);
            const bool ok1 = dev1 <= c.rho * pair.maxdev1;
            const bool ok2 = dev2 <= c.rho * pair.maxdev2;
            const bool violated = !(ok1 && ok2);
            out.push_back({strf("impossibility.delta%.1f.rho%.1f.%s", delta, c.rho,
                                agg::to_string(kind).c_str()),
                           identical && violated,
                           strf("out=%.9f dev1=%.9f bound1=%.9f dev2=%.9f bound2=%.9f", o1.at(0),
                                dev1, c.rho * pair.maxdev1, dev2, c.rho * pair.maxdev2)});
        }
    }
    return out;
}

std::vector<CheckResult> check_lower_bound_realization() {
    std::vector<CheckResult> out;
    const int W = 10;
    const double c = 1.0, L = 1.0, gamma = 0.1;
    const long T = 500;

    for (double delta : {0.1, 0.2, 0.3}) {
        const int R = W - static_cast<int>(std::lround(delta * W));
        const double floor_value = delta * delta * c * c / 8.0;
        const double plateau_cap = 15.0 * delta * delta * c * c;

        for (agg::AggKind kind : {agg::AggKind::Mean, agg::AggKind::TriMean, agg::AggKind::CC,
                                  agg::AggKind::Faba}) {
            double worst = 0.0;
            for (int instance : {1, 2}) {
                const QuadraticInstance q = make_quadratic_instance(W, R, c, L, instance);
                worst = std::max(worst, run_quadratic(kind, q, T, gamma).avg_grad_sq);
            }
            out.push_back({strf("lower_bound.%s.delta%.1f", agg::to_string(kind).c_str(), delta),
                           worst >= floor_value - 1e-12,
                           strf("worse_instance=%.9f floor=%.9f", worst, floor_value)});
            if (kind == agg::AggKind::Mean) {
                out.push_back({strf("mean_plateau.delta%.1f", delta),
                               worst <= plateau_cap + 1e-12,
                               strf("worse_instance=%.9f cap=%.9f", worst, plateau_cap)});
            }
        }
    }
    return out;
}

std::vector<CheckResult> check_quadratic_audit() {
    std::vector<CheckResult> out;
    const int W = 10;
    const double tol = 1e-12;

    for (double delta : {0.1, 0.2, 0.3}) {
        const int R = W - static_cast<int>(std::lround(delta * W));
        for (int instance : {1, 2}) {
            const QuadraticInstance q = make_quadratic_instance(W, R, 1.0, 1.0, instance);
            auto model = make_quadratic_model(q);

            train::TrainOptions opt;
            opt.hp.W = W;
            opt.hp.R = R;
            opt.hp.T = 1;
            opt.hp.gamma = 0.1;
            opt.hp.alpha = 1.0;
            opt.hp.seed = 11;
            opt.agg.kind = agg::AggKind::Mean;
            opt.agg.assumed_regular = R;
            opt.attack.kind = attacks::AttackKind::StaticFlip;
            opt.attack.flip_prob = 0.0;
            opt.attack.num_poisoned = W - R;

            const std::vector<ModelParams> points = {{0.0, 0.0}, {0.3, -0.7}};
            double xi_err = 0.0, a_err = 0.0, sigma_err = 0.0, grad_err = 0.0;
            for (const ModelParams& x0 : points) {
                train::Trainer tr(*model, opt, quadratic_shards(q), x0);
                xi_err = std::max(xi_err, std::fabs(tr.measure_xi() - quad_xi_closed(q)));
                a_err = std::max(a_err, std::fabs(tr.measure_a() - quad_a_closed(q)));
                sigma_err = std::max(sigma_err, std::fabs(tr.measure_sigma2_max()));
                for (int w = 0; w < W; ++w) {
                    grad_err = std::max(grad_err, vec::dist(tr.worker_full_gradient(w),
                                                            quad_gradient(q, w, x0)));
                }
            }
            const std::string tag = strf("delta%.1f.inst%d", delta, instance);
            out.push_back({"audit.xi." + tag, xi_err <= tol, strf("max_err=%.3e", xi_err)});
            out.push_back({"audit.a." + tag, a_err <= tol, strf("max_err=%.3e", a_err)});
            out.push_back({"audit.sigma2." + tag, sigma_err <= tol, strf("max_err=%.3e", sigma_err)});
            out.push_back({"audit.worker_gradient." + tag, grad_err <= tol,
                           strf("max_err=%.3e", grad_err)});

            const std::vector<double> xstar = quad_minimizer(q);
            const double gnorm = vec::norm(quad_global_gradient(q, xstar));
            const double verr = std::fabs(quad_global_loss(q, xstar) - quad_min_value(q));
            out.push_back({"audit.minimizer." + tag, gnorm <= tol && verr <= tol,
                           strf("grad_norm=%.3e value_err=%.3e", gnorm, verr)});
        }
    }
    return out;
}

}  // namespace pb::theory
