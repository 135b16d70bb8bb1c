#include "theory/theory.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/vec.hpp"

namespace pb::theory {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;

double tilt(const QuadraticInstance& q) { return (1.0 - q.delta) * q.c / kSqrt2; }
}  // namespace

QuadraticInstance make_quadratic_instance(int W, int R, double c, double L, int instance) {
    if (W < 2 || R < 1 || R > W) throw ConfigError("quadratic instance: need 1 <= R <= W, W >= 2");
    if (2 * R < W)
        throw ConfigError("quadratic instance: needs delta <= 1/2 (2R >= W)");
    if (!(c >= 0.0) || !(L > 0.0)) throw ConfigError("quadratic instance: need c >= 0, L > 0");
    if (instance != 1 && instance != 2) throw ConfigError("quadratic instance: instance is 1 or 2");
    QuadraticInstance q;
    q.W = W;
    q.R = R;
    q.delta = 1.0 - double(R) / double(W);
    q.c = c;
    q.L = L;
    q.instance = instance;
    q.labels.resize(W);
    for (int w = 0; w < W; ++w) {
        // Instance 1: regular workers tilt coordinate 0, poisoned tilt 1.
        // Instance 2: first W-R workers tilt 1, the rest tilt 0. Same multiset.
        if (instance == 1)
            q.labels[w] = (w < R) ? 0 : 1;
        else
            q.labels[w] = (w < W - R) ? 1 : 0;
    }
    return q;
}

std::vector<double> quad_gradient(const QuadraticInstance& q, int worker,
                                  const std::vector<double>& x) {
    if (x.size() != 2) throw PropertyError("quad_gradient: x must be 2-dimensional");
    std::vector<double> g = {q.L * x[0], q.L * x[1]};
    g[q.labels.at(worker)] += tilt(q);
    return g;
}

std::vector<double> quad_global_gradient(const QuadraticInstance& q,
                                         const std::vector<double>& x) {
    if (x.size() != 2) throw PropertyError("quad_global_gradient: x must be 2-dimensional");
    std::vector<double> g = {q.L * x[0], q.L * x[1]};
    double share[2] = {0.0, 0.0};
    for (int w = 0; w < q.R; ++w) share[q.labels[w]] += 1.0 / double(q.R);
    g[0] += tilt(q) * share[0];
    g[1] += tilt(q) * share[1];
    return g;
}

double quad_global_loss(const QuadraticInstance& q, const std::vector<double>& x) {
    if (x.size() != 2) throw PropertyError("quad_global_loss: x must be 2-dimensional");
    double share[2] = {0.0, 0.0};
    for (int w = 0; w < q.R; ++w) share[q.labels[w]] += 1.0 / double(q.R);
    return tilt(q) * (share[0] * x[0] + share[1] * x[1]) +
           0.5 * q.L * (x[0] * x[0] + x[1] * x[1]);
}

double quad_xi_closed(const QuadraticInstance& q) {
    if (q.instance == 1) return 0.0;
    return std::max(std::abs(1.0 - 2.0 * q.delta), q.delta) * q.c;
}

double quad_a_closed(const QuadraticInstance& q) {
    return (q.instance == 1 ? 1.0 - q.delta : q.delta) * q.c;
}

std::vector<double> quad_minimizer(const QuadraticInstance& q) {
    double s = q.c / (kSqrt2 * q.L);
    if (q.instance == 1) return {-(1.0 - q.delta) * s, 0.0};
    return {-(1.0 - 2.0 * q.delta) * s, -q.delta * s};
}

double quad_min_value(const QuadraticInstance& q) {
    double scale = q.c * q.c / (4.0 * q.L);
    if (q.instance == 1) return -(1.0 - q.delta) * (1.0 - q.delta) * scale;
    double a = 1.0 - 2.0 * q.delta;
    return -(a * a + q.delta * q.delta) * scale;
}

double lower_bound_value(double delta, double A, double xi) {
    double m = std::min(A, xi);
    return delta * delta * m * m / 8.0;
}

namespace {

class QuadraticModel final : public models::LossModel {
public:
    explicit QuadraticModel(QuadraticInstance q) : q_(std::move(q)) {}

    int param_dim() const override { return 2; }
    int num_classes() const override { return 2; }
    int feature_dim() const override { return 1; }

    double loss(const ModelParams& x, const std::vector<double>&, int b) const override {
        check(x, b);
        return tilt(q_) * x[b] + 0.5 * q_.L * (x[0] * x[0] + x[1] * x[1]);
    }

    void add_gradient(const ModelParams& x, const std::vector<double>&, int b, double scale,
                      std::vector<double>& acc) const override {
        check(x, b);
        if (acc.size() != 2) throw PropertyError("quadratic model: bad accumulator");
        acc[b] += scale * tilt(q_);
        acc[0] += scale * q_.L * x[0];
        acc[1] += scale * q_.L * x[1];
    }

    std::vector<double> predict_proba(const ModelParams&,
                                      const std::vector<double>&) const override {
        throw PropertyError("quadratic model: not a classifier");
    }

    ModelParams init_params(std::uint64_t) const override { return {0.0, 0.0}; }

private:
    void check(const ModelParams& x, int b) const {
        if (x.size() != 2) throw PropertyError("quadratic model: bad parameter dimension");
        if (b != 0 && b != 1) throw PropertyError("quadratic model: label out of range");
    }

    QuadraticInstance q_;
};

}  // namespace

std::unique_ptr<models::LossModel> make_quadratic_model(const QuadraticInstance& q) {
    return std::make_unique<QuadraticModel>(q);
}

std::vector<std::vector<Sample>> quadratic_shards(const QuadraticInstance& q) {
    std::vector<std::vector<Sample>> shards(q.W);
    for (int w = 0; w < q.W; ++w) shards[w] = {Sample{{0.0}, q.labels[w]}};
    return shards;
}

IndistinguishablePair build_indistinguishable_sets(int W, int R, double rho) {
    if (W < 2 || R < 1 || R > W)
        throw ConfigError("indistinguishable sets: need 1 <= R <= W, W >= 2");
    if (!(rho >= 0.0)) throw ConfigError("indistinguishable sets: rho must be >= 0");
    const double delta = 1.0 - double(R) / double(W);
    IndistinguishablePair p;
    auto one = [](double v) { return std::vector<double>{v}; };
    if (delta >= 0.5) {
        p.regime = 1;
        // R zeros, R copies of rho+1, then zeros; the rearrangement starts
        // with the rho+1 block. Regular means differ by rho+1.
        for (int w = 0; w < W; ++w)
            p.set1.push_back(one(w >= R && w < 2 * R ? rho + 1.0 : 0.0));
        for (int w = 0; w < W; ++w) p.set2.push_back(one(w < R ? rho + 1.0 : 0.0));
        p.ybar1 = 0.0;
        p.maxdev1 = 0.0;
        p.ybar2 = rho + 1.0;
        p.maxdev2 = 0.0;
    } else {
        if (!(rho < std::min(delta / (1.0 - 2.0 * delta), 1.0)))
            throw ConfigError(
                "indistinguishable sets: at delta < 1/2 need rho < min{delta/(1-2*delta), 1}");
        p.regime = 2;
        for (int w = 0; w < W; ++w) p.set1.push_back(one(w < R ? 0.0 : 1.0));
        for (int w = 0; w < W; ++w) p.set2.push_back(one(w < W - R ? 1.0 : 0.0));
        p.ybar1 = 0.0;
        p.maxdev1 = 0.0;
        p.ybar2 = double(W - R) / double(R);  // = delta/(1-delta)
        p.maxdev2 = std::max(1.0 - 2.0 * delta, delta) / (1.0 - delta);
    }
    return p;
}

double softmax_A_bound(const std::vector<std::vector<Sample>>& shards, int num_classes) {
    if (shards.empty()) throw PropertyError("softmax_A_bound: no shards");
    double worst = 0.0;
    for (std::size_t w = 0; w < shards.size(); ++w) {
        const auto& shard = shards[w];
        if (shard.empty()) throw PropertyError("softmax_A_bound: empty shard");
        std::vector<double> mean(shard[0].feature.size(), 0.0);
        for (std::size_t i = 0; i < shard.size(); ++i) {
            const Sample& s = shard[i];
            for (std::size_t j = 0; j < s.feature.size(); ++j) {
                if (s.feature[j] < 0.0)
                    throw ConfigError("softmax_A_bound: negative feature at worker " +
                                      std::to_string(w) + ", sample " + std::to_string(i) +
                                      ", coordinate " + std::to_string(j));
                mean[j] += s.feature[j];
            }
        }
        vec::scale_inplace(mean, 1.0 / double(shard.size()));
        worst = std::max(worst, vec::norm(mean));
    }
    return 2.0 * std::sqrt(double(num_classes)) * worst;
}

XiBounds softmax_xi_bound(const std::vector<std::vector<Sample>>& regular_shards,
                          int num_classes) {
    if (regular_shards.empty()) throw PropertyError("softmax_xi_bound: no shards");
    const int R = int(regular_shards.size());
    const int K = num_classes;
    double worst = softmax_A_bound(regular_shards, K) / (2.0 * std::sqrt(double(K)));
    XiBounds b;
    b.upper = 2.0 * std::sqrt(double(K)) * worst;
    b.het_lower = (1.0 - 1.0 / double(R)) * (1.0 - 1.0 / double(K)) * worst;
    return b;
}

double theorem_error_bound(BoundKind kind, const BoundInputs& in) {
    if (!(in.L > 0.0)) throw ConfigError("theorem_error_bound: L must be > 0");
    if (in.R < 1) throw ConfigError("theorem_error_bound: R must be >= 1");
    if (in.T < 1) throw ConfigError("theorem_error_bound: T must be >= 1");
    const double s2 = in.sigma * in.sigma;
    const double R = double(in.R);
    const double T = double(in.T);
    const double Rr = R + 1.0 / R;
    if (kind == BoundKind::RobustAgg) {
        const double r2 = in.rho_or_delta * in.rho_or_delta;
        return 15.0 * r2 * in.xi * in.xi +
               std::sqrt(20.0 * in.L * s2 * (2.0 / R + 3.0 * r2 * Rr) / T) *
                   std::sqrt(32.0 * in.F0 + 15.0 / in.L * r2 * Rr * s2) +
               32.0 * in.L * in.F0 / T + 15.0 * r2 * Rr * s2 / T +
               (10.0 * s2 / R + 12.0 * r2 * (Rr * s2 + in.xi * in.xi) - in.grad0_norm) / T;
    }
    const double d2 = in.rho_or_delta * in.rho_or_delta;
    return 15.0 * d2 * in.A * in.A +
           std::sqrt(20.0 * in.L * s2 * (2.0 / R + 6.0 * d2) / T) *
               std::sqrt(32.0 * in.F0 + 30.0 / in.L * d2 * s2) +
           32.0 * in.L * in.F0 / T + 30.0 * d2 * s2 / T +
           (10.0 * s2 / R + 24.0 * d2 * (s2 + in.xi * in.xi) - in.grad0_norm) / T;
}

}  // namespace pb::theory
