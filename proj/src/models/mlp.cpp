#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "models/model.hpp"

namespace pb::models {

namespace {

constexpr int kHidden = 50;

// Layout: W1[kHidden x d], b1[kHidden], W2[kHidden x kHidden], b2[kHidden],
// W3[K x kHidden], b3[K]; all matrices row-major.
class MlpModel final : public LossModel {
public:
    MlpModel(int K, int d) : K_(K), d_(d) {
        if (K < 2) throw ConfigError("mlp model: num_classes must be >= 2");
        if (d < 1) throw ConfigError("mlp model: feature_dim must be >= 1");
        o_w1_ = 0;
        o_b1_ = o_w1_ + kHidden * d_;
        o_w2_ = o_b1_ + kHidden;
        o_b2_ = o_w2_ + kHidden * kHidden;
        o_w3_ = o_b2_ + kHidden;
        o_b3_ = o_w3_ + K_ * kHidden;
        dim_ = o_b3_ + K_;
    }

    int param_dim() const override { return dim_; }
    int num_classes() const override { return K_; }
    int feature_dim() const override { return d_; }

    double loss(const ModelParams& x, const std::vector<double>& a, int b) const override {
        check(x, a, b);
        Fwd f = forward(x, a);
        double m = f.z3[0];
        for (double v : f.z3) m = std::max(m, v);
        double lse = 0.0;
        for (double v : f.z3) lse += std::exp(v - m);
        return std::log(lse) - (f.z3[b] - m);
    }

    void add_gradient(const ModelParams& x, const std::vector<double>& a, int b, double scale,
                      std::vector<double>& acc) const override {
        check(x, a, b);
        if (int(acc.size()) != dim_) throw PropertyError("mlp add_gradient: bad accumulator");
        Fwd f = forward(x, a);

        std::vector<double> dz3 = softmax(f.z3);
        dz3[b] -= 1.0;

        const double* w3 = x.data() + o_w3_;
        const double* w2 = x.data() + o_w2_;
        double* g = acc.data();

        for (int k = 0; k < K_; ++k) {
            double c = scale * dz3[k];
            double* row = g + o_w3_ + std::size_t(k) * kHidden;
            for (int j = 0; j < kHidden; ++j) row[j] += c * f.h2[j];
            g[o_b3_ + k] += c;
        }

        std::vector<double> dz2(kHidden, 0.0);
        for (int j = 0; j < kHidden; ++j) {
            if (f.z2[j] <= 0.0) continue;  // ReLU subgradient 0 at the kink
            double s = 0.0;
            for (int k = 0; k < K_; ++k) s += w3[std::size_t(k) * kHidden + j] * dz3[k];
            dz2[j] = s;
        }
        for (int j = 0; j < kHidden; ++j) {
            if (dz2[j] == 0.0) continue;
            double c = scale * dz2[j];
            double* row = g + o_w2_ + std::size_t(j) * kHidden;
            for (int i = 0; i < kHidden; ++i) row[i] += c * f.h1[i];
            g[o_b2_ + j] += c;
        }

        std::vector<double> dz1(kHidden, 0.0);
        for (int i = 0; i < kHidden; ++i) {
            if (f.z1[i] <= 0.0) continue;
            double s = 0.0;
            for (int j = 0; j < kHidden; ++j) s += w2[std::size_t(j) * kHidden + i] * dz2[j];
            dz1[i] = s;
        }
        for (int i = 0; i < kHidden; ++i) {
            if (dz1[i] == 0.0) continue;
            double c = scale * dz1[i];
            double* row = g + o_w1_ + std::size_t(i) * d_;
            for (int j = 0; j < d_; ++j) row[j] += c * a[j];
            g[o_b1_ + i] += c;
        }
    }

    std::vector<double> predict_proba(const ModelParams& x,
                                      const std::vector<double>& a) const override {
        if (int(x.size()) != dim_) throw PropertyError("mlp predict_proba: bad params");
        if (int(a.size()) != d_) throw PropertyError("mlp predict_proba: bad feature dim");
        return softmax(forward(x, a).z3);
    }

    ModelParams init_params(std::uint64_t seed) const override {
        RngStream st = derive_stream(seed, 0, "mlp-init");
        ModelParams x(dim_);
        auto fill = [&](std::size_t off, std::size_t count, int fan_in) {
            double bound = 1.0 / std::sqrt(double(fan_in));
            for (std::size_t i = 0; i < count; ++i)
                x[off + i] = bound * (2.0 * st.next_unit() - 1.0);
        };
        fill(o_w1_, std::size_t(kHidden) * d_, d_);
        fill(o_b1_, kHidden, d_);
        fill(o_w2_, std::size_t(kHidden) * kHidden, kHidden);
        fill(o_b2_, kHidden, kHidden);
        fill(o_w3_, std::size_t(K_) * kHidden, kHidden);
        fill(o_b3_, K_, kHidden);
        return x;
    }

private:
    struct Fwd {
        std::vector<double> z1, h1, z2, h2, z3;
    };

    void check(const ModelParams& x, const std::vector<double>& a, int b) const {
        if (int(x.size()) != dim_) throw PropertyError("mlp: bad parameter dimension");
        if (int(a.size()) != d_) throw PropertyError("mlp: bad feature dimension");
        if (b < 0 || b >= K_)
            throw PropertyError("mlp: label " + std::to_string(b) + " out of range");
    }

    Fwd forward(const ModelParams& x, const std::vector<double>& a) const {
        Fwd f;
        f.z1.resize(kHidden);
        f.h1.resize(kHidden);
        for (int i = 0; i < kHidden; ++i) {
            const double* row = x.data() + o_w1_ + std::size_t(i) * d_;
            double s = x[o_b1_ + i];
            for (int j = 0; j < d_; ++j) s += row[j] * a[j];
            f.z1[i] = s;
            f.h1[i] = s > 0.0 ? s : 0.0;
        }
        f.z2.resize(kHidden);
        f.h2.resize(kHidden);
        for (int j = 0; j < kHidden; ++j) {
            const double* row = x.data() + o_w2_ + std::size_t(j) * kHidden;
            double s = x[o_b2_ + j];
            for (int i = 0; i < kHidden; ++i) s += row[i] * f.h1[i];
            f.z2[j] = s;
            f.h2[j] = s > 0.0 ? s : 0.0;
        }
        f.z3.resize(K_);
        for (int k = 0; k < K_; ++k) {
            const double* row = x.data() + o_w3_ + std::size_t(k) * kHidden;
            double s = x[o_b3_ + k];
            for (int j = 0; j < kHidden; ++j) s += row[j] * f.h2[j];
            f.z3[k] = s;
        }
        return f;
    }

    static std::vector<double> softmax(std::vector<double> z) {
        double m = z[0];
        for (double v : z) m = std::max(m, v);
        double sum = 0.0;
        for (double& v : z) {
            v = std::exp(v - m);
            sum += v;
        }
        for (double& v : z) v /= sum;
        return z;
    }

    int K_;
    int d_;
    std::size_t o_w1_, o_b1_, o_w2_, o_b2_, o_w3_, o_b3_;
    int dim_;
};

}  // namespace

std::unique_ptr<LossModel> make_mlp_model(int num_classes, int feature_dim) {
    return std::make_unique<MlpModel>(num_classes, feature_dim);
}

}  // namespace pb::models
