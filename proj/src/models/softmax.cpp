#include <cassert>
#include <cmath>

#include "core/error.hpp"
#include "core/vec.hpp"
#include "models/model.hpp"

namespace pb::models {

std::vector<double> LossModel::sample_gradient(const ModelParams& x, const Sample& s) const {
    std::vector<double> g(param_dim(), 0.0);
    add_gradient(x, s.feature, s.label, 1.0, g);
    return g;
}

std::vector<double> full_gradient(const LossModel& model, const ModelParams& x,
                                  const std::vector<Sample>& samples) {
    if (samples.empty()) throw PropertyError("full_gradient: empty sample list");
    std::vector<double> g(model.param_dim(), 0.0);
    double scale = 1.0 / double(samples.size());
    for (const Sample& s : samples) model.add_gradient(x, s.feature, s.label, scale, g);
    return g;
}

double mean_loss(const LossModel& model, const ModelParams& x,
                 const std::vector<Sample>& samples) {
    if (samples.empty()) throw PropertyError("mean_loss: empty sample list");
    double acc = 0.0;
    for (const Sample& s : samples) acc += model.sample_loss(x, s);
    return acc / double(samples.size());
}

double accuracy(const LossModel& model, const ModelParams& x, const std::vector<Sample>& samples) {
    if (samples.empty()) throw PropertyError("accuracy: empty sample list");
    std::size_t hits = 0;
    for (const Sample& s : samples) {
        std::vector<double> p = model.predict_proba(x, s.feature);
        int arg = 0;
        for (int k = 1; k < int(p.size()); ++k)
            if (p[k] > p[arg]) arg = k;
        if (arg == s.label) ++hits;
    }
    return double(hits) / double(samples.size());
}

namespace {

class SoftmaxModel final : public LossModel {
public:
    SoftmaxModel(int K, int d) : K_(K), d_(d) {
        if (K < 2) throw ConfigError("softmax model: num_classes must be >= 2");
        if (d < 1) throw ConfigError("softmax model: feature_dim must be >= 1");
    }

    int param_dim() const override { return K_ * d_; }
    int num_classes() const override { return K_; }
    int feature_dim() const override { return d_; }

    double loss(const ModelParams& x, const std::vector<double>& a, int b) const override {
        check(x, a, b);
        std::vector<double> z = logits(x, a);
        double m = z[0];
        for (double v : z) m = std::max(m, v);
        double lse = 0.0;
        for (double v : z) lse += std::exp(v - m);
        return std::log(lse) - (z[b] - m);
    }

    void add_gradient(const ModelParams& x, const std::vector<double>& a, int b, double scale,
                      std::vector<double>& acc) const override {
        check(x, a, b);
        if (int(acc.size()) != param_dim())
            throw PropertyError("softmax add_gradient: bad accumulator dimension");
        std::vector<double> p = probs(x, a);
        for (int k = 0; k < K_; ++k) {
            double coef = scale * (p[k] - (k == b ? 1.0 : 0.0));
            double* out = acc.data() + std::size_t(k) * d_;
            for (int j = 0; j < d_; ++j) out[j] += coef * a[j];
        }
#ifndef NDEBUG
        // Per-sample gradient norm never exceeds twice the feature norm.
        std::vector<double> g(param_dim(), 0.0);
        add_gradient_unchecked(x, a, b, 1.0, g);
        assert(vec::norm(g) <= 2.0 * vec::norm(a) + 1e-9);
#endif
    }

    std::vector<double> predict_proba(const ModelParams& x,
                                      const std::vector<double>& a) const override {
        if (int(a.size()) != d_) throw PropertyError("softmax predict_proba: bad feature dim");
        if (int(x.size()) != param_dim()) throw PropertyError("softmax predict_proba: bad params");
        return probs(x, a);
    }

    ModelParams init_params(std::uint64_t) const override {
        return ModelParams(param_dim(), 0.0);
    }

private:
    void check(const ModelParams& x, const std::vector<double>& a, int b) const {
        if (int(x.size()) != param_dim()) throw PropertyError("softmax: bad parameter dimension");
        if (int(a.size()) != d_) throw PropertyError("softmax: bad feature dimension");
        if (b < 0 || b >= K_)
            throw PropertyError("softmax: label " + std::to_string(b) + " out of range");
    }

    std::vector<double> logits(const ModelParams& x, const std::vector<double>& a) const {
        std::vector<double> z(K_);
        for (int k = 0; k < K_; ++k) {
            const double* row = x.data() + std::size_t(k) * d_;
            double s = 0.0;
            for (int j = 0; j < d_; ++j) s += row[j] * a[j];
            z[k] = s;
        }
        return z;
    }

    std::vector<double> probs(const ModelParams& x, const std::vector<double>& a) const {
        std::vector<double> z = logits(x, a);
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

#ifndef NDEBUG
    void add_gradient_unchecked(const ModelParams& x, const std::vector<double>& a, int b,
                                double scale, std::vector<double>& acc) const {
        std::vector<double> p = probs(x, a);
        for (int k = 0; k < K_; ++k) {
            double coef = scale * (p[k] - (k == b ? 1.0 : 0.0));
            double* out = acc.data() + std::size_t(k) * d_;
            for (int j = 0; j < d_; ++j) out[j] += coef * a[j];
        }
    }
#endif

    int K_;
    int d_;
};

}  // namespace

std::unique_ptr<LossModel> make_softmax_model(int num_classes, int feature_dim) {
    return std::make_unique<SoftmaxModel>(num_classes, feature_dim);
}

}  // namespace pb::models
