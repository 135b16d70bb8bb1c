#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "core/types.hpp"

namespace pb::models {

// Per-sample differentiable loss over a flat parameter vector.
class LossModel {
public:
    virtual ~LossModel() = default;

    virtual int param_dim() const = 0;
    virtual int num_classes() const = 0;
    virtual int feature_dim() const = 0;

    virtual double loss(const ModelParams& x, const std::vector<double>& feature,
                        int label) const = 0;
    // acc += scale * grad of the sample loss at x.
    virtual void add_gradient(const ModelParams& x, const std::vector<double>& feature, int label,
                              double scale, std::vector<double>& acc) const = 0;
    virtual std::vector<double> predict_proba(const ModelParams& x,
                                              const std::vector<double>& feature) const = 0;
    virtual ModelParams init_params(std::uint64_t seed) const = 0;

    double sample_loss(const ModelParams& x, const Sample& s) const {
        return loss(x, s.feature, s.label);
    }
    std::vector<double> sample_gradient(const ModelParams& x, const Sample& s) const;
};

// Exact mean gradient over a sample list.
std::vector<double> full_gradient(const LossModel& model, const ModelParams& x,
                                  const std::vector<Sample>& samples);

double mean_loss(const LossModel& model, const ModelParams& x, const std::vector<Sample>& samples);

// Fraction of samples whose argmax predicted class (ties to the smallest
// index) equals the label.
double accuracy(const LossModel& model, const ModelParams& x, const std::vector<Sample>& samples);

// Multinomial logistic regression; parameter layout is one row of length
// feature_dim per class.
std::unique_ptr<LossModel> make_softmax_model(int num_classes, int feature_dim);

// Two hidden layers of 50 ReLU units, softmax cross-entropy output, exact
// backprop with subgradient 0 at the ReLU kink. Init draws weights and biases
// uniformly from +-1/sqrt(fan_in) on a dedicated stream.
std::unique_ptr<LossModel> make_mlp_model(int num_classes, int feature_dim);

}  // namespace pb::models
