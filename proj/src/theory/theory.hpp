#pragma once

#include <memory>
#include <vector>

#include "core/types.hpp"
#include "models/model.hpp"

namespace pb::theory {

// Two-dimensional quadratic construction with per-worker linear tilts chosen
// by the worker's label (0 or 1): f(x; b) = (1-delta)*c/sqrt(2) * x[b]
// + (L/2)*||x||^2. Two label assignments ("instances") share the same label
// multiset, so no aggregator can tell them apart, yet their regular-mean
// objectives differ.
struct QuadraticInstance {
    int W = 10;
    int R = 9;
    double delta = 0.0;  // 1 - R/W
    double c = 1.0;
    double L = 1.0;
    int instance = 1;            // 1 or 2
    std::vector<int> labels;     // per-worker coordinate index
};

QuadraticInstance make_quadratic_instance(int W, int R, double c, double L, int instance);

// Per-worker gradient: (1-delta)*c/sqrt(2) * e_{label(w)} + L*x.
std::vector<double> quad_gradient(const QuadraticInstance& q, int worker,
                                  const std::vector<double>& x);

// Regular-mean objective gradient and value.
std::vector<double> quad_global_gradient(const QuadraticInstance& q, const std::vector<double>& x);
double quad_global_loss(const QuadraticInstance& q, const std::vector<double>& x);

// Closed forms for the measured constants (x-independent).
double quad_xi_closed(const QuadraticInstance& q);  // inst 1: 0; inst 2: max{|1-2d|, d}*c
double quad_a_closed(const QuadraticInstance& q);   // inst 1: (1-d)*c; inst 2: d*c
std::vector<double> quad_minimizer(const QuadraticInstance& q);
double quad_min_value(const QuadraticInstance& q);

// delta^2 * min{A, xi}^2 / 8: no identity-agnostic method can average below this.
double lower_bound_value(double delta, double A, double xi);

// LossModel view of an instance so the ordinary training loop can run on it.
// Sample labels select the tilt coordinate; features are ignored.
std::unique_ptr<models::LossModel> make_quadratic_model(const QuadraticInstance& q);
// One single-sample shard per worker, labels from the instance.
std::vector<std::vector<Sample>> quadratic_shards(const QuadraticInstance& q);

// Two one-dimensional message sets with equal value multisets but different
// regular means. Any permutation-invariant aggregator answers identically on
// both, so it cannot satisfy the contraction inequality on both.
// Regime 1 (delta >= 1/2): works for every rho. Regime 2 (delta < 1/2):
// requires rho < min{delta/(1-2*delta), 1}.
struct IndistinguishablePair {
    std::vector<std::vector<double>> set1, set2;
    double ybar1 = 0.0, ybar2 = 0.0;     // regular means
    double maxdev1 = 0.0, maxdev2 = 0.0; // regular max deviations
    int regime = 0;
};

IndistinguishablePair build_indistinguishable_sets(int W, int R, double rho);

// Softmax disturbance/heterogeneity bounds from non-negative features.
// A bound: 2*sqrt(K) * max over all workers of ||mean feature||.
double softmax_A_bound(const std::vector<std::vector<Sample>>& shards, int num_classes);

struct XiBounds {
    double upper = 0.0;      // 2*sqrt(K) * max regular ||mean feature||
    double het_lower = 0.0;  // (1-1/R)(1-1/K) * max regular ||mean feature||;
                             // valid at x=0 under one-class regular shards
};
XiBounds softmax_xi_bound(const std::vector<std::vector<Sample>>& regular_shards,
                          int num_classes);

enum class BoundKind { RobustAgg, Mean };

struct BoundInputs {
    double rho_or_delta = 0.0;
    double xi = 0.0;
    double A = 0.0;      // used by the Mean form's leading term
    double sigma = 0.0;
    double F0 = 0.0;
    double L = 1.0;
    int R = 1;
    long T = 1;
    double grad0_norm = 0.0;  // subtracted credit; 0 is the conservative choice
};

// Full non-asymptotic error bound on the averaged squared gradient norm.
double theorem_error_bound(BoundKind kind, const BoundInputs& in);

}  // namespace pb::theory
