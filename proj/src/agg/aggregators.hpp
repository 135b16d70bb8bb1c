#pragma once

#include <string>
#include <vector>

#include "core/rng.hpp"

namespace pb::agg {

enum class AggKind { Mean, TriMean, CC, Faba };

struct AggregatorSpec {
    AggKind kind = AggKind::Mean;
    int assumed_regular = 0;       // 0: resolve to the run's R
    double cc_tau = 10.0;
    int cc_iters = 1;
    bool cc_start_previous = true; // false: every call starts from zero
};

std::string to_string(AggKind k);
AggKind agg_kind_from_string(const std::string& s);

// Plain average, summed in worker-index order.
std::vector<double> mean_agg(const std::vector<std::vector<double>>& ys);

// Coordinate-wise trimmed mean: per dimension drop the W-R smallest and W-R
// largest values (ties keep worker order) and average the 2R-W left.
// Requires 2R-W >= 1. Survivors are summed in worker-index order, so R == W
// reproduces mean_agg bit for bit.
std::vector<double> trimean_agg(const std::vector<std::vector<double>>& ys, int R);

// Iterated centered clipping from v0: v <- v + (1/W) sum_w CLIP(y_w - v, tau).
std::vector<double> cc_agg(const std::vector<std::vector<double>>& ys, double tau, int iters,
                           const std::vector<double>& v0);

// W-R rounds of removing the message farthest (l2) from the survivors' mean,
// then the survivors' mean. Distance ties drop the larger-norm message first
// (keeping the output a function of the value multiset); exact norm ties go
// to the smallest worker index.
std::vector<double> faba_agg(const std::vector<std::vector<double>>& ys, int R);

// Stateful wrapper used by the training loop; CC can restart from the
// previous aggregate.
class ServerAggregator {
public:
    ServerAggregator(AggregatorSpec spec, int W, int dim);
    std::vector<double> apply(const std::vector<std::vector<double>>& ys);
    const AggregatorSpec& spec() const { return spec_; }

private:
    AggregatorSpec spec_;
    int W_;
    std::vector<double> prev_;
};

// Contraction constant certified for the aggregator at delta = 1 - R/W.
// TriMean: 3*delta/(1-2*delta) * min(sqrt(dim), sqrt(R)), delta < 1/2.
// CC (one step, oracle start/radius): sqrt(24*delta), delta < 1/2.
// FABA: 2*delta/(1-3*delta), delta < 1/3.
double rho_formula(AggKind kind, double delta, int dim, int R);

// No aggregator can beat min{delta/(1-2*delta), 1}; none exists at delta >= 1/2.
double rho_lower_bound(double delta);

struct CertifyOptions {
    int trials = 1000;
    int W = 10;
    int R = 9;
    int dim = 3;
};

struct CertifyResult {
    double max_ratio = 0.0;
    int counted = 0;
};

// Randomized adversarial estimate of the contraction ratio
// ||agg - regular_mean|| / max_regular_deviation. Poisoned placements rotate
// through three strategies: a distant cluster along a random ray, a cluster
// reflected through the regular mean opposite the most extreme regular
// message, and a cluster sitting exactly on that extreme regular message.
// For CC the harness uses the certified one-step recipe: start within the
// regular max deviation of the regular mean, clipping radius
// sqrt(4*(1-delta)/delta) * max deviation.
CertifyResult certify_contraction(const AggregatorSpec& spec, const CertifyOptions& opt,
                                  RngStream& stream);

}  // namespace pb::agg
