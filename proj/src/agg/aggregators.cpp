#include "agg/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/vec.hpp"

namespace pb::agg {

namespace {

void check_messages(const std::vector<std::vector<double>>& ys, const char* where) {
    if (ys.empty()) throw PropertyError(std::string(where) + ": no messages");
    for (std::size_t w = 1; w < ys.size(); ++w)
        if (ys[w].size() != ys[0].size())
            throw PropertyError(std::string(where) + ": message dimension mismatch at worker " +
                                std::to_string(w));
}

}  // namespace

std::string to_string(AggKind k) {
    switch (k) {
        case AggKind::Mean: return "mean";
        case AggKind::TriMean: return "trimean";
        case AggKind::CC: return "cc";
        case AggKind::Faba: return "faba";
    }
    return "?";
}

AggKind agg_kind_from_string(const std::string& s) {
    if (s == "mean") return AggKind::Mean;
    if (s == "trimean") return AggKind::TriMean;
    if (s == "cc") return AggKind::CC;
    if (s == "faba") return AggKind::Faba;
    throw ConfigError("aggregator.kind: unknown aggregator '" + s +
                      "' (want mean|trimean|cc|faba)");
}

std::vector<double> mean_agg(const std::vector<std::vector<double>>& ys) {
    check_messages(ys, "mean_agg");
    std::vector<double> out(ys[0].size(), 0.0);
    for (const auto& y : ys) vec::add_inplace(out, y);
    vec::scale_inplace(out, 1.0 / double(ys.size()));
    return out;
}

std::vector<double> trimean_agg(const std::vector<std::vector<double>>& ys, int R) {
    check_messages(ys, "trimean_agg");
    const int W = int(ys.size());
    if (R < 1 || R > W) throw ConfigError("trimean: assumed_regular out of range");
    const int drop = W - R;
    const int keep = 2 * R - W;
    if (keep < 1)
        throw ConfigError("trimean: needs 2*assumed_regular - W >= 1 (W=" + std::to_string(W) +
                          ", assumed_regular=" + std::to_string(R) + ")");
    const std::size_t dim = ys[0].size();
    const double inv_keep = 1.0 / double(keep);
    std::vector<double> out(dim, 0.0);
    std::vector<int> order(W);
    std::vector<char> survives(W);
    for (std::size_t j = 0; j < dim; ++j) {
        for (int w = 0; w < W; ++w) order[w] = w;
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return ys[a][j] < ys[b][j]; });
        std::fill(survives.begin(), survives.end(), 0);
        for (int r = drop; r < W - drop; ++r) survives[order[r]] = 1;
        // Accumulate survivors in worker-index order and scale by the same
        // reciprocal mean_agg uses, so drop == 0 matches it exactly.
        double s = 0.0;
        for (int w = 0; w < W; ++w)
            if (survives[w]) s += ys[w][j];
        out[j] = s * inv_keep;
    }
    return out;
}

std::vector<double> cc_agg(const std::vector<std::vector<double>>& ys, double tau, int iters,
                           const std::vector<double>& v0) {
    check_messages(ys, "cc_agg");
    if (!(tau >= 0.0)) throw ConfigError("cc: tau must be >= 0");
    if (iters < 1) throw ConfigError("cc: iters must be >= 1");
    if (v0.size() != ys[0].size()) throw PropertyError("cc_agg: start dimension mismatch");
    const std::size_t dim = ys[0].size();
    const double invW = 1.0 / double(ys.size());
    std::vector<double> v = v0;
    std::vector<double> acc(dim);
    std::vector<double> diff(dim);
    for (int it = 0; it < iters; ++it) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (const auto& y : ys) {
            for (std::size_t j = 0; j < dim; ++j) diff[j] = y[j] - v[j];
            double n = vec::norm(diff);
            double c = (n > tau) ? tau / n : 1.0;
            for (std::size_t j = 0; j < dim; ++j) acc[j] += c * diff[j];
        }
        for (std::size_t j = 0; j < dim; ++j) v[j] = v[j] + invW * acc[j];
    }
    return v;
}

std::vector<double> faba_agg(const std::vector<std::vector<double>>& ys, int R) {
    check_messages(ys, "faba_agg");
    const int W = int(ys.size());
    if (R < 1 || R > W) throw ConfigError("faba: assumed_regular out of range");
    const std::size_t dim = ys[0].size();
    std::vector<char> alive(W, 1);
    int alive_count = W;
    std::vector<double> center(dim);
    for (int round = 0; round < W - R; ++round) {
        std::fill(center.begin(), center.end(), 0.0);
        for (int w = 0; w < W; ++w)
            if (alive[w]) vec::add_inplace(center, ys[w]);
        vec::scale_inplace(center, 1.0 / double(alive_count));
        // Farthest from the survivors' mean goes. Distance ties are broken by
        // the larger message norm so the removed value never depends on sender
        // order (equal multisets must stay indistinguishable); exact norm ties
        // fall back to the smallest index.
        int worst = -1;
        double worst_d = -1.0;
        double worst_n = -1.0;
        for (int w = 0; w < W; ++w) {
            if (!alive[w]) continue;
            const double d = vec::dist_sq(ys[w], center);
            if (d < worst_d) continue;
            const double n = vec::norm_sq(ys[w]);
            if (d > worst_d || n > worst_n) {
                worst_d = d;
                worst_n = n;
                worst = w;
            }
        }
        alive[worst] = 0;
        --alive_count;
    }
    std::vector<double> out(dim, 0.0);
    for (int w = 0; w < W; ++w)
        if (alive[w]) vec::add_inplace(out, ys[w]);
    vec::scale_inplace(out, 1.0 / double(alive_count));
    return out;
}

ServerAggregator::ServerAggregator(AggregatorSpec spec, int W, int dim)
    : spec_(spec), W_(W), prev_(dim, 0.0) {
    if (spec_.assumed_regular == 0)
        throw PropertyError("ServerAggregator: assumed_regular must be resolved");
    if (spec_.kind == AggKind::TriMean && 2 * spec_.assumed_regular - W < 1)
        throw ConfigError("aggregator.assumed_regular: trimean needs 2*assumed_regular - W >= 1");
}

std::vector<double> ServerAggregator::apply(const std::vector<std::vector<double>>& ys) {
    if (int(ys.size()) != W_) throw PropertyError("ServerAggregator: wrong message count");
    std::vector<double> out;
    switch (spec_.kind) {
        case AggKind::Mean: out = mean_agg(ys); break;
        case AggKind::TriMean: out = trimean_agg(ys, spec_.assumed_regular); break;
        case AggKind::Faba: out = faba_agg(ys, spec_.assumed_regular); break;
        case AggKind::CC: {
            std::vector<double> v0 =
                spec_.cc_start_previous ? prev_ : std::vector<double>(ys[0].size(), 0.0);
            out = cc_agg(ys, spec_.cc_tau, spec_.cc_iters, v0);
            break;
        }
    }
    prev_ = out;
    return out;
}

double rho_formula(AggKind kind, double delta, int dim, int R) {
    if (!(delta >= 0.0)) throw ConfigError("rho_formula: delta must be >= 0");
    switch (kind) {
        case AggKind::TriMean:
            if (delta >= 0.5)
                throw ConfigError("rho_formula: trimean has no contraction constant at delta >= 1/2");
            return 3.0 * delta / (1.0 - 2.0 * delta) *
                   std::min(std::sqrt(double(dim)), std::sqrt(double(R)));
        case AggKind::CC:
            if (delta >= 0.5)
                throw ConfigError("rho_formula: cc has no contraction constant at delta >= 1/2");
            return std::sqrt(24.0 * delta);
        case AggKind::Faba:
            if (delta >= 1.0 / 3.0)
                throw ConfigError("rho_formula: faba has no contraction constant at delta >= 1/3");
            return 2.0 * delta / (1.0 - 3.0 * delta);
        case AggKind::Mean:
            throw ConfigError("rho_formula: mean is not a robust aggregator");
    }
    throw ConfigError("rho_formula: unknown aggregator");
}

double rho_lower_bound(double delta) {
    if (!(delta >= 0.0 && delta < 0.5))
        throw ConfigError("rho_lower_bound: requires 0 <= delta < 1/2");
    return std::min(delta / (1.0 - 2.0 * delta), 1.0);
}

namespace {

std::vector<double> random_unit(int dim, RngStream& stream) {
    std::vector<double> u(dim);
    double n = 0.0;
    for (double& v : u) {
        v = stream.next_gaussian();
        n += v * v;
    }
    n = std::sqrt(n);
    if (n < 1e-300) {
        std::fill(u.begin(), u.end(), 0.0);
        u[0] = 1.0;
        return u;
    }
    for (double& v : u) v /= n;
    return u;
}

}  // namespace

CertifyResult certify_contraction(const AggregatorSpec& spec, const CertifyOptions& opt,
                                  RngStream& stream) {
    const int W = opt.W, R = opt.R, dim = opt.dim;
    if (R < 1 || R > W) throw ConfigError("certify_contraction: need 1 <= R <= W");
    if (dim < 1) throw ConfigError("certify_contraction: dim must be >= 1");
    const double delta = 1.0 - double(R) / double(W);

    CertifyResult res;
    std::vector<std::vector<double>> ys(W);
    for (int trial = 0; trial < opt.trials; ++trial) {
        const double scale = std::pow(10.0, 2.0 * stream.next_unit() - 1.0);
        std::vector<double> center(dim);
        for (double& v : center) v = 2.0 * stream.next_unit() - 1.0;

        for (int w = 0; w < R; ++w) {
            ys[w] = center;
            for (int j = 0; j < dim; ++j) ys[w][j] += scale * stream.next_gaussian();
        }
        std::vector<double> ybar(dim, 0.0);
        for (int w = 0; w < R; ++w) vec::add_inplace(ybar, ys[w]);
        vec::scale_inplace(ybar, 1.0 / double(R));
        double maxdev = 0.0;
        int extreme = 0;
        for (int w = 0; w < R; ++w) {
            double d = vec::dist(ys[w], ybar);
            if (d > maxdev) {
                maxdev = d;
                extreme = w;
            }
        }
        if (maxdev < 1e-12) continue;

        switch (trial % 3) {
            case 0: {  // distant cluster along a random ray
                std::vector<double> u = random_unit(dim, stream);
                double m = std::pow(10.0, 3.0 * stream.next_unit());
                for (int w = R; w < W; ++w) {
                    ys[w] = ybar;
                    vec::axpy(ys[w], m * maxdev, u);
                }
                break;
            }
            case 1: {  // reflected through the regular mean
                double kappa = 0.5 + 2.5 * stream.next_unit();
                for (int w = R; w < W; ++w) {
                    ys[w] = ybar;
                    for (int j = 0; j < dim; ++j)
                        ys[w][j] -= kappa * (ys[extreme][j] - ybar[j]);
                }
                break;
            }
            case 2: {  // sitting on the most extreme regular message
                for (int w = R; w < W; ++w) ys[w] = ys[extreme];
                break;
            }
        }

        std::vector<double> out;
        switch (spec.kind) {
            case AggKind::Mean: out = mean_agg(ys); break;
            case AggKind::TriMean: out = trimean_agg(ys, R); break;
            case AggKind::Faba: out = faba_agg(ys, R); break;
            case AggKind::CC: {
                // Certified one-step recipe.
                std::vector<double> v0 = ybar;
                vec::axpy(v0, stream.next_unit() * maxdev, random_unit(dim, stream));
                double tau = (delta > 0.0)
                                 ? std::sqrt(4.0 * (1.0 - delta) / delta) * maxdev
                                 : std::numeric_limits<double>::infinity();
                out = cc_agg(ys, tau, 1, v0);
                break;
            }
        }
        double ratio = vec::dist(out, ybar) / maxdev;
        res.max_ratio = std::max(res.max_ratio, ratio);
        ++res.counted;
    }
    return res;
}

}  // namespace pb::agg
