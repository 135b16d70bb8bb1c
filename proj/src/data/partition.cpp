#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "data/dataset.hpp"

namespace pb::data {

namespace {

void shuffle_indices(std::vector<std::size_t>& v, RngStream& stream) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = stream.next_below(i);
        std::swap(v[i - 1], v[j]);
    }
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        int b = ds.samples[i].label;
        if (b < 0 || b >= ds.num_classes)
            throw PropertyError("dataset label out of range: sample " + std::to_string(i) +
                                " has label " + std::to_string(b));
        by_class[b].push_back(i);
    }
    return by_class;
}

std::vector<Shard> trim_to_common_size(std::vector<std::vector<std::size_t>> lists) {
    std::size_t J = SIZE_MAX;
    for (const auto& l : lists) J = std::min(J, l.size());
    std::vector<Shard> shards(lists.size());
    for (std::size_t w = 0; w < lists.size(); ++w) {
        lists[w].resize(J);
        shards[w].indices = std::move(lists[w]);
    }
    return shards;
}

}  // namespace

std::vector<Shard> partition_iid(std::size_t n, int W, RngStream& stream) {
    if (W < 1) throw ConfigError("partition_iid: W must be >= 1");
    std::size_t J = n / static_cast<std::size_t>(W);
    if (J == 0)
        throw ConfigError("partition_iid: need at least W samples (n=" + std::to_string(n) +
                          ", W=" + std::to_string(W) + ")");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle_indices(perm, stream);
    std::vector<Shard> shards(W);
    for (int w = 0; w < W; ++w)
        shards[w].indices.assign(perm.begin() + std::size_t(w) * J,
                                 perm.begin() + std::size_t(w + 1) * J);
    return shards;
}

std::vector<Shard> partition_dirichlet(const Dataset& ds, int W, double beta, RngStream& stream) {
    if (W < 1) throw ConfigError("partition_dirichlet: W must be >= 1");
    if (!(beta > 0.0)) throw ConfigError("partition.beta: must be > 0");
    const auto by_class = indices_by_class(ds);

    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<std::vector<std::size_t>> assigned(W);
        for (int k = 0; k < ds.num_classes; ++k) {
            std::vector<std::size_t> cls = by_class[k];
            shuffle_indices(cls, stream);
            std::vector<double> p(W);
            double sum = 0.0;
            for (int w = 0; w < W; ++w) {
                p[w] = stream.next_gamma(beta);
                sum += p[w];
            }
            if (!(sum > 0.0)) {
                assigned.clear();  // all-zero draw; scrap this attempt
                break;
            }
            double cum = 0.0;
            std::size_t start = 0;
            for (int w = 0; w < W; ++w) {
                cum += p[w] / sum;
                std::size_t end =
                    (w == W - 1) ? cls.size()
                                 : static_cast<std::size_t>(std::llround(cum * double(cls.size())));
                end = std::clamp(end, start, cls.size());
                for (std::size_t i = start; i < end; ++i) assigned[w].push_back(cls[i]);
                start = end;
            }
        }
        if (assigned.empty()) continue;
        bool any_empty = false;
        for (const auto& a : assigned)
            if (a.empty()) any_empty = true;
        if (any_empty) continue;
        // Shuffle before trimming so the trim removes a uniform subset rather
        // than biasing against later classes.
        for (auto& a : assigned) shuffle_indices(a, stream);
        return trim_to_common_size(std::move(assigned));
    }
    throw ConfigError("degenerate partition: some worker received zero samples in 100 attempts"
                      " (beta=" + std::to_string(beta) + ", W=" + std::to_string(W) + ")");
}

std::vector<Shard> partition_one_class(const Dataset& ds, int W) {
    if (W != ds.num_classes)
        throw ConfigError("partition.one_class: W (" + std::to_string(W) +
                          ") must equal the number of classes (" +
                          std::to_string(ds.num_classes) + ")");
    auto by_class = indices_by_class(ds);
    for (int k = 0; k < ds.num_classes; ++k)
        if (by_class[k].empty())
            throw ConfigError("partition.one_class: class " + std::to_string(k) +
                              " has no samples");
    return trim_to_common_size(std::move(by_class));
}

}  // namespace pb::data
