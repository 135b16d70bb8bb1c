#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace pb {

// Flat parameter vector; each model defines the layout and its total dimension.
using ModelParams = std::vector<double>;

struct Sample {
    std::vector<double> feature;
    int label = 0;
};

struct HyperParams {
    int W = 10;               // total workers
    int R = 9;                // regular (non-poisoned) workers
    long T = 1000;            // iterations
    double gamma = 0.01;      // server step size
    double alpha = 0.1;       // momentum mixing coefficient
    std::uint64_t seed = 1;
};

inline void validate(const HyperParams& hp) {
    if (hp.W < 1) throw ConfigError("hyper.W: must be >= 1, got " + std::to_string(hp.W));
    if (hp.R < 1 || hp.R > hp.W)
        throw ConfigError("hyper.R: must satisfy 1 <= R <= W, got R=" + std::to_string(hp.R) +
                          " W=" + std::to_string(hp.W));
    if (hp.T < 0) throw ConfigError("hyper.T: must be >= 0, got " + std::to_string(hp.T));
    if (!(hp.gamma > 0.0)) throw ConfigError("hyper.gamma: must be > 0");
    if (!(hp.alpha > 0.0) || hp.alpha > 1.0) throw ConfigError("hyper.alpha: must be in (0, 1]");
}

}  // namespace pb
