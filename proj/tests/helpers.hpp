#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace testutil {

// Bitwise equality, so degeneration identities can be checked exactly.
inline bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fresh scratch directory under the test working directory.
inline std::string scratch_dir(const std::string& name) {
    std::filesystem::path p = std::filesystem::path("scratch") / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

// Small labeled cloud: per-class point mass plus noise, classes interleaved.
inline std::vector<pb::Sample> toy_samples(int classes, int dim, int per_class,
                                           std::uint64_t seed) {
    pb::RngStream s = pb::derive_stream(seed, 0, "toy-samples");
    std::vector<pb::Sample> out;
    for (int i = 0; i < per_class; ++i) {
        for (int k = 0; k < classes; ++k) {
            pb::Sample smp;
            smp.feature.assign(dim, 0.0);
            for (int d = 0; d < dim; ++d)
                smp.feature[d] = (d == k % dim ? 1.0 : 0.1) + 0.05 * s.next_gaussian();
            smp.label = k;
            out.push_back(std::move(smp));
        }
    }
    return out;
}

}  // namespace testutil
