#pragma once

#include <cstdint>
#include <string_view>

namespace pb {

// 64-bit avalanche mix (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// Counter-based random stream: draw i is a pure function of (key, i), so a
// stream replays identically regardless of when or where it is consumed.
// Every consumer derives its own stream; nothing in the library shares one.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64();
    // Uniform in [0, 1), 53-bit resolution.
    double next_unit();
    // Unbiased uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);
    // Standard normal (Box-Muller; the pair's second value is cached).
    double next_gaussian();
    // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
    double next_gamma(double shape);

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Independent stream keyed on (seed, worker, purpose). Identical inputs give
// identical streams; any change to an input gives an unrelated stream.
RngStream derive_stream(std::uint64_t seed, std::uint64_t worker, std::string_view purpose);

}  // namespace pb
