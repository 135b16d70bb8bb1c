#include "core/rng.hpp"

#include <cmath>

#include "core/error.hpp"

namespace pb {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RngStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
    if (n == 0) throw PropertyError("RngStream::next_below: n must be positive");
    std::uint64_t min = (0 - n) % n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v < min);
    return v % n;
}

double RngStream::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

double RngStream::next_gamma(double shape) {
    if (!(shape > 0.0)) throw PropertyError("RngStream::next_gamma: shape must be positive");
    if (shape < 1.0) {
        double u = next_unit();
        if (u <= 0.0) u = 0x1.0p-53;
        return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = next_gaussian();
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = next_unit();
        double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

RngStream derive_stream(std::uint64_t seed, std::uint64_t worker, std::string_view purpose) {
    std::uint64_t k = mix64(seed + kGolden);
    k = mix64(k + worker + 1);
    k = mix64(k + fnv1a(purpose));
    return RngStream(k);
}

}  // namespace pb
