#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "core/error.hpp"

namespace pb::vec {

inline void check_same_dim(const std::vector<double>& a, const std::vector<double>& b,
                           const char* where) {
    if (a.size() != b.size())
        throw PropertyError(std::string(where) + ": dimension mismatch (" +
                            std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

inline std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

inline void add_inplace(std::vector<double>& a, const std::vector<double>& b) {
    check_same_dim(a, b, "add");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

inline void sub_inplace(std::vector<double>& a, const std::vector<double>& b) {
    check_same_dim(a, b, "sub");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
}

inline void scale_inplace(std::vector<double>& a, double s) {
    for (double& v : a) v *= s;
}

inline std::vector<double> add(std::vector<double> a, const std::vector<double>& b) {
    add_inplace(a, b);
    return a;
}

inline std::vector<double> sub(std::vector<double> a, const std::vector<double>& b) {
    sub_inplace(a, b);
    return a;
}

inline std::vector<double> scaled(std::vector<double> a, double s) {
    scale_inplace(a, s);
    return a;
}

// a += s * b
inline void axpy(std::vector<double>& a, double s, const std::vector<double>& b) {
    check_same_dim(a, b, "axpy");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_dim(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_sq(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(norm_sq(a)); }

inline double dist_sq(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_dim(a, b, "dist");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
    return std::sqrt(dist_sq(a, b));
}

inline bool all_finite(const std::vector<double>& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace pb::vec
