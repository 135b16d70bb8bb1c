#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "data/dataset.hpp"

namespace pb::data {

Dataset synth_blobs(int classes, int dim, int per_class, double spread, RngStream& stream) {
    if (classes < 2) throw ConfigError("synth_blobs: classes must be >= 2");
    if (dim < 1) throw ConfigError("synth_blobs: dim must be >= 1");
    if (per_class < 1) throw ConfigError("synth_blobs: per_class must be >= 1");
    if (spread < 0.0) throw ConfigError("synth_blobs: spread must be >= 0");

    // Mean of class k puts amplitude 1+k on coordinate k mod dim: distinct,
    // entry-wise non-negative, pairwise distance >= 1.
    std::vector<std::vector<double>> means(classes, std::vector<double>(dim, 0.0));
    for (int k = 0; k < classes; ++k) means[k][k % dim] = 1.0 + k;

    Dataset ds;
    ds.num_classes = classes;
    ds.feature_dim = dim;
    ds.name = "synth_blobs";
    ds.samples.reserve(std::size_t(classes) * per_class);
    for (int k = 0; k < classes; ++k) {
        for (int i = 0; i < per_class; ++i) {
            Sample s;
            s.label = k;
            s.feature.resize(dim);
            for (int j = 0; j < dim; ++j) {
                double v = means[k][j] + spread * stream.next_gaussian();
                s.feature[j] = v < 0.0 ? 0.0 : v;
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

namespace {

constexpr int kSide = 28;
constexpr int kDigitClasses = 10;

std::vector<double> make_template(std::uint64_t template_seed, int cls) {
    RngStream ts = derive_stream(template_seed, static_cast<std::uint64_t>(cls), "digit-template");
    std::vector<double> pat(kSide * kSide, 0.0);

    // Random-walk stroke: bilinear stamps along a smoothly turning path.
    double x = 13.5 + 3.0 * ts.next_gaussian();
    double y = 13.5 + 3.0 * ts.next_gaussian();
    double heading = 2.0 * M_PI * ts.next_unit();
    for (int step = 0; step < 90; ++step) {
        heading += 0.55 * ts.next_gaussian();
        x += 1.1 * std::cos(heading);
        y += 1.1 * std::sin(heading);
        x = std::clamp(x, 3.0, kSide - 4.0);
        y = std::clamp(y, 3.0, kSide - 4.0);
        int xi = static_cast<int>(std::floor(x));
        int yi = static_cast<int>(std::floor(y));
        double fx = x - xi, fy = y - yi;
        pat[yi * kSide + xi] += 0.55 * (1 - fx) * (1 - fy);
        pat[yi * kSide + xi + 1] += 0.55 * fx * (1 - fy);
        pat[(yi + 1) * kSide + xi] += 0.55 * (1 - fx) * fy;
        pat[(yi + 1) * kSide + xi + 1] += 0.55 * fx * fy;
    }

    // Two passes of 3x3 binomial blur.
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> blurred(kSide * kSide, 0.0);
        static const double kern[3] = {0.25, 0.5, 0.25};
        for (int i = 0; i < kSide; ++i) {
            for (int j = 0; j < kSide; ++j) {
                double acc = 0.0;
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj) {
                        int ii = i + di, jj = j + dj;
                        if (ii < 0 || ii >= kSide || jj < 0 || jj >= kSide) continue;
                        acc += kern[di + 1] * kern[dj + 1] * pat[ii * kSide + jj];
                    }
                }
                blurred[i * kSide + j] = acc;
            }
        }
        pat.swap(blurred);
    }

    double mx = 0.0;
    for (double v : pat) mx = std::max(mx, v);
    if (mx > 0.0)
        for (double& v : pat) v /= mx;

    // Shared central mass so classes overlap the way real digits do.
    std::vector<double> tmpl(kSide * kSide);
    for (int i = 0; i < kSide; ++i) {
        for (int j = 0; j < kSide; ++j) {
            double r2 = (i - 13.5) * (i - 13.5) + (j - 13.5) * (j - 13.5);
            double base = std::exp(-r2 / (2.0 * 8.0 * 8.0));
            tmpl[i * kSide + j] = std::clamp(0.3 * base + 0.9 * pat[i * kSide + j], 0.0, 1.0);
        }
    }
    return tmpl;
}

}  // namespace

Dataset synth_digits(int per_class, double noise, std::uint64_t template_seed, RngStream& stream) {
    if (per_class < 1) throw ConfigError("synth_digits: per_class must be >= 1");
    if (noise < 0.0) throw ConfigError("synth_digits: noise must be >= 0");

    std::vector<std::vector<double>> templates(kDigitClasses);
    for (int k = 0; k < kDigitClasses; ++k) templates[k] = make_template(template_seed, k);

    Dataset ds;
    ds.num_classes = kDigitClasses;
    ds.feature_dim = kSide * kSide;
    ds.name = "synth_digits";
    ds.samples.reserve(std::size_t(kDigitClasses) * per_class);
    for (int k = 0; k < kDigitClasses; ++k) {
        const std::vector<double>& tmpl = templates[k];
        for (int i = 0; i < per_class; ++i) {
            int dx = static_cast<int>(stream.next_below(5)) - 2;
            int dy = static_cast<int>(stream.next_below(5)) - 2;
            double gain = 0.65 + 0.55 * stream.next_unit();
            Sample s;
            s.label = k;
            s.feature.resize(kSide * kSide);
            for (int r = 0; r < kSide; ++r) {
                for (int c = 0; c < kSide; ++c) {
                    int rr = r - dy, cc = c - dx;
                    double t = (rr >= 0 && rr < kSide && cc >= 0 && cc < kSide)
                                   ? tmpl[rr * kSide + cc]
                                   : 0.0;
                    double v = gain * t + noise * stream.next_gaussian();
                    v = std::clamp(v, 0.0, 1.0);
                    // Snap to the 8-bit grid so IDX round trips are bit-exact.
                    s.feature[r * kSide + c] = std::floor(v * 255.0 + 0.5) / 255.0;
                }
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

}  // namespace pb::data
