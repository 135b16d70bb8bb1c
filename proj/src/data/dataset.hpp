#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace pb::data {

struct Dataset {
    std::vector<Sample> samples;
    int num_classes = 0;
    int feature_dim = 0;
    std::string name;
};

// A worker's shard: indices into a Dataset's sample list.
struct Shard {
    std::vector<std::size_t> indices;
};

// Reads an IDX image/label file pair (optionally gzip-compressed, sniffed by
// magic bytes). Pixels are scaled to [0, 1]. Errors name the offending file.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes a dataset of rows*cols images as an IDX pair, quantizing features in
// [0, 1] to unsigned bytes. Paths ending in ".gz" are gzip-compressed.
void save_idx(const Dataset& ds, int rows, int cols, const std::string& images_path,
              const std::string& labels_path);

// Gaussian blobs around distinct non-negative class means, clamped to >= 0.
// Samples are ordered by class: per_class samples of class 0, then class 1, ...
Dataset synth_blobs(int classes, int dim, int per_class, double spread, RngStream& stream);

// Digit-style 28x28 images, 10 classes. Class shapes come from stroke
// templates derived from template_seed alone, so train/test sets generated
// with different streams share the same classes. Per-sample variation:
// integer translation, intensity gain, additive pixel noise; final pixels are
// clamped to [0, 1] and quantized to 8 bits (byte-exact IDX round trips).
Dataset synth_digits(int per_class, double noise, std::uint64_t template_seed, RngStream& stream);

// Equal shards of size floor(n/W) from a random permutation; remainder dropped.
std::vector<Shard> partition_iid(std::size_t n, int W, RngStream& stream);

// Per class, splits that class's samples across workers by Dirichlet(beta)
// proportions, then trims every shard to the common minimum size. Draws where
// some worker ends up empty are retried up to 100 times before erroring.
std::vector<Shard> partition_dirichlet(const Dataset& ds, int W, double beta, RngStream& stream);

// Worker w receives exactly the samples labeled w; requires W == num_classes.
// Shards are trimmed to the common minimum size.
std::vector<Shard> partition_one_class(const Dataset& ds, int W);

}  // namespace pb::data
