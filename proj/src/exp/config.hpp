#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace pb::exp {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr const char* kManifestFormat = "poisonbench-manifest-v1";

// One experiment, one JSON document. Sections: dataset, partition, model,
// attack, aggregator, hyper, plus top-level output_dir and log_every. Unknown
// keys are rejected with the offending path in the message.

struct DatasetConfig {
    std::string kind = "synth";  // synth | digits | mnist
    // synth
    int classes = 10;
    int dim = 20;
    double spread = 0.1;
    // synth + digits (sizes; test_per_class = 0 skips the test set)
    int per_class = 100;
    int test_per_class = 0;
    std::uint64_t data_seed = 1720;
    // digits
    double noise = 0.25;
    std::uint64_t template_seed = 9271;
    // mnist: dir defaults to $POISONBENCH_DATA_DIR, then "."; files may also
    // exist as <name>.gz. subset_per_class = 0 keeps everything.
    std::string dir;
    std::string train_images = "train-images-idx3-ubyte";
    std::string train_labels = "train-labels-idx1-ubyte";
    std::string test_images = "t10k-images-idx3-ubyte";
    std::string test_labels = "t10k-labels-idx1-ubyte";
    int subset_per_class = 0;
    int test_subset_per_class = 0;
};

struct PartitionConfig {
    std::string kind = "iid";  // iid | dirichlet | one_class
    double beta = 1.0;
};

struct ModelConfig {
    std::string kind = "softmax";  // softmax | mlp
};

struct AttackConfig {
    std::string kind = "static_flip";  // none | static_flip | dynamic_flip
    double flip_prob = 1.0;
};

struct AggregatorConfig {
    std::string kind = "mean";  // mean | trimean | cc | faba
    int assumed_regular = 0;    // 0: use hyper.R
    double cc_tau = 10.0;
    int cc_iters = 1;
    std::string cc_start = "previous";  // previous | zero
};

struct HyperConfig {
    int W = 10;
    int R = 9;
    long T = 1000;
    double gamma = 0.01;
    double alpha = 0.1;
    std::uint64_t seed = 1;
    int batch = 1;                  // samples per worker per round; 0 = full shard
    std::string schedule = "fixed"; // fixed | theorem
    double L = 0.0;                 // 0: estimate (softmax only) when schedule=theorem
    double F0 = -1.0;               // < 0: measure initial loss when schedule=theorem
};

struct ExperimentConfig {
    DatasetConfig dataset;
    PartitionConfig partition;
    ModelConfig model;
    AttackConfig attack;
    AggregatorConfig aggregator;
    HyperConfig hyper;
    std::string output_dir = "run_out";
    long log_every = 0;  // 0: about 200 evenly spaced rows
};

// Strict parse: wrong types and unknown keys throw ConfigError naming the
// field. Missing keys take the defaults above.
ExperimentConfig parse_config(const nlohmann::json& doc);

// Cross-field validation (one_class needs W == classes, trimean survivor
// count, schedule requirements, ...). Throws ConfigError.
void validate_config(const ExperimentConfig& cfg);

// Canonical resolved document; parse_config(to_json(c)) round-trips.
nlohmann::json to_json(const ExperimentConfig& cfg);

// Declared class count (before any data is read).
int declared_classes(const DatasetConfig& d);

// Reads a config file. A run manifest (object with a matching "format" and a
// "config" member) is accepted and unwrapped.
nlohmann::json load_config_document(const std::string& path);

// Writes a value at a dotted path, creating intermediate objects.
void set_path(nlohmann::json& doc, const std::string& dotted_key, nlohmann::json value);

// --section.key=value override: dotted path into the document; the value is
// parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& doc, const std::string& dotted_key, const std::string& value);

// "--a.b=c" -> apply_override(doc, "a.b", "c"); throws ConfigError otherwise.
void apply_override_flag(nlohmann::json& doc, const std::string& flag);

}  // namespace pb::exp
