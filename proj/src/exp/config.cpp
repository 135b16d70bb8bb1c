#include "exp/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string>

#include "agg/aggregators.hpp"
#include "core/error.hpp"
#include "core/types.hpp"

namespace pb::exp {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
    throw ConfigError(where + ": " + msg);
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                known = true;
                break;
            }
        if (!known) fail(path + "." + it.key(), "unknown key");
    }
}

double get_double(const json& obj, const std::string& path, const char* key, double def) {
    auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_number()) fail(path + "." + key, "expected a number");
    return it->get<double>();
}

long get_long(const json& obj, const std::string& path, const char* key, long def) {
    auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_number_integer() && !it->is_number_unsigned())
        fail(path + "." + key, "expected an integer");
    return it->get<long>();
}

int get_int(const json& obj, const std::string& path, const char* key, int def) {
    return static_cast<int>(get_long(obj, path, key, def));
}

std::uint64_t get_u64(const json& obj, const std::string& path, const char* key,
                      std::uint64_t def) {
    auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
        fail(path + "." + key, "expected a non-negative integer");
    return it->get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& def) {
    auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_string()) fail(path + "." + key, "expected a string");
    return it->get<std::string>();
}

DatasetConfig parse_dataset(const json& j) {
    DatasetConfig d;
    const std::string path = "dataset";
    require_object(j, path);
    d.kind = get_string(j, path, "kind", d.kind);
    if (d.kind == "synth") {
        reject_unknown(j, path,
                       {"kind", "classes", "dim", "spread", "per_class", "test_per_class",
                        "data_seed"});
        d.classes = get_int(j, path, "classes", d.classes);
        d.dim = get_int(j, path, "dim", d.dim);
        d.spread = get_double(j, path, "spread", d.spread);
        d.per_class = get_int(j, path, "per_class", d.per_class);
        d.test_per_class = get_int(j, path, "test_per_class", d.test_per_class);
        d.data_seed = get_u64(j, path, "data_seed", d.data_seed);
    } else if (d.kind == "digits") {
        reject_unknown(j, path, {"kind", "per_class", "test_per_class", "noise", "template_seed"});
        d.per_class = get_int(j, path, "per_class", d.per_class);
        d.test_per_class = get_int(j, path, "test_per_class", d.test_per_class);
        d.noise = get_double(j, path, "noise", d.noise);
        d.template_seed = get_u64(j, path, "template_seed", d.template_seed);
    } else if (d.kind == "mnist") {
        reject_unknown(j, path,
                       {"kind", "dir", "train_images", "train_labels", "test_images",
                        "test_labels", "subset_per_class", "test_subset_per_class"});
        d.dir = get_string(j, path, "dir", d.dir);
        d.train_images = get_string(j, path, "train_images", d.train_images);
        d.train_labels = get_string(j, path, "train_labels", d.train_labels);
        d.test_images = get_string(j, path, "test_images", d.test_images);
        d.test_labels = get_string(j, path, "test_labels", d.test_labels);
        d.subset_per_class = get_int(j, path, "subset_per_class", d.subset_per_class);
        d.test_subset_per_class = get_int(j, path, "test_subset_per_class", d.test_subset_per_class);
    } else {
        fail(path + ".kind", "must be one of synth, digits, mnist (got '" + d.kind + "')");
    }
    return d;
}

json dataset_to_json(const DatasetConfig& d) {
    json j;
    j["kind"] = d.kind;
    if (d.kind == "synth") {
        j["classes"] = d.classes;
        j["dim"] = d.dim;
        j["spread"] = d.spread;
        j["per_class"] = d.per_class;
        j["test_per_class"] = d.test_per_class;
        j["data_seed"] = d.data_seed;
    } else if (d.kind == "digits") {
        j["per_class"] = d.per_class;
        j["test_per_class"] = d.test_per_class;
        j["noise"] = d.noise;
        j["template_seed"] = d.template_seed;
    } else {
        j["dir"] = d.dir;
        j["train_images"] = d.train_images;
        j["train_labels"] = d.train_labels;
        j["test_images"] = d.test_images;
        j["test_labels"] = d.test_labels;
        j["subset_per_class"] = d.subset_per_class;
        j["test_subset_per_class"] = d.test_subset_per_class;
    }
    return j;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    require_object(doc, "config");
    reject_unknown(doc, "config",
                   {"dataset", "partition", "model", "attack", "aggregator", "hyper", "output_dir",
                    "log_every"});
    ExperimentConfig cfg;

    if (auto it = doc.find("dataset"); it != doc.end()) cfg.dataset = parse_dataset(*it);

    if (auto it = doc.find("partition"); it != doc.end()) {
        require_object(*it, "partition");
        reject_unknown(*it, "partition", {"kind", "beta"});
        cfg.partition.kind = get_string(*it, "partition", "kind", cfg.partition.kind);
        cfg.partition.beta = get_double(*it, "partition", "beta", cfg.partition.beta);
    }

    if (auto it = doc.find("model"); it != doc.end()) {
        require_object(*it, "model");
        reject_unknown(*it, "model", {"kind"});
        cfg.model.kind = get_string(*it, "model", "kind", cfg.model.kind);
    }

    if (auto it = doc.find("attack"); it != doc.end()) {
        require_object(*it, "attack");
        reject_unknown(*it, "attack", {"kind", "flip_prob"});
        cfg.attack.kind = get_string(*it, "attack", "kind", cfg.attack.kind);
        cfg.attack.flip_prob = get_double(*it, "attack", "flip_prob", cfg.attack.flip_prob);
    }

    if (auto it = doc.find("aggregator"); it != doc.end()) {
        require_object(*it, "aggregator");
        reject_unknown(*it, "aggregator",
                       {"kind", "assumed_regular", "cc_tau", "cc_iters", "cc_start"});
        AggregatorConfig& a = cfg.aggregator;
        a.kind = get_string(*it, "aggregator", "kind", a.kind);
        a.assumed_regular = get_int(*it, "aggregator", "assumed_regular", a.assumed_regular);
        a.cc_tau = get_double(*it, "aggregator", "cc_tau", a.cc_tau);
        a.cc_iters = get_int(*it, "aggregator", "cc_iters", a.cc_iters);
        a.cc_start = get_string(*it, "aggregator", "cc_start", a.cc_start);
    }

    if (auto it = doc.find("hyper"); it != doc.end()) {
        require_object(*it, "hyper");
        reject_unknown(*it, "hyper",
                       {"W", "R", "T", "gamma", "alpha", "seed", "batch", "schedule", "L", "F0"});
        HyperConfig& h = cfg.hyper;
        h.W = get_int(*it, "hyper", "W", h.W);
        h.R = get_int(*it, "hyper", "R", h.R);
        h.T = get_long(*it, "hyper", "T", h.T);
        h.gamma = get_double(*it, "hyper", "gamma", h.gamma);
        h.alpha = get_double(*it, "hyper", "alpha", h.alpha);
        h.seed = get_u64(*it, "hyper", "seed", h.seed);
        h.batch = get_int(*it, "hyper", "batch", h.batch);
        h.schedule = get_string(*it, "hyper", "schedule", h.schedule);
        h.L = get_double(*it, "hyper", "L", h.L);
        h.F0 = get_double(*it, "hyper", "F0", h.F0);
    }

    if (auto it = doc.find("output_dir"); it != doc.end()) {
        if (!it->is_string()) fail("output_dir", "expected a string");
        cfg.output_dir = it->get<std::string>();
    }
    cfg.log_every = get_long(doc, "config", "log_every", cfg.log_every);
    return cfg;
}

int declared_classes(const DatasetConfig& d) { return d.kind == "synth" ? d.classes : 10; }

void validate_config(const ExperimentConfig& cfg) {
    const DatasetConfig& d = cfg.dataset;
    if (d.kind == "synth") {
        if (d.classes < 2) fail("dataset.classes", "must be >= 2");
        if (d.dim < 1) fail("dataset.dim", "must be >= 1");
        if (!(d.spread >= 0.0)) fail("dataset.spread", "must be >= 0");
        if (d.per_class < 1) fail("dataset.per_class", "must be >= 1");
        if (d.test_per_class < 0) fail("dataset.test_per_class", "must be >= 0");
    } else if (d.kind == "digits") {
        if (d.per_class < 1) fail("dataset.per_class", "must be >= 1");
        if (d.test_per_class < 0) fail("dataset.test_per_class", "must be >= 0");
        if (!(d.noise >= 0.0)) fail("dataset.noise", "must be >= 0");
    } else if (d.kind == "mnist") {
        if (d.subset_per_class < 0) fail("dataset.subset_per_class", "must be >= 0");
        if (d.test_subset_per_class < 0) fail("dataset.test_subset_per_class", "must be >= 0");
    } else {
        fail("dataset.kind", "must be one of synth, digits, mnist (got '" + d.kind + "')");
    }

    const PartitionConfig& p = cfg.partition;
    if (p.kind != "iid" && p.kind != "dirichlet" && p.kind != "one_class")
        fail("partition.kind", "must be one of iid, dirichlet, one_class (got '" + p.kind + "')");
    if (p.kind == "dirichlet" && !(p.beta > 0.0)) fail("partition.beta", "must be > 0");
    if (p.kind == "one_class" && cfg.hyper.W != declared_classes(d))
        fail("partition.kind", "one_class requires hyper.W (" + std::to_string(cfg.hyper.W) +
                                   ") to equal the dataset's class count (" +
                                   std::to_string(declared_classes(d)) + ")");

    if (cfg.model.kind != "softmax" && cfg.model.kind != "mlp")
        fail("model.kind", "must be softmax or mlp (got '" + cfg.model.kind + "')");

    const AttackConfig& at = cfg.attack;
    if (at.kind != "none" && at.kind != "static_flip" && at.kind != "dynamic_flip")
        fail("attack.kind",
             "must be one of none, static_flip, dynamic_flip (got '" + at.kind + "')");
    if (!(at.flip_prob >= 0.0 && at.flip_prob <= 1.0)) fail("attack.flip_prob", "must be in [0, 1]");
    if (at.kind == "none" && cfg.hyper.R != cfg.hyper.W)
        fail("attack.kind", "none requires hyper.R == hyper.W (the last W - R workers are poisoned)");

    const AggregatorConfig& a = cfg.aggregator;
    const agg::AggKind akind = agg::agg_kind_from_string(a.kind);
    if (a.assumed_regular < 0 || a.assumed_regular > cfg.hyper.W)
        fail("aggregator.assumed_regular", "must be between 0 and hyper.W");
    const int assumed = a.assumed_regular == 0 ? cfg.hyper.R : a.assumed_regular;
    if (akind == agg::AggKind::TriMean && 2 * assumed - cfg.hyper.W < 1)
        fail("aggregator.assumed_regular",
             "trimean needs 2R - W >= 1; undefined once half the workers may be poisoned");
    if (!(a.cc_tau > 0.0)) fail("aggregator.cc_tau", "must be > 0");
    if (a.cc_iters < 1) fail("aggregator.cc_iters", "must be >= 1");
    if (a.cc_start != "zero" && a.cc_start != "previous")
        fail("aggregator.cc_start", "must be zero or previous (got '" + a.cc_start + "')");

    const HyperConfig& h = cfg.hyper;
    validate(HyperParams{h.W, h.R, h.T, h.gamma, h.alpha, h.seed});
    if (h.batch < 0) fail("hyper.batch", "must be >= 0");
    if (h.schedule != "fixed" && h.schedule != "theorem")
        fail("hyper.schedule", "must be fixed or theorem (got '" + h.schedule + "')");
    if (h.L < 0.0) fail("hyper.L", "must be >= 0");
    if (h.schedule == "theorem" && cfg.model.kind == "mlp" && h.L == 0.0)
        fail("hyper.L", "required for schedule=theorem with model.kind=mlp");

    if (cfg.log_every < 0) fail("log_every", "must be >= 0");
    if (cfg.output_dir.empty()) fail("output_dir", "must not be empty");
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["dataset"] = dataset_to_json(cfg.dataset);
    j["partition"] = {{"kind", cfg.partition.kind}, {"beta", cfg.partition.beta}};
    j["model"] = {{"kind", cfg.model.kind}};
    j["attack"] = {{"kind", cfg.attack.kind}, {"flip_prob", cfg.attack.flip_prob}};
    j["aggregator"] = {{"kind", cfg.aggregator.kind},
                       {"assumed_regular", cfg.aggregator.assumed_regular},
                       {"cc_tau", cfg.aggregator.cc_tau},
                       {"cc_iters", cfg.aggregator.cc_iters},
                       {"cc_start", cfg.aggregator.cc_start}};
    j["hyper"] = {{"W", cfg.hyper.W},       {"R", cfg.hyper.R},
                  {"T", cfg.hyper.T},       {"gamma", cfg.hyper.gamma},
                  {"alpha", cfg.hyper.alpha}, {"seed", cfg.hyper.seed},
                  {"batch", cfg.hyper.batch}, {"schedule", cfg.hyper.schedule},
                  {"L", cfg.hyper.L},       {"F0", cfg.hyper.F0}};
    j["output_dir"] = cfg.output_dir;
    j["log_every"] = cfg.log_every;
    return j;
}

json load_config_document(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config: " + path + " is not valid JSON");
    if (doc.is_object() && doc.contains("config")) {
        auto fmt = doc.find("format");
        if (fmt == doc.end() || !fmt->is_string() || fmt->get<std::string>() != kManifestFormat)
            throw ConfigError("config: " + path + " carries an unsupported manifest format tag");
        return doc.at("config");
    }
    return doc;
}

void set_path(json& doc, const std::string& dotted_key, json value) {
    if (dotted_key.empty()) throw ConfigError("override: empty key");
    json* cur = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted_key.find('.', start);
        const std::string part = dotted_key.substr(
            start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override: bad key '" + dotted_key + "'");
        if (!cur->is_object())
            throw ConfigError("override: '" + dotted_key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*cur)[part] = std::move(value);
            return;
        }
        json& next = (*cur)[part];
        if (next.is_null()) next = json::object();
        cur = &next;
        start = dot + 1;
    }
}

void apply_override(json& doc, const std::string& dotted_key, const std::string& value) {
    json parsed = json::parse(value, nullptr, false);
    set_path(doc, dotted_key, parsed.is_discarded() ? json(value) : std::move(parsed));
}

void apply_override_flag(json& doc, const std::string& flag) {
    if (flag.rfind("--", 0) != 0)
        throw ConfigError("override: expected --section.key=value, got '" + flag + "'");
    const std::size_t eq = flag.find('=');
    if (eq == std::string::npos || eq == 2)
        throw ConfigError("override: expected --section.key=value, got '" + flag + "'");
    apply_override(doc, flag.substr(2, eq - 2), flag.substr(eq + 1));
}

}  // namespace pb::exp
