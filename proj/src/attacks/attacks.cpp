#include "attacks/attacks.hpp"

#include <cmath>

#include "core/error.hpp"

namespace pb::attacks {

int static_flip(int label, int num_classes) {
    if (label < 0 || label >= num_classes)
        throw PropertyError("static_flip: label " + std::to_string(label) + " out of range for " +
                            std::to_string(num_classes) + " classes");
    return num_classes - 1 - label;
}

void apply_static_poisoning(std::vector<Sample>& samples, int num_classes, double flip_prob,
                            RngStream& stream) {
    if (flip_prob < 0.0 || flip_prob > 1.0)
        throw ConfigError("attack.flip_prob: must be in [0, 1]");
    for (Sample& s : samples)
        if (stream.next_unit() < flip_prob) s.label = static_flip(s.label, num_classes);
}

int least_probable(const std::vector<double>& proba) {
    if (proba.empty()) throw PropertyError("least_probable: empty probability vector");
    int arg = 0;
    for (int k = 0; k < int(proba.size()); ++k) {
        if (!std::isfinite(proba[k]))
            throw PropertyError("least_probable: non-finite probability at index " +
                                std::to_string(k));
        if (proba[k] < proba[arg]) arg = k;
    }
    return arg;
}

int dynamic_flip(const models::LossModel& model, const ModelParams& x, const Sample& sample) {
    std::vector<double> p = model.predict_proba(x, sample.feature);
    if (int(p.size()) != model.num_classes())
        throw PropertyError("dynamic_flip: model returned wrong probability dimension");
    return least_probable(p);
}

}  // namespace pb::attacks
