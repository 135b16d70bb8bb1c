#pragma once

#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"
#include "models/model.hpp"

namespace pb::attacks {

enum class AttackKind { None, StaticFlip, DynamicFlip };

struct AttackSpec {
    AttackKind kind = AttackKind::None;
    double flip_prob = 1.0;  // static flips only; dynamic flips always apply
    int num_poisoned = 0;    // W - R, the trailing worker ids
};

// b -> K-1-b.
int static_flip(int label, int num_classes);

// One pass: each label flips independently with probability flip_prob.
// Features are never touched.
void apply_static_poisoning(std::vector<Sample>& samples, int num_classes, double flip_prob,
                            RngStream& stream);

// Least probable class index; ties go to the smallest index. Throws if the
// probability vector is malformed.
int least_probable(const std::vector<double>& proba);

// Label the attacker reports for this sample under the current parameters.
int dynamic_flip(const models::LossModel& model, const ModelParams& x, const Sample& sample);

}  // namespace pb::attacks
