#pragma once

#include "topic/feature_model.hpp"

#include <cstddef>
#include <vector>

namespace topic {

using Label = std::size_t;

struct LabeledSet {
    std::vector<Vector> inputs;
    std::vector<Label> labels;

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }
    void push_back(Vector x, Label y) {
        inputs.push_back(std::move(x));
        labels.push_back(y);
    }
    void append(const LabeledSet& other) {
        inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    }
};

inline std::vector<Vector> extract_features(const std::vector<Vector>& inputs,
                                            const ModelParams& params) {
    std::vector<Vector> out;
    out.reserve(inputs.size());
    for (const auto& x : inputs) out.push_back(extract_feature(x, params));
    return out;
}

}  // namespace topic
