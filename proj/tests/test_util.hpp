#pragma once

#include <string>
#include <vector>

#include "fledge/rng.hpp"
#include "fledge/tensor.hpp"

namespace testutil {

/// Random model with 0..max_tensors tensors of rank 1..3.
inline fledge::ModelWeights random_model(fledge::rng::Engine& eng, size_t max_tensors = 5) {
    fledge::ModelWeights w;
    size_t count = eng.uniform_index(max_tensors + 1);
    for (size_t i = 0; i < count; ++i) {
        size_t rank = 1 + eng.uniform_index(3);
        std::vector<size_t> shape;
        size_t total = 1;
        for (size_t d = 0; d < rank; ++d) {
            size_t dim = 1 + eng.uniform_index(4);
            shape.push_back(dim);
            total *= dim;
        }
        std::vector<float> values(total);
        for (auto& v : values) v = static_cast<float>(eng.normal() * 3.0);
        w.add("node" + std::to_string(i), shape, std::move(values));
    }
    return w;
}

} // namespace testutil
