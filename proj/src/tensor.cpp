#include "fledge/tensor.hpp"

#include <algorithm>
#include <stdexcept>

#include "fledge/errors.hpp"

namespace fledge {

size_t TensorSpec::element_count() const {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

void ModelWeights::add(std::string node_name, std::vector<size_t> shape, std::vector<float> values) {
    if (shape.empty()) {
        throw StructuralError("tensor '" + node_name + "': shape must be non-empty");
    }
    for (size_t d : shape) {
        if (d == 0) throw StructuralError("tensor '" + node_name + "': zero dimension");
    }
    for (const auto& spec : manifest_) {
        if (spec.node_name == node_name) {
            throw StructuralError("duplicate node name '" + node_name + "'");
        }
    }
    TensorSpec spec{std::move(node_name), std::move(shape)};
    if (values.size() != spec.element_count()) {
        throw StructuralError("tensor '" + spec.node_name + "': " + std::to_string(values.size()) +
                              " values for shape of " + std::to_string(spec.element_count()));
    }
    manifest_.push_back(std::move(spec));
    storage_.push_back(std::move(values));
}

size_t ModelWeights::total_elements() const {
    size_t n = 0;
    for (const auto& spec : manifest_) n += spec.element_count();
    return n;
}

const std::vector<float>& ModelWeights::tensor(const std::string& node_name) const {
    for (size_t i = 0; i < manifest_.size(); ++i) {
        if (manifest_[i].node_name == node_name) return storage_[i];
    }
    throw StructuralError("no tensor named '" + node_name + "'");
}

std::vector<float>& ModelWeights::tensor(const std::string& node_name) {
    return const_cast<std::vector<float>&>(static_cast<const ModelWeights*>(this)->tensor(node_name));
}

FlatWeights flatten_weights(const ModelWeights& w) {
    FlatWeights flat;
    flat.values.reserve(w.total_elements());
    for (size_t i = 0; i < w.tensor_count(); ++i) {
        const auto& t = w.tensor(i);
        flat.values.insert(flat.values.end(), t.begin(), t.end());
    }
    return flat;
}

std::vector<TensorSpec> describe_weights(const ModelWeights& w) {
    return w.manifest();
}

ModelWeights load_flat_weights(const FlatWeights& flat, const std::vector<TensorSpec>& manifest) {
    size_t expected = 0;
    for (const auto& spec : manifest) expected += spec.element_count();
    if (flat.values.size() != expected) {
        throw StructuralError("flat weight length " + std::to_string(flat.values.size()) +
                              " does not match manifest total " + std::to_string(expected));
    }
    ModelWeights w;
    size_t offset = 0;
    for (const auto& spec : manifest) {
        size_t n = spec.element_count();
        std::vector<float> values(flat.values.begin() + offset, flat.values.begin() + offset + n);
        w.add(spec.node_name, spec.shape, std::move(values));
        offset += n;
    }
    return w;
}

} // namespace fledge
