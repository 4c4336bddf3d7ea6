#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fledge {

/// Name and shape of one weight tensor. Manifest order is the canonical
/// flattening order for the whole model.
struct TensorSpec {
    std::string node_name;
    std::vector<size_t> shape;

    size_t element_count() const;
    bool operator==(const TensorSpec&) const = default;
};

/// Flat transport form of a model: values only, no shape information.
struct FlatWeights {
    std::vector<float> values;
    bool operator==(const FlatWeights&) const = default;
};

/// Named N-D float32 tensors. Storage is row-major, parallel to the manifest.
class ModelWeights {
public:
    ModelWeights() = default;

    /// Appends a tensor; `values` must match the shape's element count.
    void add(std::string node_name, std::vector<size_t> shape, std::vector<float> values);

    const std::vector<TensorSpec>& manifest() const { return manifest_; }
    size_t tensor_count() const { return manifest_.size(); }
    size_t total_elements() const;

    const std::vector<float>& tensor(size_t index) const { return storage_[index]; }
    std::vector<float>& tensor(size_t index) { return storage_[index]; }
    const std::vector<float>& tensor(const std::string& node_name) const;
    std::vector<float>& tensor(const std::string& node_name);

    bool operator==(const ModelWeights&) const = default;

private:
    std::vector<TensorSpec> manifest_;
    std::vector<std::vector<float>> storage_;
};

/// Concatenates every tensor's row-major values in manifest order.
FlatWeights flatten_weights(const ModelWeights& w);

/// Manifest copy in canonical order.
std::vector<TensorSpec> describe_weights(const ModelWeights& w);

/// Inverse of flatten_weights: reshapes `flat` against `manifest`.
/// Throws StructuralError on a length mismatch.
ModelWeights load_flat_weights(const FlatWeights& flat, const std::vector<TensorSpec>& manifest);

} // namespace fledge
