#pragma once

#include <cstdint>
#include <vector>

#include "fledge/tensor.hpp"

namespace fledge {

/// Per-client dataset: a fixed train/validation partition over a small
/// labelled sample table. `dialect` records the client's distribution-shift
/// parameter (rotation + label-prior skew of the generating mixture).
struct LocalDataset {
    size_t feature_dim = 2;
    std::vector<float> features; // row-major, size() x feature_dim
    std::vector<int> labels;
    size_t n_train = 0;
    size_t n_val = 0;
    double dialect = 0.0;

    size_t size() const { return labels.size(); }
    const float* row(size_t i) const { return features.data() + i * feature_dim; }
};

/// Architecture of the trainable model: one hidden layer, softmax output.
struct SurrogateSpec {
    size_t input_dim = 2;
    size_t hidden_units = 8;
    size_t classes = 3;
};

/// Fresh random weights for the given architecture. Tensors, in manifest
/// order: hidden/kernel, hidden/bias, output/kernel, output/bias.
ModelWeights init_surrogate(const SurrogateSpec& spec, uint64_t seed);

struct TrainResult {
    ModelWeights weights;
    std::vector<double> loss_history; // mean cross-entropy, one entry per epoch
};

/// Mini-batch gradient descent for `epochs` full passes. Bit-reproducible for
/// a fixed seed; epochs == 0 returns the input weights unchanged.
TrainResult train_local(const ModelWeights& w, const LocalDataset& data, int epochs,
                        int batch_size, uint64_t seed, double learning_rate = 0.1);

/// Classification error rate on the validation split, in [0, 1].
double evaluate(const ModelWeights& w, const LocalDataset& data);

/// Mixture the per-client data is drawn from: class means on a circle,
/// rotated per client by `dialect`, with the label prior skewed toward the
/// class the dialect points at.
struct DataGenConfig {
    size_t classes = 3;
    size_t feature_dim = 2;
    double class_radius = 2.0;
    double noise_sigma = 0.6;
    double label_skew = 1.0;
};

LocalDataset make_client_dataset(uint64_t seed, int client_id, double dialect,
                                 size_t n_train, size_t n_val, const DataGenConfig& cfg = {});

/// Held-out test pool covering all client distributions.
LocalDataset make_global_test(uint64_t seed, const std::vector<double>& dialects,
                              size_t samples_per_dialect, const DataGenConfig& cfg = {});

} // namespace fledge
