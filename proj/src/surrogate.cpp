#include "fledge/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fledge/errors.hpp"
#include "fledge/rng.hpp"

namespace fledge {

namespace {

struct Arch {
    size_t input_dim, hidden, classes;
};

Arch arch_of(const ModelWeights& w) {
    const auto& kernel = w.manifest().at(0);
    const auto& out = w.manifest().at(2);
    return {kernel.shape.at(0), kernel.shape.at(1), out.shape.at(1)};
}

/// logits for one sample; hidden activations written to `hidden`.
void forward(const ModelWeights& w, const Arch& a, const float* x,
             std::vector<double>& hidden, std::vector<double>& logits) {
    const auto& wh = w.tensor(0);
    const auto& bh = w.tensor(1);
    const auto& wo = w.tensor(2);
    const auto& bo = w.tensor(3);
    hidden.assign(a.hidden, 0.0);
    for (size_t j = 0; j < a.hidden; ++j) {
        double z = bh[j];
        for (size_t i = 0; i < a.input_dim; ++i) z += static_cast<double>(x[i]) * wh[i * a.hidden + j];
        hidden[j] = std::tanh(z);
    }
    logits.assign(a.classes, 0.0);
    for (size_t c = 0; c < a.classes; ++c) {
        double z = bo[c];
        for (size_t j = 0; j < a.hidden; ++j) z += hidden[j] * wo[j * a.classes + c];
        logits[c] = z;
    }
}

void softmax_inplace(std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

} // namespace

ModelWeights init_surrogate(const SurrogateSpec& spec, uint64_t seed) {
    auto eng = rng::make_engine(seed, {rng::kModelInit});
    auto fill = [&](size_t n, double scale) {
        std::vector<float> v(n);
        for (auto& x : v) x = static_cast<float>(eng.normal() * scale);
        return v;
    };
    ModelWeights w;
    w.add("hidden/kernel", {spec.input_dim, spec.hidden_units},
          fill(spec.input_dim * spec.hidden_units, 1.0 / std::sqrt(double(spec.input_dim))));
    w.add("hidden/bias", {spec.hidden_units}, std::vector<float>(spec.hidden_units, 0.0f));
    w.add("output/kernel", {spec.hidden_units, spec.classes},
          fill(spec.hidden_units * spec.classes, 1.0 / std::sqrt(double(spec.hidden_units))));
    w.add("output/bias", {spec.classes}, std::vector<float>(spec.classes, 0.0f));
    return w;
}

TrainResult train_local(const ModelWeights& w, const LocalDataset& data, int epochs,
                        int batch_size, uint64_t seed, double learning_rate) {
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (data.n_train == 0) throw std::invalid_argument("empty training set");

    TrainResult result{w, {}};
    if (epochs == 0) return result;

    const Arch a = arch_of(w);
    auto& wh = result.weights.tensor(0);
    auto& bh = result.weights.tensor(1);
    auto& wo = result.weights.tensor(2);
    auto& bo = result.weights.tensor(3);

    std::vector<size_t> order(data.n_train);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> hidden, probs;
    std::vector<double> g_wh(wh.size()), g_bh(bh.size()), g_wo(wo.size()), g_bo(bo.size());

    const size_t full_batches = data.n_train / static_cast<size_t>(batch_size);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        auto eng = rng::make_engine(seed, {rng::kTrainShuffle, static_cast<uint64_t>(epoch)});
        for (size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[eng.uniform_index(i)]);
        }
        double epoch_loss = 0.0;
        size_t batches = std::max<size_t>(full_batches, 1);
        // A dataset smaller than one batch trains as a single short batch;
        // otherwise the trailing partial batch is dropped.
        for (size_t b = 0; b < batches; ++b) {
            size_t begin = b * static_cast<size_t>(batch_size);
            size_t end = std::min(begin + static_cast<size_t>(batch_size), data.n_train);
            size_t bs = end - begin;
            std::fill(g_wh.begin(), g_wh.end(), 0.0);
            std::fill(g_bh.begin(), g_bh.end(), 0.0);
            std::fill(g_wo.begin(), g_wo.end(), 0.0);
            std::fill(g_bo.begin(), g_bo.end(), 0.0);
            double batch_loss = 0.0;
            for (size_t s = begin; s < end; ++s) {
                const float* x = data.row(order[s]);
                int y = data.labels[order[s]];
                forward(result.weights, a, x, hidden, probs);
                softmax_inplace(probs);
                batch_loss += -std::log(std::max(probs[static_cast<size_t>(y)], 1e-12));
                // dL/dlogit = p - onehot(y)
                for (size_t c = 0; c < a.classes; ++c) {
                    double d = probs[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
                    g_bo[c] += d;
                    for (size_t j = 0; j < a.hidden; ++j) g_wo[j * a.classes + c] += d * hidden[j];
                }
                for (size_t j = 0; j < a.hidden; ++j) {
                    double dh = 0.0;
                    for (size_t c = 0; c < a.classes; ++c) {
                        dh += (probs[c] - (static_cast<int>(c) == data.labels[order[s]] ? 1.0 : 0.0)) *
                              wo[j * a.classes + c];
                    }
                    dh *= 1.0 - hidden[j] * hidden[j]; // tanh'
                    g_bh[j] += dh;
                    for (size_t i = 0; i < a.input_dim; ++i) g_wh[i * a.hidden + j] += dh * x[i];
                }
            }
            double scale = learning_rate / static_cast<double>(bs);
            for (size_t i = 0; i < wh.size(); ++i) wh[i] = static_cast<float>(wh[i] - scale * g_wh[i]);
            for (size_t i = 0; i < bh.size(); ++i) bh[i] = static_cast<float>(bh[i] - scale * g_bh[i]);
            for (size_t i = 0; i < wo.size(); ++i) wo[i] = static_cast<float>(wo[i] - scale * g_wo[i]);
            for (size_t i = 0; i < bo.size(); ++i) bo[i] = static_cast<float>(bo[i] - scale * g_bo[i]);
            epoch_loss += batch_loss / static_cast<double>(bs);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(batches));
    }
    return result;
}

double evaluate(const ModelWeights& w, const LocalDataset& data) {
    if (data.n_val == 0) throw std::invalid_argument("empty validation set");
    const Arch a = arch_of(w);
    std::vector<double> hidden, logits;
    size_t wrong = 0;
    for (size_t s = data.n_train; s < data.n_train + data.n_val; ++s) {
        forward(w, a, data.row(s), hidden, logits);
        size_t pred = static_cast<size_t>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (static_cast<int>(pred) != data.labels[s]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(data.n_val);
}

namespace {

void append_samples(LocalDataset& out, rng::Engine& eng, double dialect, size_t count,
                    const DataGenConfig& cfg) {
    // Class prior ~ exp(skew * cos(angle_c - dialect)): the dialect both
    // rotates the mixture and skews which labels the client sees.
    std::vector<double> prior(cfg.classes);
    double norm = 0.0;
    for (size_t c = 0; c < cfg.classes; ++c) {
        double angle = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(cfg.classes);
        prior[c] = std::exp(cfg.label_skew * std::cos(angle - dialect));
        norm += prior[c];
    }
    for (auto& p : prior) p /= norm;

    for (size_t s = 0; s < count; ++s) {
        double u = eng.uniform();
        size_t label = cfg.classes - 1;
        double acc = 0.0;
        for (size_t c = 0; c < cfg.classes; ++c) {
            acc += prior[c];
            if (u < acc) {
                label = c;
                break;
            }
        }
        double angle = 2.0 * M_PI * static_cast<double>(label) / static_cast<double>(cfg.classes) + dialect;
        double cx = cfg.class_radius * std::cos(angle);
        double cy = cfg.class_radius * std::sin(angle);
        out.features.push_back(static_cast<float>(cx + cfg.noise_sigma * eng.normal()));
        out.features.push_back(static_cast<float>(cy + cfg.noise_sigma * eng.normal()));
        for (size_t d = 2; d < cfg.feature_dim; ++d) {
            out.features.push_back(static_cast<float>(eng.normal()));
        }
        out.labels.push_back(static_cast<int>(label));
    }
}

} // namespace

LocalDataset make_client_dataset(uint64_t seed, int client_id, double dialect,
                                 size_t n_train, size_t n_val, const DataGenConfig& cfg) {
    LocalDataset data;
    data.feature_dim = cfg.feature_dim;
    data.n_train = n_train;
    data.n_val = n_val;
    data.dialect = dialect;
    auto eng = rng::make_engine(seed, {rng::kDataGen, static_cast<uint64_t>(client_id)});
    append_samples(data, eng, dialect, n_train + n_val, cfg);
    return data;
}

LocalDataset make_global_test(uint64_t seed, const std::vector<double>& dialects,
                              size_t samples_per_dialect, const DataGenConfig& cfg) {
    LocalDataset data;
    data.feature_dim = cfg.feature_dim;
    auto eng = rng::make_engine(seed, {rng::kGlobalTest});
    for (double dialect : dialects) append_samples(data, eng, dialect, samples_per_dialect, cfg);
    // The whole pool is a validation split.
    data.n_train = 0;
    data.n_val = data.labels.size();
    return data;
}

} // namespace fledge
