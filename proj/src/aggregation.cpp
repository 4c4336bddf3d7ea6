#include "fledge/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fledge/errors.hpp"

namespace fledge {

namespace {

/// Sorted-by-id index order; validates equal lengths.
std::vector<size_t> checked_order(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw std::invalid_argument("no updates to aggregate");
    std::vector<size_t> order(updates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return updates[a].client_id < updates[b].client_id;
    });
    size_t len = updates[order[0]].weights.values.size();
    for (size_t i : order) {
        if (updates[i].weights.values.size() != len) {
            throw StructuralError("client " + std::to_string(updates[i].client_id) +
                                  " uploaded " + std::to_string(updates[i].weights.values.size()) +
                                  " weights, expected " + std::to_string(len));
        }
    }
    return order;
}

FlatWeights combine(const std::vector<ClientUpdate>& updates, const std::vector<size_t>& order,
                    const std::vector<double>& coeff_by_order) {
    size_t len = updates[order[0]].weights.values.size();
    std::vector<double> acc(len, 0.0);
    for (size_t rank = 0; rank < order.size(); ++rank) {
        const auto& values = updates[order[rank]].weights.values;
        double a = coeff_by_order[rank];
        for (size_t i = 0; i < len; ++i) acc[i] += a * static_cast<double>(values[i]);
    }
    FlatWeights out;
    out.values.resize(len);
    for (size_t i = 0; i < len; ++i) out.values[i] = static_cast<float>(acc[i]);
    return out;
}

} // namespace

std::vector<double> softmax_coefficients(const std::vector<double>& wers) {
    if (wers.empty()) throw std::invalid_argument("softmax over empty WER list");
    std::vector<double> z(wers.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < wers.size(); ++i) {
        z[i] = 1.0 - std::min(wers[i], 1.0);
        mx = std::max(mx, z[i]);
    }
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
}

FlatWeights wer_weighted_aggregate(const std::vector<ClientUpdate>& updates) {
    auto order = checked_order(updates);
    std::vector<double> wers(order.size());
    for (size_t rank = 0; rank < order.size(); ++rank) wers[rank] = updates[order[rank]].wer;
    return combine(updates, order, softmax_coefficients(wers));
}

FlatWeights fed_avg(const std::vector<ClientUpdate>& updates) {
    auto order = checked_order(updates);
    double total = 0.0;
    for (const auto& u : updates) total += static_cast<double>(u.n_samples);
    if (total <= 0.0) throw std::invalid_argument("fed_avg: zero total samples");
    std::vector<double> coeff(order.size());
    for (size_t rank = 0; rank < order.size(); ++rank) {
        coeff[rank] = static_cast<double>(updates[order[rank]].n_samples) / total;
    }
    return combine(updates, order, coeff);
}

AggregationStrategy aggregation_from_string(const std::string& name) {
    if (name == "fedavg") return AggregationStrategy::FedAvg;
    if (name == "wer_softmax") return AggregationStrategy::WerSoftmax;
    throw std::invalid_argument("unknown aggregation strategy '" + name + "'");
}

std::string to_string(AggregationStrategy s) {
    return s == AggregationStrategy::FedAvg ? "fedavg" : "wer_softmax";
}

FlatWeights aggregate(AggregationStrategy strategy, const std::vector<ClientUpdate>& updates) {
    return strategy == AggregationStrategy::FedAvg ? fed_avg(updates) : wer_weighted_aggregate(updates);
}

} // namespace fledge
