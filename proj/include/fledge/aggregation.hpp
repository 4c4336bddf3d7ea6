#pragma once

#include <string>
#include <vector>

#include "fledge/tensor.hpp"

namespace fledge {

/// One client's end-of-round upload.
struct ClientUpdate {
    int client_id = 0;
    FlatWeights weights;
    double wer = 0.0; // error rate in [0, 1]
    long n_samples = 0;
    double batch_time_observed_s = 0.0;
    double battery_drop_observed_pct = 0.0;
};

/// Softmax of (1 - WER): alpha_i = exp(1 - WER_i) / sum_j exp(1 - WER_j).
/// WERs above 1 are clamped before the softmax. Coefficients sum to 1.
std::vector<double> softmax_coefficients(const std::vector<double>& wers);

/// w <- sum_i alpha_i w_i with the softmax coefficients above. Lower-error
/// clients weigh more. Accumulates in doubles, summing in client-id order.
FlatWeights wer_weighted_aggregate(const std::vector<ClientUpdate>& updates);

/// Sample-count-weighted mean: sum_i (n_i / sum_j n_j) w_i.
FlatWeights fed_avg(const std::vector<ClientUpdate>& updates);

enum class AggregationStrategy { FedAvg, WerSoftmax };

AggregationStrategy aggregation_from_string(const std::string& name);
std::string to_string(AggregationStrategy s);

FlatWeights aggregate(AggregationStrategy strategy, const std::vector<ClientUpdate>& updates);

} // namespace fledge
