#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fledge/aggregation.hpp"
#include "fledge/device.hpp"
#include "fledge/estimator.hpp"
#include "fledge/selection.hpp"
#include "fledge/surrogate.hpp"
#include "fledge/tensor.hpp"

namespace fledge {

enum class SelectionStrategy { Random, LinUcb, NeuralUcbS, NeuralUcbM, ResourceAware };

SelectionStrategy selection_strategy_from_string(const std::string& name);
std::string to_string(SelectionStrategy s);

struct RoundEngineConfig {
    SelectionConfig selection;
    SelectionStrategy strategy = SelectionStrategy::ResourceAware;
    AggregationStrategy aggregation = AggregationStrategy::WerSoftmax;
    EstimatorConfig estimator;
    // Overrides the strategy's natural estimator (e.g. Pinned for scenarios).
    std::optional<EstimatorKind> estimator_kind;
    double alpha = 0.01; // exploration multiplier
    // Forced round-robin exploration before the bandit drives selection.
    // With no cost history yet, only clients with `warmup_battery_margin`
    // of headroom above the floor take a turn.
    int warmup_rounds = 20;
    double warmup_battery_margin = 15.0;
    // Round deadline = factor * m_t. <= 0 disables it (paper-fidelity mode:
    // a missing client stalls the round forever).
    double deadline_factor = 1.5;
    // Off for bandit benchmarking: costs are observed but no weights move.
    bool aggregate_updates = true;
    uint64_t seed = 0;
};

struct ContextReport {
    int client_id = 0;
    ContextVector context;
    long n_samples = 0;
};

struct RoundDirectives {
    int round = 0;
    bool warmup = false;
    std::optional<SelectionPlan> plan; // empty -> round skipped
};

struct RoundSettlement {
    bool aggregated = false;
    int updates_received = 0;
};

/// Server-side round logic shared by the in-process driver and the socket
/// server: selection, aggregation, estimator feeding, fairness accounting.
/// Single-threaded by contract; callers serialize access.
class RoundEngine {
public:
    RoundEngine(RoundEngineConfig cfg, const std::vector<DeviceProfile>& fleet,
                ModelWeights initial_global);

    const RoundEngineConfig& config() const { return cfg_; }
    int current_round() const { return round_; }
    const ModelWeights& global_weights() const { return global_; }
    const std::vector<TensorSpec>& manifest() const { return global_.manifest(); }

    /// Selection over this round's context reports.
    RoundDirectives plan_current_round(const std::vector<ContextReport>& reports);

    /// Aggregates whatever arrived, feeds realized costs to the estimator,
    /// and advances the round counter.
    RoundSettlement settle_round(const RoundDirectives& directives,
                                 std::vector<ClientUpdate> updates);

    /// Advances the round counter when a round never reached planning.
    void skip_round() { ++round_; }

    /// Null for the random strategy.
    RewardEstimator* estimator() { return estimator_.get(); }
    const RewardEstimator* estimator() const { return estimator_.get(); }

    const std::map<int, int>& selection_counts() const { return selection_counts_; }
    double jain_fairness_index() const;

private:
    RoundEngineConfig cfg_;
    ModelWeights global_;
    std::unique_ptr<RewardEstimator> estimator_;
    std::map<int, ContextVector> last_contexts_;
    std::map<int, int> selection_counts_;
    int fleet_size_;
    int round_ = 0;
};

/// Selection counts -> Jain index in [1/N, 1].
double jain_index(const std::map<int, int>& counts, int n_clients);

} // namespace fledge
