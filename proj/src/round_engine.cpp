#include "fledge/round_engine.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "fledge/rng.hpp"

namespace fledge {

SelectionStrategy selection_strategy_from_string(const std::string& name) {
    if (name == "random") return SelectionStrategy::Random;
    if (name == "linucb") return SelectionStrategy::LinUcb;
    if (name == "neuralucb_s") return SelectionStrategy::NeuralUcbS;
    if (name == "neuralucb_m") return SelectionStrategy::NeuralUcbM;
    if (name == "resource_aware") return SelectionStrategy::ResourceAware;
    throw std::invalid_argument("unknown selection strategy '" + name + "'");
}

std::string to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::Random: return "random";
        case SelectionStrategy::LinUcb: return "linucb";
        case SelectionStrategy::NeuralUcbS: return "neuralucb_s";
        case SelectionStrategy::NeuralUcbM: return "neuralucb_m";
        case SelectionStrategy::ResourceAware: return "resource_aware";
    }
    return "?";
}

namespace {

EstimatorKind natural_kind(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::LinUcb: return EstimatorKind::LinUcb;
        case SelectionStrategy::NeuralUcbS: return EstimatorKind::NeuralShared;
        default: return EstimatorKind::NeuralPerClient;
    }
}

} // namespace

RoundEngine::RoundEngine(RoundEngineConfig cfg, const std::vector<DeviceProfile>& fleet,
                         ModelWeights initial_global)
    : cfg_(std::move(cfg)), global_(std::move(initial_global)),
      fleet_size_(static_cast<int>(fleet.size())) {
    if (cfg_.strategy != SelectionStrategy::Random) {
        EstimatorKind kind = cfg_.estimator_kind.value_or(natural_kind(cfg_.strategy));
        estimator_ = make_estimator(kind, cfg_.estimator, fleet);
    }
}

RoundDirectives RoundEngine::plan_current_round(const std::vector<ContextReport>& reports) {
    RoundDirectives out;
    out.round = round_;
    if (reports.empty()) return out;

    last_contexts_.clear();
    std::vector<Candidate> candidates;
    candidates.reserve(reports.size());
    for (const auto& r : reports) {
        candidates.push_back({r.client_id, r.context, r.n_samples});
        last_contexts_[r.client_id] = r.context;
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.client_id < b.client_id; });

    const SelectionConfig& sel = cfg_.selection;
    if (cfg_.strategy == SelectionStrategy::Random) {
        out.plan = random_select(candidates, sel, rng::derive(cfg_.seed, {static_cast<uint64_t>(round_)}));
    } else if (round_ < cfg_.warmup_rounds) {
        // Round-robin forced exploration: the estimator has no usable history
        // yet, so every client with battery headroom takes turns at e_min.
        out.warmup = true;
        std::vector<Candidate> pool;
        for (const auto& c : candidates) {
            if (c.context.battery_status == 1 ||
                c.context.battery_pct > sel.gamma + cfg_.warmup_battery_margin) {
                pool.push_back(c);
            }
        }
        if (pool.empty()) return out;
        SelectionPlan plan;
        size_t n = pool.size();
        size_t take = std::min<size_t>(static_cast<size_t>(sel.k), n);
        for (size_t j = 0; j < take; ++j) {
            size_t idx = (static_cast<size_t>(round_) * take + j) % n;
            plan.chosen.push_back(pool[idx].client_id);
        }
        std::sort(plan.chosen.begin(), plan.chosen.end());
        plan.chosen.erase(std::unique(plan.chosen.begin(), plan.chosen.end()), plan.chosen.end());
        plan.time_budget_s = std::numeric_limits<double>::infinity();
        for (int id : plan.chosen) plan.epochs[id] = sel.e_min;
        out.plan = std::move(plan);
    } else if (cfg_.strategy == SelectionStrategy::ResourceAware) {
        out.plan = plan_round(candidates, *estimator_, cfg_.alpha, sel);
    } else {
        // Pure bandit strategies: UCB top-k over everyone reporting, no
        // battery filter, fixed e_min epochs to realize the costs.
        std::map<int, UcbScore> scores;
        for (const auto& c : candidates) {
            scores[c.client_id] = estimator_->ucb_score(c.client_id, c.context, cfg_.alpha);
        }
        SelectionPlan plan;
        plan.chosen = select_top(scores, sel.k);
        plan.time_budget_s = std::numeric_limits<double>::infinity();
        for (int id : plan.chosen) plan.epochs[id] = sel.e_min;
        out.plan = std::move(plan);
    }

    if (out.plan) {
        for (int id : out.plan->chosen) ++selection_counts_[id];
    }
    return out;
}

RoundSettlement RoundEngine::settle_round(const RoundDirectives& directives,
                                          std::vector<ClientUpdate> updates) {
    RoundSettlement result;
    result.updates_received = static_cast<int>(updates.size());
    std::sort(updates.begin(), updates.end(),
              [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });

    if (!updates.empty() && cfg_.aggregate_updates) {
        FlatWeights combined = aggregate(cfg_.aggregation, updates);
        global_ = load_flat_weights(combined, global_.manifest());
        result.aggregated = true;
    }

    if (estimator_) {
        std::vector<int> observed;
        for (const auto& u : updates) {
            auto it = last_contexts_.find(u.client_id);
            if (it == last_contexts_.end()) continue;
            estimator_->observe(u.client_id, directives.round, it->second,
                                u.batch_time_observed_s, u.battery_drop_observed_pct);
            observed.push_back(u.client_id);
        }
        estimator_->finish_round(observed);
    }

    ++round_;
    return result;
}

double jain_index(const std::map<int, int>& counts, int n_clients) {
    if (n_clients <= 0) return 0.0;
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& [id, c] : counts) {
        sum += c;
        sum_sq += static_cast<double>(c) * c;
    }
    if (sum_sq == 0.0) return 0.0;
    return (sum * sum) / (static_cast<double>(n_clients) * sum_sq);
}

double RoundEngine::jain_fairness_index() const {
    return jain_index(selection_counts_, fleet_size_);
}

} // namespace fledge
