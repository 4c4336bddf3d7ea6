#include "fledge/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fledge/rng.hpp"

namespace fledge {

CandidateAssessment assess(const ContextVector& c, const CostEstimate& est, long n_samples,
                           const SelectionConfig& cfg) {
    CandidateAssessment a;
    a.estimate = est;
    a.n_samples = n_samples;
    a.battery_pct = c.battery_pct;
    a.battery_status = c.battery_status;

    if (n_samples < cfg.batch_size) {
        a.reason = "fewer samples than one batch";
        return a;
    }
    const double batches_per_epoch = static_cast<double>(n_samples) / cfg.batch_size;

    if (cfg.charging_bypass && c.battery_status == 1) {
        a.b_max = std::numeric_limits<long>::max();
        a.e_max_t = cfg.e_max;
    } else {
        if (c.battery_pct <= cfg.gamma) {
            a.reason = "battery at or below floor";
            return a;
        }
        a.b_max = static_cast<long>(std::floor((c.battery_pct - cfg.gamma) / est.battery_drop_pct));
        a.e_max_t = static_cast<int>(std::min<double>(
            cfg.e_max, std::floor(static_cast<double>(a.b_max) / batches_per_epoch)));
    }
    a.eligible = a.e_max_t >= cfg.e_min;
    if (!a.eligible && a.reason.empty()) a.reason = "cannot run e_min epochs above battery floor";
    return a;
}

std::optional<SelectionPlan> plan_round(const std::vector<Candidate>& candidates,
                                        const RewardEstimator& estimator, double alpha,
                                        const SelectionConfig& cfg) {
    SelectionPlan plan;
    std::map<int, UcbScore> scores;
    std::map<int, CandidateAssessment> by_id;
    for (const auto& cand : candidates) {
        CandidateAssessment a =
            assess(cand.context, estimator.predict(cand.client_id, cand.context), cand.n_samples, cfg);
        a.client_id = cand.client_id;
        if (a.eligible) {
            scores[cand.client_id] = estimator.ucb_score(cand.client_id, cand.context, alpha);
        }
        by_id[cand.client_id] = a;
        plan.assessments.push_back(std::move(a));
    }
    if (scores.empty()) return std::nullopt;

    plan.chosen = select_top(scores, cfg.k);

    double m_t = std::numeric_limits<double>::infinity();
    for (int id : plan.chosen) {
        const auto& a = by_id.at(id);
        double cap = static_cast<double>(a.e_max_t) *
                     (static_cast<double>(a.n_samples) / cfg.batch_size) * a.estimate.batch_time_s;
        m_t = std::min(m_t, cap);
    }
    plan.time_budget_s = m_t;

    for (int id : plan.chosen) {
        const auto& a = by_id.at(id);
        double batches_per_epoch = static_cast<double>(a.n_samples) / cfg.batch_size;
        int e = static_cast<int>(std::floor((m_t / a.estimate.batch_time_s) / batches_per_epoch));
        bool overrun = false;
        if (e < cfg.e_min) {
            // The floor formula can hit 0 for a slow client inside a short
            // budget; it still trains e_min epochs and m_t goes soft for it.
            e = cfg.e_min;
            overrun = true;
        }
        e = std::min(e, a.e_max_t);
        plan.epochs[id] = e;
        plan.budget_overrun[id] = overrun;
        plan.predicted_duration_s[id] = e * batches_per_epoch * a.estimate.batch_time_s;
    }
    return plan;
}

SelectionPlan random_select(const std::vector<Candidate>& available, const SelectionConfig& cfg,
                            uint64_t seed) {
    if (available.empty()) throw std::invalid_argument("random_select: no available clients");
    std::vector<int> ids;
    ids.reserve(available.size());
    for (const auto& c : available) ids.push_back(c.client_id);
    std::sort(ids.begin(), ids.end());

    auto eng = rng::make_engine(seed, {rng::kRandomSelect});
    // partial Fisher-Yates: the first k slots are the sample
    size_t take = std::min<size_t>(static_cast<size_t>(std::max(cfg.k, 0)), ids.size());
    for (size_t i = 0; i < take; ++i) {
        size_t j = i + static_cast<size_t>(eng.uniform_index(ids.size() - i));
        std::swap(ids[i], ids[j]);
    }
    SelectionPlan plan;
    plan.chosen.assign(ids.begin(), ids.begin() + static_cast<long>(take));
    std::sort(plan.chosen.begin(), plan.chosen.end());
    plan.time_budget_s = std::numeric_limits<double>::infinity();
    for (int id : plan.chosen) plan.epochs[id] = cfg.e_max;
    return plan;
}

std::map<int, double> predicted_waiting_time(const SelectionPlan& plan) {
    return waiting_from_durations(plan.predicted_duration_s);
}

std::map<int, double> waiting_from_durations(const std::map<int, double>& duration_s) {
    std::map<int, double> waiting;
    if (duration_s.empty()) return waiting;
    double slowest = 0.0;
    for (const auto& [id, d] : duration_s) slowest = std::max(slowest, d);
    for (const auto& [id, d] : duration_s) waiting[id] = slowest - d;
    return waiting;
}

} // namespace fledge
