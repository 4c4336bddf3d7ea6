#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fledge/device.hpp"
#include "fledge/estimator.hpp"

namespace fledge {

struct SelectionConfig {
    int k = 2;
    int e_min = 1;
    int e_max = 7;
    int batch_size = 5;
    double gamma = 20.0; // battery floor, percent
    // When true a charging client bypasses the battery filter (unbounded
    // b_max). Off in paper-fidelity mode.
    bool charging_bypass = false;
};

/// Per-candidate view of Steps 1-3: how many batches the battery affords and
/// the per-round epoch cap that follows.
struct CandidateAssessment {
    int client_id = 0;
    CostEstimate estimate;
    long n_samples = 0;
    long b_max = 0;  // batches before the battery hits gamma
    int e_max_t = 0; // per-round epoch cap
    bool eligible = false;
    std::string reason; // set when ineligible
    double battery_pct = 0.0;
    int battery_status = 0;
};

/// Output of a planning pass: who trains, for how many epochs, under which
/// shared time budget.
struct SelectionPlan {
    std::vector<int> chosen; // ascending client id
    std::map<int, int> epochs;
    double time_budget_s = 0.0; // m_t; +inf sentinel never escapes (>= 1 client)
    std::map<int, double> predicted_duration_s;
    std::map<int, bool> budget_overrun; // e_min clamp forced a soft m_t for this client
    std::vector<CandidateAssessment> assessments;
};

struct Candidate {
    int client_id = 0;
    ContextVector context;
    long n_samples = 0;
};

/// Steps 1-3 of the selection pass for one candidate.
CandidateAssessment assess(const ContextVector& c, const CostEstimate& est, long n_samples,
                           const SelectionConfig& cfg);

/// Steps 4-7: UCB pick over the eligible set, time budget m_t, per-client
/// epochs. Empty when no candidate is eligible (the round is skipped).
std::optional<SelectionPlan> plan_round(const std::vector<Candidate>& candidates,
                                        const RewardEstimator& estimator, double alpha,
                                        const SelectionConfig& cfg);

/// Baseline: uniform k-subset, every chosen client runs e_max epochs,
/// no time budget.
SelectionPlan random_select(const std::vector<Candidate>& available, const SelectionConfig& cfg,
                            uint64_t seed);

/// Per chosen client: how long it is predicted to idle after finishing,
/// i.e. slowest predicted duration minus its own.
std::map<int, double> predicted_waiting_time(const SelectionPlan& plan);

/// Same gap computation over realized durations.
std::map<int, double> waiting_from_durations(const std::map<int, double>& duration_s);

} // namespace fledge
