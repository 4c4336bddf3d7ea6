#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fledge/client_runtime.hpp"
#include "fledge/round_engine.hpp"

namespace fledge {

struct ExperimentConfig {
    std::vector<DeviceProfile> fleet;
    int rounds = 5;
    std::vector<uint64_t> seeds = {1};

    SelectionStrategy strategy = SelectionStrategy::ResourceAware;
    AggregationStrategy aggregation = AggregationStrategy::WerSoftmax;
    SelectionConfig selection;
    EstimatorConfig estimator;
    std::optional<EstimatorKind> estimator_kind;
    double alpha = 0.01;
    int warmup_rounds = 20;
    double warmup_battery_margin = 15.0; // extra charge required to join a warmup round
    double deadline_factor = 1.5;        // <= 0: paper-fidelity, rounds can stall forever
    RegretMode regret_mode = RegretMode::Pseudo;

    SurrogateSpec surrogate;
    DataGenConfig datagen;
    int global_test_per_dialect = 15;

    // Skip surrogate training/aggregation and drive only the device/bandit
    // loop (regret and MSE benchmarking).
    bool bandit_only = false;

    /// Throws std::invalid_argument listing every offending field.
    void validate() const;

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
};

struct ClientRoundRecord {
    int client_id = 0;
    ContextVector context;
    bool chosen = false;
    bool died = false;
    double predicted_time_s = 0.0;
    double predicted_drop_pct = 0.0;
    double true_time_s = 0.0;  // noiseless, simulation privilege
    double true_drop_pct = 0.0;
    double ucb_value = 0.0;
    int epochs_assigned = 0;
    int epochs_completed = 0;
    double duration_s = 0.0;
    double waiting_s = 0.0;
    double battery_after = 0.0;
};

struct RoundReport {
    int t = 0;
    bool skipped = false; // nobody reported context
    bool voided = false;  // zero updates arrived
    bool stuck = false;   // paper-fidelity stall: a chosen client never returned
    bool warmup = false;
    std::vector<int> chosen;
    std::vector<ClientRoundRecord> clients;
    double m_t_s = 0.0;
    double round_regret = 0.0;
    double global_error = 0.0;
    double estimator_mse = 0.0;
    double round_duration_s = 0.0; // logical aggregation instant
};

struct FairnessReport {
    std::map<int, int> selection_counts;
    double jain = 0.0;
};

struct ExperimentResult {
    uint64_t seed = 0;
    std::vector<RoundReport> rounds;
    FairnessReport fairness;
    double initial_global_error = 0.0;
    double final_global_error = 0.0;
    double cumulative_regret = 0.0;
};

/// Engine wiring for one seeded run; the socket server and the in-process
/// driver must build their engines through these to stay equivalent.
RoundEngineConfig make_round_engine_config(const ExperimentConfig& cfg, uint64_t seed);
ModelWeights make_initial_global(const ExperimentConfig& cfg, uint64_t seed);
std::vector<DeviceProfile> make_seeded_fleet(const ExperimentConfig& cfg, uint64_t seed);

/// One seeded end-to-end simulation over the configured fleet.
class SimulationRun {
public:
    SimulationRun(const ExperimentConfig& cfg, uint64_t seed);

    RoundReport run_round();
    ExperimentResult run_all();

    const RoundEngine& engine() const { return engine_; }
    RoundEngine& engine() { return engine_; }
    const LocalDataset& global_test() const { return global_test_; }
    double initial_global_error() const { return initial_error_; }

private:
    ExperimentConfig cfg_;
    uint64_t seed_;
    std::vector<ClientRuntime> clients_;
    RoundEngine engine_;
    LocalDataset global_test_;
    RegretTracker regret_;
    double initial_error_ = 0.0;
    int t_ = 0;
};

/// Runs every configured seed; when out_dir is non-empty, writes per-seed
/// round CSVs, a seed-averaged CSV and a summary JSON.
std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg,
                                             const std::string& out_dir = {});

/// Stable-order per-round CSV (6 significant digits); empty input yields a
/// header-only file.
void export_csv(const std::vector<RoundReport>& reports, const std::string& path);

/// Audit record of one scheduling-table run: every per-client column needed
/// to reproduce the published numbers.
struct ScenarioClientRow {
    int client_id = 0;
    double battery_pct = 0.0;
    int battery_status = 0;
    int e_min = 0;
    int e_max = 0;
    double b_hat_s = 0.0;
    double d_hat_pct = 0.0;
    long b_max = 0;
    int e_max_t = 0;
    int epochs = 0;
    double actual_time_per_batch_s = 0.0;
    double waiting_min = 0.0;
    double battery_after = 0.0;
    bool died = false;
};

struct ScenarioResult {
    int scenario_id = 0;
    std::string strategy;
    bool paper_fidelity = false;
    double m_t_min = 0.0;
    bool completed = false;
    bool stuck = false;
    double round_waiting_min = 0.0; // slow-vs-fast gap; +inf when stuck
    std::vector<ScenarioClientRow> rows;

    std::string to_json_text() const;
};

/// Built-in two-client fleets calibrated to the published actual batch times:
/// scenario 1 = slow vs fast (430/233 s), scenario 2 = weak battery (233/132 s).
std::vector<DeviceProfile> make_scenario_fleet(int scenario_id);

ScenarioResult scenario_table2(int scenario_id, SelectionStrategy strategy, bool paper_fidelity,
                               uint64_t seed = 7);

} // namespace fledge
