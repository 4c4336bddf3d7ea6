#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fledge/device.hpp"
#include "fledge/mlp.hpp"

namespace fledge {

struct CostEstimate {
    double batch_time_s = 0.0;
    double battery_drop_pct = 0.0;
};

struct UcbScore {
    double value = 0.0;        // exploitation + bonus
    double exploitation = 0.0; // -predicted batch time (model output units)
    double bonus = 0.0;        // alpha * sqrt(g' Z^-1 g / m)
};

/// Raised when the maintained inverse has decayed to non-PD; callers should
/// re-initialize the confidence state.
class ConfidenceDecayError : public std::runtime_error {
public:
    explicit ConfidenceDecayError(const std::string& what) : std::runtime_error(what) {}
};

/// Inverse of Z = lambda*I + sum g g'/m, maintained by rank-1
/// (Sherman-Morrison) updates with symmetry re-enforced.
class ConfidenceState {
public:
    ConfidenceState(int p, double lambda);

    int dim() const { return static_cast<int>(z_inv_.rows()); }
    double lambda() const { return lambda_; }
    long update_count() const { return count_; }
    const Eigen::MatrixXd& z_inverse() const { return z_inv_; }

    /// g' Z^-1 g. Throws ConfidenceDecayError if the form has gone negative
    /// beyond numerical tolerance.
    double quadratic_form(const Eigen::VectorXd& g) const;

    /// Z <- Z + g g' / m.
    void update(const Eigen::VectorXd& g, double m);

    void reset();

private:
    double lambda_;
    long count_ = 0;
    Eigen::MatrixXd z_inv_;
};

/// Per-client observation history D. Rounds must be strictly increasing for
/// any one client.
struct Observation {
    int client_id = 0;
    int round = 0;
    ContextVector context;
    double batch_time_s = 0.0;
    double battery_drop_pct = 0.0;
};

class ObservationLog {
public:
    void append(Observation o);
    const std::vector<Observation>& records() const { return records_; }
    bool empty() const { return records_.empty(); }
    size_t size() const { return records_.size(); }

private:
    std::vector<Observation> records_;
    std::map<int, int> last_round_;
};

namespace features {
// Fixed physical ranges used to scale every context feature into [0, 1].
constexpr double kMaxRamGb = 16.0;
constexpr double kMaxBattery = 100.0;
constexpr double kMaxCpu = 100.0;
constexpr double kMaxBenchmark = 1e6;

/// All six features [TR, AR, AC, BS, CI, PI]; shared models and LinUCB.
Eigen::VectorXd full(const ContextVector& c);

/// Four features [AR, AC, BS, CI]; personalized models drop the static pair.
Eigen::VectorXd personal(const ContextVector& c);
} // namespace features

struct EstimatorConfig {
    std::vector<int> hidden = {32, 16};
    double lambda = 1.0;
    int fit_steps = 100;
    // Full-batch GD above ~3e-3 overshoots the sqrt(m)-scaled rectifier and
    // kills units permanently; 1e-3 is stable across seeds.
    double fit_learning_rate = 1e-3;
    // The nets train in scaled units (seconds * time_scale, percent * drop_scale);
    // predictions are mapped back to physical units on the way out.
    double time_scale = 0.01;
    double drop_scale = 1.0;
    double estimate_floor = 1e-3; // physical-unit clamp, keeps downstream division defined
    uint64_t seed = 0;
};

enum class EstimatorKind { LinUcb, NeuralShared, NeuralPerClient, Pinned };

EstimatorKind estimator_kind_from_string(const std::string& name);
std::string to_string(EstimatorKind kind);

/// Cost predictor + exploration interface shared by every variant.
class RewardEstimator {
public:
    virtual ~RewardEstimator() = default;

    virtual CostEstimate predict(int client_id, const ContextVector& c) const = 0;
    virtual UcbScore ucb_score(int client_id, const ContextVector& c, double alpha) const = 0;

    /// Feed one realized (context -> true cost) pair. Call in ascending
    /// client order within a round; updates the confidence state and log.
    virtual void observe(int client_id, int round, const ContextVector& c,
                         double true_batch_time_s, double true_drop_pct) = 0;

    /// Retrain after all of a round's observations are in (TrainNN step).
    virtual void finish_round(const std::vector<int>& observed_clients) = 0;

    /// Mean squared error of the reward model over its own observation log,
    /// in the model's scaled units; 0 before any data. Per-client variants
    /// average across clients that have trained at least once.
    virtual double training_loss() const = 0;

    /// Parameter snapshot in the same container as model checkpoints.
    /// Confidence state and observation logs restart fresh on load.
    virtual void save_snapshot(const std::string& path) const = 0;
    virtual void load_snapshot(const std::string& path) = 0;
};

std::unique_ptr<RewardEstimator> make_estimator(EstimatorKind kind, const EstimatorConfig& cfg,
                                                const std::vector<DeviceProfile>& fleet);

/// Largest-score clients, ties broken by lowest client id.
std::vector<int> select_top(const std::map<int, UcbScore>& scores, int k);

enum class RegretMode { Pseudo, Literal };

/// Cumulative selection regret against the true-optimal k-subset.
/// Pseudo mode uses true rewards on both sides; Literal subtracts the
/// predicted rewards of the chosen set instead.
class RegretTracker {
public:
    explicit RegretTracker(RegretMode mode = RegretMode::Pseudo) : mode_(mode) {}

    double record_round(const std::map<int, double>& true_rewards, const std::vector<int>& chosen,
                        int k, const std::map<int, double>* predicted_rewards = nullptr);

    double cumulative() const { return cumulative_; }
    const std::vector<double>& per_round() const { return per_round_; }
    RegretMode mode() const { return mode_; }

private:
    RegretMode mode_;
    double cumulative_ = 0.0;
    std::vector<double> per_round_;
};

} // namespace fledge
