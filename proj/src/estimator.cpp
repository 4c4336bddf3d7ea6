#include "fledge/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "fledge/checkpoint.hpp"
#include "fledge/errors.hpp"
#include "fledge/rng.hpp"

namespace fledge {

ConfidenceState::ConfidenceState(int p, double lambda) : lambda_(lambda) {
    if (p <= 0 || lambda <= 0.0) throw std::invalid_argument("confidence state needs p > 0, lambda > 0");
    z_inv_ = Eigen::MatrixXd::Identity(p, p) / lambda;
}

double ConfidenceState::quadratic_form(const Eigen::VectorXd& g) const {
    if (g.size() != z_inv_.rows()) throw StructuralError("gradient length mismatch");
    double q = g.dot(z_inv_ * g);
    if (q < 0.0) {
        if (q < -1e-9) {
            throw ConfidenceDecayError("confidence matrix lost positive definiteness");
        }
        q = 0.0;
    }
    return q;
}

void ConfidenceState::update(const Eigen::VectorXd& g, double m) {
    if (g.size() != z_inv_.rows()) throw StructuralError("gradient length mismatch");
    // (Z + g g'/m)^-1 = Z^-1 - Z^-1 g g' Z^-1 / (m + g' Z^-1 g)
    Eigen::VectorXd u = z_inv_ * g;
    double denom = m + g.dot(u);
    if (denom <= 0.0) throw ConfidenceDecayError("rank-1 update denominator not positive");
    z_inv_.noalias() -= (u * u.transpose()) / denom;
    z_inv_ = ((z_inv_ + z_inv_.transpose()) * 0.5).eval();
    ++count_;
}

void ConfidenceState::reset() {
    z_inv_ = Eigen::MatrixXd::Identity(z_inv_.rows(), z_inv_.cols()) / lambda_;
    count_ = 0;
}

void ObservationLog::append(Observation o) {
    auto it = last_round_.find(o.client_id);
    if (it != last_round_.end() && o.round <= it->second) {
        throw std::invalid_argument("observation rounds must be strictly increasing per client");
    }
    last_round_[o.client_id] = o.round;
    records_.push_back(std::move(o));
}

namespace features {

Eigen::VectorXd full(const ContextVector& c) {
    Eigen::VectorXd x(6);
    x << c.total_ram_gb / kMaxRamGb, c.available_ram_gb / kMaxRamGb, c.battery_pct / kMaxBattery,
        static_cast<double>(c.battery_status), c.cpu_usage_pct / kMaxCpu,
        c.benchmark_score / kMaxBenchmark;
    return x;
}

Eigen::VectorXd personal(const ContextVector& c) {
    Eigen::VectorXd x(4);
    x << c.available_ram_gb / kMaxRamGb, c.battery_pct / kMaxBattery,
        static_cast<double>(c.battery_status), c.cpu_usage_pct / kMaxCpu;
    return x;
}

} // namespace features

EstimatorKind estimator_kind_from_string(const std::string& name) {
    if (name == "linucb") return EstimatorKind::LinUcb;
    if (name == "neuralucb_s") return EstimatorKind::NeuralShared;
    if (name == "neuralucb_m") return EstimatorKind::NeuralPerClient;
    if (name == "pinned") return EstimatorKind::Pinned;
    throw std::invalid_argument("unknown estimator kind '" + name + "'");
}

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::LinUcb: return "linucb";
        case EstimatorKind::NeuralShared: return "neuralucb_s";
        case EstimatorKind::NeuralPerClient: return "neuralucb_m";
        case EstimatorKind::Pinned: return "pinned";
    }
    return "?";
}

namespace {

std::vector<float> to_floats(const Eigen::MatrixXd& m) {
    std::vector<float> v(static_cast<size_t>(m.size()));
    size_t i = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) v[i++] = static_cast<float>(m(r, c));
    }
    return v;
}

Eigen::MatrixXd from_floats(const std::vector<float>& v, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[i++];
    }
    return m;
}

/// One neural arm: net + confidence + history.
struct NeuralArm {
    NeuralArm(const MlpConfig& mc, double lambda, uint64_t seed)
        : net(mc, seed), confidence(net.param_count(), lambda) {}

    Mlp net;
    ConfidenceState confidence;
    ObservationLog log;
    double last_fit_loss = -1.0; // final MSE of the most recent refit
};

class NeuralUcbEstimator final : public RewardEstimator {
public:
    NeuralUcbEstimator(bool per_client, const EstimatorConfig& cfg, const std::vector<int>& client_ids)
        : per_client_(per_client), cfg_(cfg) {
        MlpConfig mc;
        mc.input_dim = per_client_ ? 4 : 6;
        mc.hidden = cfg.hidden;
        mc.outputs = 2;
        if (per_client_) {
            for (int id : client_ids) {
                arms_.emplace(id, NeuralArm(mc, cfg.lambda,
                                            rng::derive(cfg.seed, {rng::kEstimatorInit,
                                                                   static_cast<uint64_t>(id) + 1})));
            }
        } else {
            arms_.emplace(kShared, NeuralArm(mc, cfg.lambda, rng::derive(cfg.seed, {rng::kEstimatorInit})));
        }
    }

    CostEstimate predict(int client_id, const ContextVector& c) const override {
        const NeuralArm& arm = arm_for(client_id);
        Eigen::VectorXd y = arm.net.forward(feature(c));
        CostEstimate est;
        est.batch_time_s = std::max(cfg_.estimate_floor, y(0) / cfg_.time_scale);
        est.battery_drop_pct = std::max(cfg_.estimate_floor, y(1) / cfg_.drop_scale);
        return est;
    }

    UcbScore ucb_score(int client_id, const ContextVector& c, double alpha) const override {
        const NeuralArm& arm = arm_for(client_id);
        Eigen::VectorXd x = feature(c);
        Eigen::VectorXd y = arm.net.forward(x);
        Eigen::VectorXd g = arm.net.gradient(x, 0);
        double q = arm.confidence.quadratic_form(g);
        UcbScore s;
        s.exploitation = -std::max(y(0), cfg_.estimate_floor * cfg_.time_scale);
        s.bonus = alpha * std::sqrt(q / arm.net.width_m());
        s.value = s.exploitation + s.bonus;
        return s;
    }

    void observe(int client_id, int round, const ContextVector& c, double true_batch_time_s,
                 double true_drop_pct) override {
        NeuralArm& arm = arm_for(client_id);
        Eigen::VectorXd x = feature(c);
        Eigen::VectorXd g = arm.net.gradient(x, 0); // gradient at theta_{t-1}
        arm.confidence.update(g, arm.net.width_m());
        arm.log.append({client_id, round, c, true_batch_time_s, true_drop_pct});
    }

    void finish_round(const std::vector<int>& observed_clients) override {
        if (observed_clients.empty()) return;
        if (per_client_) {
            for (int id : observed_clients) refit(arm_for(id));
        } else {
            refit(arms_.at(kShared));
        }
    }

    double training_loss() const override {
        double total = 0.0;
        int counted = 0;
        for (const auto& [id, arm] : arms_) {
            if (arm.last_fit_loss >= 0.0) {
                total += arm.last_fit_loss;
                ++counted;
            }
        }
        return counted > 0 ? total / counted : 0.0;
    }

    void save_snapshot(const std::string& path) const override {
        Checkpoint ck;
        ck.path = path;
        for (const auto& [id, arm] : arms_) {
            const auto& layers = arm.net.layers();
            for (size_t l = 0; l < layers.size(); ++l) {
                ck.weights.add(tensor_name(id, l),
                               {static_cast<size_t>(layers[l].rows()), static_cast<size_t>(layers[l].cols())},
                               to_floats(layers[l]));
            }
        }
        save_checkpoint(ck);
    }

    void load_snapshot(const std::string& path) override {
        Checkpoint ck = load_checkpoint(path);
        for (auto& [id, arm] : arms_) {
            auto& layers = arm.net.layers();
            for (size_t l = 0; l < layers.size(); ++l) {
                const auto& spec = manifest_entry(ck.weights, tensor_name(id, l));
                layers[l] = from_floats(ck.weights.tensor(spec.node_name),
                                        static_cast<Eigen::Index>(spec.shape[0]),
                                        static_cast<Eigen::Index>(spec.shape[1]));
            }
            arm.confidence.reset();
        }
    }

private:
    static constexpr int kShared = -1;

    static std::string tensor_name(int id, size_t layer) {
        return "arm" + std::to_string(id) + "/w" + std::to_string(layer);
    }

    static const TensorSpec& manifest_entry(const ModelWeights& w, const std::string& name) {
        for (const auto& spec : w.manifest()) {
            if (spec.node_name == name) return spec;
        }
        throw StructuralError("snapshot missing tensor '" + name + "'");
    }

    Eigen::VectorXd feature(const ContextVector& c) const {
        return per_client_ ? features::personal(c) : features::full(c);
    }

    NeuralArm& arm_for(int client_id) { return arms_.at(per_client_ ? client_id : kShared); }
    const NeuralArm& arm_for(int client_id) const { return arms_.at(per_client_ ? client_id : kShared); }

    void refit(NeuralArm& arm) {
        if (arm.log.empty()) return;
        const auto& recs = arm.log.records();
        Eigen::MatrixXd X(recs.size(), per_client_ ? 4 : 6);
        Eigen::MatrixXd Y(recs.size(), 2);
        for (size_t i = 0; i < recs.size(); ++i) {
            X.row(i) = feature(recs[i].context).transpose();
            Y(static_cast<Eigen::Index>(i), 0) = recs[i].batch_time_s * cfg_.time_scale;
            Y(static_cast<Eigen::Index>(i), 1) = recs[i].battery_drop_pct * cfg_.drop_scale;
        }
        auto losses = arm.net.fit(X, Y, {cfg_.fit_steps, cfg_.fit_learning_rate});
        if (!losses.empty()) arm.last_fit_loss = losses.back();
    }

    bool per_client_;
    EstimatorConfig cfg_;
    std::map<int, NeuralArm> arms_;
};

/// Ridge-regression UCB over the six raw features, one design matrix shared
/// by both output channels.
class LinUcbEstimator final : public RewardEstimator {
public:
    explicit LinUcbEstimator(const EstimatorConfig& cfg) : cfg_(cfg) {
        a_ = Eigen::MatrixXd::Identity(6, 6) * cfg.lambda;
        b_time_ = Eigen::VectorXd::Zero(6);
        b_drop_ = Eigen::VectorXd::Zero(6);
    }

    CostEstimate predict(int, const ContextVector& c) const override {
        Eigen::VectorXd x = features::full(c);
        Eigen::LLT<Eigen::MatrixXd> llt(a_);
        CostEstimate est;
        est.batch_time_s = std::max(cfg_.estimate_floor, x.dot(llt.solve(b_time_)) / cfg_.time_scale);
        est.battery_drop_pct = std::max(cfg_.estimate_floor, x.dot(llt.solve(b_drop_)) / cfg_.drop_scale);
        return est;
    }

    UcbScore ucb_score(int, const ContextVector& c, double alpha) const override {
        Eigen::VectorXd x = features::full(c);
        Eigen::LLT<Eigen::MatrixXd> llt(a_);
        UcbScore s;
        double pred = x.dot(llt.solve(b_time_));
        s.exploitation = -std::max(pred, cfg_.estimate_floor * cfg_.time_scale);
        s.bonus = alpha * std::sqrt(std::max(0.0, x.dot(llt.solve(x))));
        s.value = s.exploitation + s.bonus;
        return s;
    }

    void observe(int client_id, int round, const ContextVector& c, double true_batch_time_s,
                 double true_drop_pct) override {
        Eigen::VectorXd x = features::full(c);
        a_.noalias() += x * x.transpose();
        b_time_.noalias() += x * (true_batch_time_s * cfg_.time_scale);
        b_drop_.noalias() += x * (true_drop_pct * cfg_.drop_scale);
        log_.append({client_id, round, c, true_batch_time_s, true_drop_pct});
    }

    void finish_round(const std::vector<int>&) override {}

    double training_loss() const override {
        if (log_.empty()) return 0.0;
        Eigen::LLT<Eigen::MatrixXd> llt(a_);
        Eigen::VectorXd theta_time = llt.solve(b_time_);
        Eigen::VectorXd theta_drop = llt.solve(b_drop_);
        double total = 0.0;
        for (const auto& rec : log_.records()) {
            Eigen::VectorXd x = features::full(rec.context);
            double et = x.dot(theta_time) - rec.batch_time_s * cfg_.time_scale;
            double ed = x.dot(theta_drop) - rec.battery_drop_pct * cfg_.drop_scale;
            total += et * et + ed * ed;
        }
        return total / static_cast<double>(log_.size());
    }

    void save_snapshot(const std::string& path) const override {
        Checkpoint ck;
        ck.path = path;
        ck.weights.add("A", {6, 6}, to_floats(a_));
        ck.weights.add("b_time", {6, 1}, to_floats(b_time_));
        ck.weights.add("b_drop", {6, 1}, to_floats(b_drop_));
        save_checkpoint(ck);
    }

    void load_snapshot(const std::string& path) override {
        Checkpoint ck = load_checkpoint(path);
        a_ = from_floats(ck.weights.tensor("A"), 6, 6);
        b_time_ = from_floats(ck.weights.tensor("b_time"), 6, 1);
        b_drop_ = from_floats(ck.weights.tensor("b_drop"), 6, 1);
    }

private:
    EstimatorConfig cfg_;
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_time_;
    Eigen::VectorXd b_drop_;
    ObservationLog log_;
};

/// Frozen per-client estimates; zero exploration. Used by the scenario
/// harness where the predictions are fixed inputs, not learned state.
class PinnedEstimator final : public RewardEstimator {
public:
    explicit PinnedEstimator(std::map<int, CostEstimate> estimates) : estimates_(std::move(estimates)) {}

    CostEstimate predict(int client_id, const ContextVector&) const override {
        auto it = estimates_.find(client_id);
        if (it == estimates_.end()) throw std::invalid_argument("no pinned estimate for client");
        return it->second;
    }

    UcbScore ucb_score(int client_id, const ContextVector& c, double) const override {
        UcbScore s;
        s.exploitation = -predict(client_id, c).batch_time_s;
        s.bonus = 0.0;
        s.value = s.exploitation;
        return s;
    }

    void observe(int, int, const ContextVector&, double, double) override {}
    void finish_round(const std::vector<int>&) override {}
    double training_loss() const override { return 0.0; }

    void save_snapshot(const std::string& path) const override {
        Checkpoint ck;
        ck.path = path;
        std::vector<float> ids, values;
        for (const auto& [id, est] : estimates_) {
            ids.push_back(static_cast<float>(id));
            values.push_back(static_cast<float>(est.batch_time_s));
            values.push_back(static_cast<float>(est.battery_drop_pct));
        }
        ck.weights.add("client_ids", {ids.size()}, ids);
        ck.weights.add("estimates", {ids.size(), 2}, values);
        save_checkpoint(ck);
    }

    void load_snapshot(const std::string& path) override {
        Checkpoint ck = load_checkpoint(path);
        const auto& ids = ck.weights.tensor("client_ids");
        const auto& values = ck.weights.tensor("estimates");
        estimates_.clear();
        for (size_t i = 0; i < ids.size(); ++i) {
            estimates_[static_cast<int>(ids[i])] = {values[2 * i], values[2 * i + 1]};
        }
    }

private:
    std::map<int, CostEstimate> estimates_;
};

} // namespace

std::unique_ptr<RewardEstimator> make_estimator(EstimatorKind kind, const EstimatorConfig& cfg,
                                                const std::vector<DeviceProfile>& fleet) {
    std::vector<int> ids;
    ids.reserve(fleet.size());
    for (const auto& p : fleet) ids.push_back(p.device_id);
    switch (kind) {
        case EstimatorKind::LinUcb:
            return std::make_unique<LinUcbEstimator>(cfg);
        case EstimatorKind::NeuralShared:
            return std::make_unique<NeuralUcbEstimator>(false, cfg, ids);
        case EstimatorKind::NeuralPerClient:
            return std::make_unique<NeuralUcbEstimator>(true, cfg, ids);
        case EstimatorKind::Pinned: {
            std::map<int, CostEstimate> pins;
            for (const auto& p : fleet) {
                if (p.pinned_time_s < 0.0 || p.pinned_drop_pct < 0.0) {
                    throw std::invalid_argument("pinned estimator needs pinned costs on every profile");
                }
                pins[p.device_id] = {p.pinned_time_s, p.pinned_drop_pct};
            }
            return std::make_unique<PinnedEstimator>(std::move(pins));
        }
    }
    throw std::invalid_argument("unknown estimator kind");
}

std::vector<int> select_top(const std::map<int, UcbScore>& scores, int k) {
    if (scores.empty()) throw std::invalid_argument("select_top: empty score map");
    std::vector<std::pair<int, double>> order;
    order.reserve(scores.size());
    for (const auto& [id, s] : scores) order.emplace_back(id, s.value);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    size_t take = std::min<size_t>(static_cast<size_t>(std::max(k, 0)), order.size());
    std::vector<int> chosen;
    chosen.reserve(take);
    for (size_t i = 0; i < take; ++i) chosen.push_back(order[i].first);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

double RegretTracker::record_round(const std::map<int, double>& true_rewards,
                                   const std::vector<int>& chosen, int k,
                                   const std::map<int, double>* predicted_rewards) {
    std::vector<std::pair<int, double>> order(true_rewards.begin(), true_rewards.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    size_t take = std::min<size_t>(static_cast<size_t>(std::max(k, 0)), order.size());
    double best = 0.0;
    for (size_t i = 0; i < take; ++i) best += order[i].second;

    double achieved = 0.0;
    for (int id : chosen) {
        if (mode_ == RegretMode::Literal && predicted_rewards) {
            achieved += predicted_rewards->at(id);
        } else {
            achieved += true_rewards.at(id);
        }
    }
    double regret = best - achieved;
    per_round_.push_back(regret);
    cumulative_ += regret;
    return regret;
}

} // namespace fledge
