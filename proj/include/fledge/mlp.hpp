#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace fledge {

/// Bias-free rectifier network f(x) = sqrt(m) * W_L relu(W_{L-1} relu(... W_1 x)),
/// where m is the first hidden width. The parameter vector theta is the
/// row-major flattening of W_1..W_L in layer order.
struct MlpConfig {
    int input_dim = 4;
    std::vector<int> hidden = {32, 16};
    int outputs = 2;
};

class Mlp {
public:
    Mlp(MlpConfig cfg, uint64_t seed);

    const MlpConfig& config() const { return cfg_; }
    int param_count() const { return param_count_; }
    double output_scale() const { return scale_; } // sqrt(m)
    double width_m() const { return static_cast<double>(cfg_.hidden.front()); }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

    /// Exact gradient of output channel `channel` w.r.t. theta, canonical order.
    Eigen::VectorXd gradient(const Eigen::VectorXd& x, int channel) const;

    /// Batched forward: X is samples x input_dim, result samples x outputs.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X) const;

    struct FitConfig {
        int steps = 100;
        double learning_rate = 1e-2;
    };

    /// Full-batch gradient descent on mean squared error over (X, Y).
    /// Returns the loss after each step.
    std::vector<double> fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const FitConfig& fc);

    Eigen::VectorXd theta() const;
    void set_theta(const Eigen::VectorXd& theta);

    const std::vector<Eigen::MatrixXd>& layers() const { return weights_; }
    std::vector<Eigen::MatrixXd>& layers() { return weights_; }

private:
    MlpConfig cfg_;
    std::vector<Eigen::MatrixXd> weights_; // W_l is (fan_out x fan_in)
    double scale_;
    int param_count_;
};

} // namespace fledge
