#include "fledge/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "fledge/errors.hpp"
#include "fledge/rng.hpp"

namespace fledge {

Mlp::Mlp(MlpConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    if (cfg_.hidden.empty()) throw std::invalid_argument("need at least one hidden layer");
    scale_ = std::sqrt(static_cast<double>(cfg_.hidden.front()));
    auto eng = rng::make_engine(seed, {rng::kEstimatorInit});
    int fan_in = cfg_.input_dim;
    param_count_ = 0;
    std::vector<int> outs(cfg_.hidden);
    outs.push_back(cfg_.outputs);
    for (int fan_out : outs) {
        Eigen::MatrixXd w(fan_out, fan_in);
        double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) w(r, c) = eng.normal() * sigma;
        }
        param_count_ += fan_out * fan_in;
        weights_.push_back(std::move(w));
        fan_in = fan_out;
    }
    // keep initial predictions modest despite the sqrt(m) output scale
    weights_.back() /= scale_;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
    if (x.size() != cfg_.input_dim) {
        throw StructuralError("mlp input dimension " + std::to_string(x.size()) + ", expected " +
                              std::to_string(cfg_.input_dim));
    }
    Eigen::VectorXd a = x;
    for (size_t l = 0; l + 1 < weights_.size(); ++l) {
        a = (weights_[l] * a).cwiseMax(0.0);
    }
    return scale_ * (weights_.back() * a);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& X) const {
    if (X.cols() != cfg_.input_dim) {
        throw StructuralError("mlp batch input dimension mismatch");
    }
    Eigen::MatrixXd a = X;
    for (size_t l = 0; l + 1 < weights_.size(); ++l) {
        a = (a * weights_[l].transpose()).cwiseMax(0.0);
    }
    return scale_ * (a * weights_.back().transpose());
}

Eigen::VectorXd Mlp::gradient(const Eigen::VectorXd& x, int channel) const {
    if (channel < 0 || channel >= cfg_.outputs) throw std::invalid_argument("bad output channel");
    const size_t L = weights_.size();
    std::vector<Eigen::VectorXd> acts(L); // acts[l] = input to layer l
    Eigen::VectorXd a = x;
    for (size_t l = 0; l + 1 < L; ++l) {
        acts[l] = a;
        a = (weights_[l] * a).cwiseMax(0.0);
    }
    acts[L - 1] = a;

    Eigen::VectorXd grad(param_count_);
    // delta at the output layer: d f_channel / d (W_L a) = scale * e_channel
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(cfg_.outputs);
    delta(channel) = scale_;
    int offset = param_count_;
    for (size_t l = L; l-- > 0;) {
        const Eigen::MatrixXd dW = delta * acts[l].transpose();
        offset -= static_cast<int>(dW.size());
        // row-major tensor layout inside the canonical theta vector
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            grad.data() + offset, dW.rows(), dW.cols()) = dW;
        if (l > 0) {
            Eigen::VectorXd pre = weights_[l - 1] * acts[l - 1];
            delta = (weights_[l].transpose() * delta).cwiseProduct(
                (pre.array() > 0.0).cast<double>().matrix());
        }
    }
    return grad;
}

std::vector<double> Mlp::fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                             const FitConfig& fc) {
    if (X.rows() != Y.rows()) throw StructuralError("fit: X/Y row mismatch");
    if (X.rows() == 0) return {};
    const size_t L = weights_.size();
    const double n = static_cast<double>(X.rows());
    std::vector<double> losses;
    losses.reserve(static_cast<size_t>(fc.steps));
    std::vector<Eigen::MatrixXd> acts(L + 1);
    for (int step = 0; step < fc.steps; ++step) {
        acts[0] = X;
        for (size_t l = 0; l + 1 < L; ++l) {
            acts[l + 1] = (acts[l] * weights_[l].transpose()).cwiseMax(0.0);
        }
        acts[L] = scale_ * (acts[L - 1] * weights_.back().transpose());
        Eigen::MatrixXd err = acts[L] - Y;
        losses.push_back(err.squaredNorm() / n);

        // d loss / d out = 2 err / n, loss = mean_i |f(x_i) - y_i|^2
        Eigen::MatrixXd delta = (2.0 / n) * err * scale_;
        for (size_t l = L; l-- > 0;) {
            Eigen::MatrixXd dW = delta.transpose() * acts[l];
            if (l > 0) {
                delta = (delta * weights_[l]).cwiseProduct(
                    (acts[l].array() > 0.0).cast<double>().matrix());
            }
            weights_[l] -= fc.learning_rate * dW;
        }
    }
    return losses;
}

Eigen::VectorXd Mlp::theta() const {
    Eigen::VectorXd t(param_count_);
    int offset = 0;
    for (const auto& w : weights_) {
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            t.data() + offset, w.rows(), w.cols()) = w;
        offset += static_cast<int>(w.size());
    }
    return t;
}

void Mlp::set_theta(const Eigen::VectorXd& theta) {
    if (theta.size() != param_count_) throw StructuralError("theta length mismatch");
    int offset = 0;
    for (auto& w : weights_) {
        w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            theta.data() + offset, w.rows(), w.cols());
        offset += static_cast<int>(w.size());
    }
}

} // namespace fledge
