#pragma once

// Feedforward regression network: ReLU hidden layers, identity output,
// half mean squared error loss, Adam on shuffled mini-batches.
//
// Inputs and targets are standardized on the training set. Weights and
// biases start uniform in +-sqrt(6 / (fan_in + fan_out)), drawn from the
// counter stream (seed, 0) in layer order, weights row-major then biases.
// Epoch e shuffles rows with Fisher-Yates on stream (seed, 1 + e).
// Training stops early when the epoch loss fails to improve on the best
// loss by `tolerance` for `patience` consecutive epochs.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "amerlsm/error.hpp"
#include "amerlsm/random.hpp"
#include "amerlsm/regressors/standardizer.hpp"

namespace amerlsm {

struct MlpSpec {
    std::vector<int> hidden_layers{20, 20, 20, 20};
    int batch_size = 256;
    int epochs = 200;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    double tolerance = 1e-4;
    int patience = 10;

    void validate() const {
        for (int width : hidden_layers) {
            require(width >= 1, "MlpSpec: hidden layer widths must be >= 1");
        }
        require(batch_size >= 1, "MlpSpec: batch_size must be >= 1");
        require(epochs >= 0, "MlpSpec: epochs must be >= 0");
        require(learning_rate > 0.0, "MlpSpec: learning_rate must be > 0");
        require(patience >= 1, "MlpSpec: patience must be >= 1");
    }
};

struct MlpNetwork {
    /// weights[l] is [out x in]; biases[l] has `out` entries.
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static MlpNetwork zeros(int inputs, const std::vector<int>& hidden) {
        MlpNetwork net;
        int fan_in = inputs;
        for (int width : hidden) {
            net.weights.push_back(Eigen::MatrixXd::Zero(width, fan_in));
            net.biases.push_back(Eigen::VectorXd::Zero(width));
            fan_in = width;
        }
        net.weights.push_back(Eigen::MatrixXd::Zero(1, fan_in));
        net.biases.push_back(Eigen::VectorXd::Zero(1));
        return net;
    }

    static MlpNetwork initialize(int inputs, const std::vector<int>& hidden, std::uint64_t seed) {
        MlpNetwork net = zeros(inputs, hidden);
        const rng::CounterStream stream(seed, 0);
        std::uint64_t counter = 0;
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            auto& w = net.weights[l];
            const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                for (Eigen::Index c = 0; c < w.cols(); ++c) {
                    w(r, c) = bound * (2.0 * stream.uniform(counter++) - 1.0);
                }
            }
            for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
                net.biases[l](r) = bound * (2.0 * stream.uniform(counter++) - 1.0);
            }
        }
        return net;
    }

    std::size_t layers() const { return weights.size(); }

    Eigen::Index inputs() const { return weights.front().cols(); }

    std::size_t parameter_count() const {
        std::size_t count = 0;
        for (std::size_t l = 0; l < layers(); ++l) {
            count += static_cast<std::size_t>(weights[l].size() + biases[l].size());
        }
        return count;
    }

    /// Output for inputs laid out as columns ([features x batch]).
    Eigen::RowVectorXd forward(const Eigen::MatrixXd& inputs_by_column) const {
        Eigen::MatrixXd a = inputs_by_column;
        for (std::size_t l = 0; l < layers(); ++l) {
            Eigen::MatrixXd z = (weights[l] * a).colwise() + biases[l];
            if (l + 1 < layers()) {
                a = z.cwiseMax(0.0);
            } else {
                a = std::move(z);
            }
        }
        return a.row(0);
    }
};

/// Test hook for the gradient check: flip the sign of one layer's gradient.
struct BackpropHook {
    int negate_layer = -1;
};

struct LossGradient {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Loss 0.5 * mean((f(x) - y)^2) and its gradient by backpropagation.
/// `x` holds samples as columns.
inline LossGradient loss_and_gradient(const MlpNetwork& net, const Eigen::MatrixXd& x,
                                      const Eigen::RowVectorXd& y, const BackpropHook& hook = {}) {
    const std::size_t layers = net.layers();
    const double batch = static_cast<double>(x.cols());
    std::vector<Eigen::MatrixXd> activations;
    activations.reserve(layers + 1);
    activations.push_back(x);
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = (net.weights[l] * activations.back()).colwise() + net.biases[l];
        if (l + 1 < layers) {
            z = z.cwiseMax(0.0);
        }
        activations.push_back(std::move(z));
    }
    const Eigen::RowVectorXd residual = activations.back().row(0) - y;

    LossGradient out;
    out.loss = 0.5 * residual.squaredNorm() / batch;
    out.weights.resize(layers);
    out.biases.resize(layers);
    Eigen::MatrixXd delta = residual / batch;
    for (std::size_t l = layers; l-- > 0;) {
        out.weights[l] = delta * activations[l].transpose();
        out.biases[l] = delta.rowwise().sum();
        if (static_cast<int>(l) == hook.negate_layer) {
            out.weights[l] = -out.weights[l];
            out.biases[l] = -out.biases[l];
        }
        if (l > 0) {
            Eigen::MatrixXd back = net.weights[l].transpose() * delta;
            // ReLU derivative: activation > 0
            delta = back.cwiseProduct((activations[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return out;
}

struct MlpModel {
    MlpSpec spec;
    Standardizer standardizer;
    double target_mean = 0.0;
    double target_scale = 1.0;
    MlpNetwork network;
    std::vector<double> epoch_loss;
    /// Full-training-set loss before and after training.
    double initial_loss = 0.0;
    double final_loss = 0.0;

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
        const Eigen::MatrixXd z = standardizer.apply(x);
        const Eigen::RowVectorXd out = network.forward(z.transpose());
        return (out.transpose().array() * target_scale + target_mean).matrix();
    }

    /// Model that evaluates `network` on raw inputs and raw targets.
    static MlpModel from_network(MlpNetwork network) {
        MlpModel model;
        model.standardizer = Standardizer::identity(network.inputs());
        model.network = std::move(network);
        return model;
    }
};

namespace detail {

struct AdamState {
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
    long long step = 0;

    explicit AdamState(const MlpNetwork& net) {
        for (std::size_t l = 0; l < net.layers(); ++l) {
            m_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
            v_w.push_back(m_w.back());
            m_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
            v_b.push_back(m_b.back());
        }
    }

    void apply(MlpNetwork& net, const LossGradient& g, double learning_rate) {
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double eps = 1e-8;
        ++step;
        const double lr = learning_rate * std::sqrt(1.0 - std::pow(beta2, static_cast<double>(step))) /
                          (1.0 - std::pow(beta1, static_cast<double>(step)));
        for (std::size_t l = 0; l < net.layers(); ++l) {
            m_w[l] = beta1 * m_w[l] + (1.0 - beta1) * g.weights[l];
            v_w[l] = beta2 * v_w[l] + (1.0 - beta2) * g.weights[l].cwiseAbs2();
            net.weights[l].array() -= lr * m_w[l].array() / (v_w[l].array().sqrt() + eps);
            m_b[l] = beta1 * m_b[l] + (1.0 - beta1) * g.biases[l];
            v_b[l] = beta2 * v_b[l] + (1.0 - beta2) * g.biases[l].cwiseAbs2();
            net.biases[l].array() -= lr * m_b[l].array() / (v_b[l].array().sqrt() + eps);
        }
    }
};

inline void shuffle(std::vector<Eigen::Index>& order, const rng::CounterStream& stream) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(stream.uniform(i) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
}

inline double full_loss(const MlpNetwork& net, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& y) {
    return 0.5 * (net.forward(x) - y).squaredNorm() / static_cast<double>(x.cols());
}

}  // namespace detail

inline MlpModel fit_mlp(const MlpSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    spec.validate();
    MlpModel model;
    model.spec = spec;
    model.standardizer = Standardizer::fit(x);
    model.target_mean = y.mean();
    const double y_sd = std::sqrt((y.array() - model.target_mean).square().mean());
    model.target_scale = y_sd > 1e-12 * std::max(1.0, std::abs(model.target_mean)) ? y_sd : 1.0;

    const Eigen::MatrixXd inputs = model.standardizer.apply(x).transpose();
    const Eigen::RowVectorXd targets =
        ((y.array() - model.target_mean) / model.target_scale).matrix().transpose();
    const Eigen::Index n = inputs.cols();

    model.network = MlpNetwork::initialize(static_cast<int>(x.cols()), spec.hidden_layers, spec.seed);
    model.initial_loss = detail::full_loss(model.network, inputs, targets);

    detail::AdamState adam(model.network);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Eigen::Index batch = std::min<Eigen::Index>(spec.batch_size, n);
    Eigen::MatrixXd batch_x(inputs.rows(), batch);
    Eigen::RowVectorXd batch_y(batch);

    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        detail::shuffle(order, rng::CounterStream(spec.seed, 1 + static_cast<std::uint64_t>(epoch)));
        double accumulated = 0.0;
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index size = std::min(batch, n - start);
            batch_x.resize(inputs.rows(), size);
            batch_y.resize(size);
            for (Eigen::Index k = 0; k < size; ++k) {
                const Eigen::Index row = order[static_cast<std::size_t>(start + k)];
                batch_x.col(k) = inputs.col(row);
                batch_y(k) = targets(row);
            }
            const LossGradient g = loss_and_gradient(model.network, batch_x, batch_y);
            accumulated += g.loss * static_cast<double>(size);
            adam.apply(model.network, g, spec.learning_rate);
        }
        const double epoch_loss = accumulated / static_cast<double>(n);
        model.epoch_loss.push_back(epoch_loss);
        if (epoch_loss > best - spec.tolerance) {
            ++stale;
        } else {
            stale = 0;
        }
        best = std::min(best, epoch_loss);
        if (stale >= spec.patience) {
            break;
        }
    }
    require(model.network.weights.back().allFinite(), "mlp fit: training diverged");
    model.final_loss = detail::full_loss(model.network, inputs, targets);
    return model;
}

/// Worst relative disagreement between backpropagated and central
/// finite-difference gradients over every weight and bias. Relative error
/// is |a - n| / max(|a| + |n|, 1e-8), so matching zeros count as 0.
inline double gradient_check(const MlpNetwork& network, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             double epsilon, const BackpropHook& hook = {}) {
    const Eigen::MatrixXd inputs = x.transpose();
    const Eigen::RowVectorXd targets = y.transpose();
    const LossGradient analytic = loss_and_gradient(network, inputs, targets, hook);
    MlpNetwork probe = network;
    double worst = 0.0;
    auto compare = [&](double& parameter, double grad) {
        const double saved = parameter;
        parameter = saved + epsilon;
        const double up = detail::full_loss(probe, inputs, targets);
        parameter = saved - epsilon;
        const double down = detail::full_loss(probe, inputs, targets);
        parameter = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double rel = std::abs(grad - numeric) / std::max(std::abs(grad) + std::abs(numeric), 1e-8);
        worst = std::max(worst, rel);
    };
    for (std::size_t l = 0; l < probe.layers(); ++l) {
        for (Eigen::Index r = 0; r < probe.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < probe.weights[l].cols(); ++c) {
                compare(probe.weights[l](r, c), analytic.weights[l](r, c));
            }
        }
        for (Eigen::Index r = 0; r < probe.biases[l].size(); ++r) {
            compare(probe.biases[l](r), analytic.biases[l](r));
        }
    }
    return worst;
}

/// Gradient check on the network `fit_mlp` would start from for this spec,
/// evaluated on standardized inputs and targets.
inline double gradient_check(const MlpSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             double epsilon, const BackpropHook& hook = {}) {
    spec.validate();
    require(x.rows() == y.size() && x.rows() >= 1, "gradient_check: x and y sizes differ");
    const Standardizer s = Standardizer::fit(x);
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().mean());
    const double scale = sd > 0.0 ? sd : 1.0;
    const Eigen::VectorXd yz = ((y.array() - mean) / scale).matrix();
    const MlpNetwork net = MlpNetwork::initialize(static_cast<int>(x.cols()), spec.hidden_layers, spec.seed);
    return gradient_check(net, s.apply(x), yz, epsilon, hook);
}

}  // namespace amerlsm
