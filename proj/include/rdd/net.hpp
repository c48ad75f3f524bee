#pragma once

#include <span>
#include <string>
#include <vector>

#include "rdd/rng.hpp"

namespace rdd {

enum class Activation : uint8_t { Relu = 0, Tanh = 1, Identity = 2 };

// One fully connected layer: y = act(W x + b), W stored row-major (out x in).
struct DenseLayer {
    int in = 0;
    int out = 0;
    Activation act = Activation::Identity;
    std::vector<double> w;
    std::vector<double> b;
};

// Gradient buffers shaped like a network's parameters.
struct Gradients {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    void zero();
};

// Minimal dense feed-forward network with manual backpropagation.
// Single-threaded per instance; distinct instances are independent.
class DenseNet {
public:
    DenseNet() = default;

    // Hidden layers use `hidden_act`, the output layer is linear.
    // Weights ~ U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))), biases 0.
    DenseNet(int input_dim, const std::vector<int>& hidden, int output_dim,
             Activation hidden_act, Rng& rng);

    // Builds a network from explicit layers (tests, deserialization).
    static DenseNet from_layers(std::vector<DenseLayer> layers);

    std::vector<double> forward(std::span<const double> x) const;

    // Activation cache from a forward pass, consumed by backward().
    struct Tape {
        std::vector<double> input;
        std::vector<std::vector<double>> pre;   // pre-activation per layer
        std::vector<std::vector<double>> post;  // post-activation per layer
    };

    std::vector<double> forward_tape(std::span<const double> x, Tape& tape) const;

    // Accumulates parameter gradients for an upstream gradient dL/dy.
    void backward(const Tape& tape, std::span<const double> dLdy, Gradients& grads) const;

    // Loss = ||forward(x) - target||^2 with exact parameter gradients accumulated.
    double backward_mse(std::span<const double> x, std::span<const double> target,
                        Gradients& grads) const;

    Gradients make_gradients() const;

    int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
    int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
    size_t layer_count() const { return layers_.size(); }
    DenseLayer& layer(size_t i) { return layers_[i]; }
    const DenseLayer& layer(size_t i) const { return layers_[i]; }

private:
    std::vector<DenseLayer> layers_;
};

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment buffers shape-match the network parameters.
class Adam {
public:
    Adam() = default;
    Adam(const DenseNet& net, AdamConfig cfg);

    // Throws if a gradient entry is non-finite, naming the offending layer.
    void step(DenseNet& net, const Gradients& grads);

    int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    Gradients& moment1() { return m_; }
    Gradients& moment2() { return v_; }
    void set_step_count(int64_t t) { t_ = t; }

private:
    AdamConfig cfg_;
    int64_t t_ = 0;
    Gradients m_;
    Gradients v_;
};

}  // namespace rdd
