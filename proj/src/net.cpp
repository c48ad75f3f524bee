#include "rdd/net.hpp"

#include <cmath>
#include <stdexcept>

namespace rdd {

namespace {

double apply_act(Activation act, double v) {
    switch (act) {
        case Activation::Relu: return v > 0.0 ? v : 0.0;
        case Activation::Tanh: return std::tanh(v);
        case Activation::Identity: return v;
    }
    return v;
}

double act_grad(Activation act, double pre, double post) {
    switch (act) {
        case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - post * post;
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

}  // namespace

void Gradients::zero() {
    for (auto& g : w) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : b) std::fill(g.begin(), g.end(), 0.0);
}

DenseNet::DenseNet(int input_dim, const std::vector<int>& hidden, int output_dim,
                   Activation hidden_act, Rng& rng) {
    if (input_dim <= 0 || output_dim <= 0) {
        throw std::invalid_argument("DenseNet: dimensions must be positive");
    }
    std::vector<int> dims;
    dims.push_back(input_dim);
    for (int h : hidden) dims.push_back(h);
    dims.push_back(output_dim);

    for (size_t k = 0; k + 1 < dims.size(); ++k) {
        DenseLayer layer;
        layer.in = dims[k];
        layer.out = dims[k + 1];
        layer.act = (k + 2 < dims.size()) ? hidden_act : Activation::Identity;
        layer.w.resize(static_cast<size_t>(layer.in) * layer.out);
        layer.b.assign(layer.out, 0.0);
        double bound = std::sqrt(6.0 / (layer.in + layer.out));
        for (double& v : layer.w) v = rng.uniform(-bound, bound);
        layers_.push_back(std::move(layer));
    }
}

DenseNet DenseNet::from_layers(std::vector<DenseLayer> layers) {
    for (size_t k = 0; k + 1 < layers.size(); ++k) {
        if (layers[k].out != layers[k + 1].in) {
            throw std::invalid_argument("DenseNet: layer " + std::to_string(k) + " output dim " +
                                        std::to_string(layers[k].out) + " != layer " +
                                        std::to_string(k + 1) + " input dim " +
                                        std::to_string(layers[k + 1].in));
        }
    }
    DenseNet net;
    net.layers_ = std::move(layers);
    return net;
}

std::vector<double> DenseNet::forward(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim()) {
        throw std::invalid_argument("forward: input size " + std::to_string(x.size()) +
                                    " != expected " + std::to_string(input_dim()));
    }
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (const auto& layer : layers_) {
        next.assign(layer.out, 0.0);
        for (int i = 0; i < layer.out; ++i) {
            const double* row = layer.w.data() + static_cast<size_t>(i) * layer.in;
            double acc = layer.b[i];
            for (int j = 0; j < layer.in; ++j) acc += row[j] * cur[j];
            next[i] = apply_act(layer.act, acc);
        }
        cur.swap(next);
    }
    return cur;
}

std::vector<double> DenseNet::forward_tape(std::span<const double> x, Tape& tape) const {
    if (static_cast<int>(x.size()) != input_dim()) {
        throw std::invalid_argument("forward: input size " + std::to_string(x.size()) +
                                    " != expected " + std::to_string(input_dim()));
    }
    tape.input.assign(x.begin(), x.end());
    tape.pre.assign(layers_.size(), {});
    tape.post.assign(layers_.size(), {});

    const std::vector<double>* cur = &tape.input;
    for (size_t k = 0; k < layers_.size(); ++k) {
        const auto& layer = layers_[k];
        auto& pre = tape.pre[k];
        auto& post = tape.post[k];
        pre.assign(layer.out, 0.0);
        post.assign(layer.out, 0.0);
        for (int i = 0; i < layer.out; ++i) {
            const double* row = layer.w.data() + static_cast<size_t>(i) * layer.in;
            double acc = layer.b[i];
            for (int j = 0; j < layer.in; ++j) acc += row[j] * (*cur)[j];
            pre[i] = acc;
            post[i] = apply_act(layer.act, acc);
        }
        cur = &post;
    }
    return tape.post.back();
}

void DenseNet::backward(const Tape& tape, std::span<const double> dLdy, Gradients& grads) const {
    if (static_cast<int>(dLdy.size()) != output_dim()) {
        throw std::invalid_argument("backward: gradient size " + std::to_string(dLdy.size()) +
                                    " != output dim " + std::to_string(output_dim()));
    }
    std::vector<double> delta(dLdy.begin(), dLdy.end());
    std::vector<double> prev_delta;
    for (size_t k = layers_.size(); k-- > 0;) {
        const auto& layer = layers_[k];
        // delta currently holds dL/d(post activation of layer k)
        for (int i = 0; i < layer.out; ++i) {
            delta[i] *= act_grad(layer.act, tape.pre[k][i], tape.post[k][i]);
        }
        const std::vector<double>& in = (k == 0) ? tape.input : tape.post[k - 1];
        auto& gw = grads.w[k];
        auto& gb = grads.b[k];
        for (int i = 0; i < layer.out; ++i) {
            double d = delta[i];
            gb[i] += d;
            double* grow = gw.data() + static_cast<size_t>(i) * layer.in;
            for (int j = 0; j < layer.in; ++j) grow[j] += d * in[j];
        }
        if (k > 0) {
            prev_delta.assign(layer.in, 0.0);
            for (int i = 0; i < layer.out; ++i) {
                const double* row = layer.w.data() + static_cast<size_t>(i) * layer.in;
                double d = delta[i];
                for (int j = 0; j < layer.in; ++j) prev_delta[j] += row[j] * d;
            }
            delta.swap(prev_delta);
        }
    }
}

double DenseNet::backward_mse(std::span<const double> x, std::span<const double> target,
                              Gradients& grads) const {
    if (static_cast<int>(target.size()) != output_dim()) {
        throw std::invalid_argument("backward_mse: target size " + std::to_string(target.size()) +
                                    " != output dim " + std::to_string(output_dim()));
    }
    Tape tape;
    std::vector<double> out = forward_tape(x, tape);
    double loss = 0.0;
    std::vector<double> dLdy(out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        double diff = out[i] - target[i];
        loss += diff * diff;
        dLdy[i] = 2.0 * diff;
    }
    backward(tape, dLdy, grads);
    return loss;
}

Gradients DenseNet::make_gradients() const {
    Gradients g;
    g.w.resize(layers_.size());
    g.b.resize(layers_.size());
    for (size_t k = 0; k < layers_.size(); ++k) {
        g.w[k].assign(layers_[k].w.size(), 0.0);
        g.b[k].assign(layers_[k].b.size(), 0.0);
    }
    return g;
}

Adam::Adam(const DenseNet& net, AdamConfig cfg)
    : cfg_(cfg), m_(net.make_gradients()), v_(net.make_gradients()) {}

void Adam::step(DenseNet& net, const Gradients& grads) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t k = 0; k < net.layer_count(); ++k) {
        auto& layer = net.layer(k);
        auto update = [&](std::vector<double>& params, const std::vector<double>& g,
                          std::vector<double>& m, std::vector<double>& v) {
            for (size_t i = 0; i < params.size(); ++i) {
                if (!std::isfinite(g[i])) {
                    throw std::runtime_error("adam_step: non-finite gradient in layer " +
                                             std::to_string(k));
                }
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        };
        update(layer.w, grads.w[k], m_.w[k], v_.w[k]);
        update(layer.b, grads.b[k], m_.b[k], v_.b[k]);
    }
}

}  // namespace rdd
