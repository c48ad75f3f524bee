#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "rdd/net.hpp"

using namespace rdd;

namespace {

DenseNet single_layer(std::vector<double> w, std::vector<double> b, int in, int out,
                      Activation act) {
    DenseLayer layer;
    layer.in = in;
    layer.out = out;
    layer.act = act;
    layer.w = std::move(w);
    layer.b = std::move(b);
    return DenseNet::from_layers({layer});
}

// Plain nested-loop re-implementation of the forward pass, used as the oracle.
std::vector<double> forward_oracle(const DenseNet& net, std::vector<double> x) {
    for (size_t k = 0; k < net.layer_count(); ++k) {
        const DenseLayer& layer = net.layer(k);
        std::vector<double> out(layer.out, 0.0);
        for (int i = 0; i < layer.out; ++i) {
            double acc = layer.b[i];
            for (int j = 0; j < layer.in; ++j) {
                acc += layer.w[static_cast<size_t>(i) * layer.in + j] * x[j];
            }
            switch (layer.act) {
                case Activation::Relu: out[i] = acc > 0 ? acc : 0; break;
                case Activation::Tanh: out[i] = std::tanh(acc); break;
                case Activation::Identity: out[i] = acc; break;
            }
        }
        x = std::move(out);
    }
    return x;
}

std::vector<double> flatten_params(const DenseNet& net) {
    std::vector<double> out;
    for (size_t k = 0; k < net.layer_count(); ++k) {
        const auto& layer = net.layer(k);
        out.insert(out.end(), layer.w.begin(), layer.w.end());
        out.insert(out.end(), layer.b.begin(), layer.b.end());
    }
    return out;
}

}  // namespace

TEST_CASE("forward identity layer returns input") {
    auto net = single_layer({1, 0, 0, 1}, {0, 0}, 2, 2, Activation::Identity);
    auto out = net.forward(std::vector<double>{1.0, 2.0});
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(2.0));
}

TEST_CASE("relu clamps negative pre-activation") {
    auto net = single_layer({-1.0}, {0.0}, 1, 1, Activation::Relu);
    auto out = net.forward(std::vector<double>{3.0});
    CHECK(out[0] == 0.0);
}

TEST_CASE("forward matches nested-loop oracle") {
    Rng rng(7);
    DenseNet net(3, {8, 8}, 4, Activation::Relu, rng);
    std::vector<double> x = {0.3, -0.7, 1.1};
    auto got = net.forward(x);
    auto want = forward_oracle(net, x);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("forward rejects dimension mismatch naming both dims") {
    Rng rng(1);
    DenseNet net(3, {4}, 2, Activation::Tanh, rng);
    try {
        net.forward(std::vector<double>{1.0, 2.0});
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("2") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);
    }
}

TEST_CASE("mse at the target has zero loss and zero grads") {
    auto net = single_layer({1.0}, {0.0}, 1, 1, Activation::Identity);
    Gradients g = net.make_gradients();
    double loss = net.backward_mse(std::vector<double>{2.0}, std::vector<double>{2.0}, g);
    CHECK(loss == 0.0);
    CHECK(g.w[0][0] == 0.0);
    CHECK(g.b[0][0] == 0.0);
}

TEST_CASE("mse gradient of identity net") {
    // loss = (w*1 - 0)^2 at w=1: loss 1, dloss/dw = 2
    auto net = single_layer({1.0}, {0.0}, 1, 1, Activation::Identity);
    Gradients g = net.make_gradients();
    double loss = net.backward_mse(std::vector<double>{1.0}, std::vector<double>{0.0}, g);
    CHECK(loss == doctest::Approx(1.0));
    CHECK(g.w[0][0] == doctest::Approx(2.0));
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(99);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        int in = 1 + static_cast<int>(rng.uniform_int(4));
        int hidden = 1 + static_cast<int>(rng.uniform_int(6));
        int out = 1 + static_cast<int>(rng.uniform_int(3));
        Activation act = trial % 2 == 0 ? Activation::Tanh : Activation::Relu;
        DenseNet net(in, {hidden}, out, act, rng);
        std::vector<double> x(in), target(out);
        for (auto& v : x) v = rng.uniform(-1.5, 1.5);
        for (auto& v : target) v = rng.uniform(-1.5, 1.5);

        Gradients g = net.make_gradients();
        net.backward_mse(x, target, g);

        auto loss_at = [&](DenseNet& n) {
            auto f = n.forward(x);
            double loss = 0;
            for (size_t i = 0; i < f.size(); ++i) loss += (f[i] - target[i]) * (f[i] - target[i]);
            return loss;
        };

        const double h = 1e-5;
        for (size_t k = 0; k < net.layer_count(); ++k) {
            auto check_param = [&](std::vector<double>& params, const std::vector<double>& grads,
                                   size_t i) {
                double saved = params[i];
                params[i] = saved + h;
                double up = loss_at(net);
                params[i] = saved - h;
                double down = loss_at(net);
                params[i] = saved;
                double fd = (up - down) / (2 * h);
                double tol = 1e-4 * std::max({std::abs(fd), std::abs(grads[i]), 1e-3});
                CHECK(std::abs(grads[i] - fd) <= std::max(tol, 1e-7));
                ++checked;
            };
            for (size_t i = 0; i < net.layer(k).w.size(); ++i) check_param(net.layer(k).w, g.w[k], i);
            for (size_t i = 0; i < net.layer(k).b.size(); ++i) check_param(net.layer(k).b, g.b[k], i);
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("adam leaves parameters unchanged on zero gradients") {
    Rng rng(5);
    DenseNet net(2, {4}, 2, Activation::Tanh, rng);
    auto before = flatten_params(net);
    Adam adam(net, {});
    Gradients g = net.make_gradients();
    adam.step(net, g);
    auto after = flatten_params(net);
    CHECK(before == after);
}

TEST_CASE("adam single bias-corrected step on a scalar") {
    // w = 0, grad = 1, lr = 0.1: mhat = 1, vhat = 1, w -> -lr/(1 + eps) = -0.0999999990
    auto net = single_layer({0.0}, {0.0}, 1, 1, Activation::Identity);
    Adam adam(net, {.lr = 0.1});
    Gradients g = net.make_gradients();
    g.w[0][0] = 1.0;
    adam.step(net, g);
    CHECK(net.layer(0).w[0] == doctest::Approx(-0.0999999990000000).epsilon(1e-12));
    CHECK(adam.step_count() == 1);
}

TEST_CASE("two adam steps decrease a convex quadratic") {
    // loss = (w - 3)^2 starting from w = 0
    auto net = single_layer({0.0}, {0.0}, 1, 1, Activation::Identity);
    Adam adam(net, {.lr = 0.05});
    std::vector<double> x = {1.0}, target = {3.0};
    auto loss = [&] {
        double f = net.forward(x)[0];
        return (f - target[0]) * (f - target[0]);
    };
    double l0 = loss();
    for (int i = 0; i < 2; ++i) {
        Gradients g = net.make_gradients();
        net.backward_mse(x, target, g);
        adam.step(net, g);
    }
    CHECK(loss() < l0);
}

TEST_CASE("adam rejects non-finite gradients naming the layer") {
    Rng rng(3);
    DenseNet net(1, {2}, 1, Activation::Relu, rng);
    Adam adam(net, {});
    Gradients g = net.make_gradients();
    g.w[1][0] = std::nan("");
    try {
        adam.step(net, g);
        FAIL("expected throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
}

TEST_CASE("identical seeds give byte-identical init and training") {
    Rng rng_a(1234), rng_b(1234);
    DenseNet a(4, {8, 8}, 3, Activation::Relu, rng_a);
    DenseNet b(4, {8, 8}, 3, Activation::Relu, rng_b);
    auto pa = flatten_params(a);
    auto pb = flatten_params(b);
    REQUIRE(pa.size() == pb.size());
    CHECK(std::memcmp(pa.data(), pb.data(), pa.size() * sizeof(double)) == 0);

    Adam oa(a, {}), ob(b, {});
    Rng data(55);
    for (int step = 0; step < 20; ++step) {
        std::vector<double> x(4), t(3);
        for (auto& v : x) v = data.uniform(-1, 1);
        for (auto& v : t) v = data.uniform(-1, 1);
        Gradients ga = a.make_gradients(), gb = b.make_gradients();
        a.backward_mse(x, t, ga);
        b.backward_mse(x, t, gb);
        oa.step(a, ga);
        ob.step(b, gb);
    }
    pa = flatten_params(a);
    pb = flatten_params(b);
    CHECK(std::memcmp(pa.data(), pb.data(), pa.size() * sizeof(double)) == 0);
}

TEST_CASE("doubling final identity-layer weights doubles the output") {
    Rng rng(77);
    DenseNet net(3, {6}, 2, Activation::Relu, rng);
    std::vector<double> x = {0.2, -0.4, 0.9};
    auto base = net.forward(x);
    auto& last = net.layer(net.layer_count() - 1);
    for (auto& w : last.w) w *= 2.0;
    for (auto& b : last.b) b = 0.0;  // biases are zero-initialized anyway
    auto doubled = net.forward(x);
    for (size_t i = 0; i < base.size(); ++i) {
        CHECK(doubled[i] == doctest::Approx(2.0 * base[i]).epsilon(1e-12));
    }
}

TEST_CASE("glorot init stays within the documented bound") {
    Rng rng(2024);
    DenseNet net(10, {20}, 5, Activation::Relu, rng);
    for (size_t k = 0; k < net.layer_count(); ++k) {
        const auto& layer = net.layer(k);
        double bound = std::sqrt(6.0 / (layer.in + layer.out));
        for (double w : layer.w) {
            CHECK(std::abs(w) <= bound);
        }
        for (double b : layer.b) CHECK(b == 0.0);
    }
}
