#include "rdd/snapshot.hpp"

#include <stdexcept>

namespace rdd::io {

void write_f64_vec(std::ostream& os, const std::vector<double>& v) {
    write_pod<uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_f64_vec(std::istream& is) {
    auto n = read_pod<uint64_t>(is);
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("snapshot: truncated stream");
    return v;
}

void write_net(std::ostream& os, const DenseNet& net) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(net.layer_count()));
    for (size_t k = 0; k < net.layer_count(); ++k) {
        const auto& layer = net.layer(k);
        write_pod<uint32_t>(os, static_cast<uint32_t>(layer.in));
        write_pod<uint32_t>(os, static_cast<uint32_t>(layer.out));
        write_pod<uint8_t>(os, static_cast<uint8_t>(layer.act));
        write_f64_vec(os, layer.w);
        write_f64_vec(os, layer.b);
    }
}

DenseNet read_net(std::istream& is) {
    auto n = read_pod<uint32_t>(is);
    std::vector<DenseLayer> layers(n);
    for (auto& layer : layers) {
        layer.in = static_cast<int>(read_pod<uint32_t>(is));
        layer.out = static_cast<int>(read_pod<uint32_t>(is));
        layer.act = static_cast<Activation>(read_pod<uint8_t>(is));
        layer.w = read_f64_vec(is);
        layer.b = read_f64_vec(is);
    }
    return DenseNet::from_layers(std::move(layers));
}

void write_adam(std::ostream& os, const Adam& adam) {
    const auto& cfg = adam.config();
    write_pod<double>(os, cfg.lr);
    write_pod<double>(os, cfg.beta1);
    write_pod<double>(os, cfg.beta2);
    write_pod<double>(os, cfg.eps);
    write_pod<int64_t>(os, adam.step_count());
    auto& m = const_cast<Adam&>(adam).moment1();
    auto& v = const_cast<Adam&>(adam).moment2();
    for (const auto& vec : m.w) write_f64_vec(os, vec);
    for (const auto& vec : m.b) write_f64_vec(os, vec);
    for (const auto& vec : v.w) write_f64_vec(os, vec);
    for (const auto& vec : v.b) write_f64_vec(os, vec);
}

Adam read_adam(std::istream& is, const DenseNet& net) {
    AdamConfig cfg;
    cfg.lr = read_pod<double>(is);
    cfg.beta1 = read_pod<double>(is);
    cfg.beta2 = read_pod<double>(is);
    cfg.eps = read_pod<double>(is);
    auto t = read_pod<int64_t>(is);
    Adam adam(net, cfg);
    adam.set_step_count(t);
    for (auto& vec : adam.moment1().w) vec = read_f64_vec(is);
    for (auto& vec : adam.moment1().b) vec = read_f64_vec(is);
    for (auto& vec : adam.moment2().w) vec = read_f64_vec(is);
    for (auto& vec : adam.moment2().b) vec = read_f64_vec(is);
    return adam;
}

void write_rng(std::ostream& os, const Rng& rng) {
    write_pod<uint64_t>(os, rng.seed());
    write_pod<uint64_t>(os, rng.counter());
}

Rng read_rng(std::istream& is) {
    auto seed = read_pod<uint64_t>(is);
    auto counter = read_pod<uint64_t>(is);
    return Rng::restore(seed, counter);
}

void write_header(std::ostream& os, EstimatorTag tag) {
    write_pod<uint32_t>(os, kSnapshotMagic);
    write_pod<uint16_t>(os, kSnapshotVersion);
    write_pod<uint8_t>(os, static_cast<uint8_t>(tag));
    write_pod<uint8_t>(os, 0);  // reserved
}

EstimatorTag read_header(std::istream& is) {
    if (read_pod<uint32_t>(is) != kSnapshotMagic) {
        throw std::runtime_error("snapshot: bad magic");
    }
    auto version = read_pod<uint16_t>(is);
    if (version != kSnapshotVersion) {
        throw std::runtime_error("snapshot: unsupported version " + std::to_string(version));
    }
    auto tag = read_pod<uint8_t>(is);
    read_pod<uint8_t>(is);  // reserved
    return static_cast<EstimatorTag>(tag);
}

}  // namespace rdd::io
