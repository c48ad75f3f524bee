#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "rdd/net.hpp"
#include "rdd/rng.hpp"

namespace rdd {

static_assert(std::endian::native == std::endian::little,
              "snapshot format is little-endian; big-endian hosts are unsupported");

// Estimator snapshot framing: magic, format version, estimator type tag.
inline constexpr uint32_t kSnapshotMagic = 0x53444452;  // "RDDS"
inline constexpr uint16_t kSnapshotVersion = 1;

enum class EstimatorTag : uint8_t { Rdd = 1, Rnd = 2, Drnd = 3, Count = 4 };

namespace io {

template <class T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("snapshot: truncated stream");
    return v;
}

void write_f64_vec(std::ostream& os, const std::vector<double>& v);
std::vector<double> read_f64_vec(std::istream& is);

void write_net(std::ostream& os, const DenseNet& net);
DenseNet read_net(std::istream& is);

void write_adam(std::ostream& os, const Adam& adam);
Adam read_adam(std::istream& is, const DenseNet& net);

void write_rng(std::ostream& os, const Rng& rng);
Rng read_rng(std::istream& is);

void write_header(std::ostream& os, EstimatorTag tag);
EstimatorTag read_header(std::istream& is);

}  // namespace io
}  // namespace rdd
