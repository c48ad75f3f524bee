#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdd/net.hpp"
#include "rdd/rng.hpp"

namespace rdd {

enum class MeanMode : uint8_t { Constant = 0, RandomNet = 1 };

// Frozen parameters of the target distribution N(mu(s) * 1_d, sigma^2 * 1_d).
// sigma = 0 is the degenerate mode: sampling returns the mean exactly.
struct TargetSpec {
    MeanMode mean_mode = MeanMode::Constant;
    double mu = 1.0;       // constant mode
    double sigma = 1.0;
    int dim = 64;
    int input_dim = 0;     // state feature size (needed for random_net mode)
    int hidden = 64;       // hidden width of the frozen mean network
    uint64_t seed = 0;

    void validate() const;
};

// Evaluates the frozen target distribution: scalar mean per state broadcast to
// dim coordinates, plus i.i.d. Gaussian sampling around it.
class TargetDistribution {
public:
    explicit TargetDistribution(TargetSpec spec);

    double mean_scalar(std::span<const double> state) const;
    std::vector<double> mean_vec(std::span<const double> state) const;

    // One fresh draw per coordinate; deterministic given the rng state.
    std::vector<double> sample(std::span<const double> state, Rng& rng) const;

    const TargetSpec& spec() const { return spec_; }
    const std::optional<DenseNet>& mean_net() const { return mean_net_; }

private:
    TargetSpec spec_;
    std::optional<DenseNet> mean_net_;  // frozen scalar-output net (random_net mode)
};

}  // namespace rdd
