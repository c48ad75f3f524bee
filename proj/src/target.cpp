#include "rdd/target.hpp"

#include <stdexcept>

namespace rdd {

void TargetSpec::validate() const {
    if (sigma < 0.0) throw std::invalid_argument("TargetSpec: sigma must be >= 0");
    if (dim <= 0) throw std::invalid_argument("TargetSpec: dim must be positive");
    if (mean_mode == MeanMode::RandomNet && input_dim <= 0) {
        throw std::invalid_argument("TargetSpec: random_net mean mode requires input_dim");
    }
}

TargetDistribution::TargetDistribution(TargetSpec spec) : spec_(spec) {
    spec_.validate();
    if (spec_.mean_mode == MeanMode::RandomNet) {
        Rng init(Rng::derive(spec_.seed, 2));
        mean_net_.emplace(spec_.input_dim, std::vector<int>{spec_.hidden, spec_.hidden}, 1,
                          Activation::Relu, init);
    }
}

double TargetDistribution::mean_scalar(std::span<const double> state) const {
    if (spec_.mean_mode == MeanMode::Constant) return spec_.mu;
    return mean_net_->forward(state)[0];
}

std::vector<double> TargetDistribution::mean_vec(std::span<const double> state) const {
    return std::vector<double>(spec_.dim, mean_scalar(state));
}

std::vector<double> TargetDistribution::sample(std::span<const double> state, Rng& rng) const {
    double m = mean_scalar(state);
    std::vector<double> out(spec_.dim, m);
    if (spec_.sigma > 0.0) {
        for (double& v : out) v += spec_.sigma * rng.gaussian();
    }
    return out;
}

}  // namespace rdd
