#include "rdd/stats.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rdd {

double z_statistic(std::span<const double> sample_mean, double mu, double sigma) {
    if (sigma <= 0.0) {
        throw std::invalid_argument("z_statistic: sigma must be > 0, got " + std::to_string(sigma));
    }
    if (sample_mean.empty()) {
        throw std::invalid_argument("z_statistic: empty sample mean");
    }
    double ss = 0.0;
    for (double v : sample_mean) {
        double diff = v - mu;
        ss += diff * diff;
    }
    return ss / (static_cast<double>(sample_mean.size()) * sigma * sigma);
}

double y_statistic_population(double sample_mean, double mu, double sigma) {
    if (sigma <= 0.0) {
        throw std::invalid_argument("y_statistic: sigma must be > 0, got " + std::to_string(sigma));
    }
    return (sample_mean * sample_mean - mu * mu) / (sigma * sigma);
}

double closed_form_var_z(int n) {
    if (n <= 0) throw std::invalid_argument("closed_form_var_z: n must be positive");
    double nn = static_cast<double>(n);
    return 2.0 / (nn * nn);
}

double closed_form_var_y(int n, double mu, double sigma) {
    if (n <= 0) throw std::invalid_argument("closed_form_var_y: n must be positive");
    if (sigma <= 0.0) throw std::invalid_argument("closed_form_var_y: sigma must be > 0");
    double nn = static_cast<double>(n);
    return 2.0 / (nn * nn) + 4.0 * mu * mu / (nn * sigma * sigma);
}

std::tuple<double, double, double> moments_b234(double mu, double sigma) {
    double s2 = sigma * sigma;
    double b2 = mu * mu + s2;
    double b3 = mu * mu * mu + 3.0 * mu * s2;
    double b4 = mu * mu * mu * mu + 6.0 * mu * mu * s2 + 3.0 * s2 * s2;
    return {b2, b3, b4};
}

double concentration_epsilon(int n, double delta) {
    if (n <= 0) throw std::invalid_argument("concentration_epsilon: n must be positive");
    if (delta <= 0.0 || delta >= 1.0) {
        throw std::invalid_argument("concentration_epsilon: delta must lie in (0,1), got " +
                                    std::to_string(delta));
    }
    double nn = static_cast<double>(n);
    double l = std::log(2.0 / delta);
    double chebyshev = std::sqrt(2.0 / (delta * nn * nn * nn));
    double chernoff = std::sqrt(l * (nn * (nn - 1.0) / 2.0 + l)) / (nn * nn);
    return chebyshev + chernoff;
}

double Welford::std_dev() const {
    return std::sqrt(variance());
}

double Welford::se() const {
    return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
}

}  // namespace rdd
