#pragma once

#include <cstdint>
#include <span>
#include <tuple>

#include "rdd/rng.hpp"

namespace rdd {

// z_n = ||sample_mean - mu*1_d||^2 / (d * sigma^2). Unbiased estimator of 1/n.
double z_statistic(std::span<const double> sample_mean, double mu, double sigma);

// Population-moment comparison statistic (sample_mean^2 - mu^2) / sigma^2.
// May be negative for finite samples; its expectation is 1/n.
double y_statistic_population(double sample_mean, double mu, double sigma);

// Var[z_n] = 2/n^2.
double closed_form_var_z(int n);

// Var[y_n] = 2/n^2 + 4 mu^2 / (n sigma^2). Always >= closed_form_var_z(n).
double closed_form_var_y(int n, double mu, double sigma);

// Raw moments of N(mu, sigma^2): B2 = mu^2 + s^2, B3 = mu^3 + 3 mu s^2,
// B4 = mu^4 + 6 mu^2 s^2 + 3 s^4.
std::tuple<double, double, double> moments_b234(double mu, double sigma);

// Deviation radius such that |z_n - 1/n| < epsilon holds with probability > 1 - 2 delta:
// epsilon = sqrt(2/(delta n^3)) + sqrt(ln(2/delta) * (n(n-1)/2 + ln(2/delta))) / n^2.
double concentration_epsilon(int n, double delta);

// Streaming mean/variance accumulator. Variance is the unbiased sample variance.
class Welford {
public:
    void add(double x) {
        ++count_;
        double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }

    uint64_t count() const { return count_; }
    double mean() const { return mean_; }
    double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
    double std_dev() const;
    // Standard error of the mean.
    double se() const;

private:
    uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct McResult {
    double mean = 0.0;
    double variance = 0.0;
    double se = 0.0;
    uint64_t trials = 0;
};

// Streams `trials` evaluations of `statistic` through a Welford accumulator.
template <class Fn>
McResult mc_oracle(uint64_t trials, Rng& rng, Fn&& statistic) {
    Welford acc;
    for (uint64_t i = 0; i < trials; ++i) {
        acc.add(statistic(rng));
    }
    return {acc.mean(), acc.variance(), acc.se(), acc.count()};
}

}  // namespace rdd
