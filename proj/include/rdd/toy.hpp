#pragma once

#include <vector>

#include "rdd/harness.hpp"

namespace rdd {

// Synthetic 2-D point cloud drawn from a seeded mixture of 4 Gaussians.
std::vector<std::vector<double>> synthetic_points(int count, uint64_t seed);

// Per-visit bonus traces for a handful of repeatedly presented points.
struct DecayTraceRow {
    uint64_t seed = 0;
    int point = 0;
    int visit = 0;
    double count_bonus = 0.0;   // 1/visit
    double z_exact = 0.0;       // running-mean oracle, population moments
    double z_approx = 0.0;      // trained predictor, bonus / sigma^2
    double y_exact = 0.0;       // population product-form ratio on the oracle mean
    double y_drnd_exact = 0.0;  // bank-moment product form on the assigned-target mean
    double y_drnd_approx = 0.0; // bank-moment product form on the trained predictor
    double rnd_bonus = 0.0;
    double rnd_initial = 0.0;   // cold-start bonus of the point (constant per point)
};

struct DecayResult {
    std::vector<DecayTraceRow> rows;
};

DecayResult run_decay(const ExperimentConfig& cfg, uint64_t seed);

// Random-walk presentation over a larger cloud: tracker traces and their mean
// squared error to 1/n across all presentations.
struct WalkTraceRow {
    uint64_t seed = 0;
    int step = 0;
    int point = 0;
    uint64_t n = 0;
    double inv_n = 0.0;
    double z_exact = 0.0;
    double drnd_tracker = 0.0;  // empirical-moment standardized tracker
    double y_drnd_exact = 0.0;  // product-form bank statistic
    double z_approx = 0.0;
    double y_drnd_approx = 0.0;
    double rnd_bonus = 0.0;
};

struct WalkResult {
    std::vector<WalkTraceRow> rows;
    double mse_z_exact = 0.0;
    double mse_drnd_tracker = 0.0;
    double mse_y_exact = 0.0;
    double mse_z_approx = 0.0;
    double mse_y_approx = 0.0;
};

WalkResult run_walk(const ExperimentConfig& cfg, uint64_t seed, int n_targets, bool approx);

}  // namespace rdd
