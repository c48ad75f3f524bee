#pragma once

#include <vector>

#include "rdd/harness.hpp"

namespace rdd {

// One Monte-Carlo verification cell of the statistics grid.
struct VerifyRow {
    int n = 0;
    double mu = 0.0;
    double sigma = 0.0;
    int d = 1;
    uint64_t trials = 0;

    double mc_mean_z = 0.0;
    double se_z = 0.0;
    double closed_mean = 0.0;  // 1/n
    double mean_gap_se = 0.0;  // |mc_mean_z - 1/n| / se_z
    bool mean_ok = false;

    double mc_var_z = 0.0;
    double closed_var_z = 0.0;  // 2/n^2 / d
    double var_z_rel_err = 0.0;
    bool var_z_ok = false;

    double mc_mean_y = 0.0;
    double mc_var_y = 0.0;
    double closed_var_y = 0.0;  // (2/n^2 + 4 mu^2/(n sigma^2)) / d
    double var_y_rel_err = 0.0;
    bool var_y_ok = false;
    bool var_order_ok = false;  // Var[y] >= Var[z] (mu != 0); equality at mu = 0

    double dim_ratio = 0.0;  // mc_var_z(d) / mc_var_z(1), 0 when d == 1
    bool dim_ratio_ok = true;

    std::vector<double> exceed_rates;  // one per configured delta
    bool exceed_ok = false;

    bool pass = false;
};

// Runs the grid n_values x dims at (mu, sigma) with `trials` trials per cell.
std::vector<VerifyRow> run_verify(const ExperimentConfig& cfg, uint64_t seed);

}  // namespace rdd
