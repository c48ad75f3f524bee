#include "rdd/verify.hpp"

#include <cmath>
#include <stdexcept>

#include "rdd/stats.hpp"

namespace rdd {

namespace {

// 3 sigma of the variance-estimator noise, floored at the headline tolerance.
double var_tolerance(double floor_tol, uint64_t trials) {
    return std::max(floor_tol, 3.0 * 3.75 / std::sqrt(static_cast<double>(trials)));
}

}  // namespace

std::vector<VerifyRow> run_verify(const ExperimentConfig& cfg, uint64_t seed) {
    if (cfg.trials < 100) {
        throw std::invalid_argument("verify-stats: trials must be >= 100");
    }
    std::vector<VerifyRow> rows;

    for (int d : cfg.dims) {
        for (int n : cfg.n_values) {
            VerifyRow row;
            row.n = n;
            row.mu = cfg.mu;
            row.sigma = cfg.sigma;
            row.d = d;
            row.trials = cfg.trials;
            row.closed_mean = 1.0 / static_cast<double>(n);
            row.closed_var_z = closed_form_var_z(n) / d;
            row.closed_var_y = closed_form_var_y(n, cfg.mu, cfg.sigma) / d;

            Welford acc_z;
            Welford acc_y;
            std::vector<uint64_t> exceed_counts(cfg.deltas.size(), 0);
            std::vector<double> eps(cfg.deltas.size());
            for (size_t k = 0; k < cfg.deltas.size(); ++k) {
                eps[k] = concentration_epsilon(n, cfg.deltas[k]);
            }

            Rng rng(hash_u64(seed, (static_cast<uint64_t>(d) << 32) ^ static_cast<uint64_t>(n)));
            std::vector<double> sample_mean(d);
            for (uint64_t t = 0; t < cfg.trials; ++t) {
                for (int j = 0; j < d; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < n; ++i) acc += cfg.mu + cfg.sigma * rng.gaussian();
                    sample_mean[j] = acc / static_cast<double>(n);
                }
                double z = z_statistic(sample_mean, cfg.mu, cfg.sigma);
                double y = 0.0;
                for (int j = 0; j < d; ++j) {
                    y += y_statistic_population(sample_mean[j], cfg.mu, cfg.sigma);
                }
                y /= static_cast<double>(d);
                acc_z.add(z);
                acc_y.add(y);
                for (size_t k = 0; k < eps.size(); ++k) {
                    if (std::abs(z - row.closed_mean) >= eps[k]) ++exceed_counts[k];
                }
            }

            row.mc_mean_z = acc_z.mean();
            row.se_z = acc_z.se();
            row.mean_gap_se = std::abs(row.mc_mean_z - row.closed_mean) / row.se_z;
            row.mean_ok = row.mean_gap_se <= 3.0;

            row.mc_var_z = acc_z.variance();
            row.var_z_rel_err = std::abs(row.mc_var_z - row.closed_var_z) / row.closed_var_z;
            row.var_z_ok = row.var_z_rel_err <= var_tolerance(0.03, cfg.trials);

            row.mc_mean_y = acc_y.mean();
            row.mc_var_y = acc_y.variance();
            row.var_y_rel_err = std::abs(row.mc_var_y - row.closed_var_y) / row.closed_var_y;
            row.var_y_ok = row.var_y_rel_err <= var_tolerance(0.05, cfg.trials);
            if (cfg.mu != 0.0) {
                row.var_order_ok = row.mc_var_y >= row.mc_var_z;
            } else {
                row.var_order_ok = std::abs(row.mc_var_y - row.mc_var_z) / row.mc_var_z <= 0.05;
            }

            for (size_t k = 0; k < cfg.deltas.size(); ++k) {
                row.exceed_rates.push_back(static_cast<double>(exceed_counts[k]) /
                                           static_cast<double>(cfg.trials));
            }
            row.exceed_ok = true;
            for (size_t k = 0; k < cfg.deltas.size(); ++k) {
                if (row.exceed_rates[k] > 2.0 * cfg.deltas[k]) row.exceed_ok = false;
            }

            rows.push_back(std::move(row));
        }
    }

    // Cross-cell dimension-reduction check against the matching d = 1 cell.
    for (auto& row : rows) {
        if (row.d == 1) continue;
        for (const auto& base : rows) {
            if (base.d == 1 && base.n == row.n) {
                row.dim_ratio = row.mc_var_z / base.mc_var_z;
                double expect = 1.0 / static_cast<double>(row.d);
                row.dim_ratio_ok = row.dim_ratio >= 0.9 * expect && row.dim_ratio <= 1.1 * expect;
            }
        }
    }

    for (auto& row : rows) {
        row.pass = row.mean_ok && row.var_z_ok && row.var_y_ok && row.var_order_ok &&
                   row.exceed_ok && row.dim_ratio_ok;
    }
    return rows;
}

}  // namespace rdd
