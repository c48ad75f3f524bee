#include "rdd/toy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rdd/stats.hpp"
#include "rdd/target.hpp"

namespace rdd {

std::vector<std::vector<double>> synthetic_points(int count, uint64_t seed) {
    static constexpr double centers[4][2] = {{-0.5, -0.5}, {-0.5, 0.5}, {0.5, -0.5}, {0.5, 0.5}};
    constexpr int kBins = 64;
    Rng rng(Rng::derive(seed, 20));
    std::vector<std::vector<double>> points;
    std::set<StateKey> keys;  // points must stay distinct after key quantization
    points.reserve(count);
    while (static_cast<int>(points.size()) < count) {
        int c = static_cast<int>(rng.uniform_int(4));
        double x = std::clamp(centers[c][0] + 0.2 * rng.gaussian(), -1.0, 1.0);
        double y = std::clamp(centers[c][1] + 0.2 * rng.gaussian(), -1.0, 1.0);
        std::vector<double> p = {x, y};
        if (keys.insert(quantize_state(p, kBins)).second) {
            points.push_back(std::move(p));
        }
    }
    return points;
}

namespace {

TargetSpec toy_spec(const ExperimentConfig& cfg, uint64_t seed) {
    TargetSpec spec;
    spec.mean_mode = MeanMode::Constant;
    spec.mu = cfg.mu;
    spec.sigma = cfg.sigma;
    spec.dim = cfg.dim;
    spec.input_dim = 2;
    spec.hidden = cfg.hidden;
    spec.seed = Rng::derive(seed, 30);
    return spec;
}

double y_population_mean(const std::vector<double>& sample_mean, double mu, double sigma) {
    double acc = 0.0;
    for (double v : sample_mean) acc += y_statistic_population(v, mu, sigma);
    return acc / static_cast<double>(sample_mean.size());
}

}  // namespace

DecayResult run_decay(const ExperimentConfig& cfg, uint64_t seed) {
    auto points = synthetic_points(cfg.toy_points, seed);
    TargetSpec spec = toy_spec(cfg, seed);
    EstimatorOptions opt{.lr = cfg.lr, .hidden = cfg.hidden, .key_bins = cfg.key_bins};

    RddEstimator rdd(spec, Rng::derive(seed, 21), opt);
    DrndEstimator drnd(spec, cfg.drnd_n, Rng::derive(seed, 23), DrndBank::Gaussian, opt);
    RndEstimator rnd(2, cfg.dim, Rng::derive(seed, 24), opt);
    RunningMeanOracle oracle(cfg.key_bins);       // fresh Gaussian draws (RDD path)
    RunningMeanOracle drnd_oracle(cfg.key_bins);  // assigned bank targets (DRND path)

    std::vector<double> rnd_initial;
    rnd_initial.reserve(points.size());
    for (const auto& p : points) rnd_initial.push_back(rnd.bonus(p));

    DecayResult out;
    double s2 = cfg.sigma * cfg.sigma;
    for (int visit = 1; visit <= cfg.toy_visits; ++visit) {
        for (size_t pi = 0; pi < points.size(); ++pi) {
            const auto& p = points[pi];

            std::vector<double> tar = rdd.sample_target(p);
            oracle.ingest(p, tar);
            rdd.train_on(p, tar);

            std::vector<double> dtar = drnd.target_output(drnd.next_assignment(p), p);
            drnd_oracle.ingest(p, dtar);
            drnd.train_on(p, dtar);

            rnd.train({p});

            DecayTraceRow row;
            row.seed = seed;
            row.point = static_cast<int>(pi);
            row.visit = visit;
            row.count_bonus = 1.0 / static_cast<double>(visit);
            row.z_exact = z_statistic(*oracle.mean(p), cfg.mu, cfg.sigma);
            row.z_approx = rdd.bonus(p) / s2;
            row.y_exact = y_population_mean(*oracle.mean(p), cfg.mu, cfg.sigma);
            row.y_drnd_exact = drnd_y_product(*drnd_oracle.mean(p), drnd.moments(p));
            row.y_drnd_approx = drnd.y_product(p);
            row.rnd_bonus = rnd.bonus(p);
            row.rnd_initial = rnd_initial[pi];
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

WalkResult run_walk(const ExperimentConfig& cfg, uint64_t seed, int n_targets, bool approx) {
    auto points = synthetic_points(cfg.toy_points, seed);
    TargetSpec spec = toy_spec(cfg, seed);
    EstimatorOptions opt{.lr = cfg.lr, .hidden = cfg.hidden, .key_bins = cfg.key_bins};

    RddEstimator rdd(spec, Rng::derive(seed, 21), opt);
    DrndEstimator drnd(spec, n_targets, Rng::derive(seed, 23), DrndBank::Gaussian, opt);
    std::optional<RndEstimator> rnd;
    if (approx) rnd.emplace(2, cfg.dim, Rng::derive(seed, 24), opt);
    RunningMeanOracle oracle(cfg.key_bins);
    RunningMeanOracle drnd_oracle(cfg.key_bins);
    std::vector<uint64_t> visits(points.size(), 0);

    Rng walk_rng(Rng::derive(seed, 25));
    std::vector<int> indices(points.size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);

    WalkResult out;
    Welford mse_z, mse_tracker, mse_y, mse_za, mse_ya;
    int per_step = std::min<int>(cfg.toy_samples_per_step, static_cast<int>(points.size()));

    for (int step = 0; step < cfg.toy_steps; ++step) {
        // Partial Fisher-Yates draw of per_step distinct points.
        for (int k = 0; k < per_step; ++k) {
            int j = k + static_cast<int>(walk_rng.uniform_int(indices.size() - k));
            std::swap(indices[k], indices[j]);
        }
        for (int k = 0; k < per_step; ++k) {
            int pi = indices[k];
            const auto& p = points[pi];

            std::vector<double> tar = rdd.sample_target(p);
            oracle.ingest(p, tar);
            std::vector<double> dtar = drnd.target_output(drnd.next_assignment(p), p);
            drnd_oracle.ingest(p, dtar);
            if (approx) {
                rdd.train_on(p, tar);
                drnd.train_on(p, dtar);
                rnd->train({p});
            }
            ++visits[pi];

            WalkTraceRow row;
            row.seed = seed;
            row.step = step;
            row.point = pi;
            row.n = visits[pi];
            row.inv_n = 1.0 / static_cast<double>(visits[pi]);
            row.z_exact = z_statistic(*oracle.mean(p), cfg.mu, cfg.sigma);
            const DrndMoments& m = drnd.moments(p);
            row.drnd_tracker = drnd_count_tracker(*drnd_oracle.mean(p), m);
            row.y_drnd_exact = drnd_y_product(*drnd_oracle.mean(p), m);
            if (approx) {
                row.z_approx = rdd.bonus(p) / (cfg.sigma * cfg.sigma);
                row.y_drnd_approx = drnd.y_product(p);
                row.rnd_bonus = rnd->bonus(p);
            }

            double e;
            e = row.z_exact - row.inv_n;
            mse_z.add(e * e);
            e = row.drnd_tracker - row.inv_n;
            mse_tracker.add(e * e);
            e = row.y_drnd_exact - row.inv_n;
            mse_y.add(e * e);
            if (approx) {
                e = row.z_approx - row.inv_n;
                mse_za.add(e * e);
                e = row.y_drnd_approx - row.inv_n;
                mse_ya.add(e * e);
            }
            out.rows.push_back(std::move(row));
        }
    }

    out.mse_z_exact = mse_z.mean();
    out.mse_drnd_tracker = mse_tracker.mean();
    out.mse_y_exact = mse_y.mean();
    out.mse_z_approx = mse_za.count() ? mse_za.mean() : 0.0;
    out.mse_y_approx = mse_ya.count() ? mse_ya.mean() : 0.0;
    return out;
}

}  // namespace rdd
