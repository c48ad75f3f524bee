#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rdd/harness.hpp"

namespace rdd {

using MetricsSink = std::function<void(const MetricsRow&)>;

struct TrainResult {
    bool reached_goal = false;
    int64_t first_success_episode = -1;
    int64_t first_success_step = -1;
    double final_eval_return = 0.0;
    int64_t total_steps = 0;
    std::vector<double> positions;  // mountaincar x history when recorded
};

// Runs one (env, agent, estimator, seed) task to its budget, emitting metric
// rows through `sink`. Per-step positions are recorded for mountaincar when
// `record_positions` is set.
TrainResult run_train(const ExperimentConfig& cfg, uint64_t seed, const MetricsSink& sink,
                      bool record_positions = false);

struct DensityWindow {
    int window_index = 0;
    int64_t step_lo = 0;
    int64_t step_hi = 0;
    std::vector<double> masses;   // normalized histogram row
    int occupied_bins = 0;
    double mass_at_goal = 0.0;    // fraction of window samples with position >= 0.5
};

struct DensityRun {
    std::string estimator;
    std::vector<DensityWindow> windows;
};

// Trains each configured estimator on MountainCar and histograms the visited
// x positions per window.
std::vector<DensityRun> run_density(const ExperimentConfig& cfg, uint64_t seed,
                                    const MetricsSink& sink);

}  // namespace rdd
