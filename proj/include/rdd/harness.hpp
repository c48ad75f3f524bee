#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdd/estimators.hpp"

namespace rdd {

inline constexpr const char* kCodeVersion = "rdd-workbench 0.1.0";
inline constexpr int kCsvSchemaVersion = 1;

// Resolved parameters of one workbench invocation. One struct serves all
// commands; validate() rejects invalid combinations naming the field.
struct ExperimentConfig {
    std::string command = "train";  // verify-stats | toy | train | density | ablate

    // common
    uint64_t seed = 1;
    std::vector<uint64_t> seeds;  // resolved to {seed} when empty
    std::string out_dir = "out";
    std::string format = "csv";  // csv | json

    // target distribution / statistics grid
    double mu = 1.0;
    double sigma = 1.0;
    int dim = 64;
    std::string mean_mode = "constant";  // constant | random_net
    std::vector<int> n_values = {1, 2, 5, 10, 50};
    std::vector<int> dims = {1};  // verify-stats grid
    uint64_t trials = 100000;
    std::vector<double> deltas = {0.05, 0.1};

    // toy
    std::string toy_mode = "decay";  // decay | walk
    int toy_points = 5;
    int toy_visits = 50;
    int toy_steps = 600;
    int toy_samples_per_step = 5;
    int drnd_n = 100;
    bool toy_approx = true;

    // train
    std::string env_name = "chain";
    std::string agent = "qlearn";
    std::string bonus = "rdd";  // rdd | rnd | drnd | count | none
    std::string obs = "onehot";  // onehot | compact
    int chain_length = 40;
    int grid_w = 21;
    int grid_h = 21;
    int64_t steps = 0;     // ppo budget (env steps)
    int episodes = 2000;   // qlearn budget
    double lambda = 1.0;   // bonus scale (Eq-style lambda; ppo intrinsic beta)
    double alpha = 0.1;
    double gamma = 0.99;
    double epsilon_greedy = 0.1;
    double lr = 3e-4;
    int hidden = 64;
    int n_envs = 8;
    int rollout_len = 128;
    double clip = 0.1;
    int ppo_epochs = 4;
    double gae_lambda = 0.95;
    int eval_interval = 100;  // qlearn: episodes; ppo: phases
    int eval_episodes = 1;
    int key_bins = 64;
    bool count_sqrt = false;
    std::vector<int> probe_states;
    bool timing = false;  // real wall_ms in metrics rows (off keeps output reproducible)

    // density
    int density_bins = 50;
    int64_t density_window = 20000;
    std::vector<std::string> density_estimators = {"rdd", "none"};

    // ablate
    std::string ablate_param = "sigma";  // mu | sigma | dim
    std::vector<double> ablate_values = {0.1, 1.0};

    void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

// One logged record of a training run.
struct MetricsRow {
    std::string run_id;
    uint64_t seed = 0;
    int64_t global_step = 0;
    int64_t episode_index = 0;
    std::string phase = "train";  // train | eval
    double episode_return_ext = 0.0;
    double mean_bonus = 0.0;
    std::vector<double> probe_bonuses;
    int64_t visited_state_count = 0;
    double wall_ms = 0.0;
};

std::string format_g9(double v);

// Streams rows to CSV (crash-safe, flushed per row) or mirrors them to a JSON
// array written on close.
class MetricsWriter {
public:
    MetricsWriter(const std::filesystem::path& path, const std::string& format, size_t n_probes);
    ~MetricsWriter();

    void write(const MetricsRow& row);
    void close();

    static std::vector<std::string> header(size_t n_probes);

private:
    std::string format_;
    size_t n_probes_;
    std::filesystem::path path_;
    std::unique_ptr<std::ofstream> csv_;
    nlohmann::json json_rows_ = nlohmann::json::array();
};

// Deterministic identifier of a (config, seed) task.
std::string make_run_id(const ExperimentConfig& cfg, uint64_t seed);

// Written before any metric row; immutable afterwards.
struct RunManifest {
    std::string run_id;
    uint64_t seed = 0;
    std::string estimator;
    nlohmann::json config;
    std::vector<std::string> deviations;
    std::vector<std::string> outputs;
    nlohmann::json extra;  // command-specific (calibration, bin edges, ...)

    void write(const std::filesystem::path& path) const;
};

// The documented deviations baked into this artifact.
const std::vector<std::string>& documented_deviations();

// Worker pool over independent tasks; RDD_WORKERS bounds the default.
int default_workers();
void run_tasks(std::vector<std::function<void()>>& tasks, int workers = default_workers());

std::unique_ptr<BonusEstimator> make_estimator_from_config(const ExperimentConfig& cfg,
                                                           int input_dim, uint64_t run_seed);

// Command entry points; return a process exit code (0 ok, 3 = verify failure).
int cmd_verify_stats(const ExperimentConfig& cfg);
int cmd_toy(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_density(const ExperimentConfig& cfg);
int cmd_ablate(const ExperimentConfig& cfg);
int run_command(const ExperimentConfig& cfg);

}  // namespace rdd
