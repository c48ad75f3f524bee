#pragma once

#include <functional>
#include <memory>
#include <set>
#include <optional>
#include <span>
#include <vector>

#include "rdd/envs.hpp"
#include "rdd/estimators.hpp"
#include "rdd/net.hpp"
#include "rdd/stats.hpp"

namespace rdd {

// ---------------------------------------------------------------------------
// Intrinsic-reward normalizer: divides by the running standard deviation of
// everything ingested so far; the mean is not subtracted, keeping bonuses
// non-negative.
// ---------------------------------------------------------------------------

class RunningNormalizer {
public:
    void ingest(double x) { acc_.add(x); }

    double scale(double x) const {
        if (acc_.count() < 2) return x;
        double sd = acc_.std_dev();
        return sd > 1e-12 ? x / sd : x;
    }

    uint64_t count() const { return acc_.count(); }
    double mean() const { return acc_.mean(); }
    double variance() const { return acc_.variance(); }

private:
    Welford acc_;
};

// ---------------------------------------------------------------------------
// Trajectory buffer: parallel arrays over time steps of one rollout segment.
// ---------------------------------------------------------------------------

struct Trajectory {
    std::vector<std::vector<double>> states;
    std::vector<int> actions;
    std::vector<double> rewards_ext;
    std::vector<double> rewards_int;
    std::vector<uint8_t> dones;
    std::vector<double> logprobs;
    std::vector<double> values_ext;
    std::vector<double> values_int;

    size_t size() const { return states.size(); }
};

// ---------------------------------------------------------------------------
// Generalized advantage estimation. `values` carries one entry per step plus
// the bootstrap value of the state after the last step. Throws on length
// mismatch.
// ---------------------------------------------------------------------------

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const uint8_t> dones, double gamma, double lambda);

// ---------------------------------------------------------------------------
// Tabular Q-learning with bonus-augmented targets.
// ---------------------------------------------------------------------------

struct QConfig {
    double alpha = 0.1;
    double gamma = 0.99;
    double epsilon = 0.1;
    double tau = 0.005;  // reserved for the neural-Q variant; unused by the table
};

class QTable {
public:
    QTable(int n_states, int n_actions);

    double q(int s, int a) const { return q_[static_cast<size_t>(s) * n_actions_ + a]; }
    double& q(int s, int a) { return q_[static_cast<size_t>(s) * n_actions_ + a]; }

    // Ties broken by the lowest action index.
    int greedy_action(int s) const;
    double max_q(int s) const;
    int act(int s, double epsilon, Rng& rng) const;

    // Q(s,a) += alpha * (r + lambda*bonus + gamma*max_a' Q(s',a')*(1-done) - Q(s,a))
    void update(int s, int a, double reward, double bonus, double lambda, int s_next, bool done,
                const QConfig& cfg);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

private:
    int n_states_;
    int n_actions_;
    std::vector<double> q_;
};

// ---------------------------------------------------------------------------
// Minimal PPO for discrete actions: softmax policy, separate extrinsic and
// intrinsic value heads, clipped surrogate, dual advantage streams.
// ---------------------------------------------------------------------------

struct PpoConfig {
    int hidden = 64;
    double lr = 3e-4;
    double clip = 0.1;
    int epochs = 4;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double beta = 1.0;  // intrinsic advantage coefficient
};

struct PpoUpdateStats {
    double first_epoch_surrogate = 0.0;
    double policy_loss = 0.0;
    double value_loss_ext = 0.0;
    double value_loss_int = 0.0;
};

class PpoAgent {
public:
    PpoAgent(int obs_dim, int n_actions, PpoConfig cfg, uint64_t seed);

    std::vector<double> action_probs(std::span<const double> obs) const;
    std::pair<int, double> act(std::span<const double> obs);  // (action, logprob)
    int greedy_action(std::span<const double> obs) const;
    double value_ext(std::span<const double> obs) const;
    double value_int(std::span<const double> obs) const;

    // K epochs of clipped-surrogate ascent with per-batch standardization of
    // the combined advantages, plus MSE descent on both value heads.
    // Throws std::runtime_error on a non-finite loss.
    PpoUpdateStats update(const Trajectory& traj, std::span<const double> combined_adv,
                          std::span<const double> returns_ext,
                          std::span<const double> returns_int);

    const PpoConfig& config() const { return cfg_; }
    DenseNet& policy() { return policy_; }

private:
    PpoConfig cfg_;
    int n_actions_;
    DenseNet policy_;
    DenseNet value_ext_net_;
    DenseNet value_int_net_;
    Adam opt_policy_;
    Adam opt_value_ext_;
    Adam opt_value_int_;
    Rng action_rng_;
};

// ---------------------------------------------------------------------------
// Rollout drivers. Bonuses are computed on s_{t+1} at collection time and fed
// through the normalizer before advantage computation; a null estimator means
// a pure-extrinsic run with no intrinsic machinery.
// ---------------------------------------------------------------------------

struct EpisodeStat {
    int episode = 0;
    int64_t end_step = 0;  // global step at episode end
    double return_ext = 0.0;
    double mean_bonus = 0.0;
    bool reached_goal = false;
};

// One Q-learning training episode with online updates; the estimator is
// trained per step on the visited next state. `visited` collects the tabular
// indices touched during the episode when provided.
EpisodeStat qlearn_episode(Env& env, QTable& table, const QConfig& cfg, BonusEstimator* est,
                           double lambda, Rng& action_rng, uint64_t env_seed,
                           int64_t global_step_base, std::set<int>* visited = nullptr);

// Greedy evaluation episode: no exploration, no bonuses, no training.
double qlearn_eval_episode(Env& env, const QTable& table, uint64_t env_seed);

using StepHook = std::function<void(int env_index, const Env& env, const StepResult& result)>;

class PpoDriver {
public:
    struct PhaseStats {
        std::vector<EpisodeStat> episodes;  // episodes completed this phase
        double mean_bonus = 0.0;
        double estimator_loss = 0.0;
        PpoUpdateStats update;
        int64_t steps = 0;
    };

    PpoDriver(std::function<std::unique_ptr<Env>()> env_factory, int n_envs, int rollout_len,
              PpoConfig cfg, BonusEstimator* est, uint64_t seed);

    // Collect rollout_len steps in each env (round-robin), then update.
    PhaseStats run_phase(const StepHook& hook = {});

    double eval_episode(uint64_t env_seed);  // greedy policy, fresh env
    int64_t global_step() const { return global_step_; }
    PpoAgent& agent() { return agent_; }

private:
    std::function<std::unique_ptr<Env>()> env_factory_;
    int n_envs_;
    int rollout_len_;
    BonusEstimator* est_;
    PpoAgent agent_;
    RunningNormalizer norm_;
    std::vector<std::unique_ptr<Env>> envs_;
    std::vector<std::vector<double>> obs_;
    std::vector<double> episode_return_;
    std::vector<bool> episode_goal_;
    std::vector<Welford> episode_bonus_;
    std::vector<uint64_t> episode_index_;
    int episodes_done_ = 0;
    int64_t global_step_ = 0;
    uint64_t seed_ = 0;
};

}  // namespace rdd
