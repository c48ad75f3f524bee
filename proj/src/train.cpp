#include "rdd/train.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include "rdd/agents.hpp"
#include "rdd/envs.hpp"

namespace rdd {

namespace {

ObsMode obs_mode_of(const ExperimentConfig& cfg) {
    return cfg.obs == "onehot" ? ObsMode::OneHot : ObsMode::Compact;
}

std::unique_ptr<Env> build_env(const ExperimentConfig& cfg) {
    return make_env(cfg.env_name, obs_mode_of(cfg), cfg.chain_length, cfg.grid_w, cfg.grid_h);
}

// Feature vector of a tabular state index, matching Env::observe.
std::vector<double> probe_features(const ExperimentConfig& cfg, const Env& env, int index) {
    if (cfg.obs == "onehot") {
        std::vector<double> f(env.obs_dim(), 0.0);
        f[index] = 1.0;
        return f;
    }
    if (cfg.env_name == "chain") {
        return {2.0 * index / (cfg.chain_length - 1) - 1.0};
    }
    int x = index % cfg.grid_w;
    int y = index / cfg.grid_w;
    return {2.0 * x / (cfg.grid_w - 1) - 1.0, 2.0 * y / (cfg.grid_h - 1) - 1.0};
}

class WallClock {
public:
    explicit WallClock(bool enabled) : enabled_(enabled), start_(Clock::now()) {}

    double ms() const {
        if (!enabled_) return 0.0;
        return std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    }

private:
    using Clock = std::chrono::steady_clock;
    bool enabled_;
    Clock::time_point start_;
};

TrainResult run_qlearn(const ExperimentConfig& cfg, uint64_t seed, const MetricsSink& sink) {
    auto env = build_env(cfg);
    auto eval_env = build_env(cfg);
    QTable table(env->n_states(), env->n_actions());
    QConfig qcfg{.alpha = cfg.alpha, .gamma = cfg.gamma, .epsilon = cfg.epsilon_greedy};
    auto est = make_estimator_from_config(cfg, env->obs_dim(), seed);

    Rng action_rng(Rng::derive(seed, 40));
    std::set<int> visited;
    std::string run_id = make_run_id(cfg, seed);
    WallClock clock(cfg.timing);

    TrainResult result;
    int64_t global_step = 0;
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        EpisodeStat stat =
            qlearn_episode(*env, table, qcfg, est.get(), cfg.lambda, action_rng,
                           hash_u64(seed, static_cast<uint64_t>(ep)), global_step, &visited);
        global_step = stat.end_step;

        MetricsRow row;
        row.run_id = run_id;
        row.seed = seed;
        row.global_step = global_step;
        row.episode_index = ep;
        row.phase = "train";
        row.episode_return_ext = stat.return_ext;
        row.mean_bonus = stat.mean_bonus;
        row.visited_state_count = static_cast<int64_t>(visited.size());
        row.wall_ms = clock.ms();
        if (est) {
            for (int pstate : cfg.probe_states) {
                row.probe_bonuses.push_back(est->bonus(probe_features(cfg, *env, pstate)));
            }
        } else {
            row.probe_bonuses.assign(cfg.probe_states.size(), 0.0);
        }
        sink(row);

        if (stat.reached_goal) {
            result.reached_goal = true;
            if (result.first_success_episode < 0) {
                result.first_success_episode = ep;
                result.first_success_step = global_step;
            }
        }

        if (cfg.eval_interval > 0 && (ep + 1) % cfg.eval_interval == 0) {
            Welford eval_ret;
            for (int e = 0; e < cfg.eval_episodes; ++e) {
                eval_ret.add(qlearn_eval_episode(*eval_env, table,
                                                 hash_u64(Rng::derive(seed, 41),
                                                          static_cast<uint64_t>(ep * 1000 + e))));
            }
            MetricsRow erow = row;
            erow.phase = "eval";
            erow.episode_return_ext = eval_ret.mean();
            erow.global_step = global_step;
            sink(erow);
            result.final_eval_return = eval_ret.mean();
            if (eval_ret.mean() > 0.0) result.reached_goal = true;
        }
    }
    result.total_steps = global_step;
    return result;
}

TrainResult run_ppo(const ExperimentConfig& cfg, uint64_t seed, const MetricsSink& sink,
                    bool record_positions) {
    PpoConfig pcfg;
    pcfg.hidden = cfg.hidden;
    pcfg.lr = cfg.lr;
    pcfg.clip = cfg.clip;
    pcfg.epochs = cfg.ppo_epochs;
    pcfg.gamma = cfg.gamma;
    pcfg.gae_lambda = cfg.gae_lambda;
    pcfg.beta = cfg.lambda;

    auto probe_env = build_env(cfg);
    auto est = make_estimator_from_config(cfg, probe_env->obs_dim(), seed);
    PpoDriver driver([&cfg] { return build_env(cfg); }, cfg.n_envs, cfg.rollout_len, pcfg,
                     est.get(), seed);

    TrainResult result;
    std::set<StateKey> visited;
    bool is_mountaincar = cfg.env_name == "mountaincar";
    StepHook hook = [&](int, const Env& env, const StepResult& res) {
        if (is_mountaincar) {
            const auto& mc = static_cast<const MountainCarEnv&>(env);
            if (record_positions) result.positions.push_back(mc.position());
        }
        visited.insert(quantize_state(res.obs, cfg.key_bins));
    };

    std::string run_id = make_run_id(cfg, seed);
    WallClock clock(cfg.timing);
    int64_t budget = cfg.steps > 0 ? cfg.steps : static_cast<int64_t>(cfg.episodes) * 200;
    double last_return = 0.0;
    int phase_index = 0;
    while (driver.global_step() < budget) {
        PpoDriver::PhaseStats stats = driver.run_phase(hook);
        ++phase_index;
        Welford phase_return;
        for (const auto& ep : stats.episodes) {
            phase_return.add(ep.return_ext);
            if (ep.reached_goal) {
                result.reached_goal = true;
                if (result.first_success_step < 0) {
                    result.first_success_episode = ep.episode;
                    result.first_success_step = ep.end_step;
                }
            }
        }
        if (phase_return.count() > 0) last_return = phase_return.mean();

        MetricsRow row;
        row.run_id = run_id;
        row.seed = seed;
        row.global_step = driver.global_step();
        row.episode_index = stats.episodes.empty() ? -1 : stats.episodes.back().episode;
        row.phase = "train";
        row.episode_return_ext = last_return;
        row.mean_bonus = stats.mean_bonus;
        row.visited_state_count = static_cast<int64_t>(visited.size());
        row.wall_ms = clock.ms();
        row.probe_bonuses.assign(cfg.probe_states.size(), 0.0);
        sink(row);

        if (cfg.eval_interval > 0 && phase_index % cfg.eval_interval == 0) {
            Welford eval_ret;
            for (int e = 0; e < cfg.eval_episodes; ++e) {
                eval_ret.add(driver.eval_episode(
                    hash_u64(Rng::derive(seed, 41), static_cast<uint64_t>(phase_index * 100 + e))));
            }
            MetricsRow erow = row;
            erow.phase = "eval";
            erow.episode_return_ext = eval_ret.mean();
            sink(erow);
            result.final_eval_return = eval_ret.mean();
        }
    }
    result.total_steps = driver.global_step();
    return result;
}

}  // namespace

TrainResult run_train(const ExperimentConfig& cfg, uint64_t seed, const MetricsSink& sink,
                      bool record_positions) {
    if (cfg.agent == "qlearn") {
        return run_qlearn(cfg, seed, sink);
    }
    return run_ppo(cfg, seed, sink, record_positions);
}

std::vector<DensityRun> run_density(const ExperimentConfig& cfg, uint64_t seed,
                                    const MetricsSink& sink) {
    std::vector<DensityRun> runs;
    for (const std::string& est_name : cfg.density_estimators) {
        ExperimentConfig sub = cfg;
        sub.command = "train";
        sub.env_name = "mountaincar";
        sub.agent = "ppo";
        sub.bonus = est_name;
        TrainResult tr = run_train(sub, seed, sink, /*record_positions=*/true);

        DensityRun run;
        run.estimator = est_name;
        auto hist = xpos_density(tr.positions, cfg.density_bins,
                                 static_cast<int>(cfg.density_window));
        for (size_t w = 0; w < hist.size(); ++w) {
            DensityWindow win;
            win.window_index = static_cast<int>(w);
            win.step_lo = static_cast<int64_t>(w) * cfg.density_window;
            win.step_hi = std::min<int64_t>(win.step_lo + cfg.density_window,
                                            static_cast<int64_t>(tr.positions.size()));
            win.masses = hist[w];
            for (double m : win.masses) {
                if (m > 0.0) ++win.occupied_bins;
            }
            int64_t goal_count = 0;
            for (int64_t i = win.step_lo; i < win.step_hi; ++i) {
                if (tr.positions[static_cast<size_t>(i)] >= MountainCarEnv::kGoalPos) ++goal_count;
            }
            win.mass_at_goal =
                static_cast<double>(goal_count) / static_cast<double>(win.step_hi - win.step_lo);
            run.windows.push_back(std::move(win));
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

}  // namespace rdd
