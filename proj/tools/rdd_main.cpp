#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "rdd/harness.hpp"

namespace {

// Options shared by every subcommand. Config files are plain key=value lines;
// command-line flags override file values.
void add_common(CLI::App* cmd, rdd::ExperimentConfig& cfg) {
    cmd->set_config("--config")->description("key=value config file");
    cmd->add_option("--seed", cfg.seed, "base seed");
    cmd->add_option("--seeds", cfg.seeds, "explicit seed list (overrides --seed)")
        ->delimiter(',');
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--format", cfg.format, "csv or json");
}

void add_stats(CLI::App* cmd, rdd::ExperimentConfig& cfg) {
    cmd->add_option("--mu", cfg.mu, "target mean");
    cmd->add_option("--sigma", cfg.sigma, "target standard deviation");
    cmd->add_option("--dim", cfg.dim, "target output dimension");
    cmd->add_option("--mean-mode", cfg.mean_mode, "constant or random_net target mean");
}

void add_train(CLI::App* cmd, rdd::ExperimentConfig& cfg) {
    cmd->add_option("--env", cfg.env_name, "chain, grid, mountaincar");
    cmd->add_option("--agent", cfg.agent, "qlearn or ppo");
    cmd->add_option("--bonus", cfg.bonus, "rdd, rnd, drnd, count, none");
    cmd->add_option("--obs", cfg.obs, "onehot or compact features");
    cmd->add_option("--steps", cfg.steps, "step budget (ppo)");
    cmd->add_option("--episodes", cfg.episodes, "episode budget (qlearn)");
    cmd->add_option("--lambda", cfg.lambda, "bonus scale");
    cmd->add_option("--alpha", cfg.alpha, "q-learning step size");
    cmd->add_option("--gamma", cfg.gamma, "discount");
    cmd->add_option("--eps-greedy", cfg.epsilon_greedy, "exploration rate (qlearn)");
    cmd->add_option("--lr", cfg.lr, "network learning rate");
    cmd->add_option("--hidden", cfg.hidden, "hidden layer width");
    cmd->add_option("--chain-length", cfg.chain_length, "chain env length");
    cmd->add_option("--n-envs", cfg.n_envs, "parallel (round-robin) envs for ppo");
    cmd->add_option("--rollout-len", cfg.rollout_len, "steps per env per ppo phase");
    cmd->add_option("--drnd-n", cfg.drnd_n, "number of drnd targets");
    cmd->add_option("--key-bins", cfg.key_bins, "state key grid resolution");
    cmd->add_option("--eval-interval", cfg.eval_interval, "evaluation cadence");
    cmd->add_option("--eval-episodes", cfg.eval_episodes, "episodes per evaluation");
    cmd->add_option("--probe-states", cfg.probe_states, "state indices probed for bonus")
        ->delimiter(',');
    cmd->add_flag("--count-sqrt", cfg.count_sqrt, "count bonus 1/sqrt(n) instead of 1/n");
    cmd->add_flag("--timing", cfg.timing, "record real wall_ms (breaks byte-reproducibility)");
}

int dispatch(const rdd::ExperimentConfig& cfg) {
    try {
        return rdd::run_command(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-distribution-distillation exploration workbench"};
    app.require_subcommand(1);

    rdd::ExperimentConfig cfg;

    auto* verify = app.add_subcommand("verify-stats", "Monte-Carlo checks of the closed forms");
    add_common(verify, cfg);
    add_stats(verify, cfg);
    verify->add_option("--trials", cfg.trials, "Monte-Carlo trials per cell");
    verify->add_option("--n-values", cfg.n_values, "visit counts n")->delimiter(',');
    verify->add_option("--dims", cfg.dims, "statistic dimensions")->delimiter(',');
    verify->add_option("--deltas", cfg.deltas, "concentration deltas")->delimiter(',');

    auto* toy = app.add_subcommand("toy", "bonus decay and random-walk traces");
    add_common(toy, cfg);
    add_stats(toy, cfg);
    toy->add_option("--mode", cfg.toy_mode, "decay or walk");
    toy->add_option("--points", cfg.toy_points, "synthetic point count");
    toy->add_option("--visits", cfg.toy_visits, "presentations per point (decay)");
    toy->add_option("--walk-steps", cfg.toy_steps, "random-walk steps");
    toy->add_option("--samples-per-step", cfg.toy_samples_per_step, "points touched per step");
    toy->add_option("--drnd-n", cfg.drnd_n, "drnd bank size");
    toy->add_option("--lr", cfg.lr, "predictor learning rate");
    toy->add_flag("!--no-approx", cfg.toy_approx, "skip predictor-trained traces");

    auto* train = app.add_subcommand("train", "agent training runs");
    add_common(train, cfg);
    add_stats(train, cfg);
    add_train(train, cfg);

    auto* density = app.add_subcommand("density", "MountainCar exploration density study");
    add_common(density, cfg);
    add_stats(density, cfg);
    add_train(density, cfg);
    density->add_option("--bins", cfg.density_bins, "histogram bins");
    density->add_option("--window", cfg.density_window, "steps per histogram window");
    density->add_option("--estimators", cfg.density_estimators, "estimators to compare")
        ->delimiter(',');

    auto* ablate = app.add_subcommand("ablate", "hyperparameter grids");
    add_common(ablate, cfg);
    add_stats(ablate, cfg);
    add_train(ablate, cfg);
    ablate->add_option("--param", cfg.ablate_param, "mu, sigma or dim");
    ablate->add_option("--values", cfg.ablate_values, "grid values")->delimiter(',');

    std::string manifest_path;
    auto* rerun = app.add_subcommand("rerun", "re-run a recorded manifest");
    rerun->add_option("manifest", manifest_path, "path to a .manifest.json file")->required();

    // Subcommand-specific defaults applied before parsing.
    toy->preparse_callback([&cfg](size_t) {
        cfg.dim = 256;
        cfg.sigma = 1.0;
    });
    density->preparse_callback([&cfg](size_t) {
        cfg.env_name = "mountaincar";
        cfg.agent = "ppo";
        cfg.steps = 100000;
        cfg.eval_interval = 0;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (rerun->parsed()) {
        try {
            std::ifstream in(manifest_path);
            if (!in) {
                std::cerr << "error: cannot open manifest " << manifest_path << '\n';
                return 1;
            }
            nlohmann::json j;
            in >> j;
            rdd::ExperimentConfig stored = rdd::config_from_json(j.at("config"));
            return dispatch(stored);
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "error: bad manifest: " << e.what() << '\n';
            return 1;
        }
    }

    cfg.command = app.get_subcommands().front()->get_name();
    return dispatch(cfg);
}
