#include "rdd/harness.hpp"

#include <atomic>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "rdd/envs.hpp"
#include "rdd/stats.hpp"
#include "rdd/toy.hpp"
#include "rdd/train.hpp"
#include "rdd/verify.hpp"

namespace rdd {

namespace fs = std::filesystem;
using nlohmann::json;

// --------------------------------------------------------------------------
// Config

namespace {

template <class T>
void require(bool ok, const std::string& field, const T& value, const std::string& expect) {
    if (!ok) {
        std::ostringstream msg;
        msg << "config: field '" << field << "' = " << value << " invalid; expected " << expect;
        throw std::invalid_argument(msg.str());
    }
}

const std::vector<std::string> kCommands = {"verify-stats", "toy", "train", "density", "ablate"};
const std::vector<std::string> kBonuses = {"rdd", "rnd", "drnd", "count", "none"};

bool one_of(const std::string& v, const std::vector<std::string>& options) {
    for (const auto& o : options) {
        if (v == o) return true;
    }
    return false;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += v[i];
    }
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    require(one_of(command, kCommands), "command", command, join(kCommands));
    require(format == "csv" || format == "json", "format", format, "csv or json");
    require(sigma >= 0.0, "sigma", sigma, ">= 0");
    require(dim > 0, "dim", dim, "> 0");
    require(mean_mode == "constant" || mean_mode == "random_net", "mean_mode", mean_mode,
            "constant or random_net");
    for (int n : n_values) require(n > 0, "n_values", n, "positive entries");
    for (int d : dims) require(d > 0, "dims", d, "positive entries");
    for (double d : deltas) require(d > 0.0 && d < 1.0, "deltas", d, "entries in (0,1)");
    if (command == "verify-stats") {
        require(sigma > 0.0, "sigma", sigma, "> 0 for verify-stats");
        require(trials >= 100, "trials", trials, ">= 100");
    }
    if (command == "toy") {
        require(toy_mode == "decay" || toy_mode == "walk", "toy_mode", toy_mode, "decay or walk");
        require(toy_points > 0, "toy_points", toy_points, "> 0");
        require(toy_visits > 0, "toy_visits", toy_visits, "> 0");
        require(toy_steps > 0, "toy_steps", toy_steps, "> 0");
        require(sigma > 0.0, "sigma", sigma, "> 0 for toy statistics");
        require(drnd_n >= 2, "drnd_n", drnd_n, ">= 2");
    }
    if (command == "train" || command == "density" || command == "ablate") {
        require(one_of(env_name, {"chain", "grid", "mountaincar"}), "env", env_name,
                "chain, grid, mountaincar");
        require(agent == "qlearn" || agent == "ppo", "agent", agent, "qlearn or ppo");
        require(one_of(bonus, kBonuses), "bonus", bonus, join(kBonuses));
        require(obs == "onehot" || obs == "compact", "obs", obs, "onehot or compact");
        require(agent != "qlearn" || env_name != "mountaincar", "agent", agent,
                "qlearn requires a tabular env (chain or grid)");
        require(chain_length >= 2, "chain_length", chain_length, ">= 2");
        require(episodes > 0 || steps > 0, "episodes", episodes, "positive budget");
        require(lambda >= 0.0, "lambda", lambda, ">= 0");
        require(n_envs > 0, "n_envs", n_envs, "> 0");
        require(rollout_len > 0, "rollout_len", rollout_len, "> 0");
        require(bonus != "drnd" || drnd_n >= 2, "drnd_n", drnd_n, ">= 2 for drnd");
        for (int p : probe_states) require(p >= 0, "probe_states", p, ">= 0");
    }
    if (command == "density") {
        require(density_bins > 0, "density_bins", density_bins, "> 0");
        require(density_window > 0, "density_window", density_window, "> 0");
        require(!density_estimators.empty(), "density_estimators", std::string("[]"),
                "at least one estimator");
        for (const auto& e : density_estimators) {
            require(one_of(e, kBonuses), "density_estimators", e, join(kBonuses));
        }
    }
    if (command == "ablate") {
        require(one_of(ablate_param, {"mu", "sigma", "dim"}), "ablate_param", ablate_param,
                "mu, sigma, dim");
        require(!ablate_values.empty(), "ablate_values", std::string("[]"), "non-empty list");
        if (ablate_param == "sigma") {
            for (double v : ablate_values) require(v >= 0.0, "ablate_values", v, ">= 0");
        }
        if (ablate_param == "dim") {
            for (double v : ablate_values) require(v >= 1.0, "ablate_values", v, ">= 1");
        }
    }
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["command"] = c.command;
    j["seed"] = c.seed;
    j["seeds"] = c.seeds;
    j["out_dir"] = c.out_dir;
    j["format"] = c.format;
    j["mu"] = c.mu;
    j["sigma"] = c.sigma;
    j["dim"] = c.dim;
    j["mean_mode"] = c.mean_mode;
    j["n_values"] = c.n_values;
    j["dims"] = c.dims;
    j["trials"] = c.trials;
    j["deltas"] = c.deltas;
    j["toy_mode"] = c.toy_mode;
    j["toy_points"] = c.toy_points;
    j["toy_visits"] = c.toy_visits;
    j["toy_steps"] = c.toy_steps;
    j["toy_samples_per_step"] = c.toy_samples_per_step;
    j["drnd_n"] = c.drnd_n;
    j["toy_approx"] = c.toy_approx;
    j["env"] = c.env_name;
    j["agent"] = c.agent;
    j["bonus"] = c.bonus;
    j["obs"] = c.obs;
    j["chain_length"] = c.chain_length;
    j["grid_w"] = c.grid_w;
    j["grid_h"] = c.grid_h;
    j["steps"] = c.steps;
    j["episodes"] = c.episodes;
    j["lambda"] = c.lambda;
    j["alpha"] = c.alpha;
    j["gamma"] = c.gamma;
    j["epsilon_greedy"] = c.epsilon_greedy;
    j["lr"] = c.lr;
    j["hidden"] = c.hidden;
    j["n_envs"] = c.n_envs;
    j["rollout_len"] = c.rollout_len;
    j["clip"] = c.clip;
    j["ppo_epochs"] = c.ppo_epochs;
    j["gae_lambda"] = c.gae_lambda;
    j["eval_interval"] = c.eval_interval;
    j["eval_episodes"] = c.eval_episodes;
    j["key_bins"] = c.key_bins;
    j["count_sqrt"] = c.count_sqrt;
    j["probe_states"] = c.probe_states;
    j["timing"] = c.timing;
    j["density_bins"] = c.density_bins;
    j["density_window"] = c.density_window;
    j["density_estimators"] = c.density_estimators;
    j["ablate_param"] = c.ablate_param;
    j["ablate_values"] = c.ablate_values;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    j.at("command").get_to(c.command);
    j.at("seed").get_to(c.seed);
    j.at("seeds").get_to(c.seeds);
    j.at("out_dir").get_to(c.out_dir);
    j.at("format").get_to(c.format);
    j.at("mu").get_to(c.mu);
    j.at("sigma").get_to(c.sigma);
    j.at("dim").get_to(c.dim);
    j.at("mean_mode").get_to(c.mean_mode);
    j.at("n_values").get_to(c.n_values);
    j.at("dims").get_to(c.dims);
    j.at("trials").get_to(c.trials);
    j.at("deltas").get_to(c.deltas);
    j.at("toy_mode").get_to(c.toy_mode);
    j.at("toy_points").get_to(c.toy_points);
    j.at("toy_visits").get_to(c.toy_visits);
    j.at("toy_steps").get_to(c.toy_steps);
    j.at("toy_samples_per_step").get_to(c.toy_samples_per_step);
    j.at("drnd_n").get_to(c.drnd_n);
    j.at("toy_approx").get_to(c.toy_approx);
    j.at("env").get_to(c.env_name);
    j.at("agent").get_to(c.agent);
    j.at("bonus").get_to(c.bonus);
    j.at("obs").get_to(c.obs);
    j.at("chain_length").get_to(c.chain_length);
    j.at("grid_w").get_to(c.grid_w);
    j.at("grid_h").get_to(c.grid_h);
    j.at("steps").get_to(c.steps);
    j.at("episodes").get_to(c.episodes);
    j.at("lambda").get_to(c.lambda);
    j.at("alpha").get_to(c.alpha);
    j.at("gamma").get_to(c.gamma);
    j.at("epsilon_greedy").get_to(c.epsilon_greedy);
    j.at("lr").get_to(c.lr);
    j.at("hidden").get_to(c.hidden);
    j.at("n_envs").get_to(c.n_envs);
    j.at("rollout_len").get_to(c.rollout_len);
    j.at("clip").get_to(c.clip);
    j.at("ppo_epochs").get_to(c.ppo_epochs);
    j.at("gae_lambda").get_to(c.gae_lambda);
    j.at("eval_interval").get_to(c.eval_interval);
    j.at("eval_episodes").get_to(c.eval_episodes);
    j.at("key_bins").get_to(c.key_bins);
    j.at("count_sqrt").get_to(c.count_sqrt);
    j.at("probe_states").get_to(c.probe_states);
    j.at("timing").get_to(c.timing);
    j.at("density_bins").get_to(c.density_bins);
    j.at("density_window").get_to(c.density_window);
    j.at("density_estimators").get_to(c.density_estimators);
    j.at("ablate_param").get_to(c.ablate_param);
    j.at("ablate_values").get_to(c.ablate_values);
    return c;
}

// --------------------------------------------------------------------------
// CSV / JSON emission

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<std::string> MetricsWriter::header(size_t n_probes) {
    std::vector<std::string> h = {"run_id",       "seed",      "global_step",
                                  "episode_index", "phase",     "episode_return_ext",
                                  "mean_bonus",    "visited_state_count", "wall_ms"};
    for (size_t i = 0; i < n_probes; ++i) h.push_back("probe_" + std::to_string(i));
    return h;
}

MetricsWriter::MetricsWriter(const fs::path& path, const std::string& format, size_t n_probes)
    : format_(format), n_probes_(n_probes), path_(path) {
    if (format_ == "csv") {
        csv_ = std::make_unique<std::ofstream>(path);
        if (!*csv_) throw std::runtime_error("cannot open metrics file " + path.string());
        auto h = header(n_probes);
        for (size_t i = 0; i < h.size(); ++i) {
            if (i) *csv_ << ',';
            *csv_ << h[i];
        }
        *csv_ << '\n';
        csv_->flush();
    }
}

MetricsWriter::~MetricsWriter() {
    close();
}

void MetricsWriter::write(const MetricsRow& row) {
    if (row.probe_bonuses.size() != n_probes_) {
        throw std::invalid_argument("metrics row probe count mismatch");
    }
    if (format_ == "csv") {
        *csv_ << row.run_id << ',' << row.seed << ',' << row.global_step << ','
              << row.episode_index << ',' << row.phase << ',' << format_g9(row.episode_return_ext)
              << ',' << format_g9(row.mean_bonus) << ',' << row.visited_state_count << ','
              << format_g9(row.wall_ms);
        for (double b : row.probe_bonuses) *csv_ << ',' << format_g9(b);
        *csv_ << '\n';
        csv_->flush();  // crash-safe append
    } else {
        json j;
        j["run_id"] = row.run_id;
        j["seed"] = row.seed;
        j["global_step"] = row.global_step;
        j["episode_index"] = row.episode_index;
        j["phase"] = row.phase;
        j["episode_return_ext"] = row.episode_return_ext;
        j["mean_bonus"] = row.mean_bonus;
        j["visited_state_count"] = row.visited_state_count;
        j["wall_ms"] = row.wall_ms;
        j["probe_bonuses"] = row.probe_bonuses;
        json_rows_.push_back(std::move(j));
    }
}

void MetricsWriter::close() {
    if (csv_) {
        csv_->flush();
        csv_.reset();
    } else if (format_ == "json" && !path_.empty()) {
        std::ofstream out(path_);
        out << json_rows_.dump(2) << '\n';
        path_.clear();
    }
}

// --------------------------------------------------------------------------
// Run identity and manifest

std::string make_run_id(const ExperimentConfig& cfg, uint64_t seed) {
    std::ostringstream id;
    id << cfg.command;
    if (cfg.command == "train" || cfg.command == "density" || cfg.command == "ablate") {
        id << '-' << cfg.env_name << '-' << cfg.agent << '-' << cfg.bonus;
    }
    if (cfg.command == "toy") id << '-' << cfg.toy_mode;
    id << "-s" << seed;
    return id.str();
}

const std::vector<std::string>& documented_deviations() {
    static const std::vector<std::string> devs = {
        "combined advantage uses A = A_ext + beta * A_int (advantages, not returns)",
        "intrinsic rewards normalized by running standard deviation only; mean not subtracted",
        "tabular Q-learning bootstraps directly, without a slow target table",
        "drnd statistic aggregates per-dimension ratios by their mean",
        "count bonus defaults to 1/n; --count-sqrt switches to 1/sqrt(n)",
        "single scale parameter serves both lambda (reward shaping) and beta (ppo)",
        "wall_ms is 0 unless --timing is set, keeping metrics byte-reproducible",
    };
    return devs;
}

void RunManifest::write(const fs::path& path) const {
    json j;
    j["schema_version"] = kCsvSchemaVersion;
    j["code_version"] = kCodeVersion;
    j["run_id"] = run_id;
    j["seed"] = seed;
    j["estimator"] = estimator;
    j["config"] = config;
    j["deviations"] = deviations;
    j["outputs"] = outputs;
    if (!extra.is_null()) j["extra"] = extra;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << j.dump(2) << '\n';
}

// --------------------------------------------------------------------------
// Worker pool

int default_workers() {
    if (const char* env = std::getenv("RDD_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void run_tasks(std::vector<std::function<void()>>& tasks, int workers) {
    if (tasks.empty()) return;
    workers = std::min<int>(workers, static_cast<int>(tasks.size()));
    if (workers <= 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= tasks.size()) return;
                try {
                    tasks[i]();
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// --------------------------------------------------------------------------
// Estimator factory

std::unique_ptr<BonusEstimator> make_estimator_from_config(const ExperimentConfig& cfg,
                                                           int input_dim, uint64_t run_seed) {
    if (cfg.bonus == "none") return nullptr;
    EstimatorOptions opt{.lr = cfg.lr, .hidden = cfg.hidden, .key_bins = cfg.key_bins};
    if (cfg.bonus == "count") {
        return std::make_unique<CountEstimator>(cfg.key_bins, cfg.count_sqrt);
    }
    TargetSpec spec;
    spec.mean_mode = cfg.mean_mode == "random_net" ? MeanMode::RandomNet : MeanMode::Constant;
    spec.mu = cfg.mu;
    spec.sigma = cfg.sigma;
    spec.dim = cfg.dim;
    spec.input_dim = input_dim;
    spec.hidden = cfg.hidden;
    spec.seed = Rng::derive(run_seed, 30);
    uint64_t est_seed = Rng::derive(run_seed, 31);
    if (cfg.bonus == "rdd") {
        return std::make_unique<RddEstimator>(spec, est_seed, opt);
    }
    if (cfg.bonus == "rnd") {
        return std::make_unique<RndEstimator>(input_dim, cfg.dim, est_seed, opt);
    }
    return std::make_unique<DrndEstimator>(spec, cfg.drnd_n, est_seed, DrndBank::Nets, opt);
}

// --------------------------------------------------------------------------
// Command plumbing

namespace {

struct TableWriter {
    explicit TableWriter(const fs::path& path, const std::string& format,
                         std::vector<std::string> header)
        : format_(format), path_(path), header_(std::move(header)) {
        if (format_ == "csv") {
            csv_.open(path);
            if (!csv_) throw std::runtime_error("cannot open " + path.string());
            for (size_t i = 0; i < header_.size(); ++i) {
                if (i) csv_ << ',';
                csv_ << header_[i];
            }
            csv_ << '\n';
        }
    }

    void row(const std::vector<std::string>& cells) {
        if (format_ == "csv") {
            for (size_t i = 0; i < cells.size(); ++i) {
                if (i) csv_ << ',';
                csv_ << cells[i];
            }
            csv_ << '\n';
            csv_.flush();
        } else {
            json j;
            for (size_t i = 0; i < cells.size(); ++i) j[header_[i]] = cells[i];
            rows_.push_back(std::move(j));
        }
    }

    void close() {
        if (format_ == "csv") {
            csv_.flush();
        } else {
            std::ofstream out(path_);
            out << rows_.dump(2) << '\n';
        }
    }

    std::string format_;
    fs::path path_;
    std::vector<std::string> header_;
    std::ofstream csv_;
    json rows_ = json::array();
};

std::string ext_of(const ExperimentConfig& cfg) {
    return cfg.format == "csv" ? ".csv" : ".json";
}

RunManifest base_manifest(const ExperimentConfig& cfg, uint64_t seed) {
    RunManifest m;
    m.run_id = make_run_id(cfg, seed);
    m.seed = seed;
    m.estimator = cfg.bonus;
    m.config = config_to_json(cfg);
    m.deviations = documented_deviations();
    return m;
}

std::vector<uint64_t> resolved_seeds(const ExperimentConfig& cfg) {
    if (!cfg.seeds.empty()) return cfg.seeds;
    return {cfg.seed};
}

std::string fmt_bool(bool b) {
    return b ? "1" : "0";
}

}  // namespace

int cmd_verify_stats(const ExperimentConfig& cfg) {
    if (cfg.trials < 1000) {
        std::cerr << "warning: trials = " << cfg.trials
                  << " is low; Monte-Carlo tolerances assume >= 1e3\n";
    }
    fs::create_directories(cfg.out_dir);
    uint64_t seed = resolved_seeds(cfg).front();
    std::string run_id = make_run_id(cfg, seed);
    fs::path out = fs::path(cfg.out_dir) / (run_id + ext_of(cfg));

    RunManifest manifest = base_manifest(cfg, seed);
    manifest.estimator = "analytic";
    manifest.outputs = {out.string()};
    manifest.write(fs::path(cfg.out_dir) / (run_id + ".manifest.json"));

    std::vector<std::string> header = {
        "n",          "mu",           "sigma",        "d",           "trials",
        "mc_mean_z",  "se_z",         "closed_mean",  "mean_gap_se", "mean_ok",
        "mc_var_z",   "closed_var_z", "var_z_rel_err", "var_z_ok",
        "mc_mean_y",  "mc_var_y",     "closed_var_y", "var_y_rel_err", "var_y_ok",
        "var_order_ok", "dim_ratio",  "dim_ratio_ok"};
    for (double d : cfg.deltas) header.push_back("exceed_rate_" + format_g9(d));
    header.push_back("exceed_ok");
    header.push_back("pass");

    auto rows = run_verify(cfg, seed);
    TableWriter w(out, cfg.format, header);
    bool all_pass = true;
    for (const auto& r : rows) {
        std::vector<std::string> cells = {
            std::to_string(r.n),        format_g9(r.mu),
            format_g9(r.sigma),         std::to_string(r.d),
            std::to_string(r.trials),   format_g9(r.mc_mean_z),
            format_g9(r.se_z),          format_g9(r.closed_mean),
            format_g9(r.mean_gap_se),   fmt_bool(r.mean_ok),
            format_g9(r.mc_var_z),      format_g9(r.closed_var_z),
            format_g9(r.var_z_rel_err), fmt_bool(r.var_z_ok),
            format_g9(r.mc_mean_y),     format_g9(r.mc_var_y),
            format_g9(r.closed_var_y),  format_g9(r.var_y_rel_err),
            fmt_bool(r.var_y_ok),       fmt_bool(r.var_order_ok),
            format_g9(r.dim_ratio),     fmt_bool(r.dim_ratio_ok)};
        for (double rate : r.exceed_rates) cells.push_back(format_g9(rate));
        cells.push_back(fmt_bool(r.exceed_ok));
        cells.push_back(fmt_bool(r.pass));
        w.row(cells);
        all_pass = all_pass && r.pass;
    }
    w.close();
    std::cout << (all_pass ? "verify-stats: all rows pass\n" : "verify-stats: FAILURES present\n");
    return all_pass ? 0 : 3;
}

int cmd_toy(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    for (uint64_t seed : resolved_seeds(cfg)) {
        std::string run_id = make_run_id(cfg, seed);
        fs::path out = fs::path(cfg.out_dir) / (run_id + ext_of(cfg));
        RunManifest manifest = base_manifest(cfg, seed);
        manifest.estimator = "toy";
        manifest.outputs = {out.string()};
        manifest.write(fs::path(cfg.out_dir) / (run_id + ".manifest.json"));

        if (cfg.toy_mode == "decay") {
            TableWriter w(out, cfg.format,
                          {"seed", "point", "visit", "count_bonus", "z_exact", "z_approx",
                           "y_exact", "y_drnd_exact", "y_drnd_approx", "rnd_bonus",
                           "rnd_initial"});
            DecayResult res = run_decay(cfg, seed);
            for (const auto& r : res.rows) {
                w.row({std::to_string(r.seed), std::to_string(r.point), std::to_string(r.visit),
                       format_g9(r.count_bonus), format_g9(r.z_exact), format_g9(r.z_approx),
                       format_g9(r.y_exact), format_g9(r.y_drnd_exact),
                       format_g9(r.y_drnd_approx), format_g9(r.rnd_bonus),
                       format_g9(r.rnd_initial)});
            }
            w.close();
        } else {
            TableWriter w(out, cfg.format,
                          {"seed", "step", "point", "n", "inv_n", "z_exact", "drnd_tracker",
                           "y_drnd_exact", "z_approx", "y_drnd_approx", "rnd_bonus"});
            WalkResult res = run_walk(cfg, seed, cfg.drnd_n, cfg.toy_approx);
            for (const auto& r : res.rows) {
                w.row({std::to_string(r.seed), std::to_string(r.step), std::to_string(r.point),
                       std::to_string(r.n), format_g9(r.inv_n), format_g9(r.z_exact),
                       format_g9(r.drnd_tracker), format_g9(r.y_drnd_exact),
                       format_g9(r.z_approx), format_g9(r.y_drnd_approx),
                       format_g9(r.rnd_bonus)});
            }
            w.close();
        }
    }
    return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    auto seeds = resolved_seeds(cfg);
    std::vector<std::function<void()>> tasks;
    for (uint64_t seed : seeds) {
        tasks.push_back([&cfg, seed] {
            std::string run_id = make_run_id(cfg, seed);
            fs::path metrics_path = fs::path(cfg.out_dir) / (run_id + ".metrics" + ext_of(cfg));
            RunManifest manifest = base_manifest(cfg, seed);
            manifest.outputs = {metrics_path.string()};
            manifest.write(fs::path(cfg.out_dir) / (run_id + ".manifest.json"));

            MetricsWriter writer(metrics_path, cfg.format, cfg.probe_states.size());
            run_train(cfg, seed, [&writer](const MetricsRow& row) { writer.write(row); });
            writer.close();
        });
    }
    run_tasks(tasks);
    return 0;
}

int cmd_density(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    auto seeds = resolved_seeds(cfg);
    std::vector<std::function<void()>> tasks;
    for (uint64_t seed : seeds) {
        tasks.push_back([&cfg, seed] {
            std::string run_id = make_run_id(cfg, seed);
            fs::path hist_path = fs::path(cfg.out_dir) / (run_id + ".density" + ext_of(cfg));
            fs::path metrics_path = fs::path(cfg.out_dir) / (run_id + ".metrics" + ext_of(cfg));

            RunManifest manifest = base_manifest(cfg, seed);
            manifest.estimator = "multiple";
            manifest.outputs = {hist_path.string(), metrics_path.string()};
            json bins = json::array();
            double lo = MountainCarEnv::kMinPos;
            double hi = MountainCarEnv::kMaxPos;
            for (int b = 0; b <= cfg.density_bins; ++b) {
                double raw = lo + (hi - lo) * b / cfg.density_bins;
                bins.push_back({{"raw", raw}, {"normalized", (raw - lo) / (hi - lo)}});
            }
            manifest.extra = {{"bin_edges", bins}};
            manifest.write(fs::path(cfg.out_dir) / (run_id + ".manifest.json"));

            MetricsWriter metrics(metrics_path, cfg.format, 0);
            std::vector<std::string> header = {"seed",    "estimator",    "window",
                                               "step_lo", "step_hi",      "occupied_bins",
                                               "mass_at_goal"};
            for (int b = 0; b < cfg.density_bins; ++b) header.push_back("b" + std::to_string(b));
            TableWriter w(hist_path, cfg.format, header);
            auto runs =
                run_density(cfg, seed, [&metrics](const MetricsRow& row) { metrics.write(row); });
            for (const auto& run : runs) {
                for (const auto& win : run.windows) {
                    std::vector<std::string> cells = {
                        std::to_string(seed),          run.estimator,
                        std::to_string(win.window_index), std::to_string(win.step_lo),
                        std::to_string(win.step_hi),   std::to_string(win.occupied_bins),
                        format_g9(win.mass_at_goal)};
                    for (double m : win.masses) cells.push_back(format_g9(m));
                    w.row(cells);
                }
            }
            w.close();
            metrics.close();
        });
    }
    run_tasks(tasks);
    return 0;
}

int cmd_ablate(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    auto seeds = resolved_seeds(cfg);
    uint64_t manifest_seed = seeds.front();
    std::string run_id = make_run_id(cfg, manifest_seed);
    fs::path out = fs::path(cfg.out_dir) / (run_id + ext_of(cfg));
    fs::path summary = fs::path(cfg.out_dir) / (run_id + "-summary" + ext_of(cfg));

    RunManifest manifest = base_manifest(cfg, manifest_seed);
    manifest.outputs = {out.string(), summary.string()};
    manifest.write(fs::path(cfg.out_dir) / (run_id + ".manifest.json"));

    struct Cell {
        double value;
        uint64_t seed;
        double final_eval = 0.0;
        double final_train = 0.0;
        bool reached_goal = false;
    };
    std::vector<Cell> cells;
    for (double value : cfg.ablate_values) {
        for (uint64_t seed : seeds) cells.push_back({value, seed});
    }

    std::vector<std::function<void()>> tasks;
    for (auto& cell : cells) {
        tasks.push_back([&cfg, &cell] {
            ExperimentConfig sub = cfg;
            sub.command = "train";
            if (cfg.ablate_param == "mu") sub.mu = cell.value;
            if (cfg.ablate_param == "sigma") sub.sigma = cell.value;
            if (cfg.ablate_param == "dim") sub.dim = static_cast<int>(cell.value);
            double last_train = 0.0;
            TrainResult res = run_train(sub, cell.seed, [&last_train](const MetricsRow& row) {
                if (row.phase == "train") last_train = row.episode_return_ext;
            });
            cell.final_eval = res.final_eval_return;
            cell.final_train = last_train;
            cell.reached_goal = res.reached_goal;
        });
    }
    run_tasks(tasks);

    TableWriter w(out, cfg.format,
                  {"param", "value", "seed", "final_eval_return", "final_train_return",
                   "reached_goal"});
    for (const auto& c : cells) {
        w.row({cfg.ablate_param, format_g9(c.value), std::to_string(c.seed),
               format_g9(c.final_eval), format_g9(c.final_train), fmt_bool(c.reached_goal)});
    }
    w.close();

    TableWriter ws(summary, cfg.format,
                   {"param", "value", "median_final_return", "iqr_lo", "iqr_hi", "success_rate"});
    for (double value : cfg.ablate_values) {
        std::vector<double> finals;
        int successes = 0;
        int total = 0;
        for (const auto& c : cells) {
            if (c.value != value) continue;
            finals.push_back(c.final_eval);
            successes += c.reached_goal ? 1 : 0;
            ++total;
        }
        std::sort(finals.begin(), finals.end());
        auto quantile = [&](double q) {
            double pos = q * static_cast<double>(finals.size() - 1);
            size_t i = static_cast<size_t>(pos);
            double frac = pos - static_cast<double>(i);
            return i + 1 < finals.size() ? finals[i] * (1 - frac) + finals[i + 1] * frac
                                         : finals[i];
        };
        ws.row({cfg.ablate_param, format_g9(value), format_g9(quantile(0.5)),
                format_g9(quantile(0.25)), format_g9(quantile(0.75)),
                format_g9(static_cast<double>(successes) / total)});
    }
    ws.close();
    return 0;
}

int run_command(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.command == "verify-stats") return cmd_verify_stats(cfg);
    if (cfg.command == "toy") return cmd_toy(cfg);
    if (cfg.command == "train") return cmd_train(cfg);
    if (cfg.command == "density") return cmd_density(cfg);
    return cmd_ablate(cfg);
}

}  // namespace rdd
