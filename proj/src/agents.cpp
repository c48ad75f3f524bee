#include "rdd/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdd {

GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const uint8_t> dones, double gamma, double lambda) {
    size_t n = rewards.size();
    if (values.size() != n + 1) {
        throw std::invalid_argument("gae: need " + std::to_string(n + 1) + " values for " +
                                    std::to_string(n) + " rewards, got " +
                                    std::to_string(values.size()));
    }
    if (dones.size() != n) {
        throw std::invalid_argument("gae: dones length " + std::to_string(dones.size()) +
                                    " != rewards length " + std::to_string(n));
    }
    GaeResult out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double acc = 0.0;
    for (size_t t = n; t-- > 0;) {
        double not_done = dones[t] ? 0.0 : 1.0;
        double delta = rewards[t] + gamma * values[t + 1] * not_done - values[t];
        acc = delta + gamma * lambda * not_done * acc;
        out.advantages[t] = acc;
        out.returns[t] = acc + values[t];
    }
    return out;
}

// --------------------------------------------------------------------------
// QTable

QTable::QTable(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions),
      q_(static_cast<size_t>(n_states) * n_actions, 0.0) {
    if (n_states <= 0 || n_actions <= 0) {
        throw std::invalid_argument("QTable: state/action counts must be positive");
    }
}

int QTable::greedy_action(int s) const {
    int best = 0;
    double best_q = q(s, 0);
    for (int a = 1; a < n_actions_; ++a) {
        if (q(s, a) > best_q) {
            best_q = q(s, a);
            best = a;
        }
    }
    return best;
}

double QTable::max_q(int s) const {
    return q(s, greedy_action(s));
}

int QTable::act(int s, double epsilon, Rng& rng) const {
    if (rng.uniform() < epsilon) {
        return static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_actions_)));
    }
    return greedy_action(s);
}

void QTable::update(int s, int a, double reward, double bonus, double lambda, int s_next,
                    bool done, const QConfig& cfg) {
    double target = reward + lambda * bonus + cfg.gamma * max_q(s_next) * (done ? 0.0 : 1.0);
    q(s, a) += cfg.alpha * (target - q(s, a));
}

// --------------------------------------------------------------------------
// PpoAgent

PpoAgent::PpoAgent(int obs_dim, int n_actions, PpoConfig cfg, uint64_t seed)
    : cfg_(cfg), n_actions_(n_actions), action_rng_(Rng::derive(seed, 11)) {
    Rng pi_init(Rng::derive(seed, 12));
    Rng ve_init(Rng::derive(seed, 13));
    Rng vi_init(Rng::derive(seed, 14));
    policy_ = DenseNet(obs_dim, {cfg.hidden, cfg.hidden}, n_actions, Activation::Tanh, pi_init);
    value_ext_net_ = DenseNet(obs_dim, {cfg.hidden, cfg.hidden}, 1, Activation::Tanh, ve_init);
    value_int_net_ = DenseNet(obs_dim, {cfg.hidden, cfg.hidden}, 1, Activation::Tanh, vi_init);
    opt_policy_ = Adam(policy_, AdamConfig{.lr = cfg.lr});
    opt_value_ext_ = Adam(value_ext_net_, AdamConfig{.lr = cfg.lr});
    opt_value_int_ = Adam(value_int_net_, AdamConfig{.lr = cfg.lr});
}

std::vector<double> PpoAgent::action_probs(std::span<const double> obs) const {
    std::vector<double> logits = policy_.forward(obs);
    double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    std::vector<double> p(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

std::pair<int, double> PpoAgent::act(std::span<const double> obs) {
    std::vector<double> p = action_probs(obs);
    double u = action_rng_.uniform();
    double cum = 0.0;
    int action = n_actions_ - 1;
    for (int a = 0; a < n_actions_; ++a) {
        cum += p[a];
        if (u < cum) {
            action = a;
            break;
        }
    }
    return {action, std::log(p[action])};
}

int PpoAgent::greedy_action(std::span<const double> obs) const {
    std::vector<double> p = action_probs(obs);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double PpoAgent::value_ext(std::span<const double> obs) const {
    return value_ext_net_.forward(obs)[0];
}

double PpoAgent::value_int(std::span<const double> obs) const {
    return value_int_net_.forward(obs)[0];
}

PpoUpdateStats PpoAgent::update(const Trajectory& traj, std::span<const double> combined_adv,
                                std::span<const double> returns_ext,
                                std::span<const double> returns_int) {
    size_t n = traj.size();
    if (combined_adv.size() != n || returns_ext.size() != n || returns_int.size() != n) {
        throw std::invalid_argument("ppo_update: advantage/return lengths do not match batch");
    }
    if (n == 0) throw std::invalid_argument("ppo_update: empty batch");

    PpoUpdateStats stats;
    Gradients pg = policy_.make_gradients();
    Gradients vg_ext = value_ext_net_.make_gradients();
    Gradients vg_int = value_int_net_.make_gradients();
    double inv_n = 1.0 / static_cast<double>(n);

    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        pg.zero();
        double surrogate = 0.0;
        DenseNet::Tape tape;
        std::vector<double> dlogits;
        for (size_t i = 0; i < n; ++i) {
            std::vector<double> logits = policy_.forward_tape(traj.states[i], tape);
            double mx = *std::max_element(logits.begin(), logits.end());
            double total = 0.0;
            for (double v : logits) total += std::exp(v - mx);
            double log_z = mx + std::log(total);
            int a = traj.actions[i];
            double lp_new = logits[a] - log_z;
            double ratio = std::exp(lp_new - traj.logprobs[i]);
            double adv = combined_adv[i];
            double surr1 = ratio * adv;
            double clipped = std::clamp(ratio, 1.0 - cfg_.clip, 1.0 + cfg_.clip);
            double surr2 = clipped * adv;
            surrogate += std::min(surr1, surr2) * inv_n;
            if (surr1 <= surr2) {
                // Gradient flows through the unclipped branch only.
                dlogits.assign(logits.size(), 0.0);
                double coef = -adv * ratio * inv_n;  // descent on -surrogate
                for (size_t j = 0; j < logits.size(); ++j) {
                    double pj = std::exp(logits[j] - log_z);
                    dlogits[j] = coef * ((static_cast<int>(j) == a ? 1.0 : 0.0) - pj);
                }
                policy_.backward(tape, dlogits, pg);
            }
        }
        if (!std::isfinite(surrogate)) {
            throw std::runtime_error("ppo_update: non-finite policy loss");
        }
        if (epoch == 0) stats.first_epoch_surrogate = surrogate;
        stats.policy_loss = -surrogate;
        opt_policy_.step(policy_, pg);

        auto fit_value = [&](DenseNet& net, Adam& opt, Gradients& g,
                             std::span<const double> targets) {
            g.zero();
            double loss = 0.0;
            DenseNet::Tape vtape;
            for (size_t i = 0; i < n; ++i) {
                std::vector<double> out = net.forward_tape(traj.states[i], vtape);
                double diff = out[0] - targets[i];
                loss += diff * diff * inv_n;
                double d = 2.0 * diff * inv_n;
                net.backward(vtape, std::span<const double>(&d, 1), g);
            }
            if (!std::isfinite(loss)) {
                throw std::runtime_error("ppo_update: non-finite value loss");
            }
            opt.step(net, g);
            return loss;
        };
        stats.value_loss_ext = fit_value(value_ext_net_, opt_value_ext_, vg_ext, returns_ext);
        stats.value_loss_int = fit_value(value_int_net_, opt_value_int_, vg_int, returns_int);
    }
    return stats;
}

// --------------------------------------------------------------------------
// Q-learning rollout

EpisodeStat qlearn_episode(Env& env, QTable& table, const QConfig& cfg, BonusEstimator* est,
                           double lambda, Rng& action_rng, uint64_t env_seed,
                           int64_t global_step_base, std::set<int>* visited) {
    env.reset(env_seed);
    int s = env.state_index();
    if (visited) visited->insert(s);
    EpisodeStat stat;
    Welford bonus_acc;
    int64_t steps = 0;
    while (true) {
        int a = table.act(s, cfg.epsilon, action_rng);
        StepResult res = env.step(a);
        ++steps;
        int s_next = env.state_index();
        double bonus = 0.0;
        if (est) {
            bonus = est->bonus(res.obs);
            est->train({res.obs});
        }
        bonus_acc.add(bonus);
        table.update(s, a, res.reward, bonus, lambda, s_next, res.done, cfg);
        if (visited) visited->insert(s_next);
        stat.return_ext += res.reward;
        s = s_next;
        if (res.done) break;
    }
    stat.end_step = global_step_base + steps;
    stat.mean_bonus = bonus_acc.mean();
    stat.reached_goal = stat.return_ext > 0.0;
    return stat;
}

double qlearn_eval_episode(Env& env, const QTable& table, uint64_t env_seed) {
    env.reset(env_seed);
    double ret = 0.0;
    while (true) {
        StepResult res = env.step(table.greedy_action(env.state_index()));
        ret += res.reward;
        if (res.done) break;
    }
    return ret;
}

// --------------------------------------------------------------------------
// PpoDriver

namespace {

PpoAgent make_ppo_agent(const std::function<std::unique_ptr<Env>()>& factory, PpoConfig cfg,
                        uint64_t seed) {
    auto probe = factory();
    return PpoAgent(probe->obs_dim(), probe->n_actions(), cfg, Rng::derive(seed, 10));
}

}  // namespace

PpoDriver::PpoDriver(std::function<std::unique_ptr<Env>()> env_factory, int n_envs,
                     int rollout_len, PpoConfig cfg, BonusEstimator* est, uint64_t seed)
    : env_factory_(std::move(env_factory)),
      n_envs_(n_envs),
      rollout_len_(rollout_len),
      est_(est),
      agent_(make_ppo_agent(env_factory_, cfg, seed)),
      seed_(seed) {
    if (n_envs <= 0 || rollout_len <= 0) {
        throw std::invalid_argument("ppo driver: n_envs and rollout_len must be positive");
    }
    envs_.reserve(n_envs_);
    for (int m = 0; m < n_envs_; ++m) {
        envs_.push_back(env_factory_());
        obs_.push_back(envs_[m]->reset(Rng::derive(seed, 100 + static_cast<uint64_t>(m))));
    }
    episode_return_.assign(n_envs_, 0.0);
    episode_goal_.assign(n_envs_, false);
    episode_bonus_.assign(n_envs_, Welford{});
    episode_index_.assign(n_envs_, 0);
}

PpoDriver::PhaseStats PpoDriver::run_phase(const StepHook& hook) {
    PhaseStats stats;
    const PpoConfig& cfg = agent_.config();
    std::vector<Trajectory> segs(n_envs_);
    Welford phase_bonus;

    for (int t = 0; t < rollout_len_; ++t) {
        for (int m = 0; m < n_envs_; ++m) {
            Trajectory& seg = segs[m];
            auto [action, logprob] = agent_.act(obs_[m]);
            seg.states.push_back(obs_[m]);
            seg.actions.push_back(action);
            seg.logprobs.push_back(logprob);
            seg.values_ext.push_back(agent_.value_ext(obs_[m]));
            seg.values_int.push_back(agent_.value_int(obs_[m]));

            StepResult res = envs_[m]->step(action);
            ++global_step_;
            if (hook) hook(m, *envs_[m], res);

            double bonus = est_ ? est_->bonus(res.obs) : 0.0;
            phase_bonus.add(bonus);
            episode_bonus_[m].add(bonus);
            episode_return_[m] += res.reward;
            if (res.reward > 0.0) episode_goal_[m] = true;

            seg.rewards_ext.push_back(res.reward);
            seg.rewards_int.push_back(bonus);
            seg.dones.push_back(res.done ? 1 : 0);

            if (res.done) {
                EpisodeStat ep;
                ep.episode = episodes_done_++;
                ep.end_step = global_step_;
                ep.return_ext = episode_return_[m];
                ep.mean_bonus = episode_bonus_[m].mean();
                ep.reached_goal = episode_goal_[m];
                stats.episodes.push_back(ep);
                episode_return_[m] = 0.0;
                episode_goal_[m] = false;
                episode_bonus_[m] = Welford{};
                ++episode_index_[m];
                obs_[m] = envs_[m]->reset(Rng::derive(seed_, 100 + static_cast<uint64_t>(m)));
            } else {
                obs_[m] = res.obs;
            }
        }
    }

    // Train the estimator once per phase on the collected next states, after
    // bonuses were observed (cold-start semantics).
    if (est_) {
        std::vector<std::vector<double>> batch;
        batch.reserve(static_cast<size_t>(n_envs_) * rollout_len_);
        for (const auto& seg : segs) {
            // s_{t+1} for step t is the stored state of step t+1 within the
            // segment; the final next state is the env's current observation.
            for (size_t t = 1; t < seg.size(); ++t) batch.push_back(seg.states[t]);
        }
        for (int m = 0; m < n_envs_; ++m) batch.push_back(obs_[m]);
        stats.estimator_loss = est_->train(batch);
        for (const auto& seg : segs) {
            for (double b : seg.rewards_int) norm_.ingest(b);
        }
    }

    // Assemble the flat batch with per-stream GAE over each env segment.
    Trajectory flat;
    std::vector<double> adv_combined;
    std::vector<double> ret_ext;
    std::vector<double> ret_int;
    for (int m = 0; m < n_envs_; ++m) {
        Trajectory& seg = segs[m];
        std::vector<double> values_ext = seg.values_ext;
        values_ext.push_back(agent_.value_ext(obs_[m]));
        std::vector<double> values_int = seg.values_int;
        values_int.push_back(agent_.value_int(obs_[m]));

        std::vector<double> norm_int(seg.rewards_int.size());
        for (size_t i = 0; i < norm_int.size(); ++i) norm_int[i] = norm_.scale(seg.rewards_int[i]);

        GaeResult ext = gae(seg.rewards_ext, values_ext, seg.dones, cfg.gamma, cfg.gae_lambda);
        GaeResult intr = gae(norm_int, values_int, seg.dones, cfg.gamma, cfg.gae_lambda);

        for (size_t i = 0; i < seg.size(); ++i) {
            double a = est_ ? ext.advantages[i] + cfg.beta * intr.advantages[i]
                            : ext.advantages[i];
            adv_combined.push_back(a);
            ret_ext.push_back(ext.returns[i]);
            ret_int.push_back(intr.returns[i]);
            flat.states.push_back(std::move(seg.states[i]));
            flat.actions.push_back(seg.actions[i]);
            flat.logprobs.push_back(seg.logprobs[i]);
            flat.rewards_ext.push_back(seg.rewards_ext[i]);
            flat.rewards_int.push_back(norm_int[i]);
            flat.dones.push_back(seg.dones[i]);
            flat.values_ext.push_back(seg.values_ext[i]);
            flat.values_int.push_back(seg.values_int[i]);
        }
    }

    // Per-batch standardization of the combined advantages.
    double mean = 0.0;
    for (double a : adv_combined) mean += a;
    mean /= static_cast<double>(adv_combined.size());
    double var = 0.0;
    for (double a : adv_combined) var += (a - mean) * (a - mean);
    double sd = std::sqrt(var / static_cast<double>(adv_combined.size())) + 1e-8;
    for (double& a : adv_combined) a = (a - mean) / sd;

    stats.update = agent_.update(flat, adv_combined, ret_ext, ret_int);
    stats.mean_bonus = phase_bonus.mean();
    stats.steps = static_cast<int64_t>(n_envs_) * rollout_len_;
    return stats;
}

double PpoDriver::eval_episode(uint64_t env_seed) {
    auto env = env_factory_();
    std::vector<double> obs = env->reset(env_seed);
    double ret = 0.0;
    while (true) {
        StepResult res = env->step(agent_.greedy_action(obs));
        ret += res.reward;
        if (res.done) break;
        obs = res.obs;
    }
    return ret;
}

}  // namespace rdd
