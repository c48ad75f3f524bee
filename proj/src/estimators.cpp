#include "rdd/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdd {

namespace {

constexpr double kClamp = 1e-8;

// One Adam step on the per-dimension mean squared error ||f(x) - target||^2 / d.
double distill_step(DenseNet& net, Adam& adam, Gradients& grads, std::span<const double> x,
                    std::span<const double> target) {
    DenseNet::Tape tape;
    std::vector<double> out = net.forward_tape(x, tape);
    double inv_d = 1.0 / static_cast<double>(out.size());
    double loss = 0.0;
    std::vector<double> dLdy(out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        double diff = out[i] - target[i];
        loss += diff * diff * inv_d;
        dLdy[i] = 2.0 * diff * inv_d;
    }
    grads.zero();
    net.backward(tape, dLdy, grads);
    adam.step(net, grads);
    return loss;
}

double mean_sq_residual(std::span<const double> f, std::span<const double> ref) {
    double acc = 0.0;
    for (size_t i = 0; i < f.size(); ++i) {
        double diff = f[i] - ref[i];
        acc += diff * diff;
    }
    return acc / static_cast<double>(f.size());
}

void write_spec(std::ostream& os, const TargetSpec& spec) {
    io::write_pod<uint8_t>(os, static_cast<uint8_t>(spec.mean_mode));
    io::write_pod<double>(os, spec.mu);
    io::write_pod<double>(os, spec.sigma);
    io::write_pod<uint32_t>(os, static_cast<uint32_t>(spec.dim));
    io::write_pod<uint32_t>(os, static_cast<uint32_t>(spec.input_dim));
    io::write_pod<uint32_t>(os, static_cast<uint32_t>(spec.hidden));
    io::write_pod<uint64_t>(os, spec.seed);
}

TargetSpec read_spec(std::istream& is) {
    TargetSpec spec;
    spec.mean_mode = static_cast<MeanMode>(io::read_pod<uint8_t>(is));
    spec.mu = io::read_pod<double>(is);
    spec.sigma = io::read_pod<double>(is);
    spec.dim = static_cast<int>(io::read_pod<uint32_t>(is));
    spec.input_dim = static_cast<int>(io::read_pod<uint32_t>(is));
    spec.hidden = static_cast<int>(io::read_pod<uint32_t>(is));
    spec.seed = io::read_pod<uint64_t>(is);
    return spec;
}

void write_key(std::ostream& os, const StateKey& key) {
    io::write_pod<uint32_t>(os, static_cast<uint32_t>(key.size()));
    for (int32_t v : key) io::write_pod<int32_t>(os, v);
}

StateKey read_key(std::istream& is) {
    auto n = io::read_pod<uint32_t>(is);
    StateKey key(n);
    for (auto& v : key) v = io::read_pod<int32_t>(is);
    return key;
}

void check_batch(const std::vector<std::vector<double>>& batch, const char* who) {
    if (batch.empty()) {
        throw std::invalid_argument(std::string(who) + ": empty training batch");
    }
}

}  // namespace

StateKey quantize_state(std::span<const double> features, int bins) {
    StateKey key(features.size());
    for (size_t i = 0; i < features.size(); ++i) {
        double t = (features[i] + 1.0) * 0.5 * static_cast<double>(bins);
        auto idx = static_cast<int32_t>(std::floor(t));
        key[i] = std::clamp(idx, 0, bins - 1);
    }
    return key;
}

uint64_t key_hash(const StateKey& key) {
    uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (int32_t v : key) h = hash_u64(h, static_cast<uint64_t>(static_cast<uint32_t>(v)));
    return h;
}

// --------------------------------------------------------------------------
// RunningMeanOracle

void RunningMeanOracle::ingest(std::span<const double> state,
                               std::span<const double> sampled_target) {
    Entry& e = entries_[quantize_state(state, bins_)];
    if (e.n == 0) {
        e.mean.assign(sampled_target.begin(), sampled_target.end());
        e.n = 1;
        return;
    }
    if (e.mean.size() != sampled_target.size()) {
        throw std::invalid_argument("RunningMeanOracle: target dim changed between ingestions");
    }
    ++e.n;
    double inv_n = 1.0 / static_cast<double>(e.n);
    for (size_t i = 0; i < e.mean.size(); ++i) {
        e.mean[i] += (sampled_target[i] - e.mean[i]) * inv_n;
    }
}

uint64_t RunningMeanOracle::count(std::span<const double> state) const {
    auto it = entries_.find(quantize_state(state, bins_));
    return it == entries_.end() ? 0 : it->second.n;
}

const std::vector<double>* RunningMeanOracle::mean(std::span<const double> state) const {
    auto it = entries_.find(quantize_state(state, bins_));
    return it == entries_.end() ? nullptr : &it->second.mean;
}

// --------------------------------------------------------------------------
// RddEstimator

RddEstimator::RddEstimator(TargetSpec spec, uint64_t est_seed, EstimatorOptions opt)
    : spec_(spec),
      target_(spec),
      est_seed_(est_seed),
      sample_rng_(Rng::derive(est_seed, 3)) {
    Rng init(Rng::derive(est_seed, 1));
    predictor_ = DenseNet(spec_.input_dim, {opt.hidden, opt.hidden}, spec_.dim,
                          Activation::Relu, init);
    adam_ = Adam(predictor_, AdamConfig{.lr = opt.lr});
    grads_ = predictor_.make_gradients();
}

double RddEstimator::bonus(std::span<const double> state) const {
    std::vector<double> f = predictor_.forward(state);
    return mean_sq_residual(f, target_.mean_vec(state));
}

double RddEstimator::train(const std::vector<std::vector<double>>& batch) {
    check_batch(batch, "rdd train");
    double total = 0.0;
    for (const auto& state : batch) {
        total += train_on(state, sample_target(state));
    }
    return total / static_cast<double>(batch.size());
}

std::vector<double> RddEstimator::sample_target(std::span<const double> state) {
    return target_.sample(state, sample_rng_);
}

double RddEstimator::train_on(std::span<const double> state, std::span<const double> tar) {
    return distill_step(predictor_, adam_, grads_, state, tar);
}

double RddEstimator::z_value(std::span<const double> state) const {
    if (spec_.sigma <= 0.0) {
        throw std::invalid_argument("z_value: undefined at sigma = 0; use bonus()");
    }
    return bonus(state) / (spec_.sigma * spec_.sigma);
}

void RddEstimator::save(std::ostream& os) const {
    io::write_header(os, EstimatorTag::Rdd);
    write_spec(os, spec_);
    io::write_pod<uint64_t>(os, est_seed_);
    io::write_net(os, predictor_);
    io::write_adam(os, adam_);
    io::write_rng(os, sample_rng_);
}

std::unique_ptr<RddEstimator> RddEstimator::load(std::istream& is) {
    auto est = std::unique_ptr<RddEstimator>(new RddEstimator());
    est->spec_ = read_spec(is);
    est->target_ = TargetDistribution(est->spec_);
    est->est_seed_ = io::read_pod<uint64_t>(is);
    est->predictor_ = io::read_net(is);
    est->adam_ = io::read_adam(is, est->predictor_);
    est->sample_rng_ = io::read_rng(is);
    est->grads_ = est->predictor_.make_gradients();
    return est;
}

// --------------------------------------------------------------------------
// RndEstimator

RndEstimator::RndEstimator(int input_dim, int dim, uint64_t est_seed, EstimatorOptions opt)
    : est_seed_(est_seed) {
    spec_.mean_mode = MeanMode::Constant;
    spec_.dim = dim;
    spec_.input_dim = input_dim;
    spec_.hidden = opt.hidden;
    Rng target_init(Rng::derive(est_seed, 2));
    target_net_.emplace(input_dim, std::vector<int>{opt.hidden, opt.hidden}, dim,
                        Activation::Relu, target_init);
    Rng init(Rng::derive(est_seed, 1));
    predictor_ = DenseNet(input_dim, {opt.hidden, opt.hidden}, dim, Activation::Relu, init);
    adam_ = Adam(predictor_, AdamConfig{.lr = opt.lr});
    grads_ = predictor_.make_gradients();
}

RndEstimator::RndEstimator(TargetSpec spec, uint64_t est_seed, EstimatorOptions opt)
    : spec_(spec), est_seed_(est_seed) {
    target_mean_.emplace(spec_);
    Rng init(Rng::derive(est_seed, 1));
    predictor_ = DenseNet(spec_.input_dim, {opt.hidden, opt.hidden}, spec_.dim,
                          Activation::Relu, init);
    adam_ = Adam(predictor_, AdamConfig{.lr = opt.lr});
    grads_ = predictor_.make_gradients();
}

std::vector<double> RndEstimator::target_output(std::span<const double> state) const {
    if (target_net_) return target_net_->forward(state);
    return target_mean_->mean_vec(state);
}

double RndEstimator::bonus(std::span<const double> state) const {
    std::vector<double> f = predictor_.forward(state);
    return mean_sq_residual(f, target_output(state));
}

double RndEstimator::train(const std::vector<std::vector<double>>& batch) {
    check_batch(batch, "rnd train");
    double total = 0.0;
    for (const auto& state : batch) {
        std::vector<double> tar = target_output(state);
        total += distill_step(predictor_, adam_, grads_, state, tar);
    }
    return total / static_cast<double>(batch.size());
}

void RndEstimator::save(std::ostream& os) const {
    io::write_header(os, EstimatorTag::Rnd);
    io::write_pod<uint8_t>(os, target_net_ ? 0 : 1);
    write_spec(os, spec_);
    io::write_pod<uint64_t>(os, est_seed_);
    if (target_net_) io::write_net(os, *target_net_);
    io::write_net(os, predictor_);
    io::write_adam(os, adam_);
}

std::unique_ptr<RndEstimator> RndEstimator::load(std::istream& is) {
    auto est = std::unique_ptr<RndEstimator>(new RndEstimator());
    uint8_t mode = io::read_pod<uint8_t>(is);
    est->spec_ = read_spec(is);
    est->est_seed_ = io::read_pod<uint64_t>(is);
    if (mode == 0) {
        est->target_net_ = io::read_net(is);
    } else {
        est->target_mean_.emplace(est->spec_);
    }
    est->predictor_ = io::read_net(is);
    est->adam_ = io::read_adam(is, est->predictor_);
    est->grads_ = est->predictor_.make_gradients();
    return est;
}

// --------------------------------------------------------------------------
// DRND statistics

double drnd_y_rooted(std::span<const double> f, const DrndMoments& m) {
    double acc = 0.0;
    for (size_t j = 0; j < f.size(); ++j) {
        double num = std::max(f[j] * f[j] - m.mu[j] * m.mu[j], kClamp);
        double den = std::max(m.b2[j] - m.mu[j] * m.mu[j], kClamp);
        acc += std::sqrt(num / den);
    }
    return acc / static_cast<double>(f.size());
}

double drnd_y_product(std::span<const double> f, const DrndMoments& m) {
    double acc = 0.0;
    for (size_t j = 0; j < f.size(); ++j) {
        double den = std::max(m.b2[j] - m.mu[j] * m.mu[j], kClamp);
        acc += (f[j] * f[j] - m.mu[j] * m.mu[j]) / den;
    }
    return acc / static_cast<double>(f.size());
}

double drnd_count_tracker(std::span<const double> f, const DrndMoments& m) {
    double acc = 0.0;
    for (size_t j = 0; j < f.size(); ++j) {
        double den = std::max(m.b2[j] - m.mu[j] * m.mu[j], kClamp);
        double diff = f[j] - m.mu[j];
        acc += diff * diff / den;
    }
    return acc / static_cast<double>(f.size());
}

// --------------------------------------------------------------------------
// DrndEstimator

DrndEstimator::DrndEstimator(TargetSpec spec, int n_targets, uint64_t est_seed, DrndBank bank,
                             EstimatorOptions opt)
    : spec_(spec), n_targets_(n_targets), est_seed_(est_seed), bank_(bank), key_bins_(opt.key_bins) {
    if (n_targets < 2) {
        throw std::invalid_argument("drnd: need at least 2 target networks, got " +
                                    std::to_string(n_targets));
    }
    if (bank_ == DrndBank::Nets) {
        target_nets_.reserve(n_targets_);
        for (int i = 0; i < n_targets_; ++i) {
            Rng init(Rng::derive(spec_.seed, 100 + static_cast<uint64_t>(i)));
            target_nets_.emplace_back(spec_.input_dim, std::vector<int>{spec_.hidden, spec_.hidden},
                                      spec_.dim, Activation::Relu, init);
        }
    } else {
        gaussian_mean_.emplace(spec_);
    }
    Rng init(Rng::derive(est_seed, 1));
    predictor_ = DenseNet(spec_.input_dim, {opt.hidden, opt.hidden}, spec_.dim,
                          Activation::Relu, init);
    adam_ = Adam(predictor_, AdamConfig{.lr = opt.lr});
    grads_ = predictor_.make_gradients();
}

std::vector<double> DrndEstimator::target_output(int index, std::span<const double> state) const {
    if (bank_ == DrndBank::Nets) return target_nets_[index].forward(state);
    // Per-(target, state) draw, fixed forever: the bank is frozen even though
    // outputs are materialized lazily.
    StateKey key = quantize_state(state, key_bins_);
    uint64_t bank_seed = Rng::derive(spec_.seed, 5);
    Rng draw(hash_u64(hash_u64(bank_seed, key_hash(key)), static_cast<uint64_t>(index)));
    double m = gaussian_mean_->mean_scalar(state);
    std::vector<double> out(spec_.dim, m);
    if (spec_.sigma > 0.0) {
        for (double& v : out) v += spec_.sigma * draw.gaussian();
    }
    return out;
}

const DrndMoments& DrndEstimator::moments(std::span<const double> state) const {
    StateKey key = quantize_state(state, key_bins_);
    auto it = moment_cache_.find(key);
    if (it != moment_cache_.end()) return it->second;

    DrndMoments m;
    m.mu.assign(spec_.dim, 0.0);
    m.b2.assign(spec_.dim, 0.0);
    for (int i = 0; i < n_targets_; ++i) {
        std::vector<double> out = target_output(i, state);
        for (int j = 0; j < spec_.dim; ++j) {
            m.mu[j] += out[j];
            m.b2[j] += out[j] * out[j];
        }
    }
    double inv_n = 1.0 / static_cast<double>(n_targets_);
    for (int j = 0; j < spec_.dim; ++j) {
        m.mu[j] *= inv_n;
        m.b2[j] *= inv_n;
    }
    return moment_cache_.emplace(std::move(key), std::move(m)).first->second;
}

int DrndEstimator::next_assignment(std::span<const double> state) {
    StateKey key = quantize_state(state, key_bins_);
    uint64_t k = presentations_[key]++;
    uint64_t assign_seed = Rng::derive(est_seed_, 4) ^ key_hash(key);
    return static_cast<int>(hash_u64(assign_seed, k) % static_cast<uint64_t>(n_targets_));
}

double DrndEstimator::bonus(std::span<const double> state) const {
    std::vector<double> f = predictor_.forward(state);
    return drnd_y_rooted(f, moments(state));
}

double DrndEstimator::y_product(std::span<const double> state) const {
    std::vector<double> f = predictor_.forward(state);
    return drnd_y_product(f, moments(state));
}

double DrndEstimator::count_tracker(std::span<const double> state) const {
    std::vector<double> f = predictor_.forward(state);
    return drnd_count_tracker(f, moments(state));
}

double DrndEstimator::train(const std::vector<std::vector<double>>& batch) {
    check_batch(batch, "drnd train");
    double total = 0.0;
    for (const auto& state : batch) {
        std::vector<double> tar = target_output(next_assignment(state), state);
        total += distill_step(predictor_, adam_, grads_, state, tar);
    }
    return total / static_cast<double>(batch.size());
}

double DrndEstimator::train_on(std::span<const double> state, std::span<const double> tar) {
    return distill_step(predictor_, adam_, grads_, state, tar);
}

void DrndEstimator::save(std::ostream& os) const {
    io::write_header(os, EstimatorTag::Drnd);
    write_spec(os, spec_);
    io::write_pod<uint32_t>(os, static_cast<uint32_t>(n_targets_));
    io::write_pod<uint8_t>(os, static_cast<uint8_t>(bank_));
    io::write_pod<uint64_t>(os, est_seed_);
    io::write_pod<uint32_t>(os, static_cast<uint32_t>(key_bins_));
    io::write_net(os, predictor_);
    io::write_adam(os, adam_);
    io::write_pod<uint64_t>(os, presentations_.size());
    for (const auto& [key, n] : presentations_) {
        write_key(os, key);
        io::write_pod<uint64_t>(os, n);
    }
}

std::unique_ptr<DrndEstimator> DrndEstimator::load(std::istream& is) {
    auto est = std::unique_ptr<DrndEstimator>(new DrndEstimator());
    est->spec_ = read_spec(is);
    est->n_targets_ = static_cast<int>(io::read_pod<uint32_t>(is));
    est->bank_ = static_cast<DrndBank>(io::read_pod<uint8_t>(is));
    est->est_seed_ = io::read_pod<uint64_t>(is);
    est->key_bins_ = static_cast<int>(io::read_pod<uint32_t>(is));
    if (est->bank_ == DrndBank::Nets) {
        est->target_nets_.reserve(est->n_targets_);
        for (int i = 0; i < est->n_targets_; ++i) {
            Rng init(Rng::derive(est->spec_.seed, 100 + static_cast<uint64_t>(i)));
            est->target_nets_.emplace_back(est->spec_.input_dim,
                                           std::vector<int>{est->spec_.hidden, est->spec_.hidden},
                                           est->spec_.dim, Activation::Relu, init);
        }
    } else {
        est->gaussian_mean_.emplace(est->spec_);
    }
    est->predictor_ = io::read_net(is);
    est->adam_ = io::read_adam(is, est->predictor_);
    est->grads_ = est->predictor_.make_gradients();
    auto n_entries = io::read_pod<uint64_t>(is);
    for (uint64_t i = 0; i < n_entries; ++i) {
        StateKey key = read_key(is);
        est->presentations_[std::move(key)] = io::read_pod<uint64_t>(is);
    }
    return est;
}

// --------------------------------------------------------------------------
// CountEstimator

double CountEstimator::bonus(std::span<const double> state) const {
    auto it = counts_.find(quantize_state(state, bins_));
    if (it == counts_.end() || it->second == 0) return 1.0;
    double n = static_cast<double>(it->second);
    return sqrt_mode_ ? 1.0 / std::sqrt(n) : 1.0 / n;
}

double CountEstimator::train(const std::vector<std::vector<double>>& batch) {
    check_batch(batch, "count train");
    for (const auto& state : batch) {
        ++counts_[quantize_state(state, bins_)];
    }
    return 0.0;
}

uint64_t CountEstimator::count(std::span<const double> state) const {
    auto it = counts_.find(quantize_state(state, bins_));
    return it == counts_.end() ? 0 : it->second;
}

void CountEstimator::save(std::ostream& os) const {
    io::write_header(os, EstimatorTag::Count);
    io::write_pod<uint32_t>(os, static_cast<uint32_t>(bins_));
    io::write_pod<uint8_t>(os, sqrt_mode_ ? 1 : 0);
    io::write_pod<uint64_t>(os, counts_.size());
    for (const auto& [key, n] : counts_) {
        write_key(os, key);
        io::write_pod<uint64_t>(os, n);
    }
}

std::unique_ptr<CountEstimator> CountEstimator::load(std::istream& is) {
    auto bins = static_cast<int>(io::read_pod<uint32_t>(is));
    bool sqrt_mode = io::read_pod<uint8_t>(is) != 0;
    auto est = std::make_unique<CountEstimator>(bins, sqrt_mode);
    auto n_entries = io::read_pod<uint64_t>(is);
    for (uint64_t i = 0; i < n_entries; ++i) {
        StateKey key = read_key(is);
        est->counts_[std::move(key)] = io::read_pod<uint64_t>(is);
    }
    return est;
}

std::unique_ptr<BonusEstimator> load_estimator(std::istream& is) {
    switch (io::read_header(is)) {
        case EstimatorTag::Rdd: return RddEstimator::load(is);
        case EstimatorTag::Rnd: return RndEstimator::load(is);
        case EstimatorTag::Drnd: return DrndEstimator::load(is);
        case EstimatorTag::Count: return CountEstimator::load(is);
    }
    throw std::runtime_error("snapshot: unknown estimator tag");
}

}  // namespace rdd
