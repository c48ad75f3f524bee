#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdd/net.hpp"
#include "rdd/rng.hpp"
#include "rdd/snapshot.hpp"
#include "rdd/target.hpp"

namespace rdd {

// ---------------------------------------------------------------------------
// State keys: discrete features map to themselves, continuous features are
// discretized on a fixed grid over [-1, 1] before keying.
// ---------------------------------------------------------------------------

using StateKey = std::vector<int32_t>;

StateKey quantize_state(std::span<const double> features, int bins);
uint64_t key_hash(const StateKey& key);

// ---------------------------------------------------------------------------
// Common estimator contract. Instances are single-threaded; bonuses are
// deterministic between train calls and non-negative.
// ---------------------------------------------------------------------------

class BonusEstimator {
public:
    virtual ~BonusEstimator() = default;

    virtual double bonus(std::span<const double> state) const = 0;

    // Estimator-specific update on a batch of state feature vectors.
    // Throws std::invalid_argument on an empty batch.
    virtual double train(const std::vector<std::vector<double>>& batch) = 0;

    virtual void save(std::ostream& os) const = 0;
    virtual std::string name() const = 0;
};

std::unique_ptr<BonusEstimator> load_estimator(std::istream& is);

struct EstimatorOptions {
    double lr = 3e-4;
    int hidden = 64;
    int key_bins = 64;
};

// ---------------------------------------------------------------------------
// Analytic optimum of the distillation loss: the per-state running mean of all
// sampled targets, tracked exactly.
// ---------------------------------------------------------------------------

class RunningMeanOracle {
public:
    explicit RunningMeanOracle(int key_bins = 64) : bins_(key_bins) {}

    void ingest(std::span<const double> state, std::span<const double> sampled_target);

    uint64_t count(std::span<const double> state) const;
    // nullptr when the state has never been ingested.
    const std::vector<double>* mean(std::span<const double> state) const;

private:
    struct Entry {
        uint64_t n = 0;
        std::vector<double> mean;
    };
    int bins_;
    std::map<StateKey, Entry> entries_;
};

// ---------------------------------------------------------------------------
// RDD: predictor distills fresh Gaussian draws around a frozen mean function;
// the bonus is the squared residual to the mean, averaged per dimension.
// ---------------------------------------------------------------------------

class RddEstimator : public BonusEstimator {
public:
    RddEstimator(TargetSpec spec, uint64_t est_seed, EstimatorOptions opt = {});

    // (1/d) ||f(s) - mu(s) 1_d||^2; uses the mean, never a fresh sample.
    double bonus(std::span<const double> state) const override;

    // Per state: one fresh target draw, one Adam step on ||f - f_tar||^2 / d.
    double train(const std::vector<std::vector<double>>& batch) override;

    // Draws the next target for `state`, advancing the sampling stream.
    std::vector<double> sample_target(std::span<const double> state);
    // One distillation step against an explicit target.
    double train_on(std::span<const double> state, std::span<const double> tar);

    // bonus / sigma^2; requires sigma > 0.
    double z_value(std::span<const double> state) const;

    void save(std::ostream& os) const override;
    std::string name() const override { return "rdd"; }

    const TargetDistribution& target() const { return target_; }
    DenseNet& predictor() { return predictor_; }
    const DenseNet& predictor() const { return predictor_; }

    static std::unique_ptr<RddEstimator> load(std::istream& is);

private:
    RddEstimator() = default;

    TargetSpec spec_;
    TargetDistribution target_{TargetSpec{}};
    uint64_t est_seed_ = 0;
    DenseNet predictor_;
    Adam adam_;
    Rng sample_rng_{0};
    Gradients grads_;
};

// ---------------------------------------------------------------------------
// RND: predictor distills a frozen deterministic target. The target is either
// a random d-output network (classic form) or the mean function of a
// TargetSpec (the sigma -> 0 limit configuration).
// ---------------------------------------------------------------------------

class RndEstimator : public BonusEstimator {
public:
    // Classic: frozen random target network input -> hidden -> hidden -> dim.
    RndEstimator(int input_dim, int dim, uint64_t est_seed, EstimatorOptions opt = {});

    // Target fixed to the mean function of `spec` (spec.sigma is ignored).
    RndEstimator(TargetSpec spec, uint64_t est_seed, EstimatorOptions opt = {});

    double bonus(std::span<const double> state) const override;
    double train(const std::vector<std::vector<double>>& batch) override;

    std::vector<double> target_output(std::span<const double> state) const;

    void save(std::ostream& os) const override;
    std::string name() const override { return "rnd"; }

    DenseNet& predictor() { return predictor_; }
    const std::optional<DenseNet>& target_net() const { return target_net_; }

    static std::unique_ptr<RndEstimator> load(std::istream& is);

private:
    RndEstimator() = default;

    TargetSpec spec_;
    uint64_t est_seed_ = 0;
    std::optional<DenseNet> target_net_;              // classic mode
    std::optional<TargetDistribution> target_mean_;   // mean-function mode
    DenseNet predictor_;
    Adam adam_;
    Gradients grads_;
};

// ---------------------------------------------------------------------------
// DRND: N frozen targets; the predictor trains on a uniformly chosen target
// per presentation. Per-state first/second moments across the targets are
// cached on first touch.
// ---------------------------------------------------------------------------

// Per-dimension statistics over DRND's target bank at one state.
struct DrndMoments {
    std::vector<double> mu;  // first moment
    std::vector<double> b2;  // second raw moment
};

// Rooted DRND statistic: mean_j sqrt(clamp(f_j^2 - mu_j^2) / clamp(b2_j - mu_j^2)),
// both sides clamped at 1e-8.
double drnd_y_rooted(std::span<const double> f, const DrndMoments& m);

// Un-rooted ratio mean_j (f_j^2 - mu_j^2) / clamp(b2_j - mu_j^2); may be negative.
double drnd_y_product(std::span<const double> f, const DrndMoments& m);

// Visitation tracker standardized by the bank's own moments:
// mean_j (f_j - mu_j)^2 / clamp(b2_j - mu_j^2). Converges to the z statistic
// as the bank grows.
double drnd_count_tracker(std::span<const double> f, const DrndMoments& m);

enum class DrndBank : uint8_t {
    Nets = 0,      // N independent random networks
    Gaussian = 1,  // per-state target outputs drawn once from N(mu(s), sigma^2)
};

class DrndEstimator : public BonusEstimator {
public:
    // Requires n_targets >= 2.
    DrndEstimator(TargetSpec spec, int n_targets, uint64_t est_seed,
                  DrndBank bank = DrndBank::Nets, EstimatorOptions opt = {});

    double bonus(std::span<const double> state) const override;  // rooted statistic
    double train(const std::vector<std::vector<double>>& batch) override;

    double y_product(std::span<const double> state) const;
    double count_tracker(std::span<const double> state) const;

    std::vector<double> target_output(int index, std::span<const double> state) const;
    const DrndMoments& moments(std::span<const double> state) const;
    int n_targets() const { return n_targets_; }

    // Index of the uniformly drawn target for the next presentation of `state`.
    int next_assignment(std::span<const double> state);
    // One distillation step against an explicit target.
    double train_on(std::span<const double> state, std::span<const double> tar);

    void save(std::ostream& os) const override;
    std::string name() const override { return "drnd"; }

    static std::unique_ptr<DrndEstimator> load(std::istream& is);

private:
    DrndEstimator() = default;

    TargetSpec spec_;
    int n_targets_ = 0;
    uint64_t est_seed_ = 0;
    DrndBank bank_ = DrndBank::Nets;
    std::vector<DenseNet> target_nets_;
    std::optional<TargetDistribution> gaussian_mean_;
    DenseNet predictor_;
    Adam adam_;
    Gradients grads_;
    int key_bins_ = 64;
    mutable std::map<StateKey, DrndMoments> moment_cache_;
    std::map<StateKey, uint64_t> presentations_;
};

// ---------------------------------------------------------------------------
// Exact count baseline: bonus = 1/n(s) (or 1/sqrt(n) in sqrt mode), 1 for
// unseen states. Training only increments counts.
// ---------------------------------------------------------------------------

class CountEstimator : public BonusEstimator {
public:
    explicit CountEstimator(int key_bins = 64, bool sqrt_mode = false)
        : bins_(key_bins), sqrt_mode_(sqrt_mode) {}

    double bonus(std::span<const double> state) const override;
    double train(const std::vector<std::vector<double>>& batch) override;

    uint64_t count(std::span<const double> state) const;

    void save(std::ostream& os) const override;
    std::string name() const override { return "count"; }

    static std::unique_ptr<CountEstimator> load(std::istream& is);

private:
    int bins_ = 64;
    bool sqrt_mode_ = false;
    std::map<StateKey, uint64_t> counts_;
};

}  // namespace rdd
