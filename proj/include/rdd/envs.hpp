#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rdd/rng.hpp"

namespace rdd {

struct StepResult {
    std::vector<double> obs;
    double reward = 0.0;
    bool done = false;
};

enum class ObsMode : uint8_t { Compact = 0, OneHot = 1 };

// Sparse-reward desk-scale environments. Value-like, single-threaded; all
// transitions are pure functions of (state, action, rng draw).
class Env {
public:
    virtual ~Env() = default;

    virtual std::vector<double> reset(uint64_t seed) = 0;
    // Throws std::invalid_argument on an action outside the discrete set.
    virtual StepResult step(int action) = 0;

    virtual int obs_dim() const = 0;
    virtual int n_actions() const = 0;
    virtual int horizon() const = 0;
    // Tabular index of the current state; -1 for continuous state spaces.
    virtual int state_index() const { return -1; }
    virtual int n_states() const { return -1; }
    virtual std::string name() const = 0;
};

// One-dimensional corridor: start at 0, reward 1 exactly at position L-1.
class ChainEnv : public Env {
public:
    explicit ChainEnv(int length = 40, ObsMode mode = ObsMode::OneHot);

    std::vector<double> reset(uint64_t seed) override;
    StepResult step(int action) override;

    int obs_dim() const override;
    int n_actions() const override { return 2; }
    int horizon() const override { return 2 * length_; }
    int state_index() const override { return position_; }
    int n_states() const override { return length_; }
    std::string name() const override { return "chain"; }

    int position() const { return position_; }

private:
    std::vector<double> observe() const;

    int length_;
    ObsMode mode_;
    int position_ = 0;
    int steps_ = 0;
};

// Four-way gridworld with optional walls; reward 1 only at the far corner.
class GridEnv : public Env {
public:
    GridEnv(int width = 21, int height = 21, ObsMode mode = ObsMode::Compact,
            std::set<std::pair<int, int>> walls = {});

    std::vector<double> reset(uint64_t seed) override;
    StepResult step(int action) override;

    int obs_dim() const override;
    int n_actions() const override { return 4; }
    int horizon() const override { return 4 * (width_ + height_); }
    int state_index() const override { return y_ * width_ + x_; }
    int n_states() const override { return width_ * height_; }
    std::string name() const override { return "grid"; }

    std::pair<int, int> agent_cell() const { return {x_, y_}; }

private:
    std::vector<double> observe() const;

    int width_;
    int height_;
    ObsMode mode_;
    std::set<std::pair<int, int>> walls_;
    int x_ = 0;
    int y_ = 0;
    int steps_ = 0;
};

// Classic underpowered-car hill climb with discrete actions {0,1,2} and sparse
// success reward at position >= 0.5.
class MountainCarEnv : public Env {
public:
    static constexpr double kMinPos = -1.2;
    static constexpr double kMaxPos = 0.6;
    static constexpr double kMaxVel = 0.07;
    static constexpr double kGoalPos = 0.5;

    MountainCarEnv() = default;

    std::vector<double> reset(uint64_t seed) override;
    StepResult step(int action) override;

    int obs_dim() const override { return 2; }
    int n_actions() const override { return 3; }
    int horizon() const override { return 200; }
    std::string name() const override { return "mountaincar"; }

    double position() const { return position_; }
    double velocity() const { return velocity_; }
    void set_state(double position, double velocity);

private:
    std::vector<double> observe() const;

    double position_ = -0.5;
    double velocity_ = 0.0;
    int steps_ = 0;
    uint64_t reset_count_ = 0;
    uint64_t seed_ = 0;
};

std::unique_ptr<Env> make_env(const std::string& name, ObsMode mode, int chain_length = 40,
                              int grid_w = 21, int grid_h = 21);

// Per-window normalized histograms of a position history. Windows partition
// the history into consecutive `window` samples (last window may be shorter);
// each row sums to 1. Throws on an empty history or window <= 0.
std::vector<std::vector<double>> xpos_density(const std::vector<double>& positions, int bins,
                                              int window, double lo = MountainCarEnv::kMinPos,
                                              double hi = MountainCarEnv::kMaxPos);

}  // namespace rdd
