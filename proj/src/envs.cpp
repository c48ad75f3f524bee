#include "rdd/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdd {

namespace {

void check_action(int action, int n_actions, const char* env) {
    if (action < 0 || action >= n_actions) {
        throw std::invalid_argument(std::string(env) + ": invalid action " +
                                    std::to_string(action) + ", expected [0, " +
                                    std::to_string(n_actions) + ")");
    }
}

}  // namespace

// --------------------------------------------------------------------------
// ChainEnv

ChainEnv::ChainEnv(int length, ObsMode mode) : length_(length), mode_(mode) {
    if (length < 2) throw std::invalid_argument("chain: length must be >= 2");
}

std::vector<double> ChainEnv::reset(uint64_t /*seed*/) {
    position_ = 0;
    steps_ = 0;
    return observe();
}

StepResult ChainEnv::step(int action) {
    check_action(action, n_actions(), "chain");
    position_ = std::clamp(position_ + (action == 1 ? 1 : -1), 0, length_ - 1);
    ++steps_;
    bool at_goal = position_ == length_ - 1;
    return {observe(), at_goal ? 1.0 : 0.0, at_goal || steps_ >= horizon()};
}

int ChainEnv::obs_dim() const {
    return mode_ == ObsMode::OneHot ? length_ : 1;
}

std::vector<double> ChainEnv::observe() const {
    if (mode_ == ObsMode::OneHot) {
        std::vector<double> obs(length_, 0.0);
        obs[position_] = 1.0;
        return obs;
    }
    return {2.0 * position_ / (length_ - 1) - 1.0};
}

// --------------------------------------------------------------------------
// GridEnv

GridEnv::GridEnv(int width, int height, ObsMode mode, std::set<std::pair<int, int>> walls)
    : width_(width), height_(height), mode_(mode), walls_(std::move(walls)) {
    if (width < 2 || height < 2) throw std::invalid_argument("grid: size must be >= 2x2");
    if (walls_.count({0, 0}) || walls_.count({width - 1, height - 1})) {
        throw std::invalid_argument("grid: start and goal cells cannot be walls");
    }
}

std::vector<double> GridEnv::reset(uint64_t /*seed*/) {
    x_ = 0;
    y_ = 0;
    steps_ = 0;
    return observe();
}

StepResult GridEnv::step(int action) {
    check_action(action, n_actions(), "grid");
    static constexpr int dx[4] = {0, 0, -1, 1};  // up, down, left, right
    static constexpr int dy[4] = {-1, 1, 0, 0};
    int nx = x_ + dx[action];
    int ny = y_ + dy[action];
    bool blocked = nx < 0 || nx >= width_ || ny < 0 || ny >= height_ || walls_.count({nx, ny}) > 0;
    if (!blocked) {
        x_ = nx;
        y_ = ny;
    }
    ++steps_;
    bool at_goal = x_ == width_ - 1 && y_ == height_ - 1;
    return {observe(), at_goal ? 1.0 : 0.0, at_goal || steps_ >= horizon()};
}

int GridEnv::obs_dim() const {
    return mode_ == ObsMode::OneHot ? width_ * height_ : 2;
}

std::vector<double> GridEnv::observe() const {
    if (mode_ == ObsMode::OneHot) {
        std::vector<double> obs(static_cast<size_t>(width_) * height_, 0.0);
        obs[static_cast<size_t>(y_) * width_ + x_] = 1.0;
        return obs;
    }
    return {2.0 * x_ / (width_ - 1) - 1.0, 2.0 * y_ / (height_ - 1) - 1.0};
}

// --------------------------------------------------------------------------
// MountainCarEnv

std::vector<double> MountainCarEnv::reset(uint64_t seed) {
    if (reset_count_ == 0 || seed != seed_) {
        seed_ = seed;
        reset_count_ = 0;
    }
    Rng rng(hash_u64(seed_, reset_count_++));
    position_ = rng.uniform(-0.6, -0.4);
    velocity_ = 0.0;
    steps_ = 0;
    return observe();
}

StepResult MountainCarEnv::step(int action) {
    check_action(action, n_actions(), "mountaincar");
    velocity_ += 0.001 * (action - 1) - 0.0025 * std::cos(3.0 * position_);
    velocity_ = std::clamp(velocity_, -kMaxVel, kMaxVel);
    position_ += velocity_;
    position_ = std::clamp(position_, kMinPos, kMaxPos);
    if (position_ <= kMinPos && velocity_ < 0.0) velocity_ = 0.0;
    ++steps_;
    bool at_goal = position_ >= kGoalPos;
    return {observe(), at_goal ? 1.0 : 0.0, at_goal || steps_ >= horizon()};
}

void MountainCarEnv::set_state(double position, double velocity) {
    position_ = std::clamp(position, kMinPos, kMaxPos);
    velocity_ = std::clamp(velocity, -kMaxVel, kMaxVel);
}

std::vector<double> MountainCarEnv::observe() const {
    return {2.0 * (position_ - kMinPos) / (kMaxPos - kMinPos) - 1.0, velocity_ / kMaxVel};
}

// --------------------------------------------------------------------------

std::unique_ptr<Env> make_env(const std::string& name, ObsMode mode, int chain_length, int grid_w,
                              int grid_h) {
    if (name == "chain") return std::make_unique<ChainEnv>(chain_length, mode);
    if (name == "grid") return std::make_unique<GridEnv>(grid_w, grid_h, mode);
    if (name == "mountaincar") return std::make_unique<MountainCarEnv>();
    throw std::invalid_argument("unknown env '" + name +
                                "', valid options: chain, grid, mountaincar");
}

std::vector<std::vector<double>> xpos_density(const std::vector<double>& positions, int bins,
                                              int window, double lo, double hi) {
    if (positions.empty()) throw std::invalid_argument("xpos_density: empty position history");
    if (bins <= 0) throw std::invalid_argument("xpos_density: bins must be positive");
    if (window <= 0) throw std::invalid_argument("xpos_density: window must be positive");

    std::vector<std::vector<double>> rows;
    for (size_t start = 0; start < positions.size(); start += window) {
        size_t end = std::min(positions.size(), start + window);
        std::vector<double> row(bins, 0.0);
        for (size_t i = start; i < end; ++i) {
            double t = (positions[i] - lo) / (hi - lo);
            int b = std::clamp(static_cast<int>(std::floor(t * bins)), 0, bins - 1);
            row[b] += 1.0;
        }
        double total = static_cast<double>(end - start);
        for (double& v : row) v /= total;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace rdd
