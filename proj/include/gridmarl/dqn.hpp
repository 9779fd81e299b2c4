#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridmarl/nn.hpp"
#include "gridmarl/rng.hpp"

namespace gridmarl {

struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

// Fixed-capacity FIFO ring; once full the oldest transition is overwritten.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return items_[i]; }

    // Uniform sample with replacement; empty only when nothing is stored.
    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

struct EpsilonSchedule {
    double eps_start = 1.0;
    double eps_end = 0.01;
    int decay_horizon = 1; // episodes over which the linear decay runs
};

// Linear decay from eps_start to eps_end over [0, decay_horizon], flat after.
double epsilon(const EpsilonSchedule& schedule, int episode_index);

// One independent Q-learner: online and target networks, Adam state and its
// own replay buffer. Agents never share parameters.
struct DqnAgent {
    MultiLayerPerceptron online;
    MultiLayerPerceptron target;
    AdamState adam;
    ReplayBuffer buffer;
    double gamma = 0.95;
    double tau = 1e-5;
    int action_count = 0;
    int batch_size = 64;

    DqnAgent(int input_dim, const std::vector<int>& hidden, int actions, double gamma_,
             double tau_, double learning_rate, std::size_t replay_capacity, int batch,
             Rng& rng);
};

// Epsilon-greedy over the online network; greedy ties break to the lowest
// action index. eps = 0 consumes no randomness.
int select_action(const DqnAgent& agent, std::span<const double> state, double eps, Rng& rng);

// r for terminal transitions, otherwise r + gamma * max_a Q_target(s')[a].
double td_target(const DqnAgent& agent, const Transition& t);

// Samples a minibatch, takes one Adam step on the mean TD loss, then softly
// blends the online parameters into the target. Returns the mean loss, or
// nullopt when the buffer holds fewer than batch_size transitions.
std::optional<double> train_step(DqnAgent& agent, Rng& rng);

void soft_update(const MultiLayerPerceptron& online, MultiLayerPerceptron& target, double tau);

// Agent checkpoints: <name>.online.json (with Adam state), <name>.target.json,
// <name>.meta.json. Replay contents are not persisted.
void save_agent(const DqnAgent& agent, const std::string& dir, const std::string& name);
void load_agent(DqnAgent& agent, const std::string& dir, const std::string& name);

} // namespace gridmarl
