#include "gridmarl/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace gridmarl {

void ReplayBuffer::push(Transition t) {
    if (capacity_ == 0) return;
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    std::vector<const Transition*> out;
    if (items_.empty()) return out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(&items_[rng.uniform_int(items_.size())]);
    return out;
}

double epsilon(const EpsilonSchedule& schedule, int episode_index) {
    if (episode_index < 0) throw std::domain_error("episode index must be >= 0");
    if (episode_index >= schedule.decay_horizon) return schedule.eps_end;
    const double frac = static_cast<double>(episode_index) / schedule.decay_horizon;
    return schedule.eps_start + (schedule.eps_end - schedule.eps_start) * frac;
}

DqnAgent::DqnAgent(int input_dim, const std::vector<int>& hidden, int actions, double gamma_,
                   double tau_, double learning_rate, std::size_t replay_capacity, int batch,
                   Rng& rng)
    : buffer(replay_capacity), gamma(gamma_), tau(tau_), action_count(actions),
      batch_size(batch) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::domain_error("gamma must lie in [0, 1]");
    if (!(tau > 0.0 && tau <= 1.0)) throw std::domain_error("tau must lie in (0, 1]");
    std::vector<int> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(actions);
    online = make_mlp(dims, rng);
    target = online; // start identical
    adam = make_adam(online, learning_rate);
}

namespace {

int argmax_lowest(std::span<const double> q) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(q.size()); ++i)
        if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) best = i;
    return best;
}

} // namespace

int select_action(const DqnAgent& agent, std::span<const double> state, double eps, Rng& rng) {
    if (eps > 0.0 && rng.next_double() < eps)
        return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(agent.action_count)));
    const std::vector<double> q = forward(agent.online, state);
    return argmax_lowest(q);
}

double td_target(const DqnAgent& agent, const Transition& t) {
    if (t.terminal) return t.reward;
    const std::vector<double> q = forward(agent.target, t.next_state);
    return t.reward + agent.gamma * *std::max_element(q.begin(), q.end());
}

std::optional<double> train_step(DqnAgent& agent, Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(agent.batch_size);
    if (agent.buffer.size() < n) return std::nullopt; // not enough experience yet
    const auto batch = agent.buffer.sample(n, rng);

    const int in_dim = agent.online.input_dim();
    Matrix states(agent.batch_size, in_dim);
    Matrix next_states(agent.batch_size, in_dim);
    for (int b = 0; b < agent.batch_size; ++b) {
        const Transition& t = *batch[static_cast<std::size_t>(b)];
        std::copy(t.state.begin(), t.state.end(), states.row(b));
        std::copy(t.next_state.begin(), t.next_state.end(), next_states.row(b));
    }

    // Bootstrap targets from the frozen network.
    BatchTrace target_trace;
    forward_batch(agent.target, next_states, target_trace);
    const Matrix& q_next = target_trace.activations.back();

    BatchTrace online_trace;
    forward_batch(agent.online, states, online_trace);
    const Matrix& q_online = online_trace.activations.back();

    Matrix dY(agent.batch_size, agent.action_count);
    double loss_sum = 0.0;
    const double inv_batch = 1.0 / agent.batch_size;
    for (int b = 0; b < agent.batch_size; ++b) {
        const Transition& t = *batch[static_cast<std::size_t>(b)];
        double y = t.reward;
        if (!t.terminal) {
            const double* qn = q_next.row(b);
            double best = qn[0];
            for (int a = 1; a < agent.action_count; ++a) best = std::max(best, qn[a]);
            y += agent.gamma * best;
        }
        const double err = q_online.at(b, t.action) - y;
        loss_sum += err * err;
        dY.at(b, t.action) = 2.0 * err * inv_batch;
    }
    const double mean_loss = loss_sum * inv_batch;
    if (!std::isfinite(mean_loss))
        throw TrainingError("non-finite TD loss; training halted");

    ParamGrads grads = make_grads(agent.online);
    backward_batch(agent.online, online_trace, dY, grads);
    adam_step(agent.online, grads, agent.adam);
    soft_update(agent.online, agent.target, agent.tau);
    return mean_loss;
}

void soft_update(const MultiLayerPerceptron& online, MultiLayerPerceptron& target, double tau) {
    if (online.layer_dims != target.layer_dims)
        throw std::domain_error("soft_update: network shapes differ");
    for (std::size_t l = 0; l < online.weights.size(); ++l) {
        const auto& ow = online.weights[l].data;
        auto& tw = target.weights[l].data;
        for (std::size_t i = 0; i < ow.size(); ++i) tw[i] = tau * ow[i] + (1.0 - tau) * tw[i];
        const auto& ob = online.biases[l];
        auto& tb = target.biases[l];
        for (std::size_t i = 0; i < ob.size(); ++i) tb[i] = tau * ob[i] + (1.0 - tau) * tb[i];
    }
}

void save_agent(const DqnAgent& agent, const std::string& dir, const std::string& name) {
    save_checkpoint(agent.online, agent.adam, dir + "/" + name + ".online.json");
    save_checkpoint(agent.target, dir + "/" + name + ".target.json");
    nlohmann::json meta;
    meta["gamma"] = agent.gamma;
    meta["tau"] = agent.tau;
    meta["action_count"] = agent.action_count;
    meta["batch_size"] = agent.batch_size;
    meta["replay_capacity"] = agent.buffer.capacity();
    meta["replay_size_at_save"] = agent.buffer.size();
    std::ofstream out(dir + "/" + name + ".meta.json");
    if (!out) throw std::runtime_error("cannot write agent metadata for " + name);
    out << meta.dump(2);
}

void load_agent(DqnAgent& agent, const std::string& dir, const std::string& name) {
    load_checkpoint(agent.online, agent.adam, dir + "/" + name + ".online.json");
    load_checkpoint(agent.target, dir + "/" + name + ".target.json");
    std::ifstream in(dir + "/" + name + ".meta.json");
    if (!in) throw std::runtime_error("cannot read agent metadata for " + name);
    const nlohmann::json meta = nlohmann::json::parse(in);
    agent.gamma = meta.at("gamma").get<double>();
    agent.tau = meta.at("tau").get<double>();
    agent.action_count = meta.at("action_count").get<int>();
    agent.batch_size = meta.at("batch_size").get<int>();
}

} // namespace gridmarl
