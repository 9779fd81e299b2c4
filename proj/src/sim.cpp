#include "gridmarl/sim.hpp"

#include <algorithm>
#include <cmath>

namespace gridmarl {

namespace {

// Observation scaling keeps tanh inputs O(1): prices / 0.1 $/kWh, grid-level
// powers / 100 kW, slot costs / 10 $, SoC / capacity. Household powers are
// 0..6 kW, so the prosumer observation scales them by 10 instead of 100 to
// keep them visible next to the price and SoC features.
constexpr double kPriceNorm = 0.1;
constexpr double kPowerNorm = 100.0;
constexpr double kHouseholdPowerNorm = 10.0;
constexpr double kCostNorm = 10.0;

constexpr double kBalanceTol = 1e-9; // kW
constexpr double kMoneyTol = 1e-9;   // $

// Seed-stream tags; fixed so experiments replay bit-identically.
constexpr std::uint64_t kTagSetup = 1;
constexpr std::uint64_t kTagAgentInit = 2;
constexpr std::uint64_t kTagSimRng = 3;
constexpr std::uint64_t kTagProfile = 4;

constexpr std::uint64_t kEntityProsumerBase = 100000;
constexpr std::uint64_t kEntityConsumerBase = 200000;

double consumer_load_at(const WorldState& world, int slot) {
    double total = 0.0;
    for (const auto& p : world.consumer_load) total += p[slot];
    return total;
}

} // namespace

ScenarioSetup build_setup(const ScenarioConfig& config) {
    config.validate();
    ScenarioSetup setup;
    Rng rng(derive_seed(config.master_seed, kTagSetup));

    for (int j = 0; j < config.n_prosumers; ++j) {
        ProsumerSetup p;
        if (!config.prosumers.explicit_prosumers.empty()) {
            const auto& o = config.prosumers.explicit_prosumers[static_cast<std::size_t>(j)];
            p.pv_peak_kw = o.pv_peak_kw;
            p.consumption_peak_kw = o.consumption_peak_kw;
            p.battery.capacity_kwh = o.capacity_kwh;
            p.battery.soc_init_kwh = o.initial_soc_kwh;
        } else {
            p.pv_peak_kw = rng.uniform(config.prosumers.pv_peak_range_kw[0],
                                       config.prosumers.pv_peak_range_kw[1]);
            p.consumption_peak_kw = rng.uniform(config.prosumers.consumption_peak_range_kw[0],
                                                config.prosumers.consumption_peak_range_kw[1]);
            p.battery.capacity_kwh = config.battery.capacity_kwh
                                         ? *config.battery.capacity_kwh
                                         : rng.uniform(config.battery.capacity_range_kwh[0],
                                                       config.battery.capacity_range_kwh[1]);
            p.battery.soc_init_kwh = config.battery.initial_soc_kwh
                                         ? *config.battery.initial_soc_kwh
                                         : rng.uniform(config.battery.initial_soc_range_kwh[0],
                                                       config.battery.initial_soc_range_kwh[1]);
        }
        p.battery.soc_min_frac = config.battery.soc_min_frac;
        p.battery.soc_max_frac = config.battery.soc_max_frac;
        p.battery.p_charge_max_kw = config.battery.p_charge_max_kw;
        p.battery.p_discharge_max_kw = config.battery.p_discharge_max_kw;
        // Configured ranges may exceed a small battery's SoC band (sweeps).
        p.battery.soc_init_kwh = std::clamp(p.battery.soc_init_kwh, p.battery.soc_min_kwh(),
                                            p.battery.soc_max_kwh());
        p.battery.validate();
        p.p_inject_max_kw = config.prosumers.p_inject_max_kw;
        setup.prosumers.push_back(p);
    }

    for (int k = 0; k < config.n_consumers; ++k) {
        if (!config.consumers.explicit_peaks_kw.empty())
            setup.consumer_peaks_kw.push_back(
                config.consumers.explicit_peaks_kw[static_cast<std::size_t>(k)]);
        else
            setup.consumer_peaks_kw.push_back(
                rng.uniform(config.consumers.peak_range_kw[0], config.consumers.peak_range_kw[1]));
    }
    return setup;
}

std::vector<double> spa_observation(const WorldState& world, SpaObservationMode mode) {
    std::vector<double> obs;
    obs.reserve(world.last_generator_costs_usd.size() + world.last_prosumer_costs_usd.size() + 1);
    for (double c : world.last_generator_costs_usd) obs.push_back(c / kCostNorm);
    for (double c : world.last_prosumer_costs_usd) obs.push_back(c / kCostNorm);
    if (mode == SpaObservationMode::Oracle)
        obs.push_back(consumer_load_at(world, world.slot_index) / kPowerNorm);
    else
        obs.push_back(world.last_demand_kw / kPowerNorm);
    return obs;
}

std::vector<double> pa_observation(const WorldState& world, int j) {
    const auto& state = world.prosumers[static_cast<std::size_t>(j)];
    const int slot = world.slot_index;
    return {world.prosumer_consumption[static_cast<std::size_t>(j)][slot] / kHouseholdPowerNorm,
            state.soc_kwh / state.spec.capacity_kwh,
            world.prosumer_pv[static_cast<std::size_t>(j)][slot] / kHouseholdPowerNorm,
            world.announced_buy_price / kPriceNorm};
}

void EpisodeRecord::add(const SlotRecord& r) {
    spa_reward_total_usd += r.spa_reward_usd;
    if (pa_reward_totals_usd.size() != r.pa_reward_usd.size())
        pa_reward_totals_usd.assign(r.pa_reward_usd.size(), 0.0);
    for (std::size_t j = 0; j < r.pa_reward_usd.size(); ++j)
        pa_reward_totals_usd[j] += r.pa_reward_usd[j];
    reserve_energy_total_kwh += r.dispatch.reserve_energy_kwh;
    slots.push_back(r);
}

AgentSet make_agents(const ScenarioConfig& config) {
    AgentSet agents;
    const int spa_inputs =
        static_cast<int>(config.generators.size()) + config.n_prosumers + 1;
    const int spa_actions = static_cast<int>(config.prices.buy_levels.size());
    const TrainingConfig& t = config.training;

    Rng spa_rng(derive_seed(config.master_seed, kTagAgentInit, 0));
    agents.spa = std::make_unique<DqnAgent>(spa_inputs, t.hidden_spa, spa_actions, t.gamma,
                                            t.tau, t.learning_rate, t.replay_capacity,
                                            t.batch_size, spa_rng);
    const std::size_t pa_capacity = t.pa_replay_capacity.value_or(t.replay_capacity);
    for (int j = 0; j < config.n_prosumers; ++j) {
        Rng pa_rng(derive_seed(config.master_seed, kTagAgentInit, 1 + static_cast<std::uint64_t>(j)));
        agents.pas.push_back(std::make_unique<DqnAgent>(
            4, t.hidden_pa, kBatteryCommandCount, t.gamma, t.tau, t.learning_rate,
            pa_capacity, t.batch_size, pa_rng));
    }
    return agents;
}

Simulation::Simulation(const ScenarioConfig& config, const ScenarioSetup& setup,
                       const std::vector<double>* scripted_buy_prices)
    : config_(config), setup_(setup), scripted_buy_prices_(scripted_buy_prices) {
    if (static_cast<int>(setup.prosumers.size()) != config.n_prosumers)
        throw SimulationError("setup prosumer count does not match the config");
    if (scripted_buy_prices_ &&
        static_cast<int>(scripted_buy_prices_->size()) != kSlotsPerDay)
        throw SimulationError("scripted buy prices must hold 96 slots");

    for (const auto& ps : setup.prosumers) {
        ProsumerState s;
        s.soc_kwh = ps.battery.soc_init_kwh;
        s.spec = ps.battery;
        s.pv_max_kw = ps.pv_peak_kw;
        s.p_inject_max_kw = ps.p_inject_max_kw;
        world_.prosumers.push_back(s);
    }
    world_.last_generator_costs_usd.assign(config.generators.size(), 0.0);
    world_.last_prosumer_costs_usd.assign(static_cast<std::size_t>(config.n_prosumers), 0.0);
    world_.announced_buy_price = config.prices.conventional_buy;
    pa_pending_.resize(static_cast<std::size_t>(config.n_prosumers));
    regenerate_profiles(0, kPhaseTrain);
}

void Simulation::reset_soc_to_initial() {
    for (std::size_t j = 0; j < world_.prosumers.size(); ++j)
        world_.prosumers[j].soc_kwh = setup_.prosumers[j].battery.soc_init_kwh;
}

void Simulation::regenerate_profiles(int episode_index, int phase) {
    const int episode_eff = config_.profiles.fixed ? 0 : episode_index;
    const std::uint64_t episode_tag =
        static_cast<std::uint64_t>(episode_eff) * 2 + static_cast<std::uint64_t>(phase);

    world_.prosumer_consumption.clear();
    world_.prosumer_pv.clear();
    world_.consumer_load.clear();
    for (int j = 0; j < config_.n_prosumers; ++j) {
        const auto& ps = setup_.prosumers[static_cast<std::size_t>(j)];
        ProfileSpec cons;
        cons.kind = ProfileKind::Consumption;
        cons.peak_kw = ps.consumption_peak_kw;
        cons.noise_frac = config_.profiles.noise_frac;
        cons.stream_id = kEntityProsumerBase + 2 * static_cast<std::uint64_t>(j);
        Rng cons_rng(derive_seed(config_.master_seed, kTagProfile, cons.stream_id, episode_tag));
        world_.prosumer_consumption.push_back(synth_consumption(cons, cons_rng));

        if (ps.pv_peak_kw > 0.0) {
            Rng pv_rng(
                derive_seed(config_.master_seed, kTagProfile, cons.stream_id + 1, episode_tag));
            world_.prosumer_pv.push_back(
                synth_pv(ps.pv_peak_kw, config_.profiles.noise_frac, pv_rng));
        } else {
            world_.prosumer_pv.emplace_back(); // no panels installed
        }
    }
    for (std::size_t k = 0; k < setup_.consumer_peaks_kw.size(); ++k) {
        ProfileSpec cons;
        cons.kind = ProfileKind::Consumption;
        cons.peak_kw = setup_.consumer_peaks_kw[k];
        cons.noise_frac = config_.profiles.noise_frac;
        cons.stream_id = kEntityConsumerBase + static_cast<std::uint64_t>(k);
        Rng rng(derive_seed(config_.master_seed, kTagProfile, cons.stream_id, episode_tag));
        world_.consumer_load.push_back(synth_consumption(cons, rng));
    }
}

void Simulation::complete_pending(AgentSet* agents, bool terminal) {
    // Terminal completions: bootstrap stops, the successor state is unused.
    if (spa_pending_.valid && agents && agents->spa) {
        Transition t;
        t.state = spa_pending_.state;
        t.action = spa_pending_.action;
        t.reward = spa_pending_.reward;
        t.terminal = terminal;
        t.next_state.assign(spa_pending_.state.size(), 0.0);
        agents->spa->buffer.push(std::move(t));
    }
    spa_pending_.valid = false;
    for (std::size_t j = 0; j < pa_pending_.size(); ++j) {
        if (pa_pending_[j].valid && agents && j < agents->pas.size() && agents->pas[j]) {
            Transition t;
            t.state = pa_pending_[j].state;
            t.action = pa_pending_[j].action;
            t.reward = pa_pending_[j].reward;
            t.terminal = terminal;
            t.next_state.assign(pa_pending_[j].state.size(), 0.0);
            agents->pas[j]->buffer.push(std::move(t));
        }
        pa_pending_[j].valid = false;
    }
}

SlotRecord Simulation::run_slot(AgentSet* agents, double eps, bool train, Rng& rng) {
    const int slot = world_.slot_index;
    const double dt = config_.dt_hours;
    const int n_p = config_.n_prosumers;
    const bool learned_spa =
        config_.mode == RunMode::AgentBased && scripted_buy_prices_ == nullptr;
    const bool learned_pas = config_.mode == RunMode::AgentBased;

    if (learned_spa && (!agents || !agents->spa))
        throw SimulationError("agent-based mode requires a price-setting agent");
    if (learned_pas && (!agents || static_cast<int>(agents->pas.size()) != n_p))
        throw SimulationError("agent-based mode requires one agent per prosumer");

    // (1) Price announcement. The price agent moves first on lagged state.
    std::vector<double> spa_obs;
    int spa_action = -1;
    double buy_price;
    if (scripted_buy_prices_ != nullptr) {
        buy_price = (*scripted_buy_prices_)[static_cast<std::size_t>(slot)];
    } else if (learned_spa) {
        spa_obs = spa_observation(world_, config_.spa_observation);
        if (train && spa_pending_.valid) {
            Transition t;
            t.state = spa_pending_.state;
            t.action = spa_pending_.action;
            t.reward = spa_pending_.reward;
            t.next_state = spa_obs;
            t.terminal = false;
            agents->spa->buffer.push(std::move(t));
            spa_pending_.valid = false;
        }
        spa_action = select_action(*agents->spa, spa_obs, eps, rng);
        buy_price = config_.prices.buy_levels[static_cast<std::size_t>(spa_action)];
    } else {
        buy_price = config_.prices.conventional_buy;
    }
    world_.announced_buy_price = buy_price;

    // (2) Prosumer decisions against the announced price.
    std::vector<std::vector<double>> pa_obs(static_cast<std::size_t>(n_p));
    std::vector<BatteryCommand> commands(static_cast<std::size_t>(n_p), BatteryCommand::Hold);
    for (int j = 0; j < n_p; ++j) {
        const auto& st = world_.prosumers[static_cast<std::size_t>(j)];
        const double p_pv = world_.prosumer_pv[static_cast<std::size_t>(j)][slot];
        const double p_c = world_.prosumer_consumption[static_cast<std::size_t>(j)][slot];
        if (learned_pas) {
            pa_obs[static_cast<std::size_t>(j)] = pa_observation(world_, j);
            auto& pending = pa_pending_[static_cast<std::size_t>(j)];
            if (train && pending.valid) {
                Transition t;
                t.state = pending.state;
                t.action = pending.action;
                t.reward = pending.reward;
                t.next_state = pa_obs[static_cast<std::size_t>(j)];
                t.terminal = false;
                agents->pas[static_cast<std::size_t>(j)]->buffer.push(std::move(t));
                pending.valid = false;
            }
            const int a = select_action(*agents->pas[static_cast<std::size_t>(j)],
                                        pa_obs[static_cast<std::size_t>(j)], eps, rng);
            commands[static_cast<std::size_t>(j)] = static_cast<BatteryCommand>(a);
        } else {
            commands[static_cast<std::size_t>(j)] = conventional_action(st, p_pv, p_c);
        }
    }

    // (3)-(4) Battery physics and injections.
    SlotRecord rec;
    rec.day = day_counter_;
    rec.slot = slot;
    rec.buy_price = buy_price;
    rec.p_pv_kw.resize(static_cast<std::size_t>(n_p));
    rec.p_c_kw.resize(static_cast<std::size_t>(n_p));
    rec.realized_p_b_kw.resize(static_cast<std::size_t>(n_p));
    rec.p_h_kw.resize(static_cast<std::size_t>(n_p));
    rec.pa_reward_usd.resize(static_cast<std::size_t>(n_p));
    rec.soc_kwh.resize(static_cast<std::size_t>(n_p));

    double injections_pos = 0.0;
    double draws = 0.0;
    for (int j = 0; j < n_p; ++j) {
        auto& st = world_.prosumers[static_cast<std::size_t>(j)];
        const double p_pv = world_.prosumer_pv[static_cast<std::size_t>(j)][slot];
        const double p_c = world_.prosumer_consumption[static_cast<std::size_t>(j)][slot];
        const BatteryStepResult step =
            apply_battery_command(st, commands[static_cast<std::size_t>(j)], dt);
        st.soc_kwh = step.new_soc_kwh;
        const double p_h = net_injection(p_pv, step.realized_p_b_kw, p_c, st.p_inject_max_kw);

        rec.p_pv_kw[static_cast<std::size_t>(j)] = p_pv;
        rec.p_c_kw[static_cast<std::size_t>(j)] = p_c;
        rec.realized_p_b_kw[static_cast<std::size_t>(j)] = step.realized_p_b_kw;
        rec.p_h_kw[static_cast<std::size_t>(j)] = p_h;
        rec.soc_kwh[static_cast<std::size_t>(j)] = st.soc_kwh;
        if (p_h >= 0.0) injections_pos += p_h;
        else draws += -p_h;
    }

    // (5) Billed demand: consumer load plus prosumer draws (draws buy at the
    // sell price, so they are demand for settlement purposes).
    const double consumer_load = consumer_load_at(world_, slot);
    const double demand = consumer_load + draws;
    rec.consumer_load_kw = consumer_load;
    rec.demand_kw = demand;

    // (6) Dispatch covers demand net of positive injections.
    const double required_net = demand - injections_pos;
    rec.dispatch = dispatch(required_net, config_.generators, dt);

    // (7) Settlement.
    rec.sell_price = sell_price(slot, config_.prices);
    rec.spa_reward_usd =
        sp_slot_reward(demand, rec.p_h_kw, buy_price, rec.dispatch, rec.sell_price, dt);
    for (int j = 0; j < n_p; ++j)
        rec.pa_reward_usd[static_cast<std::size_t>(j)] = prosumer_slot_reward(
            rec.p_h_kw[static_cast<std::size_t>(j)], buy_price, rec.sell_price, dt);

    // Bookkeeping identities, recomputed from first principles every slot.
    double supply_net = 0.0;
    for (std::size_t i = 0; i < config_.generators.size(); ++i) {
        const double p = rec.dispatch.per_generator_p_kw[i];
        supply_net += p - config_.generators[i].beta * p * p;
    }
    rec.balance_residual_kw =
        supply_net + injections_pos - demand - rec.dispatch.curtailed_kw;
    double pa_sum = 0.0;
    for (double r : rec.pa_reward_usd) pa_sum += r;
    rec.money_residual_usd = rec.spa_reward_usd + pa_sum +
                             rec.dispatch.total_cost_rate * dt -
                             consumer_load * rec.sell_price * dt;
    if (std::abs(rec.balance_residual_kw) > kBalanceTol)
        throw SimulationError("power balance residual " +
                              std::to_string(rec.balance_residual_kw) + " kW at slot " +
                              std::to_string(slot));
    if (std::abs(rec.money_residual_usd) > kMoneyTol)
        throw SimulationError("money conservation residual " +
                              std::to_string(rec.money_residual_usd) + " $ at slot " +
                              std::to_string(slot));

    // (8) Transition bookkeeping and one training step per learner. The
    // successor observation only exists once the next price is announced, so
    // non-terminal transitions complete at the start of the next slot.
    if (train) {
        if (learned_spa) {
            spa_pending_.state = std::move(spa_obs);
            spa_pending_.action = spa_action;
            spa_pending_.reward = rec.spa_reward_usd;
            spa_pending_.valid = true;
        }
        if (learned_pas) {
            for (int j = 0; j < n_p; ++j) {
                auto& pending = pa_pending_[static_cast<std::size_t>(j)];
                pending.state = std::move(pa_obs[static_cast<std::size_t>(j)]);
                pending.action = static_cast<int>(commands[static_cast<std::size_t>(j)]);
                pending.reward = rec.pa_reward_usd[static_cast<std::size_t>(j)];
                pending.valid = true;
            }
        }
        if (slot == kSlotsPerDay - 1 && config_.terminal_last_slot)
            complete_pending(agents, true);

        const std::size_t batch = static_cast<std::size_t>(config_.training.batch_size);
        const std::size_t pa_ready = std::max(config_.training.warmup_transitions, batch);
        const std::size_t spa_ready = std::max(
            config_.training.spa_warmup_transitions.value_or(config_.training.warmup_transitions),
            batch);
        auto maybe_train = [&](DqnAgent& agent, std::size_t ready, double& loss_sum,
                               int& loss_n) {
            if (agent.buffer.size() < ready) return;
            if (const auto loss = train_step(agent, rng)) {
                loss_sum += *loss;
                loss_n += 1;
            }
        };
        if (learned_spa)
            maybe_train(*agents->spa, spa_ready, stats_.spa_loss_sum, stats_.spa_loss_n);
        if (learned_pas)
            for (int j = 0; j < n_p; ++j)
                maybe_train(*agents->pas[static_cast<std::size_t>(j)], pa_ready,
                            stats_.pa_loss_sum[static_cast<std::size_t>(j)],
                            stats_.pa_loss_n[static_cast<std::size_t>(j)]);
    }

    // (9) The settled slot becomes the lagged observation for the next one.
    for (std::size_t i = 0; i < config_.generators.size(); ++i)
        world_.last_generator_costs_usd[i] = rec.dispatch.per_generator_cost_rate[i] * dt;
    for (int j = 0; j < n_p; ++j)
        world_.last_prosumer_costs_usd[static_cast<std::size_t>(j)] =
            std::max(rec.p_h_kw[static_cast<std::size_t>(j)], 0.0) * buy_price * dt;
    world_.last_demand_kw = demand;

    world_.slot_index = (slot + 1) % kSlotsPerDay;
    if (world_.slot_index == 0) ++day_counter_;
    return rec;
}

EpisodeRecord Simulation::run_episode(AgentSet* agents, int episode_index, double eps,
                                      bool train, int phase, Rng& rng) {
    if (world_.slot_index != 0)
        throw SimulationError("episodes must start at slot 0");
    regenerate_profiles(episode_index, phase);
    if (config_.reset_soc) reset_soc_to_initial();

    stats_ = TrainingStats{};
    stats_.pa_loss_sum.assign(static_cast<std::size_t>(config_.n_prosumers), 0.0);
    stats_.pa_loss_n.assign(static_cast<std::size_t>(config_.n_prosumers), 0);

    EpisodeRecord record;
    record.episode_index = episode_index;
    record.pa_reward_totals_usd.assign(static_cast<std::size_t>(config_.n_prosumers), 0.0);
    for (int slot = 0; slot < kSlotsPerDay; ++slot)
        record.add(run_slot(agents, eps, train, rng));
    return record;
}

TrainResult train(const ScenarioConfig& config, const ScenarioSetup& setup,
                  const CheckpointSink& checkpoint_sink) {
    TrainResult result;
    result.agents = make_agents(config);
    result.pa_episode_returns.assign(static_cast<std::size_t>(config.n_prosumers), {});
    result.pa_episode_loss.assign(static_cast<std::size_t>(config.n_prosumers), {});

    EpsilonSchedule schedule;
    schedule.eps_start = config.training.eps_start;
    schedule.eps_end = config.training.eps_end;
    schedule.decay_horizon = std::max(
        1, static_cast<int>(config.episodes * config.training.eps_decay_frac));

    Simulation sim(config, setup);
    Rng rng(derive_seed(config.master_seed, kTagSimRng));

    for (int e = 0; e < config.episodes; ++e) {
        const double eps = config.mode == RunMode::AgentBased ? epsilon(schedule, e) : 0.0;
        const EpisodeRecord record =
            sim.run_episode(&result.agents, e, eps, true, kPhaseTrain, rng);

        result.epsilon_by_episode.push_back(eps);
        result.spa_episode_returns.push_back(record.spa_reward_total_usd);
        for (int j = 0; j < config.n_prosumers; ++j)
            result.pa_episode_returns[static_cast<std::size_t>(j)].push_back(
                record.pa_reward_totals_usd[static_cast<std::size_t>(j)]);

        const auto& stats = sim.training_stats();
        result.spa_episode_loss.push_back(
            stats.spa_loss_n > 0 ? stats.spa_loss_sum / stats.spa_loss_n : 0.0);
        for (int j = 0; j < config.n_prosumers; ++j) {
            const auto js = static_cast<std::size_t>(j);
            result.pa_episode_loss[js].push_back(
                stats.pa_loss_n[js] > 0 ? stats.pa_loss_sum[js] / stats.pa_loss_n[js] : 0.0);
        }

        if (checkpoint_sink && config.training.checkpoint_every > 0 &&
            (e + 1) % config.training.checkpoint_every == 0)
            checkpoint_sink(e, result.agents);
    }
    if (checkpoint_sink) checkpoint_sink(config.episodes - 1, result.agents);
    return result;
}

std::vector<EpisodeRecord> evaluate(const ScenarioConfig& config, const ScenarioSetup& setup,
                                    AgentSet* agents, int n_days) {
    Simulation sim(config, setup);
    Rng rng(derive_seed(config.master_seed, kTagSimRng, 1));
    std::vector<EpisodeRecord> days;
    days.reserve(static_cast<std::size_t>(n_days));
    for (int d = 0; d < n_days; ++d)
        days.push_back(sim.run_episode(agents, d, 0.0, false, kPhaseEval, rng));
    return days;
}

} // namespace gridmarl
