#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "gridmarl/config.hpp"
#include "gridmarl/dqn.hpp"
#include "gridmarl/grid.hpp"
#include "gridmarl/profiles.hpp"
#include "gridmarl/prosumer.hpp"

namespace gridmarl {

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Concrete per-prosumer parameters, either drawn from the config ranges
// through the seeded setup stream or taken from explicit overrides.
struct ProsumerSetup {
    BatterySpec battery;
    double pv_peak_kw = 0.0;
    double consumption_peak_kw = 0.0;
    double p_inject_max_kw = 0.0;
};

struct ScenarioSetup {
    std::vector<ProsumerSetup> prosumers;
    std::vector<double> consumer_peaks_kw;
};

ScenarioSetup build_setup(const ScenarioConfig& config);

// Everything the agents can observe plus the battery states being evolved.
struct WorldState {
    int slot_index = 0;
    double announced_buy_price = 0.0;
    std::vector<ProsumerState> prosumers;
    std::vector<DayProfile> prosumer_consumption;
    std::vector<DayProfile> prosumer_pv;
    std::vector<DayProfile> consumer_load;
    std::vector<double> last_generator_costs_usd; // per-unit cost of the settled slot
    std::vector<double> last_prosumer_costs_usd;  // per-prosumer injection payments
    double last_demand_kw = 0.0;
};

// Observation the price-setting agent acts on: previous slot's generation
// costs, injection payments and demand (it moves first, so slot-t outcomes do
// not exist yet). Oracle mode swaps the lagged demand for the current slot's
// consumer load.
std::vector<double> spa_observation(const WorldState& world, SpaObservationMode mode);

// Local observation for prosumer j: consumption, normalized SoC, PV and the
// announced buy price.
std::vector<double> pa_observation(const WorldState& world, int j);

struct SlotRecord {
    int day = 0;
    int slot = 0;
    double buy_price = 0.0;
    double sell_price = 0.0;
    double demand_kw = 0.0;         // billed demand: consumer load plus prosumer draws
    double consumer_load_kw = 0.0;
    std::vector<double> p_pv_kw;
    std::vector<double> p_c_kw;
    std::vector<double> realized_p_b_kw;
    std::vector<double> p_h_kw;
    std::vector<double> pa_reward_usd;
    std::vector<double> soc_kwh;
    DispatchResult dispatch;
    double spa_reward_usd = 0.0;
    double balance_residual_kw = 0.0; // supply minus demand bookkeeping error
    double money_residual_usd = 0.0;  // settlement conservation error
};

struct EpisodeRecord {
    int episode_index = 0;
    std::vector<SlotRecord> slots;
    double spa_reward_total_usd = 0.0;
    std::vector<double> pa_reward_totals_usd;
    double reserve_energy_total_kwh = 0.0;

    void add(const SlotRecord& r);
};

struct AgentSet {
    std::unique_ptr<DqnAgent> spa;
    std::vector<std::unique_ptr<DqnAgent>> pas;
};

// Profile noise streams are disjoint between training and evaluation so a
// baseline and a trained policy always settle the same evaluation days.
inline constexpr int kPhaseTrain = 0;
inline constexpr int kPhaseEval = 1;

// Fresh learners sized for the scenario (observation dims depend on counts).
AgentSet make_agents(const ScenarioConfig& config);

// Orchestrates the per-slot timeline: price announcement, prosumer commands,
// battery physics, settlement, reward bookkeeping and (optionally) learning.
class Simulation {
public:
    // Scripted buy prices override the price policy when provided; used by
    // the loss sweep and the rigged training tests.
    Simulation(const ScenarioConfig& config, const ScenarioSetup& setup,
               const std::vector<double>* scripted_buy_prices = nullptr);

    // One 24-hour episode. Agents may be null in conventional mode; in
    // learning runs every learner takes at most one training step per slot.
    // `phase` selects the profile noise stream (training vs evaluation).
    EpisodeRecord run_episode(AgentSet* agents, int episode_index, double eps, bool train,
                              int phase, Rng& rng);

    SlotRecord run_slot(AgentSet* agents, double eps, bool train, Rng& rng);

    struct TrainingStats {
        double spa_loss_sum = 0.0;
        int spa_loss_n = 0;
        std::vector<double> pa_loss_sum;
        std::vector<int> pa_loss_n;
    };

    const WorldState& world() const { return world_; }
    const TrainingStats& training_stats() const { return stats_; }
    void reset_soc_to_initial();

private:
    void regenerate_profiles(int episode_index, int phase);
    void complete_pending(AgentSet* agents, bool terminal);

    const ScenarioConfig& config_;
    const ScenarioSetup& setup_;
    const std::vector<double>* scripted_buy_prices_ = nullptr;
    WorldState world_;
    int day_counter_ = 0;
    TrainingStats stats_;

    struct Pending {
        std::vector<double> state;
        int action = 0;
        double reward = 0.0;
        bool valid = false;
    };
    Pending spa_pending_;
    std::vector<Pending> pa_pending_;
};

struct TrainResult {
    AgentSet agents;
    std::vector<double> spa_episode_returns;
    std::vector<std::vector<double>> pa_episode_returns; // [prosumer][episode]
    std::vector<double> spa_episode_loss;
    std::vector<std::vector<double>> pa_episode_loss;
    std::vector<double> epsilon_by_episode;
};

using CheckpointSink = std::function<void(int episode, const AgentSet& agents)>;

// Trains fresh agents for config.episodes with the linear epsilon schedule.
TrainResult train(const ScenarioConfig& config, const ScenarioSetup& setup,
                  const CheckpointSink& checkpoint_sink = nullptr);

// Greedy (eps = 0) evaluation over n_days fresh days; no learning, identical
// profile streams for any policy under the same config and seed.
std::vector<EpisodeRecord> evaluate(const ScenarioConfig& config, const ScenarioSetup& setup,
                                    AgentSet* agents, int n_days);

} // namespace gridmarl
