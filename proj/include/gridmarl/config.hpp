#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridmarl/grid.hpp"

namespace gridmarl {

enum class RunMode { AgentBased, Conventional };
enum class SpaObservationMode { Lagged, Oracle };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BatteryConfig {
    double soc_min_frac = 0.1;
    double soc_max_frac = 0.9;
    double p_charge_max_kw = 2.0;
    double p_discharge_max_kw = -2.5;
    std::optional<double> capacity_kwh;          // fixed value, used by sweeps
    std::array<double, 2> capacity_range_kwh{8.0, 15.0};
    std::optional<double> initial_soc_kwh;
    std::array<double, 2> initial_soc_range_kwh{1.0, 4.0};
};

// Explicit per-prosumer parameters; when present, replaces the random draws.
struct ProsumerOverride {
    double pv_peak_kw = 0.0;
    double consumption_peak_kw = 0.0;
    double capacity_kwh = 0.0;
    double initial_soc_kwh = 0.0;
};

struct ProsumerConfig {
    std::array<double, 2> pv_peak_range_kw{2.0, 6.0};
    std::array<double, 2> consumption_peak_range_kw{2.0, 4.0};
    double p_inject_max_kw = 10.0;
    std::vector<ProsumerOverride> explicit_prosumers;
};

struct ConsumerConfig {
    std::array<double, 2> peak_range_kw{28.0, 36.0};
    std::vector<double> explicit_peaks_kw;
};

struct ProfilesConfig {
    double noise_frac = 0.1;
    bool fixed = false; // true reuses the episode-0 noise draw every day
};

struct TrainingConfig {
    std::vector<int> hidden_spa{1000};
    std::vector<int> hidden_pa{1000, 1000};
    double learning_rate = 1e-3;
    double gamma = 0.95;
    double tau = 1e-5;
    int batch_size = 64;
    std::size_t replay_capacity = 100000;
    std::size_t warmup_transitions = 1000;
    // The price agent can be held back longer so prosumers first learn their
    // price response against exploratory prices. Defaults to warmup.
    std::optional<std::size_t> spa_warmup_transitions;
    // Prosumer agents may keep a shorter replay so they track the evolving
    // price policy instead of stale exploration data. Defaults to
    // replay_capacity.
    std::optional<std::size_t> pa_replay_capacity;
    double eps_start = 1.0;
    double eps_end = 0.01;
    double eps_decay_frac = 0.8; // share of the episode budget spent decaying
    int checkpoint_every = 0;    // episodes; 0 = final checkpoint only
};

// Full experiment description. Defaults reproduce the small-scale scenario
// with 5 prosumers and one aggregate consumer.
struct ScenarioConfig {
    int n_prosumers = 5;
    int n_consumers = 1;
    RunMode mode = RunMode::AgentBased;
    int episodes = 10000;
    std::uint64_t master_seed = 1;
    double dt_hours = 0.25;
    bool reset_soc = false; // true restores the initial SoC every episode
    bool terminal_last_slot = true;
    SpaObservationMode spa_observation = SpaObservationMode::Lagged;
    int eval_days = 30;

    std::vector<GeneratorSpec> generators;
    PriceSchedule prices;
    BatteryConfig battery;
    ProsumerConfig prosumers;
    ConsumerConfig consumers;
    ProfilesConfig profiles;
    TrainingConfig training;

    ScenarioConfig();
    void validate() const;
};

// Reads and validates a config JSON file. Unknown fields are rejected with
// the offending name; an empty file yields the default scenario.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& json_text);

// Canonical JSON form (keys sorted) used for manifests and hashing.
std::string config_to_json(const ScenarioConfig& config);

// FNV-1a over the canonical form; stable across field reordering in the
// source file.
std::uint64_t config_hash(const ScenarioConfig& config);

const char* to_string(RunMode mode);
const char* to_string(SpaObservationMode mode);

} // namespace gridmarl
