#include "gridmarl/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gridmarl {

using nlohmann::json;

ScenarioConfig::ScenarioConfig() {
    GeneratorSpec base;
    base.kind = GeneratorKind::Base;
    base.p_min_kw = 5.0;
    base.p_max_kw = 45.0;
    base.cost_a = 0.0004;
    base.cost_b = 0.03;
    base.cost_c = 0.2;
    base.beta = 0.0002;
    GeneratorSpec reserve;
    reserve.kind = GeneratorKind::Reserve;
    reserve.p_min_kw = 0.0;
    reserve.p_max_kw = 100.0;
    reserve.cost_a = 0.001;
    reserve.cost_b = 0.07;
    reserve.cost_c = 0.5;
    reserve.beta = 0.0002;
    generators = {base, reserve};

    prices.sell_before_11am = 0.05;
    prices.sell_after_11am = 0.095;
    prices.buy_levels = {0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
    prices.conventional_buy = 0.06;
}

void ScenarioConfig::validate() const {
    if (n_prosumers < 0) throw ConfigError("scenario.n_prosumers must be >= 0");
    if (n_consumers < 0) throw ConfigError("scenario.n_consumers must be >= 0");
    if (episodes < 1) throw ConfigError("scenario.episodes must be >= 1");
    if (!(dt_hours > 0.0)) throw ConfigError("scenario.dt_hours must be > 0");
    if (eval_days < 1) throw ConfigError("scenario.eval_days must be >= 1");

    if (generators.empty()) throw ConfigError("generators: at least one unit is required");
    bool has_base = false;
    for (const auto& g : generators) {
        try {
            g.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("generators: ") + e.what());
        }
        if (g.kind == GeneratorKind::Base) has_base = true;
    }
    if (!has_base) throw ConfigError("generators: at least one base unit is required");

    try {
        prices.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("prices: ") + e.what());
    }

    if (!(battery.soc_min_frac >= 0.0 && battery.soc_min_frac < battery.soc_max_frac &&
          battery.soc_max_frac <= 1.0))
        throw ConfigError("battery: soc fractions must satisfy 0 <= min < max <= 1");
    if (!(battery.p_charge_max_kw > 0.0))
        throw ConfigError("battery.p_charge_max_kw: charge rating must be > 0");
    if (!(battery.p_discharge_max_kw < 0.0))
        throw ConfigError("battery.p_discharge_max_kw: discharge rating must be < 0");
    if (battery.capacity_kwh && !(*battery.capacity_kwh > 0.0))
        throw ConfigError("battery.capacity_kwh: capacity must be > 0");
    if (!(battery.capacity_range_kwh[0] > 0.0) ||
        battery.capacity_range_kwh[0] > battery.capacity_range_kwh[1])
        throw ConfigError("battery.capacity_range_kwh: range must be positive and ordered");
    if (battery.initial_soc_kwh && !(*battery.initial_soc_kwh >= 0.0))
        throw ConfigError("battery.initial_soc_kwh: initial SoC must be >= 0");
    if (battery.initial_soc_range_kwh[0] < 0.0 ||
        battery.initial_soc_range_kwh[0] > battery.initial_soc_range_kwh[1])
        throw ConfigError("battery.initial_soc_range_kwh: range must be >= 0 and ordered");

    if (!(prosumers.pv_peak_range_kw[0] > 0.0) ||
        prosumers.pv_peak_range_kw[0] > prosumers.pv_peak_range_kw[1])
        throw ConfigError("prosumers.pv_peak_range_kw: range must be positive and ordered");
    if (!(prosumers.consumption_peak_range_kw[0] > 0.0) ||
        prosumers.consumption_peak_range_kw[0] > prosumers.consumption_peak_range_kw[1])
        throw ConfigError("prosumers.consumption_peak_range_kw: range must be positive and ordered");
    if (!(prosumers.p_inject_max_kw > 0.0))
        throw ConfigError("prosumers.p_inject_max_kw must be > 0");
    if (!prosumers.explicit_prosumers.empty() &&
        static_cast<int>(prosumers.explicit_prosumers.size()) != n_prosumers)
        throw ConfigError("prosumers.explicit: entry count must equal scenario.n_prosumers");
    for (const auto& p : prosumers.explicit_prosumers) {
        if (!(p.capacity_kwh > 0.0))
            throw ConfigError("prosumers.explicit.capacity_kwh: capacity must be > 0");
        if (p.pv_peak_kw < 0.0)
            throw ConfigError("prosumers.explicit.pv_peak_kw must be >= 0");
        if (!(p.consumption_peak_kw > 0.0))
            throw ConfigError("prosumers.explicit.consumption_peak_kw must be > 0");
    }

    if (!(consumers.peak_range_kw[0] > 0.0) ||
        consumers.peak_range_kw[0] > consumers.peak_range_kw[1])
        throw ConfigError("consumers.peak_range_kw: range must be positive and ordered");
    if (!consumers.explicit_peaks_kw.empty() &&
        static_cast<int>(consumers.explicit_peaks_kw.size()) != n_consumers)
        throw ConfigError("consumers.explicit_peaks_kw: entry count must equal scenario.n_consumers");

    if (!(profiles.noise_frac >= 0.0 && profiles.noise_frac < 0.5))
        throw ConfigError("profiles.noise_frac must lie in [0, 0.5)");

    const TrainingConfig& t = training;
    if (t.hidden_spa.empty() || t.hidden_pa.empty())
        throw ConfigError("training: hidden layer lists must be non-empty");
    for (int h : t.hidden_spa)
        if (h < 1) throw ConfigError("training.hidden_spa: layer widths must be >= 1");
    for (int h : t.hidden_pa)
        if (h < 1) throw ConfigError("training.hidden_pa: layer widths must be >= 1");
    if (!(t.learning_rate > 0.0)) throw ConfigError("training.learning_rate must be > 0");
    if (!(t.gamma >= 0.0 && t.gamma <= 1.0))
        throw ConfigError("training.gamma must lie in [0, 1]");
    if (!(t.tau > 0.0 && t.tau <= 1.0)) throw ConfigError("training.tau must lie in (0, 1]");
    if (t.batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
    if (t.replay_capacity < static_cast<std::size_t>(t.batch_size))
        throw ConfigError("training.replay_capacity must be >= batch_size");
    if (!(t.eps_start >= t.eps_end && t.eps_end > 0.0))
        throw ConfigError("training: eps_start >= eps_end > 0 required");
    if (!(t.eps_decay_frac > 0.0 && t.eps_decay_frac <= 1.0))
        throw ConfigError("training.eps_decay_frac must lie in (0, 1]");
    if (t.checkpoint_every < 0) throw ConfigError("training.checkpoint_every must be >= 0");
}

namespace {

[[noreturn]] void unknown_field(const std::string& section, const std::string& key) {
    throw ConfigError("unknown field '" + key + "' in " + section);
}

double get_number(const json& j, const std::string& section, const std::string& key) {
    if (!j.is_number()) throw ConfigError(section + "." + key + " must be a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& section, const std::string& key) {
    if (!j.is_number_integer()) throw ConfigError(section + "." + key + " must be an integer");
    return j.get<int>();
}

bool get_bool(const json& j, const std::string& section, const std::string& key) {
    if (!j.is_boolean()) throw ConfigError(section + "." + key + " must be a boolean");
    return j.get<bool>();
}

std::array<double, 2> get_range(const json& j, const std::string& section,
                                const std::string& key) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(section + "." + key + " must be a [lo, hi] pair");
    return {get_number(j[0], section, key), get_number(j[1], section, key)};
}

void parse_scenario(const json& j, ScenarioConfig& c) {
    for (const auto& [key, value] : j.items()) {
        if (key == "n_prosumers") c.n_prosumers = get_int(value, "scenario", key);
        else if (key == "n_consumers") c.n_consumers = get_int(value, "scenario", key);
        else if (key == "episodes") c.episodes = get_int(value, "scenario", key);
        else if (key == "master_seed") c.master_seed = value.get<std::uint64_t>();
        else if (key == "dt_hours") c.dt_hours = get_number(value, "scenario", key);
        else if (key == "reset_soc") c.reset_soc = get_bool(value, "scenario", key);
        else if (key == "terminal_last_slot") c.terminal_last_slot = get_bool(value, "scenario", key);
        else if (key == "eval_days") c.eval_days = get_int(value, "scenario", key);
        else if (key == "mode") {
            const std::string m = value.get<std::string>();
            if (m == "agent_based") c.mode = RunMode::AgentBased;
            else if (m == "conventional") c.mode = RunMode::Conventional;
            else throw ConfigError("scenario.mode must be 'agent_based' or 'conventional'");
        } else if (key == "spa_observation") {
            const std::string m = value.get<std::string>();
            if (m == "lagged") c.spa_observation = SpaObservationMode::Lagged;
            else if (m == "oracle") c.spa_observation = SpaObservationMode::Oracle;
            else throw ConfigError("scenario.spa_observation must be 'lagged' or 'oracle'");
        } else {
            unknown_field("scenario", key);
        }
    }
}

GeneratorSpec parse_generator(const json& j, std::size_t index) {
    const std::string section = "generators[" + std::to_string(index) + "]";
    GeneratorSpec g;
    bool saw_kind = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") {
            const std::string k = value.get<std::string>();
            if (k == "base") g.kind = GeneratorKind::Base;
            else if (k == "reserve") g.kind = GeneratorKind::Reserve;
            else throw ConfigError(section + ".kind must be 'base' or 'reserve'");
            saw_kind = true;
        } else if (key == "p_min_kw") g.p_min_kw = get_number(value, section, key);
        else if (key == "p_max_kw") g.p_max_kw = get_number(value, section, key);
        else if (key == "cost_a") g.cost_a = get_number(value, section, key);
        else if (key == "cost_b") g.cost_b = get_number(value, section, key);
        else if (key == "cost_c") g.cost_c = get_number(value, section, key);
        else if (key == "beta") g.beta = get_number(value, section, key);
        else unknown_field(section, key);
    }
    if (!saw_kind) throw ConfigError(section + ": 'kind' is required");
    return g;
}

void parse_prices(const json& j, PriceSchedule& p) {
    for (const auto& [key, value] : j.items()) {
        if (key == "sell_before_11am") p.sell_before_11am = get_number(value, "prices", key);
        else if (key == "sell_after_11am") p.sell_after_11am = get_number(value, "prices", key);
        else if (key == "conventional_buy") p.conventional_buy = get_number(value, "prices", key);
        else if (key == "buy_levels") {
            if (!value.is_array()) throw ConfigError("prices.buy_levels must be an array");
            p.buy_levels.clear();
            for (const auto& x : value) p.buy_levels.push_back(get_number(x, "prices", key));
        } else {
            unknown_field("prices", key);
        }
    }
}

void parse_battery(const json& j, BatteryConfig& b) {
    for (const auto& [key, value] : j.items()) {
        if (key == "soc_min_frac") b.soc_min_frac = get_number(value, "battery", key);
        else if (key == "soc_max_frac") b.soc_max_frac = get_number(value, "battery", key);
        else if (key == "p_charge_max_kw") b.p_charge_max_kw = get_number(value, "battery", key);
        else if (key == "p_discharge_max_kw")
            b.p_discharge_max_kw = get_number(value, "battery", key);
        else if (key == "capacity_kwh") b.capacity_kwh = get_number(value, "battery", key);
        else if (key == "capacity_range_kwh")
            b.capacity_range_kwh = get_range(value, "battery", key);
        else if (key == "initial_soc_kwh") b.initial_soc_kwh = get_number(value, "battery", key);
        else if (key == "initial_soc_range_kwh")
            b.initial_soc_range_kwh = get_range(value, "battery", key);
        else unknown_field("battery", key);
    }
}

void parse_prosumers(const json& j, ProsumerConfig& p) {
    for (const auto& [key, value] : j.items()) {
        if (key == "pv_peak_range_kw") p.pv_peak_range_kw = get_range(value, "prosumers", key);
        else if (key == "consumption_peak_range_kw")
            p.consumption_peak_range_kw = get_range(value, "prosumers", key);
        else if (key == "p_inject_max_kw") p.p_inject_max_kw = get_number(value, "prosumers", key);
        else if (key == "explicit") {
            if (!value.is_array()) throw ConfigError("prosumers.explicit must be an array");
            p.explicit_prosumers.clear();
            for (std::size_t i = 0; i < value.size(); ++i) {
                const std::string section = "prosumers.explicit[" + std::to_string(i) + "]";
                ProsumerOverride o;
                for (const auto& [k2, v2] : value[i].items()) {
                    if (k2 == "pv_peak_kw") o.pv_peak_kw = get_number(v2, section, k2);
                    else if (k2 == "consumption_peak_kw")
                        o.consumption_peak_kw = get_number(v2, section, k2);
                    else if (k2 == "capacity_kwh") o.capacity_kwh = get_number(v2, section, k2);
                    else if (k2 == "initial_soc_kwh")
                        o.initial_soc_kwh = get_number(v2, section, k2);
                    else unknown_field(section, k2);
                }
                p.explicit_prosumers.push_back(o);
            }
        } else {
            unknown_field("prosumers", key);
        }
    }
}

void parse_consumers(const json& j, ConsumerConfig& c) {
    for (const auto& [key, value] : j.items()) {
        if (key == "peak_range_kw") c.peak_range_kw = get_range(value, "consumers", key);
        else if (key == "explicit_peaks_kw") {
            if (!value.is_array()) throw ConfigError("consumers.explicit_peaks_kw must be an array");
            c.explicit_peaks_kw.clear();
            for (const auto& x : value)
                c.explicit_peaks_kw.push_back(get_number(x, "consumers", key));
        } else {
            unknown_field("consumers", key);
        }
    }
}

void parse_profiles(const json& j, ProfilesConfig& p) {
    for (const auto& [key, value] : j.items()) {
        if (key == "noise_frac") p.noise_frac = get_number(value, "profiles", key);
        else if (key == "fixed") p.fixed = get_bool(value, "profiles", key);
        else unknown_field("profiles", key);
    }
}

std::vector<int> get_int_list(const json& j, const std::string& section, const std::string& key) {
    if (!j.is_array()) throw ConfigError(section + "." + key + " must be an array");
    std::vector<int> out;
    for (const auto& x : j) out.push_back(get_int(x, section, key));
    return out;
}

void parse_training(const json& j, TrainingConfig& t) {
    for (const auto& [key, value] : j.items()) {
        if (key == "hidden_spa") t.hidden_spa = get_int_list(value, "training", key);
        else if (key == "hidden_pa") t.hidden_pa = get_int_list(value, "training", key);
        else if (key == "learning_rate") t.learning_rate = get_number(value, "training", key);
        else if (key == "gamma") t.gamma = get_number(value, "training", key);
        else if (key == "tau") t.tau = get_number(value, "training", key);
        else if (key == "batch_size") t.batch_size = get_int(value, "training", key);
        else if (key == "replay_capacity")
            t.replay_capacity = static_cast<std::size_t>(get_int(value, "training", key));
        else if (key == "warmup_transitions")
            t.warmup_transitions = static_cast<std::size_t>(get_int(value, "training", key));
        else if (key == "spa_warmup_transitions")
            t.spa_warmup_transitions = static_cast<std::size_t>(get_int(value, "training", key));
        else if (key == "pa_replay_capacity")
            t.pa_replay_capacity = static_cast<std::size_t>(get_int(value, "training", key));
        else if (key == "eps_start") t.eps_start = get_number(value, "training", key);
        else if (key == "eps_end") t.eps_end = get_number(value, "training", key);
        else if (key == "eps_decay_frac") t.eps_decay_frac = get_number(value, "training", key);
        else if (key == "checkpoint_every") t.checkpoint_every = get_int(value, "training", key);
        else unknown_field("training", key);
    }
}

} // namespace

ScenarioConfig parse_config_text(const std::string& json_text) {
    std::string trimmed;
    for (char ch : json_text)
        if (!std::isspace(static_cast<unsigned char>(ch))) trimmed.push_back(ch);

    ScenarioConfig c;
    if (trimmed.empty()) {
        c.validate();
        return c;
    }

    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    for (const auto& [key, value] : j.items()) {
        if (key == "scenario") parse_scenario(value, c);
        else if (key == "generators") {
            if (!value.is_array()) throw ConfigError("generators must be an array");
            c.generators.clear();
            for (std::size_t i = 0; i < value.size(); ++i)
                c.generators.push_back(parse_generator(value[i], i));
        } else if (key == "prices") parse_prices(value, c.prices);
        else if (key == "battery") parse_battery(value, c.battery);
        else if (key == "prosumers") parse_prosumers(value, c.prosumers);
        else if (key == "consumers") parse_consumers(value, c.consumers);
        else if (key == "profiles") parse_profiles(value, c.profiles);
        else if (key == "training") parse_training(value, c.training);
        else unknown_field("config root", key);
    }

    c.validate();
    return c;
}

ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_json(const ScenarioConfig& c) {
    json j;
    j["scenario"] = {{"n_prosumers", c.n_prosumers},
                     {"n_consumers", c.n_consumers},
                     {"mode", to_string(c.mode)},
                     {"episodes", c.episodes},
                     {"master_seed", c.master_seed},
                     {"dt_hours", c.dt_hours},
                     {"reset_soc", c.reset_soc},
                     {"terminal_last_slot", c.terminal_last_slot},
                     {"spa_observation", to_string(c.spa_observation)},
                     {"eval_days", c.eval_days}};
    j["generators"] = json::array();
    for (const auto& g : c.generators)
        j["generators"].push_back({{"kind", g.kind == GeneratorKind::Base ? "base" : "reserve"},
                                   {"p_min_kw", g.p_min_kw},
                                   {"p_max_kw", g.p_max_kw},
                                   {"cost_a", g.cost_a},
                                   {"cost_b", g.cost_b},
                                   {"cost_c", g.cost_c},
                                   {"beta", g.beta}});
    j["prices"] = {{"sell_before_11am", c.prices.sell_before_11am},
                   {"sell_after_11am", c.prices.sell_after_11am},
                   {"buy_levels", c.prices.buy_levels},
                   {"conventional_buy", c.prices.conventional_buy}};
    json battery = {{"soc_min_frac", c.battery.soc_min_frac},
                    {"soc_max_frac", c.battery.soc_max_frac},
                    {"p_charge_max_kw", c.battery.p_charge_max_kw},
                    {"p_discharge_max_kw", c.battery.p_discharge_max_kw},
                    {"capacity_range_kwh", c.battery.capacity_range_kwh},
                    {"initial_soc_range_kwh", c.battery.initial_soc_range_kwh}};
    if (c.battery.capacity_kwh) battery["capacity_kwh"] = *c.battery.capacity_kwh;
    if (c.battery.initial_soc_kwh) battery["initial_soc_kwh"] = *c.battery.initial_soc_kwh;
    j["battery"] = std::move(battery);
    json prosumers = {{"pv_peak_range_kw", c.prosumers.pv_peak_range_kw},
                      {"consumption_peak_range_kw", c.prosumers.consumption_peak_range_kw},
                      {"p_inject_max_kw", c.prosumers.p_inject_max_kw}};
    if (!c.prosumers.explicit_prosumers.empty()) {
        json list = json::array();
        for (const auto& p : c.prosumers.explicit_prosumers)
            list.push_back({{"pv_peak_kw", p.pv_peak_kw},
                            {"consumption_peak_kw", p.consumption_peak_kw},
                            {"capacity_kwh", p.capacity_kwh},
                            {"initial_soc_kwh", p.initial_soc_kwh}});
        prosumers["explicit"] = std::move(list);
    }
    j["prosumers"] = std::move(prosumers);
    json consumers = {{"peak_range_kw", c.consumers.peak_range_kw}};
    if (!c.consumers.explicit_peaks_kw.empty())
        consumers["explicit_peaks_kw"] = c.consumers.explicit_peaks_kw;
    j["consumers"] = std::move(consumers);
    j["profiles"] = {{"noise_frac", c.profiles.noise_frac}, {"fixed", c.profiles.fixed}};
    json training = {{"hidden_spa", c.training.hidden_spa},
                     {"hidden_pa", c.training.hidden_pa},
                     {"learning_rate", c.training.learning_rate},
                     {"gamma", c.training.gamma},
                     {"tau", c.training.tau},
                     {"batch_size", c.training.batch_size},
                     {"replay_capacity", c.training.replay_capacity},
                     {"warmup_transitions", c.training.warmup_transitions},
                     {"eps_start", c.training.eps_start},
                     {"eps_end", c.training.eps_end},
                     {"eps_decay_frac", c.training.eps_decay_frac},
                     {"checkpoint_every", c.training.checkpoint_every}};
    if (c.training.spa_warmup_transitions)
        training["spa_warmup_transitions"] = *c.training.spa_warmup_transitions;
    if (c.training.pa_replay_capacity)
        training["pa_replay_capacity"] = *c.training.pa_replay_capacity;
    j["training"] = std::move(training);
    return j.dump(2);
}

std::uint64_t config_hash(const ScenarioConfig& config) {
    const std::string canonical = config_to_json(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

const char* to_string(RunMode mode) {
    return mode == RunMode::AgentBased ? "agent_based" : "conventional";
}

const char* to_string(SpaObservationMode mode) {
    return mode == SpaObservationMode::Lagged ? "lagged" : "oracle";
}

} // namespace gridmarl
