// Command-line driver: experiment subcommands over the simulation library.
// Exit codes: 0 success, 1 configuration error, 2 runtime simulation error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridmarl/config.hpp"
#include "gridmarl/metrics.hpp"
#include "gridmarl/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gridmarl;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
    bool small = false;
    int parallel = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "Scenario config JSON (empty = defaults)");
    cmd->add_option("--out", opt.out_dir, "Output directory")->required();
    cmd->add_option("--seed", opt.seed, "Master seed (overrides config and GRIDMARL_SEED)");
    cmd->add_option("--episodes", opt.episodes, "Training episode count override");
    cmd->add_flag("--small", opt.small, "Use 64-wide hidden layers instead of the full 1000");
    cmd->add_option("--parallel", opt.parallel, "Number of seeds to run concurrently")
        ->check(CLI::PositiveNumber);
}

ScenarioConfig load_config(const CommonOptions& opt) {
    ScenarioConfig config =
        opt.config_path.empty() ? parse_config_text("") : parse_config(opt.config_path);
    if (opt.seed) {
        config.master_seed = *opt.seed;
    } else if (const char* env = std::getenv("GRIDMARL_SEED")) {
        config.master_seed = std::stoull(env);
    }
    if (opt.episodes) config.episodes = *opt.episodes;
    if (opt.small) {
        config.training.hidden_spa = {64};
        config.training.hidden_pa = {64, 64};
    }
    config.validate();
    return config;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream ss;
    ss << std::hex << h;
    return ss.str();
}

// Written before any long computation so partial runs are detectable.
void write_manifest(const ScenarioConfig& config, const std::string& out_dir,
                    const std::vector<std::string>& artifacts) {
    fs::create_directories(out_dir);
    json m;
    m["tool_version"] = kToolVersion;
    m["config_hash"] = hash_hex(config_hash(config));
    m["master_seed"] = config.master_seed;
    m["mode"] = to_string(config.mode);
    m["episodes"] = config.episodes;
    m["artifacts"] = artifacts;
    std::ofstream out(out_dir + "/manifest.json");
    out << m.dump(2) << "\n";
    std::ofstream cfg(out_dir + "/resolved_config.json");
    cfg << config_to_json(config) << "\n";
}

void write_learning_curves(const TrainResult& result, const std::string& path) {
    std::ofstream out(path);
    out << "episode,epsilon,spa_return,spa_loss";
    for (std::size_t j = 0; j < result.pa_episode_returns.size(); ++j)
        out << ",pa_" << j << "_return,pa_" << j << "_loss";
    out << "\n";
    for (std::size_t e = 0; e < result.spa_episode_returns.size(); ++e) {
        out << e << ',' << result.epsilon_by_episode[e] << ',' << result.spa_episode_returns[e]
            << ',' << result.spa_episode_loss[e];
        for (std::size_t j = 0; j < result.pa_episode_returns.size(); ++j)
            out << ',' << result.pa_episode_returns[j][e] << ',' << result.pa_episode_loss[j][e];
        out << "\n";
    }
}

void save_agents(const AgentSet& agents, const std::string& dir) {
    fs::create_directories(dir);
    save_agent(*agents.spa, dir, "spa");
    for (std::size_t j = 0; j < agents.pas.size(); ++j)
        save_agent(*agents.pas[j], dir, "pa_" + std::to_string(j));
}

MetricsBundle average_bundles(const std::vector<MetricsBundle>& bundles) {
    MetricsBundle avg = bundles.front();
    for (std::size_t i = 1; i < bundles.size(); ++i) {
        const MetricsBundle& b = bundles[i];
        for (std::size_t j = 0; j < avg.per_prosumer_daily_bill_usd.size(); ++j)
            avg.per_prosumer_daily_bill_usd[j] += b.per_prosumer_daily_bill_usd[j];
        avg.sp_daily_profit_usd += b.sp_daily_profit_usd;
        avg.sp_cumulative_profit_usd += b.sp_cumulative_profit_usd;
        avg.reserve_daily_energy_kwh += b.reserve_daily_energy_kwh;
        for (std::size_t s = 0; s < avg.avg_net_power_profile_kw.size(); ++s)
            avg.avg_net_power_profile_kw[s] += b.avg_net_power_profile_kw[s];
    }
    const double n = static_cast<double>(bundles.size());
    for (double& v : avg.per_prosumer_daily_bill_usd) v /= n;
    avg.sp_daily_profit_usd /= n;
    avg.sp_cumulative_profit_usd /= n;
    avg.reserve_daily_energy_kwh /= n;
    for (double& v : avg.avg_net_power_profile_kw) v /= n;
    avg.learning_curves.clear();
    return avg;
}

// One isolated experiment: train when agent-based, then a greedy evaluation.
// Everything derives from (config, seed).
MetricsBundle run_experiment(ScenarioConfig config, const std::string& out_dir,
                             bool write_checkpoints) {
    fs::create_directories(out_dir);
    const ScenarioSetup setup = build_setup(config);

    if (config.mode == RunMode::AgentBased) {
        CheckpointSink sink;
        if (write_checkpoints)
            sink = [&](int, const AgentSet& agents) {
                save_agents(agents, out_dir + "/checkpoints");
            };
        TrainResult result = train(config, setup, sink);
        write_learning_curves(result, out_dir + "/learning_curves.csv");
        const auto days = evaluate(config, setup, &result.agents, config.eval_days);

        MetricsBundle bundle = summarize(days, config.n_prosumers);
        bundle.learning_curves["spa"] =
            moving_average(result.spa_episode_returns, kLearningCurveWindow);
        for (std::size_t j = 0; j < result.pa_episode_returns.size(); ++j)
            bundle.learning_curves["pa_" + std::to_string(j)] =
                moving_average(result.pa_episode_returns[j], kLearningCurveWindow);
        export_slots_csv(days, out_dir + "/slots.csv");
        export_summary_json(bundle, out_dir + "/summary.json");
        return bundle;
    }

    const auto days = evaluate(config, setup, nullptr, config.eval_days);
    const MetricsBundle bundle = summarize(days, config.n_prosumers);
    export_slots_csv(days, out_dir + "/slots.csv");
    export_summary_json(bundle, out_dir + "/summary.json");
    return bundle;
}

// Runs `parallel` seeds (seed, seed+1, ...) as isolated experiments, then
// averages their metric bundles into <out>/summary.json.
int run_seeded(const ScenarioConfig& base_config, const CommonOptions& opt,
               bool write_checkpoints) {
    write_manifest(base_config, opt.out_dir,
                   {"resolved_config.json", "summary.json", "slots.csv"});
    if (opt.parallel == 1) {
        run_experiment(base_config, opt.out_dir, write_checkpoints);
        return 0;
    }

    std::vector<std::future<MetricsBundle>> futures;
    for (int i = 0; i < opt.parallel; ++i) {
        ScenarioConfig config = base_config;
        config.master_seed = base_config.master_seed + static_cast<std::uint64_t>(i);
        const std::string dir = opt.out_dir + "/seed_" + std::to_string(config.master_seed);
        futures.push_back(std::async(std::launch::async, [config, dir, write_checkpoints] {
            return run_experiment(config, dir, write_checkpoints);
        }));
    }
    std::vector<MetricsBundle> bundles;
    for (auto& f : futures) bundles.push_back(f.get());
    export_summary_json(average_bundles(bundles), opt.out_dir + "/summary.json");
    return 0;
}

int cmd_train(const CommonOptions& opt) {
    ScenarioConfig config = load_config(opt);
    config.mode = RunMode::AgentBased;
    return run_seeded(config, opt, true);
}

int cmd_baseline(const CommonOptions& opt) {
    ScenarioConfig config = load_config(opt);
    config.mode = RunMode::Conventional;
    return run_seeded(config, opt, false);
}

int cmd_evaluate(const CommonOptions& opt, const std::string& checkpoint_dir, int eval_days) {
    ScenarioConfig config = load_config(opt);
    config.mode = RunMode::AgentBased;
    if (eval_days > 0) config.eval_days = eval_days;
    write_manifest(config, opt.out_dir, {"slots.csv", "summary.json"});

    const ScenarioSetup setup = build_setup(config);
    AgentSet agents = make_agents(config);
    load_agent(*agents.spa, checkpoint_dir, "spa");
    for (std::size_t j = 0; j < agents.pas.size(); ++j)
        load_agent(*agents.pas[j], checkpoint_dir, "pa_" + std::to_string(j));

    const auto records = evaluate(config, setup, &agents, config.eval_days);
    export_slots_csv(records, opt.out_dir + "/slots.csv");
    export_summary_json(summarize(records, config.n_prosumers), opt.out_dir + "/summary.json");
    return 0;
}

int cmd_sweep_battery(const CommonOptions& opt) {
    const ScenarioConfig base = load_config(opt);
    std::vector<double> grid;
    for (double c = 2.0; c <= 24.0; c += 2.0) grid.push_back(c);
    grid.push_back(25.0);

    write_manifest(base, opt.out_dir, {"battery_sweep.csv"});
    std::ofstream csv(opt.out_dir + "/battery_sweep.csv");
    csv << "capacity_kwh,mean_bill_agent_usd,mean_bill_conventional_usd,"
           "sp_profit_agent_usd,sp_profit_conventional_usd,"
           "reserve_agent_kwh,reserve_conventional_kwh\n";

    for (double capacity : grid) {
        std::vector<std::future<std::pair<MetricsBundle, MetricsBundle>>> futures;
        for (int i = 0; i < opt.parallel; ++i) {
            ScenarioConfig config = base;
            config.master_seed = base.master_seed + static_cast<std::uint64_t>(i);
            config.battery.capacity_kwh = capacity;
            const std::string dir = opt.out_dir + "/cap_" +
                                    std::to_string(static_cast<int>(capacity)) + "/seed_" +
                                    std::to_string(config.master_seed);
            futures.push_back(std::async(std::launch::async, [config, dir] {
                ScenarioConfig agent_cfg = config;
                agent_cfg.mode = RunMode::AgentBased;
                const MetricsBundle agent = run_experiment(agent_cfg, dir + "/agent", false);
                ScenarioConfig conv_cfg = config;
                conv_cfg.mode = RunMode::Conventional;
                const MetricsBundle conv = run_experiment(conv_cfg, dir + "/conventional", false);
                return std::make_pair(agent, conv);
            }));
        }
        std::vector<MetricsBundle> agent_bundles;
        std::vector<MetricsBundle> conv_bundles;
        for (auto& f : futures) {
            auto [a, c] = f.get();
            agent_bundles.push_back(std::move(a));
            conv_bundles.push_back(std::move(c));
        }
        const MetricsBundle agent = average_bundles(agent_bundles);
        const MetricsBundle conv = average_bundles(conv_bundles);
        auto mean_bill = [](const MetricsBundle& b) {
            double s = 0.0;
            for (double v : b.per_prosumer_daily_bill_usd) s += v;
            return s / static_cast<double>(b.per_prosumer_daily_bill_usd.size());
        };
        const std::string cap_dir =
            opt.out_dir + "/cap_" + std::to_string(static_cast<int>(capacity));
        export_summary_json(agent, cap_dir + "/summary.json");
        export_summary_json(conv, cap_dir + "/baseline_summary.json");
        csv << capacity << ',' << mean_bill(agent) << ',' << mean_bill(conv) << ','
            << agent.sp_daily_profit_usd << ',' << conv.sp_daily_profit_usd << ','
            << agent.reserve_daily_energy_kwh << ',' << conv.reserve_daily_energy_kwh << "\n";
        csv.flush();
    }
    return 0;
}

int cmd_sweep_loss(const CommonOptions& opt, const std::string& trace_path) {
    const ScenarioConfig base = load_config(opt);
    const std::vector<double> betas{0.0, 1e-4, 2e-4, 4e-4, 8e-4};
    write_manifest(base, opt.out_dir, {"loss_sweep.csv"});

    // Frozen trace: either supplied or generated once from the conventional
    // baseline. Policies never rerun; only dispatch and settlement do.
    std::vector<EpisodeRecord> trace;
    if (!trace_path.empty()) {
        trace = import_slots_csv(trace_path);
    } else {
        ScenarioConfig conv = base;
        conv.mode = RunMode::Conventional;
        trace = evaluate(conv, build_setup(conv), nullptr, conv.eval_days);
    }

    std::ofstream csv(opt.out_dir + "/loss_sweep.csv");
    csv << "beta,sp_daily_profit_usd,reserve_daily_energy_kwh\n";
    for (double beta : betas) {
        std::vector<GeneratorSpec> gens = base.generators;
        for (auto& g : gens) g.beta = beta;

        double profit_total = 0.0;
        double reserve_total = 0.0;
        for (const auto& day : trace) {
            for (const auto& slot : day.slots) {
                double injections = 0.0;
                for (double p_h : slot.p_h_kw) injections += std::max(p_h, 0.0);
                const DispatchResult d =
                    dispatch(slot.demand_kw - injections, gens, base.dt_hours);
                profit_total += sp_slot_reward(slot.demand_kw, slot.p_h_kw, slot.buy_price, d,
                                               slot.sell_price, base.dt_hours);
                reserve_total += d.reserve_energy_kwh;
            }
        }
        const double n_days = static_cast<double>(trace.size());
        csv << beta << ',' << profit_total / n_days << ',' << reserve_total / n_days << "\n";
    }
    return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_dir) {
    const auto records = import_slots_csv(in_path);
    if (records.empty()) throw std::runtime_error("no rows in " + in_path);
    const int n_p = static_cast<int>(records[0].slots.at(0).p_h_kw.size());
    fs::create_directories(out_dir);
    export_summary_json(summarize(records, n_p), out_dir + "/summary.json");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Microgrid demand-response simulator with learning price and battery agents"};
    app.require_subcommand(1);

    CommonOptions train_opt;
    auto* train_cmd = app.add_subcommand("train", "Train agents, then evaluate greedily");
    add_common(train_cmd, train_opt);

    CommonOptions eval_opt;
    std::string checkpoint_dir;
    int eval_days = 0;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate agents from checkpoints");
    add_common(eval_cmd, eval_opt);
    eval_cmd->add_option("--checkpoints", checkpoint_dir, "Directory with agent checkpoints")
        ->required();
    eval_cmd->add_option("--days", eval_days, "Evaluation day count override");

    CommonOptions base_opt;
    auto* base_cmd = app.add_subcommand("baseline", "Fixed-price conventional baseline");
    add_common(base_cmd, base_opt);

    CommonOptions sweepb_opt;
    auto* sweepb_cmd =
        app.add_subcommand("sweep-battery", "Train and evaluate across battery capacities");
    add_common(sweepb_cmd, sweepb_opt);

    CommonOptions sweepl_opt;
    std::string trace_path;
    auto* sweepl_cmd =
        app.add_subcommand("sweep-loss", "Re-settle a frozen trace across loss coefficients");
    add_common(sweepl_cmd, sweepl_opt);
    sweepl_cmd->add_option("--trace", trace_path, "Frozen slots.csv (default: fresh baseline)");

    std::string report_in;
    std::string report_out;
    auto* report_cmd = app.add_subcommand("report", "Recompute a summary from slots.csv");
    report_cmd->add_option("--in", report_in, "Input slots.csv")->required();
    report_cmd->add_option("--out", report_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_opt);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_opt, checkpoint_dir, eval_days);
        if (base_cmd->parsed()) return cmd_baseline(base_opt);
        if (sweepb_cmd->parsed()) return cmd_sweep_battery(sweepb_opt);
        if (sweepl_cmd->parsed()) return cmd_sweep_loss(sweepl_opt, trace_path);
        if (report_cmd->parsed()) return cmd_report(report_in, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
