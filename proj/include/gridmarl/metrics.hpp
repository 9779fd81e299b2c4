#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "gridmarl/sim.hpp"

namespace gridmarl {

struct MetricsBundle {
    std::vector<double> per_prosumer_daily_bill_usd;
    double sp_daily_profit_usd = 0.0;
    double sp_cumulative_profit_usd = 0.0;
    double reserve_daily_energy_kwh = 0.0;
    std::array<double, kSlotsPerDay> avg_net_power_profile_kw{};
    int days = 0;
    // Optional window-smoothed training curves, keyed by agent name.
    std::map<std::string, std::vector<double>> learning_curves;
};

// Mean over days of the negated per-slot rewards: positive means the
// prosumer pays.
double daily_bill(const std::vector<EpisodeRecord>& records, int prosumer_id);

// Mean over days of the summed per-slot service-provider rewards.
double sp_profit(const std::vector<EpisodeRecord>& records);

// Mean over days of dispatched reserve energy.
double reserve_utilization(const std::vector<EpisodeRecord>& records);

// Trailing mean; the first window-1 entries average the available prefix.
std::vector<double> moving_average(const std::vector<double>& series, int window);

inline constexpr int kLearningCurveWindow = 100;

MetricsBundle summarize(const std::vector<EpisodeRecord>& records, int n_prosumers);

// Slot-level export: one row per (day, slot) with settlement quantities and
// per-prosumer columns p_h_<j>, soc_<j>, reward_<j>. Numbers use shortest
// round-trip formatting, so re-import reproduces values exactly.
void export_slots_csv(const std::vector<EpisodeRecord>& records, const std::string& path);
std::vector<EpisodeRecord> import_slots_csv(const std::string& path);

void export_summary_json(const MetricsBundle& bundle, const std::string& path);
MetricsBundle import_summary_json(const std::string& path);

} // namespace gridmarl
