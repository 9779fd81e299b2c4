#include "gridmarl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gridmarl {

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw std::runtime_error(context + ": non-numeric cell '" + cell + "'");
    return v;
}

} // namespace

double daily_bill(const std::vector<EpisodeRecord>& records, int prosumer_id) {
    if (records.empty()) throw std::domain_error("daily_bill: no records");
    double total = 0.0;
    for (const auto& day : records) {
        if (prosumer_id < 0 ||
            prosumer_id >= static_cast<int>(day.pa_reward_totals_usd.size()))
            throw std::domain_error("daily_bill: unknown prosumer id " +
                                    std::to_string(prosumer_id));
        total += -day.pa_reward_totals_usd[static_cast<std::size_t>(prosumer_id)];
    }
    return total / static_cast<double>(records.size());
}

double sp_profit(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) throw std::domain_error("sp_profit: no records");
    double total = 0.0;
    for (const auto& day : records) total += day.spa_reward_total_usd;
    return total / static_cast<double>(records.size());
}

double reserve_utilization(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) throw std::domain_error("reserve_utilization: no records");
    double total = 0.0;
    for (const auto& day : records) total += day.reserve_energy_total_kwh;
    return total / static_cast<double>(records.size());
}

std::vector<double> moving_average(const std::vector<double>& series, int window) {
    if (window < 1) throw std::domain_error("moving_average: window must be >= 1");
    std::vector<double> out;
    out.reserve(series.size());
    double running = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        running += series[i];
        if (i >= static_cast<std::size_t>(window)) running -= series[i - window];
        const std::size_t n = std::min(i + 1, static_cast<std::size_t>(window));
        out.push_back(running / static_cast<double>(n));
    }
    return out;
}

MetricsBundle summarize(const std::vector<EpisodeRecord>& records, int n_prosumers) {
    MetricsBundle b;
    b.days = static_cast<int>(records.size());
    for (int j = 0; j < n_prosumers; ++j)
        b.per_prosumer_daily_bill_usd.push_back(daily_bill(records, j));
    b.sp_daily_profit_usd = sp_profit(records);
    b.sp_cumulative_profit_usd = b.sp_daily_profit_usd * b.days;
    b.reserve_daily_energy_kwh = reserve_utilization(records);

    for (const auto& day : records) {
        for (const auto& slot : day.slots) {
            double injections = 0.0;
            for (double p_h : slot.p_h_kw) injections += std::max(p_h, 0.0);
            b.avg_net_power_profile_kw[static_cast<std::size_t>(slot.slot)] +=
                slot.demand_kw - injections;
        }
    }
    if (b.days > 0)
        for (double& v : b.avg_net_power_profile_kw) v /= static_cast<double>(b.days);
    return b;
}

void export_slots_csv(const std::vector<EpisodeRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);

    const std::size_t n_p = records.empty() || records[0].slots.empty()
                                ? 0
                                : records[0].slots[0].p_h_kw.size();
    out << "day,slot,buy_price,sell_price,demand_kw,reserve_kwh,spa_reward";
    for (std::size_t j = 0; j < n_p; ++j)
        out << ",p_h_" << j << ",soc_" << j << ",reward_" << j;
    out << "\n";

    for (const auto& day : records) {
        for (const auto& s : day.slots) {
            out << s.day << ',' << s.slot << ',' << fmt(s.buy_price) << ','
                << fmt(s.sell_price) << ',' << fmt(s.demand_kw) << ','
                << fmt(s.dispatch.reserve_energy_kwh) << ',' << fmt(s.spa_reward_usd);
            for (std::size_t j = 0; j < n_p; ++j)
                out << ',' << fmt(s.p_h_kw[j]) << ',' << fmt(s.soc_kwh[j]) << ','
                    << fmt(s.pa_reward_usd[j]);
            out << "\n";
        }
    }
}

std::vector<EpisodeRecord> import_slots_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 7 || header[0] != "day")
        throw std::runtime_error(path + ": unexpected slots.csv header");
    const std::size_t n_p = (header.size() - 7) / 3;

    std::vector<EpisodeRecord> records;
    int current_day = -1;
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size())
            throw std::runtime_error(path + ": row " + std::to_string(row) +
                                     " has the wrong cell count");
        const std::string ctx = path + ": row " + std::to_string(row);

        SlotRecord s;
        s.day = static_cast<int>(parse_double(cells[0], ctx));
        s.slot = static_cast<int>(parse_double(cells[1], ctx));
        s.buy_price = parse_double(cells[2], ctx);
        s.sell_price = parse_double(cells[3], ctx);
        s.demand_kw = parse_double(cells[4], ctx);
        s.dispatch.reserve_energy_kwh = parse_double(cells[5], ctx);
        s.spa_reward_usd = parse_double(cells[6], ctx);
        for (std::size_t j = 0; j < n_p; ++j) {
            s.p_h_kw.push_back(parse_double(cells[7 + 3 * j], ctx));
            s.soc_kwh.push_back(parse_double(cells[8 + 3 * j], ctx));
            s.pa_reward_usd.push_back(parse_double(cells[9 + 3 * j], ctx));
        }
        double draws = 0.0;
        for (double p_h : s.p_h_kw) draws += std::max(-p_h, 0.0);
        s.consumer_load_kw = s.demand_kw - draws;

        if (s.day != current_day) {
            records.emplace_back();
            records.back().episode_index = s.day;
            current_day = s.day;
        }
        records.back().add(s);
        ++row;
    }
    return records;
}

void export_summary_json(const MetricsBundle& bundle, const std::string& path) {
    nlohmann::json j;
    j["days"] = bundle.days;
    j["per_prosumer_daily_bill_usd"] = bundle.per_prosumer_daily_bill_usd;
    j["sp_daily_profit_usd"] = bundle.sp_daily_profit_usd;
    j["sp_cumulative_profit_usd"] = bundle.sp_cumulative_profit_usd;
    j["reserve_daily_energy_kwh"] = bundle.reserve_daily_energy_kwh;
    j["avg_net_power_profile_kw"] = bundle.avg_net_power_profile_kw;
    if (!bundle.learning_curves.empty()) j["learning_curves"] = bundle.learning_curves;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

MetricsBundle import_summary_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    const nlohmann::json j = nlohmann::json::parse(in);

    MetricsBundle b;
    b.days = j.at("days").get<int>();
    b.per_prosumer_daily_bill_usd =
        j.at("per_prosumer_daily_bill_usd").get<std::vector<double>>();
    b.sp_daily_profit_usd = j.at("sp_daily_profit_usd").get<double>();
    b.sp_cumulative_profit_usd = j.at("sp_cumulative_profit_usd").get<double>();
    b.reserve_daily_energy_kwh = j.at("reserve_daily_energy_kwh").get<double>();
    const auto profile = j.at("avg_net_power_profile_kw").get<std::vector<double>>();
    if (profile.size() != static_cast<std::size_t>(kSlotsPerDay))
        throw std::runtime_error(path + ": avg_net_power_profile_kw must hold 96 values");
    std::copy(profile.begin(), profile.end(), b.avg_net_power_profile_kw.begin());
    if (j.contains("learning_curves"))
        b.learning_curves =
            j.at("learning_curves").get<std::map<std::string, std::vector<double>>>();
    return b;
}

} // namespace gridmarl
