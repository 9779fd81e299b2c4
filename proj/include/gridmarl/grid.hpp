#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace gridmarl {

enum class GeneratorKind { Base, Reserve };

// One generation facility. Cost is the quadratic a*p^2 + b*p + c in $/h with
// p in kW; losses are beta*p^2. beta*p_max < 0.5 keeps net output strictly
// increasing over [0, p_max].
struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Base;
    double p_min_kw = 0.0;
    double p_max_kw = 0.0;
    double cost_a = 0.0; // $/(kW^2 h)
    double cost_b = 0.0; // $/(kW h)
    double cost_c = 0.0; // $/h
    double beta = 0.0;   // 1/kW

    void validate() const;
};

// Two-level time-of-day sell price plus the discrete buy-price levels the
// service provider chooses from. conventional_buy is the fixed-price baseline.
struct PriceSchedule {
    double sell_before_11am = 0.0; // $/kWh
    double sell_after_11am = 0.0;  // $/kWh
    std::vector<double> buy_levels; // $/kWh, strictly increasing
    double conventional_buy = 0.0;  // $/kWh

    void validate() const;
};

struct DispatchResult {
    std::vector<double> per_generator_p_kw;        // gross power, 0 when uncommitted
    std::vector<double> per_generator_loss_kw;     // beta_i * p_i^2
    std::vector<double> per_generator_cost_rate;   // $/h per unit
    double total_cost_rate = 0.0;                  // $/h, sum over committed units
    double reserve_energy_kwh = 0.0;               // reserve gross power * dt
    double curtailed_kw = 0.0;                     // surplus when demand sits below base minimum
};

struct DispatchInfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quadratic fuel cost of one unit at gross output p. An uncommitted unit
// (p == 0) costs nothing, including its no-load term.
double generator_cost_rate(double p_kw, const GeneratorSpec& spec);

// Power delivered to the grid after quadratic transmission loss.
double net_output(double p_kw, double beta);

// Gross power whose net output equals net_kw; smaller root of p - beta*p^2 = net.
double gross_for_net(double net_kw, double beta);

// Merit-order economic dispatch: base units fill first, reserve covers the
// remainder. Demand below the base minimum net output is curtailed rather
// than backing off below p_min. Throws DispatchInfeasibleError when
// required_net_kw exceeds total net capacity.
DispatchResult dispatch(double required_net_kw, std::span<const GeneratorSpec> generators,
                        double dt_hours);

// Time-of-day sell price; slots are 15 minutes, slot 44 is 11:00.
double sell_price(int slot_index, const PriceSchedule& schedule);

// Service-provider settlement for one slot: sell revenue minus generation
// cost minus payments for positive prosumer injections. All terms scale by dt
// so the result is $ per slot.
double sp_slot_reward(double demand_kw, std::span<const double> injections_kw,
                      double buy_price, const DispatchResult& dispatch_result,
                      double sell, double dt_hours);

} // namespace gridmarl
