#include "gridmarl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridmarl {

namespace {
constexpr double kBalanceTol = 1e-9; // kW
}

void GeneratorSpec::validate() const {
    if (!(p_min_kw >= 0.0) || !(p_min_kw <= p_max_kw))
        throw std::domain_error("generator limits must satisfy 0 <= p_min <= p_max");
    if (cost_a < 0.0) throw std::domain_error("generator cost_a must be >= 0");
    if (beta < 0.0) throw std::domain_error("generator beta must be >= 0");
    if (!(beta * p_max_kw < 0.5))
        throw std::domain_error("beta * p_max must be < 0.5 so net output stays increasing");
}

void PriceSchedule::validate() const {
    if (!(sell_before_11am > 0.0) || !(sell_after_11am > 0.0))
        throw std::domain_error("sell prices must be > 0");
    if (!(conventional_buy > 0.0)) throw std::domain_error("conventional buy price must be > 0");
    if (buy_levels.empty()) throw std::domain_error("buy_levels must be non-empty");
    for (std::size_t i = 0; i < buy_levels.size(); ++i) {
        if (!(buy_levels[i] > 0.0)) throw std::domain_error("buy prices must be > 0");
        if (i > 0 && !(buy_levels[i] > buy_levels[i - 1]))
            throw std::domain_error("buy_levels must be strictly increasing");
    }
}

double generator_cost_rate(double p_kw, const GeneratorSpec& spec) {
    if (p_kw < 0.0) throw std::domain_error("generator power must be >= 0");
    if (p_kw > spec.p_max_kw) throw std::domain_error("generator power exceeds p_max");
    if (p_kw == 0.0) return 0.0;
    return spec.cost_a * p_kw * p_kw + spec.cost_b * p_kw + spec.cost_c;
}

double net_output(double p_kw, double beta) {
    if (p_kw < 0.0) throw std::domain_error("generator power must be >= 0");
    return p_kw - beta * p_kw * p_kw;
}

double gross_for_net(double net_kw, double beta) {
    if (beta == 0.0) return net_kw;
    // Smaller root of beta*p^2 - p + net = 0, written to avoid cancellation.
    const double disc = 1.0 - 4.0 * beta * net_kw;
    if (disc < 0.0) throw std::domain_error("net output not reachable for this beta");
    return 2.0 * net_kw / (1.0 + std::sqrt(disc));
}

DispatchResult dispatch(double required_net_kw, std::span<const GeneratorSpec> generators,
                        double dt_hours) {
    bool has_base = false;
    for (const auto& g : generators)
        if (g.kind == GeneratorKind::Base) has_base = true;
    if (!has_base) throw std::domain_error("dispatch requires at least one base generator");

    DispatchResult result;
    result.per_generator_p_kw.assign(generators.size(), 0.0);
    result.per_generator_loss_kw.assign(generators.size(), 0.0);
    result.per_generator_cost_rate.assign(generators.size(), 0.0);

    double remaining = required_net_kw;
    // Base units first, then reserve, each filled to net-output capacity.
    for (int pass = 0; pass < 2; ++pass) {
        const GeneratorKind kind = pass == 0 ? GeneratorKind::Base : GeneratorKind::Reserve;
        for (std::size_t i = 0; i < generators.size(); ++i) {
            const GeneratorSpec& g = generators[i];
            if (g.kind != kind) continue;

            const double net_min = net_output(g.p_min_kw, g.beta);
            const double net_max = net_output(g.p_max_kw, g.beta);
            double assigned;
            if (kind == GeneratorKind::Base) {
                // Base is always committed; demand below its minimum is curtailed.
                assigned = std::clamp(remaining, net_min, net_max);
            } else {
                if (remaining <= kBalanceTol) continue; // reserve stays offline
                assigned = std::clamp(remaining, net_min, net_max);
            }

            double gross = gross_for_net(assigned, g.beta);
            gross = std::clamp(gross, 0.0, g.p_max_kw);
            const double cost_rate = generator_cost_rate(gross, g);
            result.per_generator_p_kw[i] = gross;
            result.per_generator_loss_kw[i] = g.beta * gross * gross;
            result.per_generator_cost_rate[i] = cost_rate;
            result.total_cost_rate += cost_rate;
            if (kind == GeneratorKind::Reserve) result.reserve_energy_kwh += gross * dt_hours;
            remaining -= assigned;
        }
    }

    if (remaining > kBalanceTol)
        throw DispatchInfeasibleError("required net power " + std::to_string(required_net_kw) +
                                      " kW exceeds total net capacity (short by " +
                                      std::to_string(remaining) + " kW)");
    if (remaining < 0.0) result.curtailed_kw = -remaining;
    return result;
}

double sell_price(int slot_index, const PriceSchedule& schedule) {
    if (slot_index < 0 || slot_index > 95) throw std::domain_error("slot index must be in 0..95");
    return slot_index < 44 ? schedule.sell_before_11am : schedule.sell_after_11am;
}

double sp_slot_reward(double demand_kw, std::span<const double> injections_kw,
                      double buy_price, const DispatchResult& dispatch_result,
                      double sell, double dt_hours) {
    if (demand_kw < 0.0) throw std::domain_error("demand must be >= 0");
    double purchases = 0.0;
    for (double p_h : injections_kw)
        if (p_h > 0.0) purchases += p_h * buy_price;
    return demand_kw * sell * dt_hours - dispatch_result.total_cost_rate * dt_hours -
           purchases * dt_hours;
}

} // namespace gridmarl
