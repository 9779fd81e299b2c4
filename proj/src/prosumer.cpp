#include "gridmarl/prosumer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridmarl {

void BatterySpec::validate() const {
    if (!(capacity_kwh > 0.0)) throw std::domain_error("capacity must be > 0");
    if (!(soc_min_frac >= 0.0 && soc_min_frac < soc_max_frac && soc_max_frac <= 1.0))
        throw std::domain_error("soc fractions must satisfy 0 <= min < max <= 1");
    if (!(p_charge_max_kw > 0.0)) throw std::domain_error("charge rating must be > 0");
    if (!(p_discharge_max_kw < 0.0)) throw std::domain_error("discharge rating must be < 0");
    if (soc_init_kwh < soc_min_kwh() - 1e-12 || soc_init_kwh > soc_max_kwh() + 1e-12)
        throw std::domain_error("initial SoC must lie within the allowed SoC band");
}

BatteryStepResult apply_battery_command(const ProsumerState& state, BatteryCommand cmd,
                                        double dt_hours) {
    const BatterySpec& b = state.spec;
    double p_req = 0.0;
    switch (cmd) {
        case BatteryCommand::Charge: p_req = b.p_charge_max_kw; break;
        case BatteryCommand::Hold: p_req = 0.0; break;
        case BatteryCommand::Discharge: p_req = b.p_discharge_max_kw; break;
    }
    // Clip in SoC space so the post-step SoC is inside the band by
    // construction; the realized power is whatever change that allows.
    const double target_soc =
        std::clamp(state.soc_kwh + p_req * dt_hours, b.soc_min_kwh(), b.soc_max_kwh());

    BatteryStepResult r;
    r.new_soc_kwh = target_soc;
    r.realized_p_b_kw = (target_soc - state.soc_kwh) / dt_hours;
    return r;
}

double net_injection(double p_pv_kw, double realized_p_b_kw, double p_c_kw,
                     double p_inject_max_kw) {
    if (p_pv_kw < 0.0) throw std::domain_error("PV generation must be >= 0");
    if (p_c_kw < 0.0) throw std::domain_error("consumption must be >= 0");
    const double p_h = p_pv_kw - realized_p_b_kw - p_c_kw;
    if (std::abs(p_h) > p_inject_max_kw)
        throw ConstraintViolationError("net injection " + std::to_string(p_h) +
                                       " kW exceeds the +-" + std::to_string(p_inject_max_kw) +
                                       " kW limit");
    return p_h;
}

double prosumer_slot_reward(double p_h_kw, double buy, double sell, double dt_hours) {
    if (p_h_kw >= 0.0) return p_h_kw * buy * dt_hours;
    return p_h_kw * sell * dt_hours;
}

BatteryCommand conventional_action(const ProsumerState& state, double p_pv_kw, double p_c_kw) {
    if (p_pv_kw > p_c_kw && state.soc_kwh < state.spec.soc_max_kwh())
        return BatteryCommand::Charge;
    return BatteryCommand::Hold;
}

} // namespace gridmarl
