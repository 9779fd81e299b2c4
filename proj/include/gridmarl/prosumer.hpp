#pragma once

#include <stdexcept>

namespace gridmarl {

// Battery ratings. Discharge power is negative by convention: positive power
// charges the battery and reduces the prosumer's grid injection.
struct BatterySpec {
    double capacity_kwh = 0.0;
    double soc_min_frac = 0.1;
    double soc_max_frac = 0.9;
    double p_charge_max_kw = 0.0;    // > 0
    double p_discharge_max_kw = 0.0; // < 0
    double soc_init_kwh = 0.0;

    double soc_min_kwh() const { return soc_min_frac * capacity_kwh; }
    double soc_max_kwh() const { return soc_max_frac * capacity_kwh; }
    void validate() const;
};

struct ProsumerState {
    double soc_kwh = 0.0;
    BatterySpec spec;
    double pv_max_kw = 0.0;
    double p_inject_max_kw = 0.0;
};

enum class BatteryCommand { Charge = 0, Hold = 1, Discharge = 2 };

inline constexpr int kBatteryCommandCount = 3;

struct ConstraintViolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BatteryStepResult {
    double new_soc_kwh = 0.0;
    double realized_p_b_kw = 0.0; // after state-of-charge clipping
};

// Applies a charge/hold/discharge command at the battery's rated power,
// clipping the realized power so SoC stays inside [soc_min, soc_max].
BatteryStepResult apply_battery_command(const ProsumerState& state, BatteryCommand cmd,
                                        double dt_hours);

// Grid injection P_H = pv - battery - consumption. Positive means the
// prosumer feeds the grid. Throws when |P_H| exceeds the injection limit,
// which indicates a misconfigured scenario.
double net_injection(double p_pv_kw, double realized_p_b_kw, double p_c_kw,
                     double p_inject_max_kw);

// Per-slot prosumer settlement: injections earn the buy price, draws pay the
// sell price.
double prosumer_slot_reward(double p_h_kw, double buy, double sell, double dt_hours);

// Fixed-price baseline policy: charge whenever PV exceeds consumption and the
// battery has headroom, otherwise hold. Never discharges; PV surplus beyond
// the charge rating flows out through net_injection.
BatteryCommand conventional_action(const ProsumerState& state, double p_pv_kw, double p_c_kw);

} // namespace gridmarl
