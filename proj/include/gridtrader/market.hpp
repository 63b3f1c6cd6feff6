#pragma once

#include <vector>

#include "gridtrader/profiles.hpp"

namespace gridtrader {

enum class ConventionalCostMode {
    HourlyMarketPrice, // marginal cost follows the hour's clearing price
    Fixed,             // constant $/MWh from FleetSpec
};

struct FleetSpec {
    double solar_capacity_mw = 300.0;
    double wind_capacity_mw = 300.0;
    double conventional_capacity_mw = 1500.0;
    ConventionalCostMode conventional_cost_mode = ConventionalCostMode::HourlyMarketPrice;
    double conventional_fixed_cost_usd_per_mwh = 35.0; // used in Fixed mode only
    double renewable_marginal_cost_usd_per_mwh = 0.0;
};

struct BatterySpec {
    double energy_capacity_mwh = 400.0;
    double max_charge_power_mw = 100.0;
    double max_discharge_power_mw = 100.0;
    double round_trip_efficiency = 0.9; // split as sqrt(eta) per leg
    double initial_soc_mwh = 200.0;
};

// Continuous dispatch command. Fractions outside their ranges are clamped at
// the point of use. battery_frac < 0 charges, > 0 discharges.
struct DispatchAction {
    double solar_frac = 0.0;        // [0,1]
    double wind_frac = 0.0;         // [0,1]
    double conventional_frac = 0.0; // [0,1]
    double battery_frac = 0.0;      // [-1,1]
};

enum class ViolationTag {
    SolarUnavailable,
    WindUnavailable,
    BatteryOverflow,
    BatteryUnderflow,
};

const char* to_string(ViolationTag tag);

struct DispatchResult {
    double solar_mwh = 0.0;
    double wind_mwh = 0.0;
    double conventional_mwh = 0.0;
    double battery_discharge_mwh = 0.0; // grid-side energy delivered
    double battery_charge_mwh = 0.0;    // grid-side energy drawn (adds to demand)
    double supply_total_mwh = 0.0;      // solar + wind + conventional + discharge
    double supply_cost_usd = 0.0;
    double new_soc_mwh = 0.0;
    std::vector<ViolationTag> violations;
};

// Fractions at or below this magnitude carry no dispatch intent: they deliver
// whatever physics allows (usually zero) but never raise a violation. Needed
// because the squashed policy outputs are never exactly zero.
inline constexpr double kIntentEpsilonDefault = 0.25;

double conventional_price(const FleetSpec& fleet, const HourlyRecord& record);

// Battery bookkeeping: new_soc = soc + charge*sqrt(eta) - discharge/sqrt(eta).
// Inputs must already be clamped (apply_dispatch does this); the result is
// pinned to [0, capacity] against rounding drift.
double soc_transition(double soc_mwh, double charge_mwh, double discharge_mwh, const BatterySpec& battery);

// Converts a raw action into delivered energy, cost, and the next state of
// charge for a single one-hour interval (MW and MWh coincide numerically).
// Unavailable-source and battery-limit violations are reported as tags, not
// errors, so the learner sees them through the reward.
DispatchResult apply_dispatch(const DispatchAction& action, const HourlyRecord& record, const FleetSpec& fleet,
                              const BatterySpec& battery, double soc_mwh,
                              double intent_epsilon = kIntentEpsilonDefault);

} // namespace gridtrader
