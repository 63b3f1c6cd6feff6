#include "gridtrader/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gridtrader {

const char* to_string(ViolationTag tag) {
    switch (tag) {
    case ViolationTag::SolarUnavailable: return "SolarUnavailable";
    case ViolationTag::WindUnavailable: return "WindUnavailable";
    case ViolationTag::BatteryOverflow: return "BatteryOverflow";
    case ViolationTag::BatteryUnderflow: return "BatteryUnderflow";
    }
    return "Unknown";
}

double conventional_price(const FleetSpec& fleet, const HourlyRecord& record) {
    return fleet.conventional_cost_mode == ConventionalCostMode::HourlyMarketPrice
               ? record.price_usd_per_mwh
               : fleet.conventional_fixed_cost_usd_per_mwh;
}

double soc_transition(double soc_mwh, double charge_mwh, double discharge_mwh, const BatterySpec& battery) {
    if (charge_mwh < 0.0 || discharge_mwh < 0.0)
        throw std::invalid_argument("charge/discharge energy must be non-negative");
    if (charge_mwh > 0.0 && discharge_mwh > 0.0)
        throw std::invalid_argument("battery cannot charge and discharge in the same hour");
    double leg = std::sqrt(battery.round_trip_efficiency);
    double next = soc_mwh + charge_mwh * leg - discharge_mwh / leg;
    return std::clamp(next, 0.0, battery.energy_capacity_mwh);
}

DispatchResult apply_dispatch(const DispatchAction& action, const HourlyRecord& record, const FleetSpec& fleet,
                              const BatterySpec& battery, double soc_mwh, double intent_epsilon) {
    if (!(soc_mwh >= 0.0 && soc_mwh <= battery.energy_capacity_mwh))
        throw std::invalid_argument("state of charge outside [0, capacity]");

    double solar_frac = std::clamp(action.solar_frac, 0.0, 1.0);
    double wind_frac = std::clamp(action.wind_frac, 0.0, 1.0);
    double conv_frac = std::clamp(action.conventional_frac, 0.0, 1.0);
    double batt_frac = std::clamp(action.battery_frac, -1.0, 1.0);

    DispatchResult result;
    result.solar_mwh = solar_frac * fleet.solar_capacity_mw * record.solar_cf;
    result.wind_mwh = wind_frac * fleet.wind_capacity_mw * record.wind_cf;
    result.conventional_mwh = conv_frac * fleet.conventional_capacity_mw;

    if (solar_frac > intent_epsilon && record.solar_cf == 0.0)
        result.violations.push_back(ViolationTag::SolarUnavailable);
    if (wind_frac > intent_epsilon && record.wind_cf == 0.0)
        result.violations.push_back(ViolationTag::WindUnavailable);

    double leg = std::sqrt(battery.round_trip_efficiency);
    if (batt_frac > 0.0) {
        double requested = batt_frac * battery.max_discharge_power_mw;
        double deliverable = soc_mwh * leg; // draining the full store delivers soc*sqrt(eta)
        result.battery_discharge_mwh = std::min(requested, deliverable);
        if (batt_frac > intent_epsilon && result.battery_discharge_mwh < requested - 1e-12)
            result.violations.push_back(ViolationTag::BatteryUnderflow);
    } else if (batt_frac < 0.0) {
        double requested = -batt_frac * battery.max_charge_power_mw;
        double storable = (battery.energy_capacity_mwh - soc_mwh) / leg;
        result.battery_charge_mwh = std::min(requested, storable);
        if (-batt_frac > intent_epsilon && result.battery_charge_mwh < requested - 1e-12)
            result.violations.push_back(ViolationTag::BatteryOverflow);
    }

    result.new_soc_mwh = soc_transition(soc_mwh, result.battery_charge_mwh, result.battery_discharge_mwh, battery);
    result.supply_total_mwh =
        result.solar_mwh + result.wind_mwh + result.conventional_mwh + result.battery_discharge_mwh;
    // Discharge is free here; its cost was paid while charging.
    result.supply_cost_usd = fleet.renewable_marginal_cost_usd_per_mwh * (result.solar_mwh + result.wind_mwh) +
                             conventional_price(fleet, record) * result.conventional_mwh;
    return result;
}

} // namespace gridtrader
