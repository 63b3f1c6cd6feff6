#include "gridtrader/dispatch_bound.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gridtrader {

BoundResult best_bound(double demand_mwh, const std::vector<MeritOffer>& offers) {
    if (!(demand_mwh >= 0.0)) throw std::invalid_argument("demand must be >= 0");

    std::vector<const MeritOffer*> ordered;
    ordered.reserve(offers.size());
    for (const auto& o : offers) ordered.push_back(&o);
    std::sort(ordered.begin(), ordered.end(), [](const MeritOffer* a, const MeritOffer* b) {
        if (a->marginal_cost_usd_per_mwh != b->marginal_cost_usd_per_mwh)
            return a->marginal_cost_usd_per_mwh < b->marginal_cost_usd_per_mwh;
        return a->tie_rank < b->tie_rank;
    });

    BoundResult result;
    for (const auto& o : offers) result.dispatched_mwh[o.source_id] = 0.0;
    double remaining = demand_mwh;
    for (const MeritOffer* o : ordered) {
        double take = std::min(remaining, std::max(0.0, o->available_mwh));
        result.dispatched_mwh[o->source_id] += take;
        result.total_cost_usd += o->marginal_cost_usd_per_mwh * take;
        remaining -= take;
        if (remaining <= 0.0) {
            remaining = 0.0;
            break;
        }
    }
    result.unmet_mwh = remaining;
    return result;
}

std::vector<MeritOffer> hourly_offers(const HourlyRecord& record, const FleetSpec& fleet, const BatterySpec& battery,
                                      double soc_mwh, bool include_battery) {
    double leg = std::sqrt(battery.round_trip_efficiency);
    std::vector<MeritOffer> offers;
    offers.push_back({"solar", fleet.solar_capacity_mw * record.solar_cf,
                      fleet.renewable_marginal_cost_usd_per_mwh, 0});
    offers.push_back({"wind", fleet.wind_capacity_mw * record.wind_cf,
                      fleet.renewable_marginal_cost_usd_per_mwh, 1});
    if (include_battery)
        offers.push_back({"battery", std::min(battery.max_discharge_power_mw, soc_mwh * leg), 0.0, 2});
    offers.push_back({"conventional", fleet.conventional_capacity_mw, conventional_price(fleet, record), 3});
    return offers;
}

} // namespace gridtrader
