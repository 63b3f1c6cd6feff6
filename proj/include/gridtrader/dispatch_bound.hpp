#pragma once

#include <map>
#include <string>
#include <vector>

#include "gridtrader/market.hpp"

namespace gridtrader {

struct MeritOffer {
    std::string source_id;
    double available_mwh = 0.0;
    double marginal_cost_usd_per_mwh = 0.0;
    int tie_rank = 0; // declaration order, breaks equal-cost ties
};

struct BoundResult {
    double total_cost_usd = 0.0;
    std::map<std::string, double> dispatched_mwh;
    double unmet_mwh = 0.0; // insufficient supply is reported, never an error
};

// Cheapest-first fill of demand across the offers. The resulting cost is the
// optimistic per-hour reference every dispatch is compared against.
BoundResult best_bound(double demand_mwh, const std::vector<MeritOffer>& offers);

// The hour's offer stack: solar, wind, (optionally) stored energy at zero
// cost, then conventional at its marginal price.
std::vector<MeritOffer> hourly_offers(const HourlyRecord& record, const FleetSpec& fleet, const BatterySpec& battery,
                                      double soc_mwh, bool include_battery = true);

} // namespace gridtrader
