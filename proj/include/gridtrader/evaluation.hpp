#pragma once

#include <string>
#include <vector>

namespace gridtrader {

// |demand - supply| / demand * 100. Throws std::domain_error when demand <= 0.
double imbalance_gap_pct(double demand_mwh, double supply_mwh);

// |actual - bound| / actual * 100. Throws std::domain_error when actual <= 0.
double best_bound_gap_pct(double actual_cost_usd, double bound_cost_usd);

// Per-hour record of an evaluated day.
struct HourlyEvaluation {
    int hour = 0;
    double demand_mwh = 0.0;
    double supply_mwh = 0.0;
    double imbalance_gap_pct = 0.0;
    double actual_cost_usd = 0.0;
    double bound_cost_usd = 0.0;
    double cost_gap_pct = 0.0;
    double solar_mwh = 0.0;
    double wind_mwh = 0.0;
    double conventional_mwh = 0.0;
    double battery_charge_mwh = 0.0;
    double battery_discharge_mwh = 0.0;
    double soc_mwh = 0.0; // state of charge after the hour
    double price_usd_per_mwh = 0.0;

    // Positive while charging, negative while discharging.
    double battery_net_mwh() const { return battery_charge_mwh - battery_discharge_mwh; }
};

struct RunSummary {
    int hours_total = 0;
    int hours_scored_imbalance = 0; // hours with demand > 0
    int hours_scored_cost = 0;      // hours with actual cost > 0
    double mean_imbalance_gap_pct = 0.0;
    double max_imbalance_gap_pct = 0.0;
    double frac_hours_within_2pct = 0.0;  // of scored imbalance hours
    double mean_cost_gap_pct = 0.0;
    double max_cost_gap_pct = 0.0;
    double frac_hours_within_10pct = 0.0; // of scored cost hours
    double renewable_share = 0.0;         // (solar + wind + discharge) / supply
    std::vector<std::string> warnings;    // e.g. hours excluded from scoring
};

RunSummary summarize(const std::vector<HourlyEvaluation>& hours);

// Writes imbalance_gap.csv, cost_vs_bound.csv, renewables.csv, battery.csv
// and summary.csv into out_dir with fixed formatting.
void emit_reports(const std::vector<HourlyEvaluation>& hours, const RunSummary& summary,
                  const std::string& out_dir);

} // namespace gridtrader
