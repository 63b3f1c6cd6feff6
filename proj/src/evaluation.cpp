#include "gridtrader/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "gridtrader/errors.hpp"

namespace gridtrader {

double imbalance_gap_pct(double demand_mwh, double supply_mwh) {
    if (!(demand_mwh > 0.0)) {
        throw std::domain_error("imbalance_gap_pct: demand must be positive");
    }
    return std::fabs(demand_mwh - supply_mwh) / demand_mwh * 100.0;
}

double best_bound_gap_pct(double actual_cost_usd, double bound_cost_usd) {
    if (!(actual_cost_usd > 0.0)) {
        throw std::domain_error("best_bound_gap_pct: actual cost must be positive");
    }
    return std::fabs(actual_cost_usd - bound_cost_usd) / actual_cost_usd * 100.0;
}

RunSummary summarize(const std::vector<HourlyEvaluation>& hours) {
    RunSummary s;
    s.hours_total = static_cast<int>(hours.size());
    double imb_sum = 0.0, cost_sum = 0.0;
    int imb_within = 0, cost_within = 0;
    double supply_total = 0.0, renewable_total = 0.0;
    for (const HourlyEvaluation& h : hours) {
        if (h.demand_mwh > 0.0) {
            ++s.hours_scored_imbalance;
            imb_sum += h.imbalance_gap_pct;
            s.max_imbalance_gap_pct = std::max(s.max_imbalance_gap_pct, h.imbalance_gap_pct);
            if (h.imbalance_gap_pct <= 2.0) {
                ++imb_within;
            }
        } else {
            s.warnings.push_back("hour " + std::to_string(h.hour) +
                                 " excluded from imbalance scoring (demand is zero)");
        }
        if (h.actual_cost_usd > 0.0) {
            ++s.hours_scored_cost;
            cost_sum += h.cost_gap_pct;
            s.max_cost_gap_pct = std::max(s.max_cost_gap_pct, h.cost_gap_pct);
            if (h.cost_gap_pct <= 10.0) {
                ++cost_within;
            }
        } else {
            s.warnings.push_back("hour " + std::to_string(h.hour) +
                                 " excluded from cost scoring (actual cost is zero)");
        }
        supply_total += h.supply_mwh;
        renewable_total += h.solar_mwh + h.wind_mwh + h.battery_discharge_mwh;
    }
    if (s.hours_scored_imbalance > 0) {
        s.mean_imbalance_gap_pct = imb_sum / s.hours_scored_imbalance;
        s.frac_hours_within_2pct = static_cast<double>(imb_within) / s.hours_scored_imbalance;
    }
    if (s.hours_scored_cost > 0) {
        s.mean_cost_gap_pct = cost_sum / s.hours_scored_cost;
        s.frac_hours_within_10pct = static_cast<double>(cost_within) / s.hours_scored_cost;
    }
    if (supply_total > 0.0) {
        s.renewable_share = renewable_total / supply_total;
    }
    return s;
}

namespace {

std::FILE* open_csv(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (f == nullptr) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    return f;
}

} // namespace

void emit_reports(const std::vector<HourlyEvaluation>& hours, const RunSummary& summary,
                  const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    std::FILE* f = open_csv(dir / "imbalance_gap.csv");
    std::fprintf(f, "hour,gap_pct\n");
    for (const HourlyEvaluation& h : hours) {
        std::fprintf(f, "%d,%.6f\n", h.hour, h.imbalance_gap_pct);
    }
    std::fclose(f);

    f = open_csv(dir / "cost_vs_bound.csv");
    std::fprintf(f, "hour,actual_cost_usd,bound_cost_usd\n");
    for (const HourlyEvaluation& h : hours) {
        std::fprintf(f, "%d,%.6f,%.6f\n", h.hour, h.actual_cost_usd, h.bound_cost_usd);
    }
    std::fclose(f);

    f = open_csv(dir / "renewables.csv");
    std::fprintf(f, "hour,solar_mwh,wind_mwh\n");
    for (const HourlyEvaluation& h : hours) {
        std::fprintf(f, "%d,%.6f,%.6f\n", h.hour, h.solar_mwh, h.wind_mwh);
    }
    std::fclose(f);

    f = open_csv(dir / "battery.csv");
    std::fprintf(f, "hour,soc_mwh,net_mwh\n");
    for (const HourlyEvaluation& h : hours) {
        std::fprintf(f, "%d,%.6f,%.6f\n", h.hour, h.soc_mwh, h.battery_net_mwh());
    }
    std::fclose(f);

    f = open_csv(dir / "summary.csv");
    std::fprintf(f, "metric,value\n");
    std::fprintf(f, "hours_total,%d\n", summary.hours_total);
    std::fprintf(f, "hours_scored_imbalance,%d\n", summary.hours_scored_imbalance);
    std::fprintf(f, "hours_scored_cost,%d\n", summary.hours_scored_cost);
    std::fprintf(f, "mean_imbalance_gap_pct,%.6f\n", summary.mean_imbalance_gap_pct);
    std::fprintf(f, "max_imbalance_gap_pct,%.6f\n", summary.max_imbalance_gap_pct);
    std::fprintf(f, "frac_hours_within_2pct,%.6f\n", summary.frac_hours_within_2pct);
    std::fprintf(f, "mean_cost_gap_pct,%.6f\n", summary.mean_cost_gap_pct);
    std::fprintf(f, "max_cost_gap_pct,%.6f\n", summary.max_cost_gap_pct);
    std::fprintf(f, "frac_hours_within_10pct,%.6f\n", summary.frac_hours_within_10pct);
    std::fprintf(f, "renewable_share,%.6f\n", summary.renewable_share);
    std::fclose(f);

    if (!summary.warnings.empty()) {
        f = open_csv(dir / "warnings.txt");
        for (const std::string& w : summary.warnings) {
            std::fprintf(f, "%s\n", w.c_str());
        }
        std::fclose(f);
    }
}

} // namespace gridtrader
