#include "gridtrader/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridtrader/errors.hpp"

namespace gridtrader {

namespace {

constexpr double kTinyMwh = 1e-9;
constexpr double kTinyUsd = 1e-9;

void check_targets(const CurriculumTargets& t) {
    if (!(t.imbalance_gap_target_pct > 0.0) || !(t.best_bound_gap_target_pct > 0.0)) {
        throw std::invalid_argument("env: curriculum targets must be positive");
    }
}

} // namespace

MarketEnv::MarketEnv(DayProfile base_profile, FleetSpec fleet, BatterySpec battery, RewardWeights weights,
                     CurriculumTargets targets, EnvOptions options)
    : base_(base_profile), working_(base_profile), fleet_(fleet), battery_(battery), weights_(weights),
      targets_(targets), options_(options) {
    validate_profile(base_);
    const double coverage =
        fleet_.solar_capacity_mw + fleet_.wind_capacity_mw + fleet_.conventional_capacity_mw +
        battery_.max_discharge_power_mw;
    if (coverage < base_.peak_demand()) {
        throw ValidationError("env: fleet coverage " + std::to_string(coverage) +
                              " MW cannot meet peak demand " + std::to_string(base_.peak_demand()) + " MWh");
    }
    if (weights_.w_imbalance < 0.0 || weights_.w_cost < 0.0 || weights_.penalty_invalid < 0.0 ||
        weights_.arbitrage_bonus < 0.0) {
        throw std::invalid_argument("env: reward weights must be non-negative");
    }
    check_targets(targets_);
    if (!(options_.early_stop_multiplier > 0.0)) {
        throw std::invalid_argument("env: early_stop_multiplier must be positive");
    }
    if (!(options_.price_norm_usd_per_mwh > 0.0)) {
        throw std::invalid_argument("env: price_norm_usd_per_mwh must be positive");
    }
}

MarketState MarketEnv::reset(uint64_t seed) {
    working_ = perturb(base_, PerturbationSpec{options_.perturbation_amplitude, seed});
    state_ = make_state(0, battery_.initial_soc_mwh, 0.0, 0.0);
    started_ = true;
    done_ = false;
    steps_taken_ = 0;
    history_.clear();
    return state_;
}

MarketState MarketEnv::reset(const DayProfile& profile, uint64_t seed) {
    validate_profile(profile);
    base_ = profile;
    return reset(seed);
}

void MarketEnv::refresh_forecasts(MarketState& s, int hour) const {
    for (int k = 0; k < 7; ++k) {
        const int h = std::min(hour + k, 23); // the day ends at midnight: repeat hour 23
        s.demand_forecast_mwh[static_cast<size_t>(k)] = working_.records[static_cast<size_t>(h)].demand_mwh;
        s.price_forecast_usd[static_cast<size_t>(k)] =
            working_.records[static_cast<size_t>(h)].price_usd_per_mwh;
    }
}

double MarketEnv::bound_for(int hour, double demand_mwh, double soc) const {
    const HourlyRecord& r = working_.records[static_cast<size_t>(std::min(hour, 23))];
    return best_bound(demand_mwh, hourly_offers(r, fleet_, battery_, soc,
                                             options_.bound_includes_battery))
        .total_cost_usd;
}

MarketState MarketEnv::make_state(int hour, double soc, double imbalance, double /*unused*/) const {
    MarketState s;
    const HourlyRecord& r = working_.records[static_cast<size_t>(std::min(hour, 23))];
    s.hour = hour;
    s.solar_cf_now = r.solar_cf;
    s.wind_cf_now = r.wind_cf;
    s.imbalance_now_mwh = imbalance;
    s.soc_mwh = soc;
    refresh_forecasts(s, hour);
    s.best_bound_now_usd = bound_for(hour, r.demand_mwh, soc);
    return s;
}

StepResult MarketEnv::step(const DispatchAction& action) {
    if (!started_) {
        throw std::logic_error("env: step called before reset");
    }
    if (done_) {
        throw std::logic_error("env: step called on a finished episode");
    }
    const int hour = state_.hour;
    const HourlyRecord& r = working_.records[static_cast<size_t>(hour)];
    const double soc_entry = state_.soc_mwh;

    const DispatchResult dispatch =
        apply_dispatch(action, r, fleet_, battery_, soc_entry, options_.intent_epsilon);

    // Charging is bought energy: it raises the demand the fleet must cover.
    const double effective_demand = r.demand_mwh + dispatch.battery_charge_mwh;
    const double supply = dispatch.supply_total_mwh;
    double gap_pct;
    if (effective_demand > kTinyMwh) {
        gap_pct = imbalance_gap_pct(effective_demand, supply);
    } else {
        gap_pct = supply > kTinyMwh ? 100.0 : 0.0;
    }

    // Efficiency reference: cheapest dispatch of the same delivered volume.
    const double bound = bound_for(hour, effective_demand, soc_entry);
    const double actual_cost = dispatch.supply_cost_usd;
    double cost_gap;
    if (actual_cost > kTinyUsd) {
        cost_gap = best_bound_gap_pct(actual_cost, bound);
    } else {
        cost_gap = bound > kTinyUsd ? 100.0 : 0.0;
    }

    double forecast_mean = 0.0;
    for (double p : state_.price_forecast_usd) {
        forecast_mean += p;
    }
    forecast_mean /= 7.0;
    const bool charging = dispatch.battery_charge_mwh > 0.0;
    const bool discharging = dispatch.battery_discharge_mwh > 0.0;
    const double arbitrage_term =
        ((charging && r.price_usd_per_mwh < forecast_mean) ||
         (discharging && r.price_usd_per_mwh > forecast_mean))
            ? weights_.arbitrage_bonus
            : 0.0;

    // Gap percentages scaled to O(1); the cost term is capped so a
    // near-zero actual cost cannot blow the reward up.
    const double cost_term = std::min(cost_gap, 100.0) / 100.0;
    const double reward = -weights_.w_imbalance * (gap_pct / 100.0) - weights_.w_cost * cost_term -
                          weights_.penalty_invalid * static_cast<double>(dispatch.violations.size()) +
                          arbitrage_term;

    const int next_hour = hour + 1;
    const bool failed = options_.early_stop_enabled &&
                        gap_pct > options_.early_stop_multiplier * targets_.imbalance_gap_target_pct;
    done_ = failed || next_hour >= 24;
    ++steps_taken_;

    HourlyEvaluation ev;
    ev.hour = hour;
    ev.demand_mwh = effective_demand;
    ev.supply_mwh = supply;
    ev.imbalance_gap_pct = gap_pct;
    ev.actual_cost_usd = actual_cost;
    ev.bound_cost_usd = bound;
    ev.cost_gap_pct = cost_gap;
    ev.solar_mwh = dispatch.solar_mwh;
    ev.wind_mwh = dispatch.wind_mwh;
    ev.conventional_mwh = dispatch.conventional_mwh;
    ev.battery_charge_mwh = dispatch.battery_charge_mwh;
    ev.battery_discharge_mwh = dispatch.battery_discharge_mwh;
    ev.soc_mwh = dispatch.new_soc_mwh;
    ev.price_usd_per_mwh = r.price_usd_per_mwh;
    history_.push_back(ev);

    state_ = make_state(next_hour, dispatch.new_soc_mwh, effective_demand - supply, 0.0);

    StepResult out;
    out.observation = state_;
    out.reward = reward;
    out.done = done_;
    out.info.imbalance_gap_pct = gap_pct;
    out.info.cost_gap_pct = cost_gap;
    out.info.supply_cost_usd = actual_cost;
    out.info.best_bound_usd = bound;
    out.info.violations = static_cast<int>(dispatch.violations.size());
    out.info.soc_mwh = dispatch.new_soc_mwh;
    out.info.dispatch = dispatch;
    out.info.demand_mwh = r.demand_mwh;
    out.info.effective_demand_mwh = effective_demand;
    out.info.price_usd_per_mwh = r.price_usd_per_mwh;
    return out;
}

void MarketEnv::set_targets(const CurriculumTargets& targets) {
    check_targets(targets);
    targets_ = targets;
}

std::vector<double> MarketEnv::observe_vector(const MarketState& state) const {
    const double peak = std::max(base_.peak_demand(), 1e-9);
    const double coverage = options_.demand_norm_mwh > 0.0
                                ? options_.demand_norm_mwh
                                : std::max(fleet_.solar_capacity_mw + fleet_.wind_capacity_mw +
                                               fleet_.conventional_capacity_mw +
                                               battery_.max_discharge_power_mw,
                                           1e-9);
    const double price_norm = options_.price_norm_usd_per_mwh;
    const double cap = std::max(battery_.energy_capacity_mwh, 1e-9);

    std::vector<double> v;
    v.reserve(kObservationDim);
    v.push_back(state.solar_cf_now);
    v.push_back(state.wind_cf_now);
    v.push_back(state.imbalance_now_mwh / peak);
    v.push_back(state.best_bound_now_usd / (price_norm * peak));
    for (double d : state.demand_forecast_mwh) {
        v.push_back((d - options_.demand_norm_offset_mwh) / coverage);
    }
    for (double p : state.price_forecast_usd) {
        v.push_back(p / price_norm);
    }
    v.push_back(options_.observe_soc ? state.soc_mwh / cap : 0.0);
    return v;
}

} // namespace gridtrader
