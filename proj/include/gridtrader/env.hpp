#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gridtrader/dispatch_bound.hpp"
#include "gridtrader/evaluation.hpp"
#include "gridtrader/market.hpp"
#include "gridtrader/profiles.hpp"

namespace gridtrader {

// Observation snapshot handed to the policy each hour.
struct MarketState {
    double solar_cf_now = 0.0;
    double wind_cf_now = 0.0;
    double imbalance_now_mwh = 0.0; // demand - supply of the previous step, 0 at reset
    double best_bound_now_usd = 0.0;
    std::array<double, 7> demand_forecast_mwh{};    // hours t..t+6, hour 23 repeated past the day
    std::array<double, 7> price_forecast_usd{};     // same horizon
    double soc_mwh = 0.0;
    int hour = 0;
};

struct StepInfo {
    double imbalance_gap_pct = 0.0;
    double cost_gap_pct = 0.0;
    double supply_cost_usd = 0.0;
    double best_bound_usd = 0.0;
    int violations = 0;
    double soc_mwh = 0.0;
    DispatchResult dispatch;
    double demand_mwh = 0.0;           // raw demand of the hour stepped
    double effective_demand_mwh = 0.0; // demand plus battery charging
    double price_usd_per_mwh = 0.0;
};

struct StepResult {
    MarketState observation; // state after the transition
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

struct CurriculumTargets {
    double imbalance_gap_target_pct = 40.0;
    double best_bound_gap_target_pct = 40.0;
};

struct RewardWeights {
    double w_imbalance = 1.0;
    double w_cost = 0.5;
    double penalty_invalid = 2.0;
    double arbitrage_bonus = 0.2;
};

struct EnvOptions {
    double perturbation_amplitude = 0.05; // profile noise per episode
    double early_stop_multiplier = 3.0;   // episode fails when gap exceeds multiplier * target
    bool early_stop_enabled = true;       // evaluation runs disable this to always score 24 hours
    bool observe_soc = true;              // encode state of charge (slot zeroed when off)
    double price_norm_usd_per_mwh = 100.0;
    // Demand forecasts enter the observation as (d - offset) / norm; norm 0
    // derives total dispatchable coverage from the fleet. A divisor near the
    // day's demand swing keeps per-episode variation visible to the network,
    // which has to read it to track each day's draw; the offset centres the
    // features so a small divisor does not push the hidden layers into
    // saturation.
    double demand_norm_mwh = 0.0;
    double demand_norm_offset_mwh = 0.0;
    double intent_epsilon = kIntentEpsilonDefault;
    // Whether the per-hour cost bound may draw on stored battery energy. The
    // bound is myopic: crediting a full discharge offer every hour sets a
    // reference no state-respecting schedule can track.
    bool bound_includes_battery = true;
};

// Day-ahead trading MDP: 24 hourly decisions over a perturbed copy of a base
// day. Each step dispatches the action, scores imbalance against effective
// demand (including battery charging) and cost against the merit-order bound,
// then advances the clock.
class MarketEnv {
public:
    static constexpr int kObservationDim = 19;

    MarketEnv(DayProfile base_profile, FleetSpec fleet, BatterySpec battery, RewardWeights weights = {},
              CurriculumTargets targets = {}, EnvOptions options = {});

    // Applies perturb(base_profile, {amplitude, seed}) and rewinds to hour 0.
    MarketState reset(uint64_t seed);
    MarketState reset(const DayProfile& profile, uint64_t seed);

    StepResult step(const DispatchAction& action);

    void set_targets(const CurriculumTargets& targets);
    const CurriculumTargets& targets() const { return targets_; }

    std::vector<double> observe_vector(const MarketState& state) const;

    const MarketState& state() const { return state_; }
    bool done() const { return done_; }
    const DayProfile& working_profile() const { return working_; }
    const DayProfile& base_profile() const { return base_; }
    const FleetSpec& fleet() const { return fleet_; }
    const BatterySpec& battery() const { return battery_; }
    const RewardWeights& weights() const { return weights_; }
    const EnvOptions& options() const { return options_; }

    // Hours stepped so far this episode (== history().size()).
    int steps_taken() const { return steps_taken_; }
    const std::vector<HourlyEvaluation>& history() const { return history_; }

private:
    MarketState make_state(int hour, double soc, double imbalance, double prev_supply_cost_unused) const;
    double bound_for(int hour, double demand_mwh, double soc) const;
    void refresh_forecasts(MarketState& s, int hour) const;

    DayProfile base_;
    DayProfile working_;
    FleetSpec fleet_;
    BatterySpec battery_;
    RewardWeights weights_;
    CurriculumTargets targets_;
    EnvOptions options_;

    MarketState state_;
    bool started_ = false;
    bool done_ = true;
    int steps_taken_ = 0;
    std::vector<HourlyEvaluation> history_;
};

} // namespace gridtrader
