#pragma once

#include <string>
#include <vector>

#include "gridtrader/env.hpp"
#include "gridtrader/ledger.hpp"
#include "gridtrader/market.hpp"
#include "gridtrader/ppo.hpp"
#include "gridtrader/trainer.hpp"

namespace gridtrader {

// Everything a run needs, loadable from one JSON file. Unknown keys are
// rejected so typos cannot silently fall back to defaults.
struct RunConfig {
    std::string profile = "synthetic"; // "synthetic" or a profile CSV path
    uint64_t seed = 42;
    std::string out_dir = "out";
    FleetSpec fleet;
    BatterySpec battery;
    // Run-level defaults diverge from the component structs' neutral values
    // where tuning on the bundled synthetic day found better settings; a
    // config file can override any of them.
    //  - w_imbalance 2: with equal weights the cost term pays the policy to
    //    under-deliver a little (shaving expensive marginal energy moves the
    //    actual cost toward the bound computed for full demand), which shows
    //    up as a persistent ~1.4% shortfall in otherwise converged runs.
    //  - early_stop_multiplier 15: the default cutoff truncates most early
    //    episodes so tightly that later hours are barely ever visited.
    //  - demand norm 87.5 / offset 700: centres the demand features on the
    //    day's swing; an uncentred divisor either hides the per-episode
    //    variation or saturates the first tanh layer.
    //  - bound off battery: crediting stored energy to the myopic hourly
    //    bound sets a reference no state-respecting schedule can track.
    RewardWeights reward{.w_imbalance = 2.0, .arbitrage_bonus = 0.1};
    TrainerConfig trainer{.learning_rate = 6e-4,
                          .clip_epsilon = 0.35,
                          .epochs_per_batch = 16,
                          .minibatch_size = 96};
    std::vector<CurriculumStage> stages = default_curriculum();
    EnvOptions env{.early_stop_multiplier = 15.0,
                   .demand_norm_mwh = 87.5,
                   .demand_norm_offset_mwh = 700.0,
                   .bound_includes_battery = false};
    LedgerConfig ledger;
    int eval_episodes = 1;
};

RunConfig parse_run_config(const std::string& json_text); // throws ValidationError
RunConfig load_run_config(const std::string& path);       // throws IoError / ValidationError
std::string serialize_run_config(const RunConfig& config); // round-trips through parse

// Builds the day the run operates on: the synthetic default or a CSV load.
DayProfile resolve_profile(const RunConfig& config);
// Assembles the environment from the parsed pieces.
MarketEnv make_env(const RunConfig& config, const DayProfile& profile);

} // namespace gridtrader
