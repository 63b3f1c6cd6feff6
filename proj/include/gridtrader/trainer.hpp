#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridtrader/env.hpp"
#include "gridtrader/ppo.hpp"

namespace gridtrader {

struct CurriculumStage {
    double imbalance_gap_target_pct = 0.0;
    double best_bound_gap_target_pct = 0.0;
    long timesteps = 0;
};

// Five stages tightening from (40,40) down to (2,10), budgets 40k..100k.
std::vector<CurriculumStage> default_curriculum();
// Multiplies every budget by scale (minimum 1 step per stage).
std::vector<CurriculumStage> scale_curriculum(std::vector<CurriculumStage> stages, double scale);
// Stage targets must be positive and non-increasing, budgets positive and
// non-decreasing. Throws std::invalid_argument.
void validate_curriculum(const std::vector<CurriculumStage>& stages);

struct TrainingLogRow {
    int stage = 0;
    long batch = 0;
    long timesteps = 0; // cumulative env steps after this batch
    double objective = 0.0;
    double clip_fraction = 0.0;
    double value_loss = 0.0;
    double success_rate = 0.0; // episodes meeting the stage imbalance target
};

struct TrainingResult {
    PolicyParameters params;
    std::vector<TrainingLogRow> log;
    long total_steps = 0;
    std::vector<double> stage_success_rate; // one entry per stage
};

// Rolls one episode: env.reset(seed-derived stream), sample actions, record
// (state, action, pre-squash draw, log-prob, reward, value estimate).
// With negate_noise the same seed replays the same day and the same Gaussian
// stream with every draw negated; a (false, true) pair is an antithetic pair
// whose day-level randomness cancels in the combined gradient.
Trajectory collect_trajectory(MarketEnv& env, const PolicyParameters& params, uint64_t episode_seed,
                              double gamma, bool negate_noise = false);

// Runs the curriculum: for each stage, set targets and train until the stage
// budget is consumed (batches may overshoot by at most one batch). Episode
// seeding depends only on (config.seed, episode index), so results are
// identical for any worker count.
TrainingResult train_curriculum(const MarketEnv& env_template,
                                const std::vector<CurriculumStage>& stages, const TrainerConfig& config);

// CSV columns: stage,batch,timesteps,objective,clip_fraction,value_loss,success_rate.
void write_training_log(const std::vector<TrainingLogRow>& rows, const std::string& path);

struct EvaluationResult {
    std::vector<HourlyEvaluation> hours; // 24 rows per episode
    RunSummary summary;
};

// Scores full 24-hour episodes (early termination disabled) with
// deterministic squashed-mean actions when the flag is set.
EvaluationResult evaluate_policy(const PolicyParameters& params, const MarketEnv& env_template,
                                 int episodes, bool deterministic, uint64_t eval_seed);

} // namespace gridtrader
