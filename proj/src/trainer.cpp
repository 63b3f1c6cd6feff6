#include "gridtrader/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "gridtrader/errors.hpp"
#include "gridtrader/rng.hpp"

namespace gridtrader {

namespace {

// Stream tags keep the per-episode RNG draws independent of each other.
constexpr uint64_t kEpisodeTag = 0x45504953u;    // episode index -> episode seed
constexpr uint64_t kEnvStreamTag = 0x454E5653u;  // profile perturbation
constexpr uint64_t kActStreamTag = 0x41435453u;  // action sampling
constexpr uint64_t kEvalTag = 0x4556414Cu;       // evaluation episodes

double mean_imbalance_gap(const MarketEnv& env) {
    const auto& hist = env.history();
    if (hist.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const HourlyEvaluation& h : hist) {
        sum += h.imbalance_gap_pct;
    }
    return sum / static_cast<double>(hist.size());
}

} // namespace

std::vector<CurriculumStage> default_curriculum() {
    return {
        {40.0, 40.0, 40000},
        {20.0, 30.0, 50000},
        {10.0, 20.0, 60000},
        {5.0, 10.0, 80000},
        {2.0, 10.0, 100000},
    };
}

std::vector<CurriculumStage> scale_curriculum(std::vector<CurriculumStage> stages, double scale) {
    if (!(scale > 0.0)) {
        throw std::invalid_argument("curriculum: scale must be positive");
    }
    for (CurriculumStage& s : stages) {
        s.timesteps = std::max<long>(1, std::lround(static_cast<double>(s.timesteps) * scale));
    }
    return stages;
}

void validate_curriculum(const std::vector<CurriculumStage>& stages) {
    if (stages.empty()) {
        throw std::invalid_argument("curriculum: at least one stage required");
    }
    for (size_t i = 0; i < stages.size(); ++i) {
        const CurriculumStage& s = stages[i];
        if (!(s.imbalance_gap_target_pct > 0.0) || !(s.best_bound_gap_target_pct > 0.0)) {
            throw std::invalid_argument("curriculum: stage " + std::to_string(i) +
                                        " targets must be positive");
        }
        if (s.timesteps <= 0) {
            throw std::invalid_argument("curriculum: stage " + std::to_string(i) +
                                        " timestep budget must be positive");
        }
        if (i > 0) {
            const CurriculumStage& prev = stages[i - 1];
            if (s.imbalance_gap_target_pct > prev.imbalance_gap_target_pct ||
                s.best_bound_gap_target_pct > prev.best_bound_gap_target_pct) {
                throw std::invalid_argument("curriculum: stage targets must be non-increasing");
            }
            if (s.timesteps < prev.timesteps) {
                throw std::invalid_argument("curriculum: stage budgets must be non-decreasing");
            }
        }
    }
}

Trajectory collect_trajectory(MarketEnv& env, const PolicyParameters& params, uint64_t episode_seed,
                              double gamma, bool negate_noise) {
    const PolicyNet net(params);
    Rng action_rng(Rng::mix(episode_seed, kActStreamTag));
    env.reset(Rng::mix(episode_seed, kEnvStreamTag));

    Trajectory traj;
    traj.steps.reserve(24);
    while (!env.done()) {
        std::vector<double> obs = env.observe_vector(env.state());
        std::array<double, 4> eps{};
        for (double& e : eps) {
            e = negate_noise ? -action_rng.gaussian() : action_rng.gaussian();
        }
        const ActionSample sample = net.sample_with_noise(obs, eps);
        const double value = net.forward_value(obs).value;
        const StepResult step = env.step(sample.action);
        TrajectoryStep rec;
        rec.state = std::move(obs);
        rec.action = sample.action;
        rec.presquash = sample.presquash;
        rec.log_prob_old = sample.log_prob;
        rec.reward = step.reward;
        rec.value_estimate = value;
        traj.steps.push_back(std::move(rec));
    }
    // A curriculum cutoff is a training-budget device, not a real terminal
    // state: price the unplayed hours as if the rest of the day were played
    // at exactly the cutoff severity. Steering into the cutoff then never
    // scores better than playing on, while a policy that trips it does not
    // take a cliff-sized penalty that would swamp the value targets.
    if (env.done() && traj.steps.size() < 24) {
        const double cutoff_frac =
            std::min(env.options().early_stop_multiplier * env.targets().imbalance_gap_target_pct,
                     100.0) /
            100.0;
        const double per_hour = (env.weights().w_imbalance + env.weights().w_cost) * cutoff_frac;
        const double remaining = static_cast<double>(24 - traj.steps.size());
        traj.terminal_value = -per_hour * (1.0 - std::pow(gamma, remaining)) / (1.0 - gamma);
    }
    return traj;
}

TrainingResult train_curriculum(const MarketEnv& env_template,
                                const std::vector<CurriculumStage>& stages,
                                const TrainerConfig& config) {
    validate(config);
    validate_curriculum(stages);
    const std::vector<CurriculumStage> schedule = scale_curriculum(stages, config.curriculum_scale);

    const int workers = config.workers;
    std::vector<MarketEnv> envs(static_cast<size_t>(workers), env_template);
    PpoUpdater updater(config, MarketEnv::kObservationDim);

    // Start dispatch in merit order: renewables near full output, the
    // conventional unit near the profile's typical residual share. The
    // budget then goes into refining the dispatch around that shape instead
    // of rediscovering that the cheap sources should run first.
    {
        const DayProfile& prof = env_template.base_profile();
        const FleetSpec& fleet = env_template.fleet();
        double mean_demand = 0.0;
        double mean_renewable = 0.0;
        for (const HourlyRecord& r : prof.records) {
            mean_demand += r.demand_mwh;
            mean_renewable += r.solar_cf * fleet.solar_capacity_mw +
                              r.wind_cf * fleet.wind_capacity_mw;
        }
        mean_demand /= static_cast<double>(prof.records.size());
        mean_renewable /= static_cast<double>(prof.records.size());
        constexpr double kRenewableStartFrac = 0.9;
        const double residual_frac =
            std::clamp((mean_demand - kRenewableStartFrac * mean_renewable) /
                           fleet.conventional_capacity_mw,
                       0.05, 0.95);
        const auto logit = [](double p) { return std::log(p / (1.0 - p)); };
        PolicyParameters& p = updater.params();
        const ParamLayout lay = p.layout();
        p.flat[lay.b3 + 0] = logit(kRenewableStartFrac);
        p.flat[lay.b3 + 1] = logit(kRenewableStartFrac);
        p.flat[lay.b3 + 2] = logit(residual_frac);
    }

    long total_budget = 0;
    for (const CurriculumStage& s : schedule) {
        total_budget += s.timesteps;
    }

    TrainingResult result;
    uint64_t episode_index = 0;
    // Iterate average over the final stage. Stochastic ascent orbits the
    // optimum instead of settling on it; the mean of the near-stationary
    // last-stage iterates lands closer than the endpoint does.
    std::vector<double> tail_avg;
    long tail_count = 0;
    // Rolling window of the most recent collection batches (replay). Cleared
    // at stage boundaries: targets change the cutoff rule, so trajectories
    // from the previous stage are not samples of the current problem.
    std::vector<std::vector<Trajectory>> replay;

    for (size_t stage_idx = 0; stage_idx < schedule.size(); ++stage_idx) {
        const CurriculumStage& stage = schedule[stage_idx];
        for (MarketEnv& e : envs) {
            e.set_targets({stage.imbalance_gap_target_pct, stage.best_bound_gap_target_pct});
        }
        if (stage_idx > 0) {
            // Tighter stages demand finer dispatch than broad exploration can
            // resolve: cap the action noise on entry (it stays learnable).
            // Floored so exploration never collapses entirely: evaluation is
            // deterministic, so residual noise costs nothing at test time but
            // keeps the gradient informative in the last stages.
            const double cap = std::max(
                config.init_log_std - 0.7 * static_cast<double>(stage_idx), -2.3);
            PolicyParameters& p = updater.params();
            const ParamLayout& lay = p.layout();
            for (int a = 0; a < lay.act_dim; ++a) {
                double& ls = p.flat[lay.log_std + static_cast<size_t>(a)];
                ls = std::min(ls, cap);
            }
            // Shrinking sigma rescales the score terms of every policy
            // gradient; Adam's stale second moments would mis-size steps for
            // hundreds of updates, so start its statistics over.
            updater.reset_optimizer();
        }

        replay.clear();
        long stage_steps = 0;
        bool tail_tightened = false;
        long batch_no = 0;
        long episodes = 0;
        long successes = 0;
        while (stage_steps < stage.timesteps) {
            // Linear learning-rate anneal over the whole schedule (floor 10%):
            // late-stage updates refine rather than overwrite earlier stages.
            const double consumed = static_cast<double>(result.total_steps + stage_steps) /
                                    static_cast<double>(total_budget);
            updater.set_rate_scale(std::max(0.1, 1.0 - 0.9 * consumed));
            const int batch_size = config.batch_trajectories;
            std::vector<Trajectory> batch(static_cast<size_t>(batch_size));
            std::vector<double> mean_gaps(static_cast<size_t>(batch_size), 0.0);
            const PolicyParameters& snapshot = updater.params();

            // Episode seeds depend only on the global episode index, so any
            // worker count reproduces the same batch.
            auto run_slice = [&](int worker) {
                MarketEnv& env = envs[static_cast<size_t>(worker)];
                for (int i = worker; i < batch_size; i += workers) {
                    // In antithetic mode odd slots mirror the preceding slot:
                    // same day, negated action noise. The pair's shared
                    // day-level luck cancels out of the policy gradient,
                    // which sharpens the action-response signal.
                    const bool mirror = config.antithetic && (i % 2 == 1);
                    const uint64_t slot = static_cast<uint64_t>(mirror ? i - 1 : i);
                    const uint64_t seed =
                        Rng::mix3(config.seed, kEpisodeTag, episode_index + slot);
                    batch[static_cast<size_t>(i)] =
                        collect_trajectory(env, snapshot, seed, config.gamma, mirror);
                    mean_gaps[static_cast<size_t>(i)] = mean_imbalance_gap(env);
                }
            };
            if (workers == 1) {
                run_slice(0);
            } else {
                std::vector<std::thread> pool;
                pool.reserve(static_cast<size_t>(workers));
                for (int w = 0; w < workers; ++w) {
                    pool.emplace_back(run_slice, w);
                }
                for (std::thread& t : pool) {
                    t.join();
                }
            }
            episode_index += static_cast<uint64_t>(batch_size);

            for (int i = 0; i < batch_size; ++i) {
                stage_steps += static_cast<long>(batch[static_cast<size_t>(i)].size());
                ++episodes;
                if (mean_gaps[static_cast<size_t>(i)] <= stage.imbalance_gap_target_pct) {
                    ++successes;
                }
            }
            replay.push_back(std::move(batch));
            while (replay.size() > static_cast<size_t>(config.replay_batches)) {
                replay.erase(replay.begin());
            }
            std::vector<Trajectory> window;
            const std::vector<Trajectory>* update_batch = &replay.back();
            if (replay.size() > 1) {
                for (const std::vector<Trajectory>& b : replay) {
                    window.insert(window.end(), b.begin(), b.end());
                }
                update_batch = &window;
            }
            const UpdateStats stats = updater.update(*update_batch);
            if (stats.aborted_non_finite) {
                throw TrainingDiverged("non-finite gradient in stage " + std::to_string(stage_idx + 1) +
                                       ", batch " + std::to_string(batch_no + 1));
            }
            ++batch_no;

            // Polish phase: halfway through the final stage the remaining
            // parameter distance is small, so shrink the action noise once
            // more. The averaged iterates then orbit the optimum at a much
            // smaller radius, which is what bounds the per-hour bias spread
            // of the finished policy.
            if (stage_idx + 1 == schedule.size() && stage_steps > stage.timesteps / 2 &&
                !tail_tightened) {
                tail_tightened = true;
                PolicyParameters& p = updater.params();
                const ParamLayout& lay = p.layout();
                for (int a = 0; a < lay.act_dim; ++a) {
                    double& ls = p.flat[lay.log_std + static_cast<size_t>(a)];
                    ls = std::min(ls, -2.9);
                }
                updater.reset_optimizer();
            }
            // Skip the first half of the stage: entry transients and leftover
            // drift would otherwise drag the average away from the optimum.
            if (stage_idx + 1 == schedule.size() && stage_steps > stage.timesteps / 2) {
                const std::vector<double>& flat = updater.params().flat;
                if (tail_avg.empty()) {
                    tail_avg.assign(flat.size(), 0.0);
                }
                ++tail_count;
                for (size_t k = 0; k < flat.size(); ++k) {
                    tail_avg[k] += (flat[k] - tail_avg[k]) / static_cast<double>(tail_count);
                }
            }

            TrainingLogRow row;
            row.stage = static_cast<int>(stage_idx) + 1;
            row.batch = batch_no;
            row.timesteps = result.total_steps + stage_steps;
            row.objective = stats.objective;
            row.clip_fraction = stats.clip_fraction;
            row.value_loss = stats.value_loss;
            row.success_rate = episodes > 0 ? static_cast<double>(successes) / static_cast<double>(episodes)
                                            : 0.0;
            result.log.push_back(row);
        }
        result.total_steps += stage_steps;
        result.stage_success_rate.push_back(
            episodes > 0 ? static_cast<double>(successes) / static_cast<double>(episodes) : 0.0);
    }
    result.params = updater.params();
    if (tail_count > 1) {
        result.params.flat = std::move(tail_avg);
    }
    return result;
}

void write_training_log(const std::vector<TrainingLogRow>& rows, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    std::fprintf(f, "stage,batch,timesteps,objective,clip_fraction,value_loss,success_rate\n");
    for (const TrainingLogRow& r : rows) {
        std::fprintf(f, "%d,%lld,%lld,%.6f,%.6f,%.6f,%.6f\n", r.stage, static_cast<long long>(r.batch),
                     static_cast<long long>(r.timesteps), r.objective, r.clip_fraction, r.value_loss,
                     r.success_rate);
    }
    std::fclose(f);
}

EvaluationResult evaluate_policy(const PolicyParameters& params, const MarketEnv& env_template,
                                 int episodes, bool deterministic, uint64_t eval_seed) {
    if (episodes < 1) {
        throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
    }
    EnvOptions opts = env_template.options();
    opts.early_stop_enabled = false; // always score the full day
    MarketEnv env(env_template.base_profile(), env_template.fleet(), env_template.battery(),
                  env_template.weights(), env_template.targets(), opts);

    const PolicyNet net(params);
    EvaluationResult out;
    out.hours.reserve(static_cast<size_t>(episodes) * 24);
    for (int ep = 0; ep < episodes; ++ep) {
        const uint64_t seed = Rng::mix3(eval_seed, kEvalTag, static_cast<uint64_t>(ep));
        Rng action_rng(Rng::mix(seed, kActStreamTag));
        env.reset(Rng::mix(seed, kEnvStreamTag));
        while (!env.done()) {
            const std::vector<double> obs = env.observe_vector(env.state());
            const ActionSample s = deterministic ? net.deterministic(obs) : net.sample(obs, action_rng);
            env.step(s.action);
        }
        out.hours.insert(out.hours.end(), env.history().begin(), env.history().end());
    }
    out.summary = summarize(out.hours);
    return out;
}

} // namespace gridtrader
