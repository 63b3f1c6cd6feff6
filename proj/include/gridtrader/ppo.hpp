#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gridtrader/policy.hpp"

namespace gridtrader {

enum class Objective { PpoClip, Reinforce };
enum class OptimizerKind { Adam, Sgd };

const char* to_string(Objective o);
const char* to_string(OptimizerKind o);
Objective objective_from_string(const std::string& s);       // throws on unknown
OptimizerKind optimizer_from_string(const std::string& s);   // throws on unknown

struct TrainerConfig {
    double gamma = 0.99;           // discount for future rewards
    double learning_rate = 3e-3;
    double clip_epsilon = 0.2;     // probability-ratio clip half-width
    int batch_trajectories = 16;   // episodes per update
    int epochs_per_batch = 10;     // gradient passes over each batch
    int hidden_size = 64;
    double entropy_coeff = 0.0;
    double value_coeff = 0.5;
    uint64_t seed = 0;
    Objective objective = Objective::PpoClip;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double init_log_std = -0.5;    // initial exploration scale (sigma ~ 0.61)
    int minibatch_size = 0;        // steps per ascent step; 0 = whole batch
    bool antithetic = false;       // collect episodes in mirrored-noise pairs
    // Most-recent collection batches (including the current one) fed to each
    // update. The stored log-probs keep the probability ratios honest for
    // slightly stale data, and the clip already bounds how far those ratios
    // can pull, so modest replay buys gradient-noise reduction for free.
    int replay_batches = 1;
    int workers = 1;               // parallel episode collectors
    double curriculum_scale = 1.0; // multiplies every stage's timestep budget
};

void validate(const TrainerConfig& config); // throws std::invalid_argument

// R = sum_i rewards[i] * gamma^i.
double discounted_return(const std::vector<double>& rewards, double gamma);
// returns_to_go[i] = sum_{j>=i} rewards[j] * gamma^(j-i).
std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma);

struct TrajectoryStep {
    std::vector<double> state;          // observation vector fed to the policy
    DispatchAction action;              // squashed action given to the env
    std::array<double, 4> presquash{};  // Gaussian draw behind the action
    double log_prob_old = 0.0;          // density at collection time
    double reward = 0.0;
    double value_estimate = 0.0;        // critic output at collection time
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    // Return assigned to the unplayed remainder of an episode that hit the
    // curriculum cutoff; zero when the episode ran to the natural horizon.
    // Charged pessimistically (worst normal-play cost per remaining hour), so
    // a truncated episode never scores better than playing the hours out and
    // the learner cannot treat the cutoff as an exit from bad states.
    double terminal_value = 0.0;
    size_t size() const { return steps.size(); }
    bool empty() const { return steps.empty(); }
};

// sum_i log pi_theta(a_i | s_i); transition factors carry no parameter
// dependence and are excluded.
double trajectory_log_prob(const PolicyParameters& params, const Trajectory& trajectory);

struct UpdateStats {
    double objective = 0.0;     // clipped surrogate - value term + entropy term
    double mean_ratio = 0.0;    // mean probability ratio over the batch
    double clip_fraction = 0.0; // fraction of steps with |ratio - 1| > epsilon
    double value_loss = 0.0;    // critic MSE
    double entropy = 0.0;
    double grad_norm = 0.0;     // of the last epoch's gradient
    bool aborted_non_finite = false; // gradient went non-finite; params untouched
};

// Owns the parameters and the optimizer state; update() runs
// epochs_per_batch ascent steps on a batch of trajectories.
class PpoUpdater {
public:
    PpoUpdater(TrainerConfig config, int obs_dim, int act_dim = 4);
    PpoUpdater(TrainerConfig config, PolicyParameters params); // resume from checkpoint

    const PolicyParameters& params() const { return params_; }
    PolicyParameters& params() { return params_; }
    const TrainerConfig& config() const { return config_; }

    // Multiplier on the configured learning rate, annealed by the curriculum
    // driver as the step budget is consumed so parameters settle instead of
    // random-walking around the optimum at a fixed step size.
    void set_rate_scale(double scale);
    double rate_scale() const { return rate_scale_; }

    // Drops accumulated Adam moments. Call when the objective landscape
    // changes discontinuously (e.g. an exploration-scale clamp): the old
    // second-moment estimates are calibrated to the previous gradient scale
    // and would mis-size steps for ~1/(1-beta2) updates afterwards.
    void reset_optimizer();

    UpdateStats update(const std::vector<Trajectory>& batch);

    // Pure objective J(params, batch): the quantity update() ascends. Exposed
    // so a finite-difference oracle can validate the analytic gradient.
    double objective_value(const PolicyParameters& params, const std::vector<Trajectory>& batch) const;
    std::vector<double> objective_gradient(const PolicyParameters& params,
                                           const std::vector<Trajectory>& batch,
                                           UpdateStats* stats = nullptr) const;

private:
    void apply_ascent(const std::vector<double>& grad);

    TrainerConfig config_;
    PolicyParameters params_;
    std::vector<double> adam_m_;
    std::vector<double> adam_v_;
    uint64_t adam_t_ = 0;
    uint64_t update_count_ = 0; // seeds the per-update minibatch shuffle
    double rate_scale_ = 1.0;
};

} // namespace gridtrader
