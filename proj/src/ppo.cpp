#include "gridtrader/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gridtrader/rng.hpp"

namespace gridtrader {

const char* to_string(Objective o) {
    return o == Objective::PpoClip ? "ppo_clip" : "reinforce";
}

const char* to_string(OptimizerKind o) {
    return o == OptimizerKind::Adam ? "adam" : "sgd";
}

Objective objective_from_string(const std::string& s) {
    if (s == "ppo_clip") {
        return Objective::PpoClip;
    }
    if (s == "reinforce") {
        return Objective::Reinforce;
    }
    throw std::invalid_argument("config: unknown objective '" + s + "' (expected ppo_clip or reinforce)");
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "adam") {
        return OptimizerKind::Adam;
    }
    if (s == "sgd") {
        return OptimizerKind::Sgd;
    }
    throw std::invalid_argument("config: unknown optimizer '" + s + "' (expected adam or sgd)");
}

void validate(const TrainerConfig& c) {
    if (!(c.gamma > 0.0 && c.gamma < 1.0)) {
        throw std::invalid_argument("config: gamma must lie in (0,1)");
    }
    if (!(c.learning_rate > 0.0)) {
        throw std::invalid_argument("config: learning_rate must be positive");
    }
    if (!(c.clip_epsilon > 0.0)) {
        throw std::invalid_argument("config: clip_epsilon must be positive");
    }
    if (c.batch_trajectories < 1) {
        throw std::invalid_argument("config: batch_trajectories must be >= 1");
    }
    if (c.epochs_per_batch < 1) {
        throw std::invalid_argument("config: epochs_per_batch must be >= 1");
    }
    if (c.hidden_size < 1) {
        throw std::invalid_argument("config: hidden_size must be >= 1");
    }
    if (c.entropy_coeff < 0.0 || c.value_coeff < 0.0) {
        throw std::invalid_argument("config: entropy_coeff and value_coeff must be non-negative");
    }
    if (c.minibatch_size < 0) {
        throw std::invalid_argument("config: minibatch_size must be >= 0 (0 = whole batch)");
    }
    if (c.replay_batches < 1) {
        throw std::invalid_argument("config: replay_batches must be >= 1");
    }
    if (c.workers < 1) {
        throw std::invalid_argument("config: workers must be >= 1");
    }
    if (!(c.curriculum_scale > 0.0)) {
        throw std::invalid_argument("config: curriculum_scale must be positive");
    }
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("discounted_return: gamma must lie in (0,1)");
    }
    double acc = 0.0;
    for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) {
        acc = *it + gamma * acc;
    }
    return acc;
}

std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("returns_to_go: gamma must lie in (0,1)");
    }
    std::vector<double> rtg(rewards.size(), 0.0);
    double acc = 0.0;
    for (size_t i = rewards.size(); i-- > 0;) {
        acc = rewards[i] + gamma * acc;
        rtg[i] = acc;
    }
    return rtg;
}

double trajectory_log_prob(const PolicyParameters& params, const Trajectory& trajectory) {
    const PolicyNet net(params);
    double total = 0.0;
    for (const TrajectoryStep& step : trajectory.steps) {
        total += net.log_prob(net.forward_policy(step.state), step.presquash);
    }
    return total;
}

namespace {

// Pre-computed, parameter-independent weights for one batch: per-step
// advantages (or raw trajectory returns in reinforce mode) and value targets.
struct BatchTables {
    std::vector<const TrajectoryStep*> steps; // flattened in batch order
    std::vector<double> weights;              // advantage (ppo) or R(tau) (reinforce)
    std::vector<double> value_targets;        // return-to-go per step
    size_t n_trajectories = 0;
};

BatchTables build_tables(const std::vector<Trajectory>& batch, const TrainerConfig& cfg) {
    BatchTables t;
    t.n_trajectories = batch.size();
    for (const Trajectory& traj : batch) {
        std::vector<double> rewards;
        rewards.reserve(traj.steps.size());
        for (const TrajectoryStep& s : traj.steps) {
            rewards.push_back(s.reward);
        }
        std::vector<double> rtg(rewards.size(), 0.0);
        double acc = traj.terminal_value; // bootstrap past an early cutoff
        for (size_t i = rewards.size(); i-- > 0;) {
            acc = rewards[i] + cfg.gamma * acc;
            rtg[i] = acc;
        }
        const double full_return =
            rtg.empty() ? 0.0 : discounted_return(rewards, cfg.gamma);
        for (size_t i = 0; i < traj.steps.size(); ++i) {
            t.steps.push_back(&traj.steps[i]);
            t.value_targets.push_back(rtg[i]);
            if (cfg.objective == Objective::Reinforce) {
                t.weights.push_back(full_return); // Monte-Carlo weight, as-written
            } else {
                t.weights.push_back(rtg[i] - traj.steps[i].value_estimate);
            }
        }
    }
    if (cfg.objective == Objective::PpoClip && !t.weights.empty()) {
        double mean = 0.0;
        for (double a : t.weights) {
            mean += a;
        }
        mean /= static_cast<double>(t.weights.size());
        double var = 0.0;
        for (double a : t.weights) {
            var += (a - mean) * (a - mean);
        }
        var /= static_cast<double>(t.weights.size());
        if (var >= 1e-8) { // degenerate batches are left un-normalized
            const double inv_sd = 1.0 / std::sqrt(var);
            for (double& a : t.weights) {
                a = (a - mean) * inv_sd;
            }
        }
    }
    return t;
}

// Gradient of the objective restricted to the steps in `idx`, normalized by
// the slice size (whole-batch call passes every index). Returns false when a
// non-finite value shows up.
bool slice_gradient(const PolicyNet& net, const BatchTables& t, const TrainerConfig& cfg,
                    const std::vector<size_t>& idx, std::vector<double>& grad, UpdateStats* stats) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(idx.size());
    const double inv_k = 1.0 / static_cast<double>(t.n_trajectories);
    double policy_term = 0.0;
    double value_mse = 0.0;
    double ratio_sum = 0.0;
    size_t clipped_count = 0;

    for (const size_t i : idx) {
        const TrajectoryStep& s = *t.steps[i];
        const PolicyForward fwd = net.forward_policy(s.state);
        const double lp_new = net.log_prob(fwd, s.presquash);

        double coeff; // d(policy term)/d(lp_new), including the slice mean
        if (cfg.objective == Objective::Reinforce) {
            policy_term += t.weights[i] * lp_new * inv_k;
            coeff = t.weights[i] * inv_k;
            ratio_sum += 1.0;
        } else {
            const double ratio = std::exp(lp_new - s.log_prob_old);
            const double clipped = std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
            const double unclipped_term = ratio * t.weights[i];
            const double clipped_term = clipped * t.weights[i];
            policy_term += std::min(unclipped_term, clipped_term) * inv_n;
            // The clipped branch is flat in theta, so only the unclipped
            // branch propagates gradient.
            coeff = unclipped_term <= clipped_term ? unclipped_term * inv_n : 0.0;
            ratio_sum += ratio;
            if (std::fabs(ratio - 1.0) > cfg.clip_epsilon) {
                ++clipped_count;
            }
        }
        if (coeff != 0.0) {
            net.accumulate_policy_grad(fwd, s.presquash, coeff, grad);
        }

        const ValueForward vf = net.forward_value(s.state);
        const double err = vf.value - t.value_targets[i];
        value_mse += err * err * inv_n;
        net.accumulate_value_grad(vf, -cfg.value_coeff * 2.0 * err * inv_n, grad);
    }
    if (cfg.entropy_coeff > 0.0) {
        net.accumulate_entropy_grad(cfg.entropy_coeff, grad);
    }

    bool finite = std::isfinite(policy_term) && std::isfinite(value_mse);
    for (const double g : grad) {
        if (!std::isfinite(g)) {
            finite = false;
            break;
        }
    }
    if (stats != nullptr) {
        stats->objective = policy_term - cfg.value_coeff * value_mse + cfg.entropy_coeff * net.entropy();
        stats->mean_ratio = ratio_sum * inv_n;
        stats->clip_fraction = static_cast<double>(clipped_count) * inv_n;
        stats->value_loss = value_mse;
        stats->entropy = net.entropy();
        double norm2 = 0.0;
        for (const double g : grad) {
            norm2 += g * g;
        }
        stats->grad_norm = std::sqrt(norm2);
    }
    return finite;
}

} // namespace

PpoUpdater::PpoUpdater(TrainerConfig config, int obs_dim, int act_dim)
    : config_(config),
      params_(PolicyParameters::random_init(obs_dim, act_dim, config.hidden_size, config.seed,
                                            config.init_log_std)) {
    validate(config_);
}

PpoUpdater::PpoUpdater(TrainerConfig config, PolicyParameters params)
    : config_(config), params_(std::move(params)) {
    validate(config_);
    if (params_.hidden_size != config_.hidden_size) {
        throw std::invalid_argument("ppo: checkpoint hidden size does not match config");
    }
}

double PpoUpdater::objective_value(const PolicyParameters& params,
                                   const std::vector<Trajectory>& batch) const {
    if (batch.empty()) {
        throw std::invalid_argument("ppo: batch must be non-empty");
    }
    const BatchTables t = build_tables(batch, config_);
    const size_t n = t.steps.size();
    if (n == 0) {
        throw std::invalid_argument("ppo: batch has no steps");
    }
    const PolicyNet net(params);

    double policy_term = 0.0;
    double value_mse = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const TrajectoryStep& s = *t.steps[i];
        const PolicyForward fwd = net.forward_policy(s.state);
        const double lp_new = net.log_prob(fwd, s.presquash);
        if (config_.objective == Objective::Reinforce) {
            policy_term += t.weights[i] * lp_new;
        } else {
            const double ratio = std::exp(lp_new - s.log_prob_old);
            const double clipped =
                std::clamp(ratio, 1.0 - config_.clip_epsilon, 1.0 + config_.clip_epsilon);
            policy_term += std::min(ratio * t.weights[i], clipped * t.weights[i]);
        }
        const double v = net.forward_value(s.state).value;
        const double err = v - t.value_targets[i];
        value_mse += err * err;
    }
    if (config_.objective == Objective::Reinforce) {
        policy_term /= static_cast<double>(t.n_trajectories); // Eq-style mean over trajectories
    } else {
        policy_term /= static_cast<double>(n);
    }
    value_mse /= static_cast<double>(n);
    return policy_term - config_.value_coeff * value_mse + config_.entropy_coeff * net.entropy();
}

std::vector<double> PpoUpdater::objective_gradient(const PolicyParameters& params,
                                                   const std::vector<Trajectory>& batch,
                                                   UpdateStats* stats) const {
    if (batch.empty()) {
        throw std::invalid_argument("ppo: batch must be non-empty");
    }
    const BatchTables t = build_tables(batch, config_);
    const size_t n = t.steps.size();
    if (n == 0) {
        throw std::invalid_argument("ppo: batch has no steps");
    }
    const PolicyNet net(params);
    std::vector<double> grad(params.layout().total, 0.0);
    std::vector<size_t> all(n);
    std::iota(all.begin(), all.end(), size_t{0});
    slice_gradient(net, t, config_, all, grad, stats);
    return grad;
}

void PpoUpdater::set_rate_scale(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw std::invalid_argument("ppo: rate scale must be positive and finite");
    }
    rate_scale_ = scale;
}

void PpoUpdater::reset_optimizer() {
    std::fill(adam_m_.begin(), adam_m_.end(), 0.0);
    std::fill(adam_v_.begin(), adam_v_.end(), 0.0);
    adam_t_ = 0;
}

void PpoUpdater::apply_ascent(const std::vector<double>& grad) {
    const size_t n = params_.flat.size();
    const double rate = config_.learning_rate * rate_scale_;
    if (config_.optimizer == OptimizerKind::Sgd) {
        for (size_t i = 0; i < n; ++i) {
            params_.flat[i] += rate * grad[i];
        }
        return;
    }
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    if (adam_m_.size() != n) {
        adam_m_.assign(n, 0.0);
        adam_v_.assign(n, 0.0);
        adam_t_ = 0;
    }
    ++adam_t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam_t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam_t_));
    for (size_t i = 0; i < n; ++i) {
        adam_m_[i] = kBeta1 * adam_m_[i] + (1.0 - kBeta1) * grad[i];
        adam_v_[i] = kBeta2 * adam_v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        const double mhat = adam_m_[i] / bc1;
        const double vhat = adam_v_[i] / bc2;
        params_.flat[i] += rate * mhat / (std::sqrt(vhat) + kEps);
    }
}

UpdateStats PpoUpdater::update(const std::vector<Trajectory>& batch) {
    if (batch.empty()) {
        throw std::invalid_argument("ppo: batch must be non-empty");
    }
    const PolicyParameters backup = params_;
    const std::vector<double> adam_m_backup = adam_m_;
    const std::vector<double> adam_v_backup = adam_v_;
    const uint64_t adam_t_backup = adam_t_;
    const auto restore = [&] {
        params_ = backup;
        adam_m_ = adam_m_backup;
        adam_v_ = adam_v_backup;
        adam_t_ = adam_t_backup;
    };

    // Advantages and value targets are frozen at collection time, so the
    // tables are shared by every epoch.
    const BatchTables tables = build_tables(batch, config_);
    const size_t n = tables.steps.size();
    if (n == 0) {
        throw std::invalid_argument("ppo: batch has no steps");
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    // Reinforce weights are normalized per trajectory, which slicing would
    // distort, so minibatching applies to the clipped objective only.
    const size_t slice = (config_.objective == Objective::PpoClip && config_.minibatch_size > 0)
                             ? std::min<size_t>(static_cast<size_t>(config_.minibatch_size), n)
                             : n;
    Rng shuffle_rng(Rng::mix3(config_.seed, 0x53485546u /* minibatch shuffle */, update_count_));
    ++update_count_;

    UpdateStats stats;
    std::vector<double> grad(params_.layout().total, 0.0);
    std::vector<size_t> idx;
    idx.reserve(slice);
    for (int epoch = 0; epoch < config_.epochs_per_batch; ++epoch) {
        if (slice < n) { // Fisher-Yates, deterministic under the config seed
            for (size_t i = n - 1; i > 0; --i) {
                const size_t j = shuffle_rng.next_u64() % (i + 1);
                std::swap(order[i], order[j]);
            }
        }
        for (size_t start = 0; start < n; start += slice) {
            const size_t stop = std::min(start + slice, n);
            idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(stop));
            const PolicyNet net(params_);
            // Stats reflect the last slice of the last epoch: the freshest
            // view of the surrogate the optimizer saw.
            if (!slice_gradient(net, tables, config_, idx, grad, &stats)) {
                restore();
                stats.aborted_non_finite = true;
                return stats;
            }
            apply_ascent(grad);
        }
    }
    if (!params_.all_finite()) {
        restore();
        stats.aborted_non_finite = true;
    }
    return stats;
}

} // namespace gridtrader
