#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gridtrader/market.hpp"
#include "gridtrader/rng.hpp"

namespace gridtrader {

// Offsets into the flat parameter vector. Policy head: obs -> hidden ->
// hidden -> act means, plus act state-independent log-stds. Value head:
// obs -> hidden -> hidden -> 1.
struct ParamLayout {
    int obs_dim = 0;
    int act_dim = 0;
    int hidden = 0;
    // s3/sv are zero-initialized linear bypasses from the observation to the
    // action means / value: near-affine dispatch then only needs linear
    // weights, which noisy policy gradients can fit far faster than a path
    // through two tanh layers.
    size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0, s3 = 0, log_std = 0;
    size_t v1 = 0, c1 = 0, v2 = 0, c2 = 0, v3 = 0, c3 = 0, sv = 0;
    size_t total = 0;

    static ParamLayout make(int obs_dim, int act_dim, int hidden);
};

struct PolicyParameters {
    int obs_dim = 19;
    int act_dim = 4;
    int hidden_size = 64;
    std::vector<double> flat;

    ParamLayout layout() const { return ParamLayout::make(obs_dim, act_dim, hidden_size); }
    bool all_finite() const;

    // Xavier-style weights, zero biases, constant initial log-std. The output
    // layer is shrunk so initial action means sit near the squash midpoints.
    static PolicyParameters random_init(int obs_dim, int act_dim, int hidden_size, uint64_t seed,
                                        double init_log_std);
};

// Log-std values are clamped to this range in the forward pass; gradients
// vanish outside it.
constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;

struct PolicyForward {
    std::vector<double> x;  // observation
    std::vector<double> h1; // tanh activations, first hidden layer
    std::vector<double> h2;
    std::array<double, 4> mean{};
    std::array<double, 4> log_std{};     // after clamping
    std::array<bool, 4> log_std_active{}; // false where the clamp saturated
};

struct ValueForward {
    std::vector<double> x;
    std::vector<double> h1;
    std::vector<double> h2;
    double value = 0.0;
};

struct ActionSample {
    DispatchAction action;             // squashed, ready for the env
    std::array<double, 4> presquash{}; // Gaussian draw z; kept so log-probs stay exact
    double log_prob = 0.0;             // density of `action`, Jacobian included
};

// First three dims through sigmoid to [0,1], battery dim through tanh to
// [-1,1].
DispatchAction squash_action(const std::array<double, 4>& presquash);
// log |d squash / dz|, summed over dims; numerically stable at large |z|.
double squash_log_jacobian(const std::array<double, 4>& presquash);

// Thin functional view over a parameter vector: forward passes, sampling and
// gradient accumulation. Holds no state of its own.
class PolicyNet {
public:
    explicit PolicyNet(const PolicyParameters& params);

    PolicyForward forward_policy(const std::vector<double>& obs) const;
    ValueForward forward_value(const std::vector<double>& obs) const;

    ActionSample sample(const std::vector<double>& obs, Rng& rng) const;
    // Same distribution, caller-supplied standard-normal draws.
    ActionSample sample_with_noise(const std::vector<double>& obs,
                                   const std::array<double, 4>& eps) const;
    ActionSample deterministic(const std::vector<double>& obs) const; // squashed mean

    // Density of the squashed action identified by its pre-squash point.
    double log_prob(const PolicyForward& f, const std::array<double, 4>& presquash) const;
    // Pre-squash Gaussian term only (the squash Jacobian carries no
    // parameter dependence).
    double log_prob_gaussian(const PolicyForward& f, const std::array<double, 4>& presquash) const;

    // Entropy of the pre-squash Gaussian.
    double entropy() const;

    // Each accumulate_* adds coeff * d(term)/d(theta) into grad (size
    // layout().total).
    void accumulate_policy_grad(const PolicyForward& f, const std::array<double, 4>& presquash,
                                double coeff, std::vector<double>& grad) const;
    void accumulate_value_grad(const ValueForward& f, double coeff, std::vector<double>& grad) const;
    void accumulate_entropy_grad(double coeff, std::vector<double>& grad) const;

    const PolicyParameters& params() const { return *params_; }

private:
    const PolicyParameters* params_;
    ParamLayout lay_;
};

} // namespace gridtrader
