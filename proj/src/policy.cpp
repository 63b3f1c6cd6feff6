#include "gridtrader/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gridtrader {

namespace {

constexpr double kLog2Pi = 1.8378770664093453; // log(2*pi)

double softplus(double x) {
    // max(x,0) + log1p(exp(-|x|)) never overflows.
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// y = W x + b for a row-major (rows x cols) block of the flat vector.
void affine(const std::vector<double>& flat, size_t w_off, size_t b_off, int rows, int cols,
            const double* x, double* y) {
    for (int i = 0; i < rows; ++i) {
        double acc = flat[b_off + static_cast<size_t>(i)];
        const size_t row = w_off + static_cast<size_t>(i) * static_cast<size_t>(cols);
        for (int j = 0; j < cols; ++j) {
            acc += flat[row + static_cast<size_t>(j)] * x[j];
        }
        y[i] = acc;
    }
}

} // namespace

ParamLayout ParamLayout::make(int obs_dim, int act_dim, int hidden) {
    ParamLayout l;
    l.obs_dim = obs_dim;
    l.act_dim = act_dim;
    l.hidden = hidden;
    const auto o = static_cast<size_t>(obs_dim);
    const auto a = static_cast<size_t>(act_dim);
    const auto h = static_cast<size_t>(hidden);
    size_t at = 0;
    l.w1 = at; at += h * o;
    l.b1 = at; at += h;
    l.w2 = at; at += h * h;
    l.b2 = at; at += h;
    l.w3 = at; at += a * h;
    l.b3 = at; at += a;
    l.s3 = at; at += a * o; // observation -> mean bypass
    l.log_std = at; at += a;
    l.v1 = at; at += h * o;
    l.c1 = at; at += h;
    l.v2 = at; at += h * h;
    l.c2 = at; at += h;
    l.v3 = at; at += h; // 1 x hidden
    l.c3 = at; at += 1;
    l.sv = at; at += o; // observation -> value bypass
    l.total = at;
    return l;
}

bool PolicyParameters::all_finite() const {
    for (double v : flat) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

PolicyParameters PolicyParameters::random_init(int obs_dim, int act_dim, int hidden_size, uint64_t seed,
                                               double init_log_std) {
    if (obs_dim <= 0 || act_dim <= 0 || hidden_size <= 0) {
        throw std::invalid_argument("policy: dimensions must be positive");
    }
    PolicyParameters p;
    p.obs_dim = obs_dim;
    p.act_dim = act_dim;
    p.hidden_size = hidden_size;
    const ParamLayout l = p.layout();
    p.flat.assign(l.total, 0.0);

    Rng rng(Rng::mix(seed, 0x504F4C49435955ULL));
    auto fill = [&](size_t off, int rows, int cols, double gain) {
        const double s = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (size_t i = 0; i < static_cast<size_t>(rows) * static_cast<size_t>(cols); ++i) {
            p.flat[off + i] = rng.uniform(-s, s);
        }
    };
    fill(l.w1, hidden_size, obs_dim, 1.0);
    fill(l.w2, hidden_size, hidden_size, 1.0);
    fill(l.w3, act_dim, hidden_size, 0.1); // small initial means: mid-range actions
    fill(l.v1, hidden_size, obs_dim, 1.0);
    fill(l.v2, hidden_size, hidden_size, 1.0);
    fill(l.v3, 1, hidden_size, 1.0);
    for (int j = 0; j < act_dim; ++j) {
        p.flat[l.log_std + static_cast<size_t>(j)] = init_log_std;
    }
    return p;
}

DispatchAction squash_action(const std::array<double, 4>& z) {
    DispatchAction a;
    a.solar_frac = sigmoid(z[0]);
    a.wind_frac = sigmoid(z[1]);
    a.conventional_frac = sigmoid(z[2]);
    a.battery_frac = std::tanh(z[3]);
    return a;
}

double squash_log_jacobian(const std::array<double, 4>& z) {
    double lj = 0.0;
    for (int j = 0; j < 3; ++j) {
        // log sigmoid'(z) = -softplus(z) - softplus(-z)
        lj += -softplus(z[static_cast<size_t>(j)]) - softplus(-z[static_cast<size_t>(j)]);
    }
    // log(1 - tanh^2 z) = 2 (log 2 - z - softplus(-2z))
    lj += 2.0 * (std::log(2.0) - z[3] - softplus(-2.0 * z[3]));
    return lj;
}

PolicyNet::PolicyNet(const PolicyParameters& params) : params_(&params), lay_(params.layout()) {
    if (params.act_dim != 4) {
        throw std::invalid_argument("policy: action head must have 4 dims");
    }
    if (params.flat.size() != lay_.total) {
        throw std::invalid_argument("policy: parameter vector size does not match layout");
    }
}

PolicyForward PolicyNet::forward_policy(const std::vector<double>& obs) const {
    if (static_cast<int>(obs.size()) != lay_.obs_dim) {
        throw std::invalid_argument("policy: observation size mismatch");
    }
    const std::vector<double>& f = params_->flat;
    PolicyForward out;
    out.x = obs;
    out.h1.resize(static_cast<size_t>(lay_.hidden));
    out.h2.resize(static_cast<size_t>(lay_.hidden));
    affine(f, lay_.w1, lay_.b1, lay_.hidden, lay_.obs_dim, obs.data(), out.h1.data());
    for (double& v : out.h1) {
        v = std::tanh(v);
    }
    affine(f, lay_.w2, lay_.b2, lay_.hidden, lay_.hidden, out.h1.data(), out.h2.data());
    for (double& v : out.h2) {
        v = std::tanh(v);
    }
    affine(f, lay_.w3, lay_.b3, lay_.act_dim, lay_.hidden, out.h2.data(), out.mean.data());
    for (int a = 0; a < lay_.act_dim; ++a) {
        const size_t row = lay_.s3 + static_cast<size_t>(a) * static_cast<size_t>(lay_.obs_dim);
        double acc = 0.0;
        for (int o = 0; o < lay_.obs_dim; ++o) {
            acc += f[row + static_cast<size_t>(o)] * obs[static_cast<size_t>(o)];
        }
        out.mean[static_cast<size_t>(a)] += acc;
    }
    for (int j = 0; j < lay_.act_dim; ++j) {
        const double raw = f[lay_.log_std + static_cast<size_t>(j)];
        out.log_std[static_cast<size_t>(j)] = std::clamp(raw, kLogStdMin, kLogStdMax);
        out.log_std_active[static_cast<size_t>(j)] = raw > kLogStdMin && raw < kLogStdMax;
    }
    return out;
}

ValueForward PolicyNet::forward_value(const std::vector<double>& obs) const {
    if (static_cast<int>(obs.size()) != lay_.obs_dim) {
        throw std::invalid_argument("policy: observation size mismatch");
    }
    const std::vector<double>& f = params_->flat;
    ValueForward out;
    out.x = obs;
    out.h1.resize(static_cast<size_t>(lay_.hidden));
    out.h2.resize(static_cast<size_t>(lay_.hidden));
    affine(f, lay_.v1, lay_.c1, lay_.hidden, lay_.obs_dim, obs.data(), out.h1.data());
    for (double& v : out.h1) {
        v = std::tanh(v);
    }
    affine(f, lay_.v2, lay_.c2, lay_.hidden, lay_.hidden, out.h1.data(), out.h2.data());
    for (double& v : out.h2) {
        v = std::tanh(v);
    }
    double value = 0.0;
    affine(f, lay_.v3, lay_.c3, 1, lay_.hidden, out.h2.data(), &value);
    for (int o = 0; o < lay_.obs_dim; ++o) {
        value += f[lay_.sv + static_cast<size_t>(o)] * obs[static_cast<size_t>(o)];
    }
    out.value = value;
    return out;
}

ActionSample PolicyNet::sample(const std::vector<double>& obs, Rng& rng) const {
    std::array<double, 4> eps{};
    for (double& e : eps) {
        e = rng.gaussian();
    }
    return sample_with_noise(obs, eps);
}

ActionSample PolicyNet::sample_with_noise(const std::vector<double>& obs,
                                          const std::array<double, 4>& eps) const {
    const PolicyForward fwd = forward_policy(obs);
    ActionSample s;
    for (int j = 0; j < 4; ++j) {
        const auto sj = static_cast<size_t>(j);
        s.presquash[sj] = fwd.mean[sj] + std::exp(fwd.log_std[sj]) * eps[sj];
    }
    s.action = squash_action(s.presquash);
    s.log_prob = log_prob(fwd, s.presquash);
    return s;
}

ActionSample PolicyNet::deterministic(const std::vector<double>& obs) const {
    const PolicyForward fwd = forward_policy(obs);
    ActionSample s;
    s.presquash = fwd.mean;
    s.action = squash_action(s.presquash);
    s.log_prob = log_prob(fwd, s.presquash);
    return s;
}

double PolicyNet::log_prob_gaussian(const PolicyForward& f, const std::array<double, 4>& z) const {
    double lp = 0.0;
    for (int j = 0; j < 4; ++j) {
        const auto sj = static_cast<size_t>(j);
        const double u = (z[sj] - f.mean[sj]) * std::exp(-f.log_std[sj]);
        lp += -0.5 * kLog2Pi - f.log_std[sj] - 0.5 * u * u;
    }
    return lp;
}

double PolicyNet::log_prob(const PolicyForward& f, const std::array<double, 4>& z) const {
    return log_prob_gaussian(f, z) - squash_log_jacobian(z);
}

double PolicyNet::entropy() const {
    // Diagonal Gaussian: sum_j (log_std_j + 0.5 log(2*pi*e)).
    double h = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double raw = params_->flat[lay_.log_std + static_cast<size_t>(j)];
        h += std::clamp(raw, kLogStdMin, kLogStdMax) + 0.5 * (kLog2Pi + 1.0);
    }
    return h;
}

namespace {

// Backprop of coeff * d(out)/d(theta) through an obs->hidden->hidden->out
// stack with tanh hidden activations, accumulating into grad. go is the
// gradient at the output layer (length rows_out).
void mlp_backward(const std::vector<double>& flat, std::vector<double>& grad, const ParamLayout& lay,
                  size_t w1, size_t b1, size_t w2, size_t b2, size_t w3, size_t b3, int rows_out,
                  const std::vector<double>& x, const std::vector<double>& h1,
                  const std::vector<double>& h2, const double* go) {
    const int hid = lay.hidden;
    const int obs = lay.obs_dim;
    std::vector<double> da2(static_cast<size_t>(hid), 0.0);
    for (int o = 0; o < rows_out; ++o) {
        const double g = go[o];
        if (g == 0.0) {
            continue;
        }
        const size_t row = w3 + static_cast<size_t>(o) * static_cast<size_t>(hid);
        grad[b3 + static_cast<size_t>(o)] += g;
        for (int j = 0; j < hid; ++j) {
            const auto sj = static_cast<size_t>(j);
            grad[row + sj] += g * h2[sj];
            da2[sj] += g * flat[row + sj];
        }
    }
    std::vector<double> da1(static_cast<size_t>(hid), 0.0);
    for (int j = 0; j < hid; ++j) {
        const auto sj = static_cast<size_t>(j);
        const double g = da2[sj] * (1.0 - h2[sj] * h2[sj]); // through tanh
        if (g == 0.0) {
            continue;
        }
        const size_t row = w2 + sj * static_cast<size_t>(hid);
        grad[b2 + sj] += g;
        for (int k = 0; k < hid; ++k) {
            const auto sk = static_cast<size_t>(k);
            grad[row + sk] += g * h1[sk];
            da1[sk] += g * flat[row + sk];
        }
    }
    for (int k = 0; k < hid; ++k) {
        const auto sk = static_cast<size_t>(k);
        const double g = da1[sk] * (1.0 - h1[sk] * h1[sk]);
        if (g == 0.0) {
            continue;
        }
        const size_t row = w1 + sk * static_cast<size_t>(obs);
        grad[b1 + sk] += g;
        for (int m = 0; m < obs; ++m) {
            grad[row + static_cast<size_t>(m)] += g * x[static_cast<size_t>(m)];
        }
    }
}

} // namespace

void PolicyNet::accumulate_policy_grad(const PolicyForward& f, const std::array<double, 4>& z,
                                       double coeff, std::vector<double>& grad) const {
    if (grad.size() != lay_.total) {
        throw std::invalid_argument("policy: gradient buffer size mismatch");
    }
    // d logN / d mean_j = (z - mean) / sigma^2; d logN / d log_std_j =
    // -1 + ((z - mean)/sigma)^2. The squash Jacobian depends only on z.
    std::array<double, 4> dmean{};
    for (int j = 0; j < 4; ++j) {
        const auto sj = static_cast<size_t>(j);
        const double inv_sigma = std::exp(-f.log_std[sj]);
        const double u = (z[sj] - f.mean[sj]) * inv_sigma;
        dmean[sj] = coeff * u * inv_sigma;
        if (f.log_std_active[sj]) {
            grad[lay_.log_std + sj] += coeff * (u * u - 1.0);
        }
    }
    mlp_backward(params_->flat, grad, lay_, lay_.w1, lay_.b1, lay_.w2, lay_.b2, lay_.w3, lay_.b3,
                 lay_.act_dim, f.x, f.h1, f.h2, dmean.data());
    for (int a = 0; a < lay_.act_dim; ++a) {
        const double g = dmean[static_cast<size_t>(a)];
        if (g == 0.0) {
            continue;
        }
        const size_t row = lay_.s3 + static_cast<size_t>(a) * static_cast<size_t>(lay_.obs_dim);
        for (int o = 0; o < lay_.obs_dim; ++o) {
            grad[row + static_cast<size_t>(o)] += g * f.x[static_cast<size_t>(o)];
        }
    }
}

void PolicyNet::accumulate_value_grad(const ValueForward& f, double coeff,
                                      std::vector<double>& grad) const {
    if (grad.size() != lay_.total) {
        throw std::invalid_argument("policy: gradient buffer size mismatch");
    }
    mlp_backward(params_->flat, grad, lay_, lay_.v1, lay_.c1, lay_.v2, lay_.c2, lay_.v3, lay_.c3, 1,
                 f.x, f.h1, f.h2, &coeff);
    for (int o = 0; o < lay_.obs_dim; ++o) {
        grad[lay_.sv + static_cast<size_t>(o)] += coeff * f.x[static_cast<size_t>(o)];
    }
}

void PolicyNet::accumulate_entropy_grad(double coeff, std::vector<double>& grad) const {
    if (grad.size() != lay_.total) {
        throw std::invalid_argument("policy: gradient buffer size mismatch");
    }
    for (int j = 0; j < 4; ++j) {
        const auto sj = static_cast<size_t>(j);
        const double raw = params_->flat[lay_.log_std + sj];
        if (raw > kLogStdMin && raw < kLogStdMax) {
            grad[lay_.log_std + sj] += coeff;
        }
    }
}

} // namespace gridtrader
