#pragma once

// AdamW with decoupled weight decay and a warmup-then-cosine learning-rate
// schedule. Operates on the net's named parameter list so moment buffers line
// up with checkpointed tensors.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/net.hpp"

namespace voxsr {

struct OptimConfig {
    double base_lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    double warmup_fraction = 0.1;
    std::int64_t horizon = 1000;  // total planned steps for the LR schedule
};

/// Linear warmup from 0 to base over the first warmup fraction of the
/// horizon, then cosine decay to 0. `step` counts completed steps, so the
/// first update (step = 0) uses LR 0 by the warmup-endpoint convention the
/// tests pin down.
inline double lr_at_step(const OptimConfig& cfg, std::int64_t step) {
    if (cfg.horizon <= 0) throw ConfigError("optimizer: horizon must be positive");
    const double warm = cfg.warmup_fraction * static_cast<double>(cfg.horizon);
    if (warm > 0 && step < warm) return cfg.base_lr * static_cast<double>(step) / warm;
    const double span = static_cast<double>(cfg.horizon) - warm;
    if (span <= 0) return cfg.base_lr;
    const double u = (static_cast<double>(step) - warm) / span;
    const double clamped = u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
    const double pi = 3.14159265358979323846;
    return cfg.base_lr * 0.5 * (1.0 + std::cos(pi * clamped));
}

class AdamW {
  public:
    AdamW() = default;
    AdamW(const OptimConfig& cfg, const std::vector<std::size_t>& param_sizes) : cfg_(cfg) {
        m_.reserve(param_sizes.size());
        v_.reserve(param_sizes.size());
        for (std::size_t n : param_sizes) {
            m_.emplace_back(n, 0.0);
            v_.emplace_back(n, 0.0);
        }
    }

    const OptimConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return step_; }
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    void set_step_count(std::int64_t s) { step_ = s; }

    /// One update over aligned (param, grad) tensor lists. Throws on
    /// non-finite gradients before touching any state.
    void step(std::vector<ParamRef<double>> params, std::vector<ParamRef<double>> grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw ConfigError("optimizer: tensor list does not match optimizer state");
        for (std::size_t i = 0; i < grads.size(); ++i) {
            if (grads[i].data->size() != m_[i].size())
                throw ConfigError("optimizer: tensor " + grads[i].name + " size mismatch");
            if (!all_finite(*grads[i].data))
                throw NumericError("optimizer: non-finite gradient in " + grads[i].name);
        }

        const double lr = lr_at_step(cfg_, step_);
        const double t = static_cast<double>(step_ + 1);
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            std::vector<double>& p = *params[i].data;
            const std::vector<double>& g = *grads[i].data;
            std::vector<double>& m = m_[i];
            std::vector<double>& v = v_[i];
            for (std::size_t k = 0; k < p.size(); ++k) {
                m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
                v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
                const double mhat = m[k] / bc1;
                const double vhat = v[k] / bc2;
                p[k] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p[k]);
            }
        }
        ++step_;
    }

  private:
    OptimConfig cfg_;
    std::int64_t step_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace voxsr
