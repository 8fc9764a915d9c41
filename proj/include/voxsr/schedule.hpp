#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "voxsr/common.hpp"

namespace voxsr {

/// Forward-process tables for T steps. beta(t), alpha(t) for t in [1,T];
/// alpha_bar(t) for t in [0,T] with alpha_bar(0) = 1 and alpha_bar strictly
/// decreasing.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> beta) : beta_(std::move(beta)) {
        if (beta_.empty()) throw DataError("NoiseSchedule: T must be >= 1");
        alpha_.resize(beta_.size());
        alpha_bar_.resize(beta_.size() + 1);
        alpha_bar_[0] = 1.0;
        for (std::size_t i = 0; i < beta_.size(); ++i) {
            if (!(beta_[i] > 0.0 && beta_[i] < 1.0))
                throw NumericError("NoiseSchedule: beta_" + std::to_string(i + 1) + " = " +
                                   std::to_string(beta_[i]) + " outside (0,1)");
            alpha_[i] = 1.0 - beta_[i];
            alpha_bar_[i + 1] = alpha_bar_[i] * alpha_[i];
        }
    }

    int steps() const { return static_cast<int>(beta_.size()); }

    double beta(int t) const {
        check_t(t);
        return beta_[t - 1];
    }
    double alpha(int t) const {
        check_t(t);
        return alpha_[t - 1];
    }
    /// Valid for t in [0, T].
    double alpha_bar(int t) const {
        if (t < 0 || t > steps())
            throw DataError("alpha_bar: t = " + std::to_string(t) + " outside [0," +
                            std::to_string(steps()) + "]");
        return alpha_bar_[t];
    }

    void check_t(int t) const {
        if (t < 1 || t > steps())
            throw DataError("NoiseSchedule: t = " + std::to_string(t) + " outside [1," +
                            std::to_string(steps()) + "]");
    }

private:
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
};

/// Squared-cosine schedule: alpha_bar(t) = f(t)/f(0) with
/// f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2), s = 0.008, and beta clipped to
/// <= 0.999. Betas are derived from consecutive alpha_bar ratios, so the
/// product identity holds exactly after clipping.
inline NoiseSchedule build_cosine_schedule(int T) {
    if (T < 1) throw DataError("build_cosine_schedule: T must be >= 1");
    constexpr double s = 0.008;
    const auto f = [&](double t) {
        const double u = ((t / T + s) / (1.0 + s)) * std::numbers::pi / 2.0;
        const double c = std::cos(u);
        return c * c;
    };
    const double f0 = f(0.0);
    std::vector<double> beta(T);
    double prev = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double ab = f(static_cast<double>(t)) / f0;
        beta[t - 1] = std::min(1.0 - ab / prev, 0.999);
        prev = ab;
    }
    return NoiseSchedule(std::move(beta));
}

/// Linear beta ramp, 1e-4 to 0.02 across T steps.
inline NoiseSchedule build_linear_schedule(int T) {
    if (T < 1) throw DataError("build_linear_schedule: T must be >= 1");
    constexpr double beta_lo = 1e-4;
    constexpr double beta_hi = 0.02;
    std::vector<double> beta(T);
    if (T == 1) {
        beta[0] = beta_hi;
    } else {
        for (int t = 1; t <= T; ++t)
            beta[t - 1] = beta_lo + (beta_hi - beta_lo) * (t - 1) / static_cast<double>(T - 1);
    }
    return NoiseSchedule(std::move(beta));
}

enum class ScheduleKind { Cosine, Linear };

inline NoiseSchedule build_schedule(ScheduleKind kind, int T) {
    return kind == ScheduleKind::Cosine ? build_cosine_schedule(T) : build_linear_schedule(T);
}

}  // namespace voxsr
