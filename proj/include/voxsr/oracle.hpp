#pragma once

#include <cmath>

#include "voxsr/common.hpp"
#include "voxsr/image.hpp"
#include "voxsr/schedule.hpp"

namespace voxsr {

/// Closed-form noise predictor for i.i.d. Gaussian data x0 ~ N(mean, variance):
/// the exact conditional expectation of the forward noise given x_t,
///   E[eps | x_t] = sqrt(1-ab_t) * (x_t - sqrt(ab_t)*mean) / (ab_t*variance + 1 - ab_t).
/// Used as a verification reference for the sampler and the trained model.
class GaussianOracleDenoiser {
public:
    GaussianOracleDenoiser(double mean, double variance, const NoiseSchedule& sched)
        : mean_(mean), variance_(variance), sched_(&sched) {
        if (!(variance > 0.0)) throw DataError("GaussianOracleDenoiser: variance must be > 0");
    }

    template <class T>
    BasicImage2D<T> operator()(const BasicImage2D<T>& x_t, int t) const {
        const double ab = sched_->alpha_bar(t);
        const double scale = std::sqrt(1.0 - ab) / (ab * variance_ + 1.0 - ab);
        const double center = std::sqrt(ab) * mean_;
        BasicImage2D<T> out(x_t.channels, x_t.rows, x_t.cols);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = static_cast<T>((static_cast<double>(x_t.data[i]) - center) * scale);
        return out;
    }

    double mean() const { return mean_; }
    double variance() const { return variance_; }

private:
    double mean_;
    double variance_;
    const NoiseSchedule* sched_;
};

}  // namespace voxsr
