#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "voxsr/common.hpp"
#include "voxsr/image.hpp"
#include "voxsr/mask.hpp"
#include "voxsr/rng.hpp"
#include "voxsr/schedule.hpp"
#include "voxsr/volume.hpp"

namespace voxsr {

/// When to blend the observation back into the partially denoised image.
/// EveryStep re-interlaces after each reverse step (default, matches the
/// training-time conditioning distribution); InitOnly blends once into x_T
/// and is kept for the ablation.
enum class InterlaceMode { EveryStep, InitOnly };

struct DiffusionConfig {
    int steps = 200;  // paper-scale runs use 1000
    ScheduleKind schedule = ScheduleKind::Cosine;
    InterlaceMode interlace = InterlaceMode::EveryStep;
};

inline NoiseSchedule make_schedule(const DiffusionConfig& cfg) {
    return build_schedule(cfg.schedule, cfg.steps);
}

/// Forward process: sqrt(ab_t) * x0 + sqrt(1 - ab_t) * eps. The noise is
/// supplied by the caller so draws stay reproducible.
template <class T>
inline BasicImage2D<T> q_sample(const BasicImage2D<T>& x0, int t, const BasicImage2D<T>& eps,
                                const NoiseSchedule& sched) {
    sched.check_t(t);
    require_same_shape(x0, eps, "q_sample");
    const double ab = sched.alpha_bar(t);
    const T signal = static_cast<T>(std::sqrt(ab));
    const T noise = static_cast<T>(std::sqrt(1.0 - ab));
    BasicImage2D<T> out(x0.channels, x0.rows, x0.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = signal * x0.data[i] + noise * eps.data[i];
    return out;
}

/// Which entries the training objective is measured on. Conditioned rows
/// carry clean image content, so the residual noise there is zero; the
/// default measures the prediction error on the free rows only. MaskedTarget
/// keeps the alternative polarity (target zeroed off the mask, measured
/// everywhere) behind this switch.
enum class LossRows { FreeRows, MaskedTarget };

enum class LossNorm { L1, L2 };

struct LossConfig {
    LossRows rows = LossRows::FreeRows;
    LossNorm norm = LossNorm::L1;
};

/// Masked-slice training objective: noise x_high to step t, interlace the
/// clean rows back in as conditioning, and score the denoiser's noise
/// prediction. Returns the mean per-entry error in double.
template <class T, class Den>
inline double training_loss(Den&& denoiser, const BasicImage2D<T>& x_high, const RowMask& mask,
                            int t, const BasicImage2D<T>& eps, const NoiseSchedule& sched,
                            const LossConfig& cfg = {}) {
    if (x_high.rows != mask.n)
        throw DataError("training_loss: image rows " + std::to_string(x_high.rows) +
                        " != mask n " + std::to_string(mask.n));
    const BasicImage2D<T> x_t = q_sample(x_high, t, eps, sched);
    const BasicImage2D<T> cond = interlace(x_t, x_high, mask);
    const BasicImage2D<T> pred = denoiser(cond, t);
    require_same_shape(pred, x_high, "training_loss: prediction");

    const auto bits = mask.bits();
    double sum = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < x_high.channels; ++c)
        for (int r = 0; r < x_high.rows; ++r) {
            double target_scale;
            if (cfg.rows == LossRows::FreeRows) {
                if (bits[r]) continue;  // conditioned rows carry no noise to predict
                target_scale = 1.0;
            } else {
                target_scale = bits[r] ? 1.0 : 0.0;
            }
            for (int col = 0; col < x_high.cols; ++col) {
                const double d = target_scale * static_cast<double>(eps.at(c, r, col)) -
                                 static_cast<double>(pred.at(c, r, col));
                sum += cfg.norm == LossNorm::L1 ? std::abs(d) : d * d;
                ++count;
            }
        }
    if (count == 0) throw DataError("training_loss: no rows to score");
    return sum / static_cast<double>(count);
}

/// One ancestral reverse step: mean (x_t - beta_t/sqrt(1-ab_t) * eps_hat)/sqrt(alpha_t),
/// variance beta_t, and no noise at t = 1.
template <class T, class Den>
inline BasicImage2D<T> ddpm_reverse_step(Den&& denoiser, const BasicImage2D<T>& x_t, int t,
                                         const NoiseSchedule& sched, Rng& rng) {
    sched.check_t(t);
    const BasicImage2D<T> eps_hat = denoiser(x_t, t);
    require_same_shape(eps_hat, x_t, "ddpm_reverse_step: prediction");
    const double beta = sched.beta(t);
    const double ab = sched.alpha_bar(t);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha(t));
    const double eps_coef = beta / std::sqrt(1.0 - ab);
    const double sigma = std::sqrt(beta);
    BasicImage2D<T> out(x_t.channels, x_t.rows, x_t.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double mu = inv_sqrt_alpha *
                    (static_cast<double>(x_t.data[i]) - eps_coef * static_cast<double>(eps_hat.data[i]));
        if (t > 1) mu += sigma * rng.normal();
        out.data[i] = static_cast<T>(mu);
    }
    return out;
}

/// Full reverse-diffusion restoration of one slice. The observation carries
/// the mask's rows (l x cols); output is mask.n x cols with the conditioned
/// rows bit-equal to the observation (EveryStep mode) and all values clamped
/// to [0,1] on return.
template <class T, class Den>
inline BasicImage2D<T> restore(Den&& denoiser, const BasicImage2D<T>& observation,
                               const RowMask& mask, const NoiseSchedule& sched, Rng& rng,
                               InterlaceMode mode = InterlaceMode::EveryStep) {
    if (observation.rows != mask.count() && observation.rows != mask.n)
        throw DataError("restore: observation has " + std::to_string(observation.rows) +
                        " rows; mask expects " + std::to_string(mask.count()) + " (or " +
                        std::to_string(mask.n) + ")");
    BasicImage2D<T> x = normal_image<T>(observation.channels, mask.n, observation.cols, rng);
    x = interlace(x, observation, mask);
    for (int t = sched.steps(); t >= 1; --t) {
        x = ddpm_reverse_step(denoiser, x, t, sched, rng);
        if (mode == InterlaceMode::EveryStep) x = interlace(x, observation, mask);
    }
    return clamped01(std::move(x));
}

inline std::uint64_t slice_seed(std::uint64_t master, Axis axis, int index) {
    return mix_seed({master, static_cast<std::uint64_t>(axis) + 1, static_cast<std::uint64_t>(index)});
}

/// Slices an anisotropic volume along XZ or YZ, restores every slice
/// independently under the uniform z-grid mask, and reassembles an isotropic
/// n^3 volume. Per-slice seeds make the result independent of execution
/// order, so slices may be restored in parallel.
template <class Den>
inline Volume superresolve_along_axis(const Volume& v, Axis axis, Den&& denoiser,
                                      const NoiseSchedule& sched, InterlaceMode mode,
                                      std::uint64_t master_seed, int threads = 1) {
    if (axis == Axis::XY) throw DataError("superresolve_along_axis: axis must be XZ or YZ");
    if (v.height != v.width)
        throw DataError("superresolve_along_axis: lateral dims must match, got " +
                        shape_string(v.channels, v.height, v.width, v.depth));
    const int n = v.height;
    if (v.depth < 1 || v.depth > n || n % v.depth != 0)
        throw DataError("superresolve_along_axis: depth " + std::to_string(v.depth) +
                        " must divide n = " + std::to_string(n));
    const RowMask mask = make_uniform_mask(n, v.depth);
    Volume out(v.channels, n, n, n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        const Image2D obs = slice(v, axis, static_cast<int>(i));
        Rng rng(slice_seed(master_seed, axis, static_cast<int>(i)));
        const Image2D restored = restore(denoiser, obs, mask, sched, rng, mode);
        set_slice(out, axis, static_cast<int>(i), restored);
    });
    return out;
}

/// Directional reconstructions plus their voxelwise mean.
struct SuperResolved {
    Volume xz;
    Volume yz;
    Volume averaged;
};

template <class Den>
inline SuperResolved superresolve_volume(const Volume& v, Den&& denoiser,
                                         const NoiseSchedule& sched, InterlaceMode mode,
                                         std::uint64_t master_seed, int threads = 1) {
    SuperResolved r;
    r.xz = superresolve_along_axis(v, Axis::XZ, denoiser, sched, mode, master_seed, threads);
    r.yz = superresolve_along_axis(v, Axis::YZ, denoiser, sched, mode, master_seed, threads);
    r.averaged = average_volumes(r.xz, r.yz);
    return r;
}

}  // namespace voxsr
