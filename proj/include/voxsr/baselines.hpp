#pragma once

// Reference methods the diffusion restorer is compared against: nearest and
// linear z-upsampling, a one-shot masked-slice regressor, a recursive
// two-plane interpolator, and the 3x3x3 Gaussian blur post-process.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "voxsr/diffusion.hpp"
#include "voxsr/net.hpp"
#include "voxsr/optim.hpp"
#include "voxsr/volume.hpp"

namespace voxsr {

enum class BaselineKind { NN, LinearZ, MSRegression, E2EInterp };

inline const char* baseline_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::NN: return "nn";
        case BaselineKind::LinearZ: return "linear";
        case BaselineKind::MSRegression: return "ms-regression";
        case BaselineKind::E2EInterp: return "e2e";
    }
    return "?";
}

/// Replicates each plane: output plane z comes from source plane z/factor.
inline Volume nn_upsample_z(const Volume& v, int factor) {
    if (factor < 1) throw DataError("nn_upsample_z: factor must be >= 1");
    Volume out(v.channels, v.height, v.width, v.depth * factor);
    for (int c = 0; c < v.channels; ++c)
        for (int h = 0; h < v.height; ++h)
            for (int w = 0; w < v.width; ++w) {
                const float* src = v.data.data() + v.index(c, h, w, 0);
                float* dst = out.data.data() + out.index(c, h, w, 0);
                for (int z = 0; z < out.depth; ++z) dst[z] = src[z / factor];
            }
    return out;
}

/// Linear interpolation along z between adjacent source planes; the trailing
/// planes past the last source plane clamp to it (no extrapolation).
inline Volume linear_upsample_z(const Volume& v, int factor) {
    if (factor < 1) throw DataError("linear_upsample_z: factor must be >= 1");
    if (v.depth < 2) throw DataError("linear_upsample_z: need at least 2 planes");
    Volume out(v.channels, v.height, v.width, v.depth * factor);
    for (int c = 0; c < v.channels; ++c)
        for (int h = 0; h < v.height; ++h)
            for (int w = 0; w < v.width; ++w) {
                const float* src = v.data.data() + v.index(c, h, w, 0);
                float* dst = out.data.data() + out.index(c, h, w, 0);
                for (int z = 0; z < out.depth; ++z) {
                    const double s = static_cast<double>(z) / factor;
                    int lo = static_cast<int>(s);
                    if (lo >= v.depth - 1) {
                        dst[z] = src[v.depth - 1];
                        continue;
                    }
                    const double w1 = s - lo;
                    dst[z] = static_cast<float>((1.0 - w1) * src[lo] + w1 * src[lo + 1]);
                }
            }
    return out;
}

/// 2D counterpart of nn_upsample_z for an arbitrary row mask: every free row
/// copies the nearest conditioned row at or above it (rows before the first
/// conditioned row clamp to that first row).
inline Image2D nn_restore_rows(const Image2D& obs, const RowMask& mask) {
    if (obs.rows != mask.count())
        throw DataError("nn_restore_rows: observation must carry one row per mask index");
    Image2D out(obs.channels, mask.n, obs.cols);
    int k = 0;
    for (int r = 0; r < mask.n; ++r) {
        while (k + 1 < mask.count() && mask.indices[k + 1] <= r) ++k;
        for (int c = 0; c < obs.channels; ++c)
            for (int col = 0; col < obs.cols; ++col) out.at(c, r, col) = obs.at(c, k, col);
    }
    return out;
}

/// 2D counterpart of linear_upsample_z: linear interpolation between
/// consecutive conditioned rows, clamping outside their span.
inline Image2D linear_restore_rows(const Image2D& obs, const RowMask& mask) {
    if (obs.rows != mask.count())
        throw DataError("linear_restore_rows: observation must carry one row per mask index");
    Image2D out(obs.channels, mask.n, obs.cols);
    int k = 0;
    for (int r = 0; r < mask.n; ++r) {
        while (k + 1 < mask.count() && mask.indices[k + 1] <= r) ++k;
        const int lo = mask.indices[k];
        const bool tail = k + 1 >= mask.count();
        const int hi = tail ? lo : mask.indices[k + 1];
        const double w1 = r <= lo ? 0.0 : tail ? 0.0 : (r - lo) / static_cast<double>(hi - lo);
        for (int c = 0; c < obs.channels; ++c)
            for (int col = 0; col < obs.cols; ++col)
                out.at(c, r, col) = static_cast<float>((1.0 - w1) * obs.at(c, k, col) +
                                                       w1 * obs.at(c, tail ? k : k + 1, col));
    }
    return out;
}

/// Separable 3-tap Gaussian ([1,2,1]/4 per axis) with clamped borders.
inline Volume gaussian_blur_3d(const Volume& v) {
    auto pass = [&](const Volume& in, int axis) {
        Volume out(in.channels, in.height, in.width, in.depth);
        const int dims[3] = {in.height, in.width, in.depth};
        for (int c = 0; c < in.channels; ++c)
            for (int h = 0; h < in.height; ++h)
                for (int w = 0; w < in.width; ++w)
                    for (int z = 0; z < in.depth; ++z) {
                        int p[3] = {h, w, z};
                        const int mid = p[axis];
                        auto tap = [&](int off) {
                            int q[3] = {p[0], p[1], p[2]};
                            q[axis] = std::clamp(mid + off, 0, dims[axis] - 1);
                            return static_cast<double>(
                                in.data[in.index(c, q[0], q[1], q[2])]);
                        };
                        out.data[out.index(c, h, w, z)] = static_cast<float>(
                            0.25 * tap(-1) + 0.5 * tap(0) + 0.25 * tap(1));
                    }
        return out;
    };
    return pass(pass(pass(v, 0), 1), 2);
}

// ---------------------------------------------------------------------------
// Shared one-shot regressor training (used by ms-regression and e2e)

struct RegressionTrainConfig {
    int steps = 500;
    int batch = 32;
    int l_min = 5;  // mask bounds; only the masked-slice regressor uses them
    int l_max = 20;
    OptimConfig optim;
    std::uint64_t seed = 0;
};

struct TrainStepRecordLite {
    int step = 0;
    double loss = 0.0;
};

namespace detail {

constexpr std::uint64_t kRegressionStreamTag = 0x72656773u;

/// Generic L1 regression loop: `sampler(rng, input, target, score_row)` fills
/// one example; score_row may mark rows excluded from the loss (0 = skip).
template <class Sampler>
TinyDenoiserNet<double> train_regressor(const NetConfig& netcfg,
                                        const RegressionTrainConfig& cfg, Sampler&& sampler,
                                        std::vector<TrainStepRecordLite>* log = nullptr) {
    TinyDenoiserNet<double> net = TinyDenoiserNet<double>::init(netcfg, cfg.seed);
    std::vector<std::size_t> sizes;
    for (auto ref : net.params()) sizes.push_back(ref.data->size());
    AdamW optim(cfg.optim, sizes);
    TinyDenoiserNet<double> grads = TinyDenoiserNet<double>::shaped(netcfg);

    for (int step = 0; step < cfg.steps; ++step) {
        Rng rng(mix_seed({cfg.seed, kRegressionStreamTag, static_cast<std::uint64_t>(step)}));
        for (auto ref : grads.params()) std::fill(ref.data->begin(), ref.data->end(), 0.0);
        double loss = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            BasicImage2D<double> input, target;
            std::vector<unsigned char> score_row;
            sampler(rng, input, target, score_row);

            NetTrace<double> trace;
            const BasicImage2D<double> pred = net.forward(input, 0, &trace);
            require_same_shape(pred, target, "train_regressor: target");

            BasicImage2D<double> upstream(pred.channels, pred.rows, pred.cols, 0.0);
            double item = 0.0;
            std::size_t count = 0;
            for (int c = 0; c < pred.channels; ++c)
                for (int r = 0; r < pred.rows; ++r) {
                    if (!score_row.empty() && !score_row[static_cast<std::size_t>(r)])
                        continue;
                    for (int col = 0; col < pred.cols; ++col) {
                        const double d = pred.at(c, r, col) - target.at(c, r, col);
                        item += std::abs(d);
                        upstream.at(c, r, col) = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                        ++count;
                    }
                }
            if (count == 0) throw DataError("train_regressor: nothing to score");
            item /= static_cast<double>(count);
            const double scale = 1.0 / (static_cast<double>(count) * cfg.batch);
            for (auto& g : upstream.data) g *= scale;
            net.backward(trace, upstream, grads);
            loss += item;
        }
        loss /= cfg.batch;
        if (!std::isfinite(loss))
            throw NumericError("train_regressor: non-finite loss at step " +
                               std::to_string(step));
        optim.step(net.params(), grads.params());
        if (log) log->push_back({step, loss});
    }
    return net;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Masked-slice regression: one forward pass instead of a reverse diffusion

/// Trains a slice regressor on interlace(noise, slice, mask) -> slice, L1 on
/// the free rows.
inline TinyDenoiserNet<double> train_ms_regression(const std::vector<Image2D>& dataset,
                                                   const NetConfig& netcfg,
                                                   const RegressionTrainConfig& cfg,
                                                   std::vector<TrainStepRecordLite>* log = nullptr) {
    if (dataset.empty()) throw DataError("train_ms_regression: empty dataset");
    const int n = dataset.front().rows;
    for (const auto& img : dataset)
        if (img.rows != n || img.cols != n || img.channels != netcfg.channels)
            throw DataError("train_ms_regression: dataset slices must share the net's shape");
    if (cfg.l_min < 1 || cfg.l_max < cfg.l_min || cfg.l_max >= n)
        throw ConfigError("train_ms_regression: need 1 <= l_min <= l_max < " +
                          std::to_string(n));
    if (netcfg.in_extra != 0)
        throw ConfigError("train_ms_regression: regressor takes no extra input channels");

    auto sampler = [&](Rng& rng, BasicImage2D<double>& input, BasicImage2D<double>& target,
                       std::vector<unsigned char>& score_row) {
        const auto& slice = dataset[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(dataset.size()) - 1))];
        const RowMask mask = sample_random_mask(n, cfg.l_min, cfg.l_max, rng);
        target = slice.cast<double>();
        BasicImage2D<double> noise(target.channels, n, n);
        for (auto& v : noise.data) v = rng.normal();
        BasicImage2D<double> cond = interlace(noise, target, mask);
        if (netcfg.mask_channel) {
            input = BasicImage2D<double>(cond.channels + 1, n, n);
            std::copy(cond.data.begin(), cond.data.end(), input.data.begin());
            const auto bits = mask.bits();
            double* plane = input.data.data() + cond.data.size();
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c)
                    plane[static_cast<std::size_t>(r) * n + c] = bits[r] ? 1.0 : 0.0;
        } else {
            input = std::move(cond);
        }
        const auto bits = mask.bits();
        score_row.assign(static_cast<std::size_t>(n), 1);
        for (int r = 0; r < n; ++r)
            if (bits[r]) score_row[static_cast<std::size_t>(r)] = 0;
    };
    return detail::train_regressor(netcfg, cfg, sampler, log);
}

/// One-shot restoration: regress the slice from noise interlaced with the
/// observation, then copy the conditioned rows back in and clamp.
inline Image2D ms_regression_restore(const TinyDenoiserNet<float>& model,
                                     const Image2D& observation, const RowMask& mask,
                                     Rng& rng) {
    const int n = mask.n;
    Image2D noise = normal_image(model.cfg.channels, n, observation.cols, rng);
    Image2D cond = interlace(noise, observation, mask);
    Image2D input;
    if (model.cfg.mask_channel) {
        input = Image2D(cond.channels + 1, n, cond.cols);
        std::copy(cond.data.begin(), cond.data.end(), input.data.begin());
        const auto bits = mask.bits();
        float* plane = input.data.data() + cond.data.size();
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < cond.cols; ++c)
                plane[static_cast<std::size_t>(r) * cond.cols + c] = bits[r] ? 1.0f : 0.0f;
    } else {
        input = std::move(cond);
    }
    Image2D out = model.forward(input, 0);
    out = interlace(out, observation, mask);  // conditioned rows verbatim
    return clamped01(out);
}

/// Volume restoration with the regressor: same slicing, masking, seeding and
/// averaging pipeline as the diffusion restorer.
inline Volume ms_regression_upsample(const Volume& v, const TinyDenoiserNet<float>& model,
                                     std::uint64_t master_seed, int threads = 1) {
    auto along = [&](Axis axis) {
        const int n = axis == Axis::XZ ? v.height : v.width;
        if (v.height != v.width || n % v.depth != 0)
            throw DataError("ms_regression_upsample: need square full-res H = W divisible by depth");
        const RowMask mask = make_uniform_mask(n, v.depth);
        Volume out(v.channels, v.height, v.width, n);
        parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
            Rng rng(slice_seed(master_seed, axis, static_cast<int>(i)));
            const Image2D obs = slice(v, axis, static_cast<int>(i));
            set_slice(out, axis, static_cast<int>(i),
                      ms_regression_restore(model, obs, mask, rng));
        });
        return out;
    };
    return average_volumes(along(Axis::XZ), along(Axis::YZ));
}

// ---------------------------------------------------------------------------
// Two-plane interpolator with recursive doubling

/// Trains the midpoint predictor on (plane[z-1], plane[z+1]) -> plane[z]
/// triples drawn from full-resolution volumes.
inline TinyDenoiserNet<double> train_e2e(const std::vector<Volume>& volumes,
                                         const NetConfig& netcfg,
                                         const RegressionTrainConfig& cfg,
                                         std::vector<TrainStepRecordLite>* log = nullptr) {
    if (volumes.empty()) throw DataError("train_e2e: no volumes");
    for (const auto& v : volumes) {
        if (v.depth < 3) throw DataError("train_e2e: volumes need depth >= 3");
        if (v.channels != netcfg.channels)
            throw DataError("train_e2e: channel mismatch with net config");
    }
    if (netcfg.in_extra != netcfg.channels)
        throw ConfigError("train_e2e: net must take a second plane (in_extra = channels)");

    auto sampler = [&](Rng& rng, BasicImage2D<double>& input, BasicImage2D<double>& target,
                       std::vector<unsigned char>& score_row) {
        const Volume& v = volumes[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(volumes.size()) - 1))];
        const int z = rng.uniform_int(1, v.depth - 2);
        const Image2D a = slice(v, Axis::XY, z - 1);
        const Image2D mid = slice(v, Axis::XY, z);
        const Image2D b = slice(v, Axis::XY, z + 1);
        input = BasicImage2D<double>(2 * v.channels, a.rows, a.cols);
        for (std::size_t i = 0; i < a.data.size(); ++i) {
            input.data[i] = a.data[i];
            input.data[a.data.size() + i] = b.data[i];
        }
        target = mid.cast<double>();
        score_row.clear();
    };
    return detail::train_regressor(netcfg, cfg, sampler, log);
}

/// Predicts the plane halfway between two planes (stacked as channels).
inline Image2D e2e_interp(const TinyDenoiserNet<float>& model, const Image2D& plane_a,
                          const Image2D& plane_b) {
    require_same_shape(plane_a, plane_b, "e2e_interp");
    if (model.cfg.in_extra != model.cfg.channels || plane_a.channels != model.cfg.channels)
        throw DataError("e2e_interp: model/plane channel mismatch");
    Image2D input(2 * plane_a.channels, plane_a.rows, plane_a.cols);
    for (std::size_t i = 0; i < plane_a.data.size(); ++i) {
        input.data[i] = plane_a.data[i];
        input.data[plane_a.data.size() + i] = plane_b.data[i];
    }
    return model.forward(input, 0);
}

/// One recursion level inserts a predicted plane between every adjacent pair:
/// depth l -> 2l - 1. After d levels the depth is (l-1)*2^d + 1.
inline Volume e2e_recurse(const Volume& v, const TinyDenoiserNet<float>& model, int levels) {
    if (v.depth < 2) throw DataError("e2e_recurse: need at least 2 planes");
    Volume cur = v;
    for (int lev = 0; lev < levels; ++lev) {
        Volume next(cur.channels, cur.height, cur.width, 2 * cur.depth - 1);
        for (int z = 0; z < cur.depth; ++z) set_slice(next, Axis::XY, 2 * z, slice(cur, Axis::XY, z));
        for (int z = 0; z + 1 < cur.depth; ++z) {
            Image2D mid = e2e_interp(model, slice(cur, Axis::XY, z), slice(cur, Axis::XY, z + 1));
            set_slice(next, Axis::XY, 2 * z + 1, clamped01(mid));
        }
        cur = std::move(next);
    }
    return cur;
}

/// Evaluation-shaped driver: recursion to (l-1)*factor + 1 planes, then the
/// tail replicates the last plane up to depth l*factor.
inline Volume e2e_upsample_z(const Volume& v, const TinyDenoiserNet<float>& model, int factor) {
    if (factor < 1 || (factor & (factor - 1)) != 0)
        throw ConfigError("e2e_upsample_z: factor must be a power of two");
    int levels = 0;
    for (int f = factor; f > 1; f >>= 1) ++levels;
    Volume grown = e2e_recurse(v, model, levels);
    Volume out(v.channels, v.height, v.width, v.depth * factor);
    const Image2D last = slice(grown, Axis::XY, grown.depth - 1);
    for (int z = 0; z < out.depth; ++z)
        set_slice(out, Axis::XY, z, z < grown.depth ? slice(grown, Axis::XY, z) : last);
    return out;
}

}  // namespace voxsr
