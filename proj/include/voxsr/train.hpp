#pragma once

// Training loop for the slice denoiser. Every step derives its randomness
// from (seed, step) alone, so an interrupted run resumed from a checkpoint
// replays the remaining steps bit-exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "voxsr/checkpoint.hpp"
#include "voxsr/diffusion.hpp"
#include "voxsr/net.hpp"
#include "voxsr/optim.hpp"

namespace voxsr {

struct TrainConfig {
    int steps = 1000;
    int batch = 32;
    int l_min = 5;
    int l_max = 20;
    DiffusionConfig diffusion;
    LossConfig loss;
    OptimConfig optim;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;  // 0: only the final checkpoint
};

struct TrainStepRecord {
    std::int64_t step = 0;
    double lr = 0.0;
    double loss = 0.0;
    int batch_l_min = 0;  // smallest/largest mask size drawn in the batch
    int batch_l_max = 0;
};

using CheckpointSink =
    std::function<void(std::int64_t step, TinyDenoiserNet<double>&, const AdamW&, bool final)>;

namespace detail {

constexpr std::uint64_t kTrainStreamTag = 0x74726169u;  // per-step RNG stream

/// Forward + loss + upstream gradient + backward for one batch item. The
/// upstream gradient is pre-scaled by 1/batch so accumulated gradients come
/// out as the gradient of the mean item loss.
inline double train_item(TinyDenoiserNet<double>& net, TinyDenoiserNet<double>& grads,
                         const BasicImage2D<double>& x_high, const RowMask& mask, int t,
                         const BasicImage2D<double>& eps, const NoiseSchedule& sched,
                         const LossConfig& loss_cfg, int batch) {
    const BasicImage2D<double> x_t = q_sample(x_high, t, eps, sched);
    BasicImage2D<double> cond = interlace(x_t, x_high, mask);

    BasicImage2D<double> input;
    if (net.cfg.mask_channel) {
        input = BasicImage2D<double>(cond.channels + 1, cond.rows, cond.cols);
        std::copy(cond.data.begin(), cond.data.end(), input.data.begin());
        const auto bits = mask.bits();
        double* plane = input.data.data() + cond.data.size();
        for (int r = 0; r < cond.rows; ++r)
            for (int c = 0; c < cond.cols; ++c)
                plane[static_cast<std::size_t>(r) * cond.cols + c] = bits[r] ? 1.0 : 0.0;
    } else {
        input = std::move(cond);
    }

    NetTrace<double> trace;
    const BasicImage2D<double> pred = net.forward(input, t, &trace);

    const auto bits = mask.bits();
    BasicImage2D<double> upstream(pred.channels, pred.rows, pred.cols, 0.0);
    double loss = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < pred.channels; ++c)
        for (int r = 0; r < pred.rows; ++r) {
            double target_scale;
            if (loss_cfg.rows == LossRows::FreeRows) {
                if (bits[r]) continue;
                target_scale = 1.0;
            } else {
                target_scale = bits[r] ? 1.0 : 0.0;
            }
            for (int col = 0; col < pred.cols; ++col) {
                const double d = pred.at(c, r, col) - target_scale * eps.at(c, r, col);
                if (loss_cfg.norm == LossNorm::L1) {
                    loss += std::abs(d);
                    upstream.at(c, r, col) = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                } else {
                    loss += d * d;
                    upstream.at(c, r, col) = 2.0 * d;
                }
                ++count;
            }
        }
    if (count == 0) throw DataError("train: mask leaves no rows to score");
    loss /= static_cast<double>(count);
    const double scale = 1.0 / (static_cast<double>(count) * batch);
    for (auto& g : upstream.data) g *= scale;

    net.backward(trace, upstream, grads);
    return loss;
}

}  // namespace detail

/// Runs steps [optim.step_count(), cfg.steps) of training, mutating net and
/// optimizer in place. Appends one record per step to `log` and invokes the
/// sink at checkpoint intervals and once at the end.
inline void run_training(const std::vector<Image2D>& dataset, const TrainConfig& cfg,
                         TinyDenoiserNet<double>& net, AdamW& optim,
                         std::vector<TrainStepRecord>& log, const CheckpointSink& sink = {}) {
    if (dataset.empty()) throw DataError("train: empty dataset");
    const int n = dataset.front().rows;
    if (dataset.front().cols != n) throw DataError("train: slices must be square");
    for (const auto& img : dataset)
        if (img.rows != n || img.cols != n || img.channels != net.cfg.channels)
            throw DataError("train: dataset slices must share the net's shape");
    if (cfg.l_min < 1 || cfg.l_max < cfg.l_min || cfg.l_max >= n)
        throw ConfigError("train: need 1 <= l_min <= l_max < " + std::to_string(n));
    if (cfg.batch < 1) throw ConfigError("train: batch must be >= 1");
    if (net.cfg.in_extra != 0)
        throw ConfigError("train: denoiser nets take no extra input channels");

    const NoiseSchedule sched = make_schedule(cfg.diffusion);
    TinyDenoiserNet<double> grads = TinyDenoiserNet<double>::shaped(net.cfg);

    for (std::int64_t step = optim.step_count(); step < cfg.steps; ++step) {
        Rng rng(mix_seed({cfg.seed, detail::kTrainStreamTag, static_cast<std::uint64_t>(step)}));
        for (auto ref : grads.params()) std::fill(ref.data->begin(), ref.data->end(), 0.0);

        double loss = 0.0;
        int batch_l_min = n, batch_l_max = 0;
        for (int b = 0; b < cfg.batch; ++b) {
            const auto& slice = dataset[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(dataset.size()) - 1))];
            const RowMask mask = sample_random_mask(n, cfg.l_min, cfg.l_max, rng);
            batch_l_min = std::min(batch_l_min, mask.count());
            batch_l_max = std::max(batch_l_max, mask.count());
            const int t = rng.uniform_int(1, cfg.diffusion.steps);
            const BasicImage2D<double> x_high = slice.cast<double>();
            BasicImage2D<double> eps(x_high.channels, n, n);
            for (auto& e : eps.data) e = rng.normal();
            loss += detail::train_item(net, grads, x_high, mask, t, eps, sched, cfg.loss,
                                       cfg.batch);
        }
        loss /= cfg.batch;
        if (!std::isfinite(loss))
            throw NumericError("train: non-finite loss at step " + std::to_string(step));

        const double lr = lr_at_step(optim.config(), optim.step_count());
        optim.step(net.params(), grads.params());
        log.push_back({step, lr, loss, batch_l_min, batch_l_max});

        const bool last = step + 1 == cfg.steps;
        if (sink && (last || (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0)))
            sink(step + 1, net, optim, last);
    }
}

struct TrainResult {
    TinyDenoiserNet<double> net;
    AdamW optim;
    std::vector<TrainStepRecord> log;
};

/// Fresh training run: He-initialized net, zeroed optimizer.
inline TrainResult train(const std::vector<Image2D>& dataset, const NetConfig& netcfg,
                         const TrainConfig& cfg, const CheckpointSink& sink = {}) {
    TrainResult out{TinyDenoiserNet<double>::init(netcfg, cfg.seed), AdamW(), {}};
    std::vector<std::size_t> sizes;
    for (auto ref : out.net.params()) sizes.push_back(ref.data->size());
    out.optim = AdamW(cfg.optim, sizes);
    run_training(dataset, cfg, out.net, out.optim, out.log, sink);
    return out;
}

/// Resume from a checkpoint that carries optimizer state; continues the
/// uninterrupted run bit-exactly.
inline TrainResult resume(const std::vector<Image2D>& dataset, const Checkpoint& ckpt,
                          const TrainConfig& cfg, const CheckpointSink& sink = {}) {
    TrainResult out{net_from_checkpoint(ckpt), AdamW(), {}};
    std::vector<std::size_t> sizes;
    for (auto ref : out.net.params()) sizes.push_back(ref.data->size());
    out.optim = AdamW(cfg.optim, sizes);
    if (!optimizer_from_checkpoint(ckpt, out.net, out.optim))
        throw DataError("resume: checkpoint has no optimizer state");
    run_training(dataset, cfg, out.net, out.optim, out.log, sink);
    return out;
}

/// CSV rendering of the training log: header + one row per step.
inline std::string render_loss_csv(const std::vector<TrainStepRecord>& log) {
    std::string out = "step,lr,loss,batch_l_min,batch_l_max\n";
    char buf[160];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%lld,%.10g,%.10g,%d,%d\n",
                      static_cast<long long>(r.step), r.lr, r.loss, r.batch_l_min,
                      r.batch_l_max);
        out += buf;
    }
    return out;
}

}  // namespace voxsr
