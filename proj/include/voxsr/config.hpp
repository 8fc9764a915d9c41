#pragma once

// Experiment configuration: one flat JSON document driving every subcommand.
// Parsing is strict (unknown keys rejected), serialization is canonical
// (sorted keys, round-trip floats), and the FNV-1a digest of the canonical
// form is stamped into every artifact a run produces.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/diffusion.hpp"
#include "voxsr/jsonio.hpp"
#include "voxsr/net.hpp"
#include "voxsr/train.hpp"

namespace voxsr {

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string out = "runs/exp";
    int threads = 1;
    std::string manifest;    // dataset manifest path (train / eval commands)
    std::string checkpoint;  // model checkpoint path (inference / eval commands)

    // data generation
    int data_train_volumes = 6;
    int data_val_volumes = 2;
    int data_n = 32;
    int data_channels = 1;
    std::string data_kinds = "grf+cells";  // grf | cells | grf+cells
    double data_grf_sigma = 2.0;
    int data_cell_count = 12;

    // diffusion + denoiser
    int timesteps = 200;
    int features = 16;
    int blocks = 2;
    int temb_freqs = 16;
    bool mask_channel = false;

    // training
    int train_steps = 3000;
    int batch = 8;
    int crop_size = 32;
    int crops = 256;
    int l_min = 0;  // 0: derived as crop_size/8
    int l_max = 0;  // 0: derived as crop_size/2
    double lr = 1e-4;
    double weight_decay = 0.01;
    double warmup_frac = 0.1;
    int checkpoint_every = 500;
    std::string loss = "l1";         // l1 | l2
    std::string loss_rows = "free";  // free | masked

    // inference and evaluation
    int factor = 4;
    std::vector<int> factors = {2, 4, 8};
    std::string direction = "both";         // xz | yz | both
    bool blur = false;
    std::string interlace = "every-step";   // every-step | init-only
    int eval_slices = 24;   // test slices per factor for the paired 2D protocol
    int eval_volumes = 0;   // cap on val volumes for 3D eval; 0 = all
    int regression_steps = 600;  // one-shot regression baseline budget
    int e2e_steps = 600;         // two-plane interpolator baseline budget

    void validate() const {
        auto one_of = [](const std::string& v, std::initializer_list<const char*> opts,
                         const char* key) {
            for (const char* o : opts)
                if (v == o) return;
            std::string msg = std::string("config: ") + key + " must be one of {";
            for (const char* o : opts) msg += std::string(o) + " ";
            throw ConfigError(msg + "}, got '" + v + "'");
        };
        if (threads < 1) throw ConfigError("config: threads must be >= 1");
        if (data_train_volumes < 1 || data_val_volumes < 1)
            throw ConfigError("config: need at least one train and one val volume");
        if (data_n < 8 || data_n % 8 != 0)
            throw ConfigError("config: data_n must be a positive multiple of 8");
        if (data_channels < 1) throw ConfigError("config: data_channels must be >= 1");
        one_of(data_kinds, {"grf", "cells", "grf+cells"}, "data_kinds");
        if (timesteps < 1) throw ConfigError("config: timesteps must be >= 1");
        if (features < 1 || blocks < 0 || temb_freqs < 1)
            throw ConfigError("config: denoiser shape out of range");
        if (train_steps < 1 || batch < 1 || crops < 1)
            throw ConfigError("config: training sizes must be >= 1");
        if (crop_size < 8 || crop_size % 8 != 0 || crop_size > data_n)
            throw ConfigError("config: crop_size must be a multiple of 8 within data_n");
        if (l_min < 0 || l_max < 0 || (l_max != 0 && l_max < l_min))
            throw ConfigError("config: mask row range invalid");
        if (!(lr > 0.0)) throw ConfigError("config: lr must be > 0");
        if (weight_decay < 0.0) throw ConfigError("config: weight_decay must be >= 0");
        if (warmup_frac < 0.0 || warmup_frac > 1.0)
            throw ConfigError("config: warmup_frac must be in [0,1]");
        if (checkpoint_every < 0) throw ConfigError("config: checkpoint_every must be >= 0");
        one_of(loss, {"l1", "l2"}, "loss");
        one_of(loss_rows, {"free", "masked"}, "loss_rows");
        auto check_factor = [](int f) {
            if (f != 2 && f != 4 && f != 8)
                throw ConfigError("config: factor must be 2, 4, or 8, got " + std::to_string(f));
        };
        check_factor(factor);
        if (factors.empty()) throw ConfigError("config: factors must be non-empty");
        for (int f : factors) check_factor(f);
        one_of(direction, {"xz", "yz", "both"}, "direction");
        one_of(interlace, {"every-step", "init-only"}, "interlace");
        if (eval_slices < 2) throw ConfigError("config: eval_slices must be >= 2");
        if (eval_volumes < 0) throw ConfigError("config: eval_volumes must be >= 0");
        if (regression_steps < 1 || e2e_steps < 1)
            throw ConfigError("config: baseline step budgets must be >= 1");
    }

    // derived views onto module configs -------------------------------------

    InterlaceMode interlace_mode() const {
        return interlace == "init-only" ? InterlaceMode::InitOnly : InterlaceMode::EveryStep;
    }

    DiffusionConfig diffusion() const {
        DiffusionConfig d;
        d.steps = timesteps;
        d.interlace = interlace_mode();
        return d;
    }

    NetConfig net() const {
        NetConfig n;
        n.channels = data_channels;
        n.features = features;
        n.blocks = blocks;
        n.temb_freqs = temb_freqs;
        n.mask_channel = mask_channel;
        return n;
    }

    TrainConfig train() const {
        TrainConfig t;
        t.steps = train_steps;
        t.batch = batch;
        t.l_min = l_min > 0 ? l_min : std::max(1, crop_size / 8);
        t.l_max = l_max > 0 ? l_max : std::max(1, crop_size / 2);
        t.diffusion = diffusion();
        t.loss.rows = loss_rows == "masked" ? LossRows::MaskedTarget : LossRows::FreeRows;
        t.loss.norm = loss == "l2" ? LossNorm::L2 : LossNorm::L1;
        t.optim.base_lr = lr;
        t.optim.weight_decay = weight_decay;
        t.optim.warmup_fraction = warmup_frac;
        t.optim.horizon = train_steps;
        t.seed = seed;
        t.checkpoint_every = checkpoint_every;
        return t;
    }
};

namespace detail {

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys = {
        "seed",           "out",          "threads",         "manifest",
        "checkpoint",     "data_train_volumes", "data_val_volumes", "data_n",
        "data_channels",  "data_kinds",     "data_grf_sigma",  "data_cell_count",
        "timesteps",      "features",       "blocks",          "temb_freqs",
        "mask_channel",   "train_steps",    "batch",           "crop_size",
        "crops",          "l_min",          "l_max",           "lr",
        "weight_decay",   "warmup_frac",    "checkpoint_every", "loss",
        "loss_rows",      "factor",         "factors",         "direction",
        "blur",           "interlace",      "eval_slices",     "eval_volumes",
        "regression_steps", "e2e_steps"};
    return keys;
}

}  // namespace detail

inline ExperimentConfig parse_config_json(const std::string& text) {
    const std::string what = "config";
    const detail::Json j = detail::parse_json_object<ConfigError>(text, what);
    detail::reject_unknown_keys<ConfigError>(j, detail::config_keys(), what);
    ExperimentConfig c;
    detail::read_key<ConfigError>(j, "seed", c.seed, false, what);
    detail::read_key<ConfigError>(j, "out", c.out, false, what);
    detail::read_key<ConfigError>(j, "threads", c.threads, false, what);
    detail::read_key<ConfigError>(j, "manifest", c.manifest, false, what);
    detail::read_key<ConfigError>(j, "checkpoint", c.checkpoint, false, what);
    detail::read_key<ConfigError>(j, "data_train_volumes", c.data_train_volumes, false, what);
    detail::read_key<ConfigError>(j, "data_val_volumes", c.data_val_volumes, false, what);
    detail::read_key<ConfigError>(j, "data_n", c.data_n, false, what);
    detail::read_key<ConfigError>(j, "data_channels", c.data_channels, false, what);
    detail::read_key<ConfigError>(j, "data_kinds", c.data_kinds, false, what);
    detail::read_key<ConfigError>(j, "data_grf_sigma", c.data_grf_sigma, false, what);
    detail::read_key<ConfigError>(j, "data_cell_count", c.data_cell_count, false, what);
    detail::read_key<ConfigError>(j, "timesteps", c.timesteps, false, what);
    detail::read_key<ConfigError>(j, "features", c.features, false, what);
    detail::read_key<ConfigError>(j, "blocks", c.blocks, false, what);
    detail::read_key<ConfigError>(j, "temb_freqs", c.temb_freqs, false, what);
    detail::read_key<ConfigError>(j, "mask_channel", c.mask_channel, false, what);
    detail::read_key<ConfigError>(j, "train_steps", c.train_steps, false, what);
    detail::read_key<ConfigError>(j, "batch", c.batch, false, what);
    detail::read_key<ConfigError>(j, "crop_size", c.crop_size, false, what);
    detail::read_key<ConfigError>(j, "crops", c.crops, false, what);
    detail::read_key<ConfigError>(j, "l_min", c.l_min, false, what);
    detail::read_key<ConfigError>(j, "l_max", c.l_max, false, what);
    detail::read_key<ConfigError>(j, "lr", c.lr, false, what);
    detail::read_key<ConfigError>(j, "weight_decay", c.weight_decay, false, what);
    detail::read_key<ConfigError>(j, "warmup_frac", c.warmup_frac, false, what);
    detail::read_key<ConfigError>(j, "checkpoint_every", c.checkpoint_every, false, what);
    detail::read_key<ConfigError>(j, "loss", c.loss, false, what);
    detail::read_key<ConfigError>(j, "loss_rows", c.loss_rows, false, what);
    detail::read_key<ConfigError>(j, "factor", c.factor, false, what);
    detail::read_key<ConfigError>(j, "factors", c.factors, false, what);
    detail::read_key<ConfigError>(j, "direction", c.direction, false, what);
    detail::read_key<ConfigError>(j, "blur", c.blur, false, what);
    detail::read_key<ConfigError>(j, "interlace", c.interlace, false, what);
    detail::read_key<ConfigError>(j, "eval_slices", c.eval_slices, false, what);
    detail::read_key<ConfigError>(j, "eval_volumes", c.eval_volumes, false, what);
    detail::read_key<ConfigError>(j, "regression_steps", c.regression_steps, false, what);
    detail::read_key<ConfigError>(j, "e2e_steps", c.e2e_steps, false, what);
    c.validate();
    return c;
}

/// Canonical serialization: every key emitted, sorted, shortest round-trip
/// numbers. Equal configs produce byte-identical text.
inline std::string render_config_json(const ExperimentConfig& c) {
    detail::Json j;
    j["seed"] = c.seed;
    j["out"] = c.out;
    j["threads"] = c.threads;
    j["manifest"] = c.manifest;
    j["checkpoint"] = c.checkpoint;
    j["data_train_volumes"] = c.data_train_volumes;
    j["data_val_volumes"] = c.data_val_volumes;
    j["data_n"] = c.data_n;
    j["data_channels"] = c.data_channels;
    j["data_kinds"] = c.data_kinds;
    j["data_grf_sigma"] = c.data_grf_sigma;
    j["data_cell_count"] = c.data_cell_count;
    j["timesteps"] = c.timesteps;
    j["features"] = c.features;
    j["blocks"] = c.blocks;
    j["temb_freqs"] = c.temb_freqs;
    j["mask_channel"] = c.mask_channel;
    j["train_steps"] = c.train_steps;
    j["batch"] = c.batch;
    j["crop_size"] = c.crop_size;
    j["crops"] = c.crops;
    j["l_min"] = c.l_min;
    j["l_max"] = c.l_max;
    j["lr"] = c.lr;
    j["weight_decay"] = c.weight_decay;
    j["warmup_frac"] = c.warmup_frac;
    j["checkpoint_every"] = c.checkpoint_every;
    j["loss"] = c.loss;
    j["loss_rows"] = c.loss_rows;
    j["factor"] = c.factor;
    j["factors"] = c.factors;
    j["direction"] = c.direction;
    j["blur"] = c.blur;
    j["interlace"] = c.interlace;
    j["eval_slices"] = c.eval_slices;
    j["eval_volumes"] = c.eval_volumes;
    j["regression_steps"] = c.regression_steps;
    j["e2e_steps"] = c.e2e_steps;
    return j.dump(2) + "\n";
}

/// Content hash of the canonical form; stamped into every output artifact.
inline std::uint64_t config_digest(const ExperimentConfig& c) {
    return fnv1a64(render_config_json(c));
}

}  // namespace voxsr
