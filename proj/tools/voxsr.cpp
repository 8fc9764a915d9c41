// voxsr: command-line front end for masked slice diffusion super-resolution.
//
// Subcommands: gen-data, train, superresolve, restore2d, eval-2d, eval-3d.
// Every command loads a JSON experiment config (all keys optional, unknown
// keys rejected), applies CLI flag overrides, and stamps the digest of the
// effective config into each artifact it writes.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voxsr/baselines.hpp"
#include "voxsr/checkpoint.hpp"
#include "voxsr/config.hpp"
#include "voxsr/diffusion.hpp"
#include "voxsr/io.hpp"
#include "voxsr/manifest.hpp"
#include "voxsr/metrics.hpp"
#include "voxsr/phantom.hpp"
#include "voxsr/train.hpp"

namespace fs = std::filesystem;
using namespace voxsr;

namespace {

std::string hex16(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Shared flag set; only flags the user actually passed override the config.
struct SharedFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    int factor = 0;
    std::string direction;
    bool blur = false;
    std::string interlace;
    int threads = 0;
    std::string out;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_factor = nullptr;
    CLI::Option* o_direction = nullptr;
    CLI::Option* o_blur = nullptr;
    CLI::Option* o_interlace = nullptr;
    CLI::Option* o_threads = nullptr;
    CLI::Option* o_out = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON)");
        o_seed = cmd->add_option("--seed", seed, "master seed override");
        o_factor = cmd->add_option("--factor", factor, "upsampling factor override")
                       ->check(CLI::IsMember({2, 4, 8}));
        o_direction = cmd->add_option("--direction", direction, "inference direction override")
                          ->check(CLI::IsMember({"xz", "yz", "both"}));
        o_blur = cmd->add_flag("--blur", blur, "smooth the reconstruction");
        o_interlace = cmd->add_option("--interlace", interlace, "conditioning mode override")
                          ->check(CLI::IsMember({"every-step", "init-only"}));
        o_threads = cmd->add_option("--threads", threads, "worker cap override");
        o_out = cmd->add_option("--out", out, "output directory override");
    }

    bool factor_given() const { return o_factor->count() > 0; }

    ExperimentConfig load() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) {
            std::string text;
            try {
                text = read_file_bytes(config_path);
            } catch (const DataError& e) {
                throw ConfigError(e.what());
            }
            cfg = parse_config_json(text);
        }
        if (o_seed->count()) cfg.seed = seed;
        if (o_factor->count()) {
            cfg.factor = factor;
            cfg.factors = {factor};
        }
        if (o_direction->count()) cfg.direction = direction;
        if (o_blur->count()) cfg.blur = true;
        if (o_interlace->count()) cfg.interlace = interlace;
        if (o_threads->count()) cfg.threads = threads;
        if (o_out->count()) cfg.out = out;
        cfg.validate();
        return cfg;
    }
};

// --------------------------------------------------------------------------
// Common plumbing

fs::path manifest_path(const ExperimentConfig& cfg) {
    return cfg.manifest.empty() ? fs::path(cfg.out) / "manifest.json" : fs::path(cfg.manifest);
}

fs::path checkpoint_path(const ExperimentConfig& cfg) {
    return cfg.checkpoint.empty() ? fs::path(cfg.out) / "run" / "checkpoint.voxckpt"
                                  : fs::path(cfg.checkpoint);
}

DatasetManifest load_manifest(const fs::path& path) {
    return parse_manifest_json(read_file_bytes(path));
}

std::vector<Volume> load_role(const DatasetManifest& m, const fs::path& manifest_file,
                              const std::string& role) {
    std::vector<Volume> out;
    for (const std::string& rel : manifest_paths(m, role))
        out.push_back(read_volume(manifest_file.parent_path() / rel));
    if (out.empty()) throw DataError("manifest has no '" + role + "' volumes");
    return out;
}

TinyDenoiserNet<float> load_net(const fs::path& path) {
    return net_from_checkpoint(read_checkpoint(path)).cast<float>();
}

void check_net_channels(const TinyDenoiserNet<float>& net, int channels, const char* what) {
    if (net.cfg.channels != channels)
        throw DataError(std::string(what) + ": checkpoint expects " +
                        std::to_string(net.cfg.channels) + " channels, data has " +
                        std::to_string(channels));
}

// Phantom spec for one dataset volume; kinds alternate under "grf+cells".
PhantomSpec dataset_spec(const ExperimentConfig& cfg, const std::string& role, int index) {
    PhantomSpec s;
    const bool cells = cfg.data_kinds == "cells" || (cfg.data_kinds == "grf+cells" && index % 2);
    s.kind = cells ? PhantomKind::Cells : PhantomKind::Grf;
    s.n = cfg.data_n;
    s.channels = cfg.data_channels;
    s.grf_sigma = cfg.data_grf_sigma;
    s.cell_count = cfg.data_cell_count;
    s.seed = mix_seed({cfg.seed, role == "train" ? 1ull : 2ull, static_cast<std::uint64_t>(index)});
    return s;
}

// Deterministic, evenly spaced pick of k items from a pool.
template <class T>
std::vector<T> take_evenly(const std::vector<T>& pool, std::size_t k) {
    if (pool.size() <= k) return pool;
    std::vector<T> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool[i * pool.size() / k]);
    return out;
}

void write_records(const ExperimentConfig& cfg, const std::vector<MetricRecord>& records,
                   const std::string& stem) {
    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    write_file_bytes(dir / (stem + ".json"), render_metrics_json(records));
    write_file_bytes(dir / (stem + ".csv"), metrics_csv_header() + metrics_csv_rows(records));
    std::printf("%s: wrote %zu records to %s.{json,csv}\n", stem.c_str(), records.size(),
                (dir / stem).c_str());
}

// --------------------------------------------------------------------------
// gen-data

int run_gen_data(const ExperimentConfig& cfg) {
    const std::uint64_t digest = config_digest(cfg);
    const fs::path dir(cfg.out);
    fs::create_directories(dir / "volumes");

    DatasetManifest m;
    m.split_seed = cfg.seed;
    m.config_digest = digest;
    auto emit = [&](const std::string& role, int count) {
        for (int i = 0; i < count; ++i) {
            ManifestEntry e;
            e.role = role;
            e.spec = dataset_spec(cfg, role, i);
            e.path = "volumes/" + role + "_" + std::to_string(i) + ".vox";
            write_volume(dir / e.path, generate_phantom(e.spec));
            m.entries.push_back(std::move(e));
        }
    };
    emit("train", cfg.data_train_volumes);
    emit("val", cfg.data_val_volumes);
    validate_manifest(m);  // train/val must stay group-disjoint
    write_file_bytes(dir / "manifest.json", render_manifest_json(m));
    std::printf("gen-data: %d train + %d val volumes (%dx%d^3) -> %s (config %s)\n",
                cfg.data_train_volumes, cfg.data_val_volumes, cfg.data_channels, cfg.data_n,
                dir.c_str(), hex16(digest).c_str());
    return 0;
}

// --------------------------------------------------------------------------
// train

int run_train(const ExperimentConfig& cfg, bool force) {
    const std::uint64_t digest = config_digest(cfg);
    const fs::path run_dir = fs::path(cfg.out) / "run";
    if (fs::exists(run_dir) && !force)
        throw ConfigError("train: " + run_dir.string() + " exists; pass --force to overwrite");

    const fs::path mpath = manifest_path(cfg);
    const DatasetManifest manifest = load_manifest(mpath);
    const std::vector<Volume> train_vols = load_role(manifest, mpath, "train");
    if (train_vols.front().channels != cfg.data_channels)
        throw DataError("train: volumes carry " + std::to_string(train_vols.front().channels) +
                        " channels but config says " + std::to_string(cfg.data_channels));

    const TrainingSlices crops =
        harvest_training_slices(train_vols, cfg.crop_size, cfg.crops, cfg.seed);

    fs::create_directories(run_dir);
    write_file_bytes(run_dir / "config.json", render_config_json(cfg));

    const CheckpointSink sink = [&](std::int64_t step, TinyDenoiserNet<double>& net,
                                    const AdamW& optim, bool final) {
        const Checkpoint ckpt = make_checkpoint(net, digest, &optim);
        const fs::path p = final ? run_dir / "checkpoint.voxckpt"
                                 : run_dir / ("ckpt_" + std::to_string(step) + ".voxckpt");
        write_checkpoint(p, ckpt);
        std::printf("train: step %lld -> %s\n", static_cast<long long>(step), p.c_str());
    };

    const TrainConfig tc = cfg.train();
    TrainResult result;
    if (!cfg.checkpoint.empty())
        result = resume(crops.images, read_checkpoint(cfg.checkpoint), tc, sink);
    else
        result = train(crops.images, cfg.net(), tc, sink);

    write_file_bytes(run_dir / "loss.csv",
                     "# config " + hex16(digest) + "\n" + render_loss_csv(result.log));
    std::printf("train: %zu steps logged, final loss %.6f (config %s)\n", result.log.size(),
                result.log.empty() ? 0.0 : result.log.back().loss, hex16(digest).c_str());
    return 0;
}

// --------------------------------------------------------------------------
// superresolve

int run_superresolve(const ExperimentConfig& cfg, const std::string& input, bool factor_given) {
    const std::uint64_t digest = config_digest(cfg);
    const Volume in = read_volume(input);
    if (in.height != in.width)
        throw DataError("superresolve: lateral dims must match, got " +
                        shape_string(in.channels, in.height, in.width, in.depth));
    if (factor_given && in.depth * cfg.factor != in.height)
        throw ConfigError("superresolve: --factor " + std::to_string(cfg.factor) +
                          " does not match input depth " + std::to_string(in.depth) +
                          " vs side " + std::to_string(in.height));

    const TinyDenoiserNet<float> net = load_net(checkpoint_path(cfg));
    check_net_channels(net, in.channels, "superresolve");
    const NoiseSchedule sched = make_schedule(cfg.diffusion());
    const RowMask mask = make_uniform_mask(in.height, in.depth);
    const NetDenoiser<float> den(net, &mask);

    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    auto emit = [&](const char* name, Volume v, bool smooth) {
        if (smooth) v = gaussian_blur_3d(v);
        write_volume(dir / name, v);
        std::printf("superresolve: wrote %s (config %s)\n", (dir / name).c_str(),
                    hex16(digest).c_str());
    };

    if (cfg.direction == "both") {
        const SuperResolved r = superresolve_volume(in, den, sched, cfg.interlace_mode(),
                                                    cfg.seed, cfg.threads);
        emit("sr_xz.vox", r.xz, false);
        emit("sr_yz.vox", r.yz, false);
        emit("sr.vox", r.averaged, cfg.blur);
    } else {
        const Axis axis = cfg.direction == "xz" ? Axis::XZ : Axis::YZ;
        emit("sr.vox", superresolve_along_axis(in, axis, den, sched, cfg.interlace_mode(),
                                               cfg.seed, cfg.threads),
             cfg.blur);
    }
    return 0;
}

// --------------------------------------------------------------------------
// restore2d: masked-row restoration of every XY slice, kept independent

int run_restore2d(const ExperimentConfig& cfg, const std::string& input) {
    const std::uint64_t digest = config_digest(cfg);
    const Volume in = read_volume(input);
    if (in.height % cfg.factor != 0)
        throw DataError("restore2d: factor " + std::to_string(cfg.factor) +
                        " does not divide slice rows " + std::to_string(in.height));

    const TinyDenoiserNet<float> net = load_net(checkpoint_path(cfg));
    check_net_channels(net, in.channels, "restore2d");
    const NoiseSchedule sched = make_schedule(cfg.diffusion());
    const RowMask mask = make_uniform_mask(in.height, in.height / cfg.factor);
    const NetDenoiser<float> den(net, &mask);

    Volume out(in.channels, in.height, in.width, in.depth);
    parallel_for(static_cast<std::size_t>(in.depth), cfg.threads, [&](std::size_t z) {
        const Image2D truth = slice(in, Axis::XY, static_cast<int>(z));
        const Image2D obs = gather_rows(truth, mask);
        Rng rng(slice_seed(cfg.seed, Axis::XY, static_cast<int>(z)));
        set_slice(out, Axis::XY, static_cast<int>(z),
                  restore(den, obs, mask, sched, rng, cfg.interlace_mode()));
    });

    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    write_volume(dir / "restored2d.vox", out);
    std::printf("restore2d: %d slices at factor %d -> %s (config %s)\n", in.depth, cfg.factor,
                (dir / "restored2d.vox").c_str(), hex16(digest).c_str());
    return 0;
}

// --------------------------------------------------------------------------
// shared baseline training for the eval commands

RegressionTrainConfig baseline_train_config(const ExperimentConfig& cfg, int steps) {
    RegressionTrainConfig rc;
    rc.steps = steps;
    rc.batch = cfg.batch;
    const TrainConfig tc = cfg.train();
    rc.l_min = tc.l_min;
    rc.l_max = tc.l_max;
    rc.optim.base_lr = 1e-3;  // one-shot nets tolerate a hotter schedule
    rc.optim.horizon = steps;
    rc.seed = cfg.seed;
    return rc;
}

TinyDenoiserNet<float> trained_regressor(const ExperimentConfig& cfg,
                                         const std::vector<Volume>& train_vols) {
    const TrainingSlices crops =
        harvest_training_slices(train_vols, cfg.crop_size, cfg.crops, cfg.seed);
    return train_ms_regression(crops.images, cfg.net(),
                               baseline_train_config(cfg, cfg.regression_steps))
        .cast<float>();
}

TinyDenoiserNet<float> trained_e2e(const ExperimentConfig& cfg,
                                   const std::vector<Volume>& train_vols) {
    NetConfig nc = cfg.net();
    nc.in_extra = nc.channels;  // two input planes
    nc.mask_channel = false;
    return train_e2e(train_vols, nc, baseline_train_config(cfg, cfg.e2e_steps)).cast<float>();
}

// --------------------------------------------------------------------------
// eval-2d: paired masked-row restoration protocol on val XY slices

int run_eval_2d(const ExperimentConfig& cfg) {
    const std::uint64_t digest = config_digest(cfg);
    const fs::path mpath = manifest_path(cfg);
    const DatasetManifest manifest = load_manifest(mpath);
    const std::vector<Volume> val_vols = load_role(manifest, mpath, "val");
    const std::vector<Volume> train_vols = load_role(manifest, mpath, "train");

    std::vector<Image2D> pool;
    for (const auto& v : val_vols)
        for (int z = 0; z < v.depth; ++z) pool.push_back(slice(v, Axis::XY, z));
    const std::vector<Image2D> tests =
        take_evenly(pool, static_cast<std::size_t>(cfg.eval_slices));

    const TinyDenoiserNet<float> net = load_net(checkpoint_path(cfg));
    check_net_channels(net, tests.front().channels, "eval-2d");
    const TinyDenoiserNet<float> reg = trained_regressor(cfg, train_vols);
    const NoiseSchedule sched = make_schedule(cfg.diffusion());
    const FeatureEmbedder emb = FeatureEmbedder::random_conv(tests.front().channels);

    std::vector<MetricRecord> records;
    for (int factor : cfg.factors) {
        const RowMask mask = make_uniform_mask(tests.front().rows, tests.front().rows / factor);
        const NetDenoiser<float> den(net, &mask);

        using RestoreFn = std::function<Image2D(const Image2D&, const RowMask&, std::size_t)>;
        const std::vector<std::pair<std::string, RestoreFn>> methods = {
            {"nn", [&](const Image2D& obs, const RowMask& m,
                       std::size_t) { return nn_restore_rows(obs, m); }},
            {"linear", [&](const Image2D& obs, const RowMask& m,
                           std::size_t) { return linear_restore_rows(obs, m); }},
            {"ms-regression",
             [&](const Image2D& obs, const RowMask& m, std::size_t i) {
                 Rng rng(mix_seed({cfg.seed, 0x6d737265ull, static_cast<std::uint64_t>(i)}));
                 return ms_regression_restore(reg, obs, m, rng);
             }},
            {"msdsr", [&](const Image2D& obs, const RowMask& m, std::size_t i) {
                 Rng rng(mix_seed({cfg.seed, 0x65763264ull, static_cast<std::uint64_t>(i)}));
                 return restore(den, obs, m, sched, rng, cfg.interlace_mode());
             }}};

        for (const auto& [name, fn] : methods) {
            const Eval2DResult r = eval_paired_2d(tests, factor, fn, emb);
            records.push_back({"ssim", "", name, factor, r.mean_ssim, cfg.seed, digest});
            records.push_back({"fid", "", name, factor, r.fid, cfg.seed, digest});
            std::printf("eval-2d: factor %d %-13s ssim %.4f fid %.4f\n", factor, name.c_str(),
                        r.mean_ssim, r.fid);
        }
    }
    write_records(cfg, records, "eval2d");
    return 0;
}

// --------------------------------------------------------------------------
// eval-3d: volume super-resolution scored with SliceFID (plus XY SSIM)

int run_eval_3d(const ExperimentConfig& cfg) {
    const std::uint64_t digest = config_digest(cfg);
    const fs::path mpath = manifest_path(cfg);
    const DatasetManifest manifest = load_manifest(mpath);
    std::vector<Volume> val_vols = load_role(manifest, mpath, "val");
    const std::vector<Volume> train_vols = load_role(manifest, mpath, "train");
    if (cfg.eval_volumes > 0 && val_vols.size() > static_cast<std::size_t>(cfg.eval_volumes))
        val_vols.resize(cfg.eval_volumes);

    std::vector<Image2D> reference;
    for (const auto& v : val_vols)
        for (int z = 0; z < v.depth; ++z) reference.push_back(slice(v, Axis::XY, z));

    const TinyDenoiserNet<float> net = load_net(checkpoint_path(cfg));
    check_net_channels(net, val_vols.front().channels, "eval-3d");
    const TinyDenoiserNet<float> reg = trained_regressor(cfg, train_vols);
    const TinyDenoiserNet<float> e2e = trained_e2e(cfg, train_vols);
    const NoiseSchedule sched = make_schedule(cfg.diffusion());
    const FeatureEmbedder emb = FeatureEmbedder::random_conv(val_vols.front().channels);

    std::vector<MetricRecord> records;
    for (int factor : cfg.factors) {
        const std::vector<EvalPair> pairs = make_eval_pairs(val_vols, factor);
        const RowMask mask = make_uniform_mask(pairs.front().truth.height,
                                               pairs.front().low.depth);
        const NetDenoiser<float> den(net, &mask);

        auto msdsr_volume = [&](const Volume& low, std::size_t vi) {
            const std::uint64_t master =
                mix_seed({cfg.seed, 0x65763364ull, static_cast<std::uint64_t>(vi),
                          static_cast<std::uint64_t>(factor)});
            Volume out;
            if (cfg.direction == "both")
                out = superresolve_volume(low, den, sched, cfg.interlace_mode(), master,
                                          cfg.threads)
                          .averaged;
            else
                out = superresolve_along_axis(low, cfg.direction == "xz" ? Axis::XZ : Axis::YZ,
                                              den, sched, cfg.interlace_mode(), master,
                                              cfg.threads);
            return cfg.blur ? gaussian_blur_3d(out) : out;
        };

        using MethodFn = std::function<Volume(const Volume&, std::size_t)>;
        const std::vector<std::pair<std::string, MethodFn>> methods = {
            {"nn", [&](const Volume& low, std::size_t) { return nn_upsample_z(low, factor); }},
            {"linear",
             [&](const Volume& low, std::size_t) { return linear_upsample_z(low, factor); }},
            {"ms-regression",
             [&](const Volume& low, std::size_t vi) {
                 const std::uint64_t master =
                     mix_seed({cfg.seed, 0x72673364ull, static_cast<std::uint64_t>(vi),
                               static_cast<std::uint64_t>(factor)});
                 return ms_regression_upsample(low, reg, master, cfg.threads);
             }},
            {"e2e", [&](const Volume& low, std::size_t) { return e2e_upsample_z(low, e2e, factor); }},
            {"msdsr", msdsr_volume}};

        for (const auto& [name, fn] : methods) {
            std::vector<Volume> outputs;
            double ssim_sum = 0.0;
            std::size_t ssim_count = 0;
            for (std::size_t vi = 0; vi < pairs.size(); ++vi) {
                Volume out = fn(pairs[vi].low, vi);
                for (int z = 0; z < out.depth; ++z) {
                    ssim_sum += ssim(slice(pairs[vi].truth, Axis::XY, z), slice(out, Axis::XY, z));
                    ++ssim_count;
                }
                outputs.push_back(std::move(out));
            }
            const SliceFidReport rep = slice_fid(reference, outputs, emb);
            records.push_back(
                {"slice_fid", "xy", name, factor, rep.fid_xy, cfg.seed, digest});
            records.push_back(
                {"slice_fid", "xz", name, factor, rep.fid_xz, cfg.seed, digest});
            records.push_back(
                {"slice_fid", "yz", name, factor, rep.fid_yz, cfg.seed, digest});
            records.push_back(
                {"slice_fid", "mean", name, factor, rep.slice_fid, cfg.seed, digest});
            records.push_back({"ssim", "xy", name, factor,
                               ssim_sum / static_cast<double>(ssim_count), cfg.seed, digest});
            std::printf("eval-3d: factor %d %-13s slicefid %.4f (xy %.4f xz %.4f yz %.4f)\n",
                        factor, name.c_str(), rep.slice_fid, rep.fid_xy, rep.fid_xz, rep.fid_yz);
        }
    }
    write_records(cfg, records, "eval3d");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"masked slice diffusion super-resolution for anisotropic volumes"};
    app.require_subcommand(1);

    SharedFlags gen_flags, train_flags, sr_flags, r2d_flags, e2d_flags, e3d_flags;

    CLI::App* gen = app.add_subcommand("gen-data", "generate phantom volumes and a manifest");
    gen_flags.attach(gen);

    CLI::App* tr = app.add_subcommand("train", "train the slice denoiser");
    train_flags.attach(tr);
    bool force = false;
    tr->add_flag("--force", force, "overwrite an existing run directory");

    CLI::App* sr = app.add_subcommand("superresolve", "reconstruct an isotropic volume");
    sr_flags.attach(sr);
    std::string sr_input;
    sr->add_option("input", sr_input, "low-resolution volume (VOXSR1)")->required();

    CLI::App* r2d = app.add_subcommand("restore2d", "masked-row restoration of XY slices");
    r2d_flags.attach(r2d);
    std::string r2d_input;
    r2d->add_option("input", r2d_input, "volume whose XY slices to restore")->required();

    CLI::App* e2d = app.add_subcommand("eval-2d", "paired 2D restoration metrics");
    e2d_flags.attach(e2d);

    CLI::App* e3d = app.add_subcommand("eval-3d", "volume super-resolution metrics");
    e3d_flags.attach(e3d);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // flag misuse is a config error
    }

    try {
        if (gen->parsed()) return run_gen_data(gen_flags.load());
        if (tr->parsed()) return run_train(train_flags.load(), force);
        if (sr->parsed())
            return run_superresolve(sr_flags.load(), sr_input, sr_flags.factor_given());
        if (r2d->parsed()) return run_restore2d(r2d_flags.load(), r2d_input);
        if (e2d->parsed()) return run_eval_2d(e2d_flags.load());
        if (e3d->parsed()) return run_eval_3d(e3d_flags.load());
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "voxsr: config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "voxsr: data error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "voxsr: numeric failure: %s\n", e.what());
        return 4;
    }
    return 2;  // unreachable subcommand state
}
