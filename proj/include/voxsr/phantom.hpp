#pragma once

// Procedural isotropic phantoms standing in for z-stacked microscopy volumes,
// plus dataset assembly: XY training crops and paired low-res/ground-truth
// eval volumes. Everything here is deterministic per seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/rng.hpp"
#include "voxsr/volume.hpp"

namespace voxsr {

enum class PhantomKind { Grf, Cells };

inline const char* phantom_kind_name(PhantomKind k) {
    return k == PhantomKind::Grf ? "grf" : "cells";
}

inline PhantomKind phantom_kind_from_name(const std::string& name) {
    if (name == "grf") return PhantomKind::Grf;
    if (name == "cells") return PhantomKind::Cells;
    throw ConfigError("phantom kind must be 'grf' or 'cells', got '" + name + "'");
}

struct PhantomSpec {
    PhantomKind kind = PhantomKind::Grf;
    int n = 32;        // isotropic side length
    int channels = 3;
    std::uint64_t seed = 0;

    // grf: isotropic smoothing sigma in voxels
    double grf_sigma = 2.0;

    // cells: sphere population and intensity ranges (background sits below
    // cytoplasm, nuclei are the brightest structures)
    int cell_count = 12;
    double cell_radius_min = 2.5;
    double cell_radius_max = 5.0;
    double nucleus_lo = 0.75, nucleus_hi = 0.95;
    double cytoplasm_lo = 0.35, cytoplasm_hi = 0.60;

    void validate() const {
        if (n < 8) throw ConfigError("phantom: side length must be >= 8");
        if (channels < 1) throw ConfigError("phantom: channels must be >= 1");
        if (kind == PhantomKind::Grf) {
            if (!(grf_sigma > 0.0)) throw ConfigError("phantom: grf_sigma must be > 0");
            return;
        }
        if (cell_count < 1) throw ConfigError("phantom: cell_count must be >= 1");
        if (!(cell_radius_min > 0.0) || cell_radius_max < cell_radius_min)
            throw ConfigError("phantom: cell radius range invalid");
        if (cell_radius_max > n / 2.0)
            throw ConfigError("phantom: cell radius exceeds half the side length");
        auto range01 = [](double lo, double hi) {
            return 0.0 <= lo && lo <= hi && hi <= 1.0;
        };
        if (!range01(nucleus_lo, nucleus_hi) || !range01(cytoplasm_lo, cytoplasm_hi))
            throw ConfigError("phantom: intensity ranges must satisfy 0 <= lo <= hi <= 1");
    }
};

/// One generated sphere; nuclei occupy the inner 0.45 * radius.
struct PhantomCell {
    int cy = 0, cx = 0, cz = 0;  // voxel center (height, width, depth)
    double radius = 0.0;
    double nucleus = 0.0;    // intensity
    double cytoplasm = 0.0;  // intensity
};

namespace detail {

// Periodic (wrap-around) Gaussian smoothing of an n^3 scalar field along all
// three axes; periodic boundaries keep the statistics stationary, which is
// what makes the per-axis isotropy checks sharp.
inline void smooth_periodic(std::vector<double>& field, int n, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        ksum += kernel[i + radius];
    }
    for (double& k : kernel) k /= ksum;

    const auto idx = [n](int h, int w, int z) {
        return (static_cast<std::size_t>(h) * n + w) * n + z;
    };
    std::vector<double> tmp(field.size());
    for (int axis = 0; axis < 3; ++axis) {
        for (int h = 0; h < n; ++h)
            for (int w = 0; w < n; ++w)
                for (int z = 0; z < n; ++z) {
                    double acc = 0.0;
                    for (int t = -radius; t <= radius; ++t) {
                        int hh = h, ww = w, zz = z;
                        int& moving = axis == 0 ? hh : axis == 1 ? ww : zz;
                        moving = (moving + t + n * ((radius / n) + 1)) % n;
                        acc += kernel[t + radius] * field[idx(hh, ww, zz)];
                    }
                    tmp[idx(h, w, z)] = acc;
                }
        field.swap(tmp);
    }
}

// White noise smoothed isotropically, affinely mapped so min -> 0, max -> 1.
inline std::vector<double> grf_field(Rng& rng, int n, double sigma) {
    std::vector<double> field(static_cast<std::size_t>(n) * n * n);
    for (double& x : field) x = rng.normal();
    smooth_periodic(field, n, sigma);
    double lo = field[0], hi = field[0];
    for (double x : field) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi - lo < 1e-12) {
        field.assign(field.size(), 0.5);
        return field;
    }
    const double scale = 1.0 / (hi - lo);
    for (double& x : field) x = (x - lo) * scale;
    return field;
}

}  // namespace detail

/// Deterministic sphere population for a cells phantom. Centers prefer
/// non-overlapping placements (rejection sampled) and are always unique, so
/// the final center-stamping pass in generate_phantom leaves every center
/// carrying its own nucleus intensity.
inline std::vector<PhantomCell> phantom_cells(const PhantomSpec& spec) {
    spec.validate();
    if (spec.kind != PhantomKind::Cells)
        throw ConfigError("phantom_cells: spec kind is not 'cells'");
    Rng rng(mix_seed({spec.seed, 0x63656c6cull}));  // geometry stream
    std::vector<PhantomCell> cells;
    for (int i = 0; i < spec.cell_count; ++i) {
        PhantomCell cell;
        cell.radius = spec.cell_radius_min +
                      (spec.cell_radius_max - spec.cell_radius_min) * rng.uniform01();
        cell.nucleus = spec.nucleus_lo + (spec.nucleus_hi - spec.nucleus_lo) * rng.uniform01();
        cell.cytoplasm =
            spec.cytoplasm_lo + (spec.cytoplasm_hi - spec.cytoplasm_lo) * rng.uniform01();

        const int margin = static_cast<int>(std::ceil(cell.radius));
        const int lo = std::min(margin, spec.n - 1 - margin);
        const int hi = std::max(margin, spec.n - 1 - margin);
        bool placed = false;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
            cell.cy = static_cast<int>(rng.uniform_int(lo, hi));
            cell.cx = static_cast<int>(rng.uniform_int(lo, hi));
            cell.cz = static_cast<int>(rng.uniform_int(lo, hi));
            placed = true;
            for (const auto& other : cells) {
                const double dy = cell.cy - other.cy, dx = cell.cx - other.cx,
                             dz = cell.cz - other.cz;
                const double dist = std::sqrt(dy * dy + dx * dx + dz * dz);
                if (dist < 0.9 * (cell.radius + other.radius)) {
                    placed = false;
                    break;
                }
            }
        }
        // crowded spec: accept overlap, but never a duplicate center
        for (int guard = 0; guard < 10000 && !placed; ++guard) {
            placed = true;
            for (const auto& other : cells)
                if (cell.cy == other.cy && cell.cx == other.cx && cell.cz == other.cz) {
                    cell.cy = static_cast<int>(rng.uniform_int(lo, hi));
                    cell.cx = static_cast<int>(rng.uniform_int(lo, hi));
                    cell.cz = static_cast<int>(rng.uniform_int(lo, hi));
                    placed = false;
                    break;
                }
        }
        if (!placed) throw DataError("phantom_cells: could not place a unique center");
        cells.push_back(cell);
    }
    return cells;
}

/// Builds an isotropic phantom volume in [0,1]. grf: smoothed white noise per
/// channel. cells: a dim textured background, cytoplasm spheres, then all
/// nuclei on top (painting order guarantees nuclei win where cells touch).
inline Volume generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const int n = spec.n;
    const std::size_t voxels = static_cast<std::size_t>(n) * n * n;
    Volume v(spec.channels, n, n, n);

    if (spec.kind == PhantomKind::Grf) {
        Rng rng(mix_seed({spec.seed, 0x67726621ull}));  // noise stream
        for (int c = 0; c < spec.channels; ++c) {
            const std::vector<double> field = detail::grf_field(rng, n, spec.grf_sigma);
            for (std::size_t i = 0; i < voxels; ++i)
                v.data[c * voxels + i] = static_cast<float>(field[i]);
        }
        return v;
    }

    // textured background: shallow grf remapped into [0.05, 0.25]
    Rng bg_rng(mix_seed({spec.seed, 0x6267726eull}));
    for (int c = 0; c < spec.channels; ++c) {
        const std::vector<double> field = detail::grf_field(bg_rng, n, 1.2);
        for (std::size_t i = 0; i < voxels; ++i)
            v.data[c * voxels + i] = static_cast<float>(0.05 + 0.20 * field[i]);
    }

    const std::vector<PhantomCell> cells = phantom_cells(spec);
    const auto paint_ball = [&](int cy, int cx, int cz, double radius, double value) {
        const int r = static_cast<int>(std::ceil(radius + 0.5));
        for (int h = std::max(0, cy - r); h <= std::min(n - 1, cy + r); ++h)
            for (int w = std::max(0, cx - r); w <= std::min(n - 1, cx + r); ++w)
                for (int z = std::max(0, cz - r); z <= std::min(n - 1, cz + r); ++z) {
                    const double dy = h - cy, dx = w - cx, dz = z - cz;
                    const double dist = std::sqrt(dy * dy + dx * dx + dz * dz);
                    // one-voxel soft shell so spheres don't alias
                    const double wgt = std::clamp(radius + 0.5 - dist, 0.0, 1.0);
                    if (wgt <= 0.0) continue;
                    for (int c = 0; c < spec.channels; ++c) {
                        float& out = v.at(c, h, w, z);
                        out = static_cast<float>((1.0 - wgt) * out + wgt * value);
                    }
                }
    };
    for (const auto& cell : cells)
        paint_ball(cell.cy, cell.cx, cell.cz, cell.radius, cell.cytoplasm);
    for (const auto& cell : cells)
        paint_ball(cell.cy, cell.cx, cell.cz, std::max(1.0, 0.45 * cell.radius), cell.nucleus);
    for (const auto& cell : cells)  // centers carry their own nucleus intensity
        for (int c = 0; c < spec.channels; ++c)
            v.at(c, cell.cy, cell.cx, cell.cz) = static_cast<float>(cell.nucleus);
    return v;
}

// ---------------------------------------------------------------------------
// Isotropy audit helpers

/// Lag-1 autocorrelation of one channel along axis 0 (height), 1 (width), or
/// 2 (depth), over interior voxel pairs.
inline double autocorr_lag1(const Volume& v, int channel, int axis) {
    if (channel < 0 || channel >= v.channels) throw DataError("autocorr_lag1: bad channel");
    if (axis < 0 || axis > 2) throw DataError("autocorr_lag1: axis must be 0, 1, or 2");
    double mean = 0.0;
    const std::size_t voxels = static_cast<std::size_t>(v.height) * v.width * v.depth;
    for (int h = 0; h < v.height; ++h)
        for (int w = 0; w < v.width; ++w)
            for (int z = 0; z < v.depth; ++z) mean += v.at(channel, h, w, z);
    mean /= static_cast<double>(voxels);

    double var = 0.0;
    for (int h = 0; h < v.height; ++h)
        for (int w = 0; w < v.width; ++w)
            for (int z = 0; z < v.depth; ++z) {
                const double d = v.at(channel, h, w, z) - mean;
                var += d * d;
            }
    var /= static_cast<double>(voxels);
    if (var <= 0.0) throw NumericError("autocorr_lag1: constant volume");

    const int dh = axis == 0, dw = axis == 1, dz = axis == 2;
    double acc = 0.0;
    std::size_t pairs = 0;
    for (int h = 0; h + dh < v.height; ++h)
        for (int w = 0; w + dw < v.width; ++w)
            for (int z = 0; z + dz < v.depth; ++z) {
                acc += (v.at(channel, h, w, z) - mean) *
                       (v.at(channel, h + dh, w + dw, z + dz) - mean);
                ++pairs;
            }
    return acc / static_cast<double>(pairs) / var;
}

/// Mean per-slice pixel variance over all slices along one axis.
inline double mean_slice_variance(const Volume& v, Axis axis) {
    double total = 0.0;
    const int count = slice_count(v, axis);
    for (int i = 0; i < count; ++i) {
        const Image2D img = slice(v, axis, i);
        double s = 0.0, ss = 0.0;
        for (float x : img.data) {
            s += x;
            ss += static_cast<double>(x) * x;
        }
        const double m = s / static_cast<double>(img.data.size());
        total += ss / static_cast<double>(img.data.size()) - m * m;
    }
    return total / count;
}

// ---------------------------------------------------------------------------
// Dataset assembly

struct CropProvenance {
    std::size_t volume = 0;  // index into the source list
    Axis axis = Axis::XY;    // harvesting is XY-only by design
    int z = 0, row0 = 0, col0 = 0;
};

struct TrainingSlices {
    std::vector<Image2D> images;
    std::vector<CropProvenance> provenance;  // parallel to images
};

/// Random square crops from XY planes only — the method trains on the
/// acquisition plane and must generalize to the others, so no other axis is
/// ever sampled here.
inline TrainingSlices harvest_training_slices(const std::vector<Volume>& volumes, int size,
                                              std::size_t count, std::uint64_t seed) {
    if (volumes.empty()) throw DataError("harvest_training_slices: no volumes");
    if (size < 1) throw DataError("harvest_training_slices: size must be >= 1");
    for (const auto& v : volumes)
        if (size > v.height || size > v.width)
            throw DataError("harvest_training_slices: crop size " + std::to_string(size) +
                            " exceeds volume extent " +
                            shape_string(v.channels, v.height, v.width, v.depth));

    Rng rng(mix_seed({seed, 0x68727673ull}));
    TrainingSlices out;
    out.images.reserve(count);
    out.provenance.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        CropProvenance p;
        p.volume = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(volumes.size()) - 1));
        const Volume& v = volumes[p.volume];
        p.z = static_cast<int>(rng.uniform_int(0, v.depth - 1));
        p.row0 = static_cast<int>(rng.uniform_int(0, v.height - size));
        p.col0 = static_cast<int>(rng.uniform_int(0, v.width - size));
        Image2D img(v.channels, size, size);
        for (int c = 0; c < v.channels; ++c)
            for (int r = 0; r < size; ++r)
                for (int col = 0; col < size; ++col)
                    img.at(c, r, col) = v.at(c, p.row0 + r, p.col0 + col, p.z);
        out.images.push_back(std::move(img));
        out.provenance.push_back(p);
    }
    return out;
}

struct EvalPair {
    Volume low;    // z-subsampled input
    Volume truth;  // isotropic ground truth
};

/// Paired evaluation data: (downsample_z(v, factor), v) for every volume.
inline std::vector<EvalPair> make_eval_pairs(const std::vector<Volume>& volumes, int factor) {
    std::vector<EvalPair> pairs;
    pairs.reserve(volumes.size());
    for (const auto& v : volumes) pairs.push_back({downsample_z(v, factor), v});
    return pairs;
}

}  // namespace voxsr
