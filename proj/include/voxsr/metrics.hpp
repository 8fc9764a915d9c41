#pragma once

// Evaluation metrics: windowed SSIM, Fréchet distance over an embedding
// (FID), and the per-axis SliceFID aggregate for volumes. The embedder is a
// desk-scale stand-in for Inception features, so absolute FID values are not
// comparable to published numbers; orderings are.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/image.hpp"
#include "voxsr/linalg.hpp"
#include "voxsr/mask.hpp"
#include "voxsr/net.hpp"
#include "voxsr/volume.hpp"

namespace voxsr {

// ---------------------------------------------------------------------------
// SSIM

/// Mean structural similarity over all 8x8 uniform windows (stride 1, valid
/// positions), unbiased second moments, K1 = 0.01, K2 = 0.03, range 1.0.
/// Channels are scored independently and averaged.
inline double ssim(const Image2D& a, const Image2D& b) {
    require_same_shape(a, b, "ssim");
    constexpr int W = 8;
    if (a.rows < W || a.cols < W)
        throw DataError("ssim: image smaller than the 8x8 window");
    constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    constexpr double N = W * W;

    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        double acc = 0.0;
        std::size_t windows = 0;
        for (int r0 = 0; r0 + W <= a.rows; ++r0)
            for (int c0 = 0; c0 + W <= a.cols; ++c0) {
                double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
                for (int r = r0; r < r0 + W; ++r)
                    for (int col = c0; col < c0 + W; ++col) {
                        const double x = a.at(c, r, col);
                        const double y = b.at(c, r, col);
                        sa += x;
                        sb += y;
                        saa += x * x;
                        sbb += y * y;
                        sab += x * y;
                    }
                const double ma = sa / N, mb = sb / N;
                const double va = (saa - N * ma * ma) / (N - 1);
                const double vb = (sbb - N * mb * mb) / (N - 1);
                const double cov = (sab - N * ma * mb) / (N - 1);
                acc += ((2 * ma * mb + C1) * (2 * cov + C2)) /
                       ((ma * ma + mb * mb + C1) * (va + vb + C2));
                ++windows;
            }
        total += acc / static_cast<double>(windows);
    }
    return total / a.channels;
}

// ---------------------------------------------------------------------------
// Feature embedding

enum class EmbedderKind { PooledStats, RandomConv };

/// Deterministic Image2D -> R^d map. PooledStats: per-channel mean and
/// variance (d = 2C). RandomConv: a fixed-seed bank of 16 random 3x3 filters
/// followed by global mean/variance pooling (d = 32, the default for FID).
class FeatureEmbedder {
  public:
    static FeatureEmbedder pooled_stats(int channels) {
        FeatureEmbedder e;
        e.kind_ = EmbedderKind::PooledStats;
        e.channels_ = channels;
        e.dim_ = 2 * channels;
        return e;
    }

    static FeatureEmbedder random_conv(int channels, std::uint64_t seed = 0x5eedf00d,
                                       int filters = 16) {
        FeatureEmbedder e;
        e.kind_ = EmbedderKind::RandomConv;
        e.channels_ = channels;
        e.filters_ = filters;
        e.dim_ = 2 * filters;
        Rng rng(mix_seed({seed, static_cast<std::uint64_t>(channels),
                          static_cast<std::uint64_t>(filters)}));
        e.weights_.resize(static_cast<std::size_t>(filters) * channels * 9);
        const double scale = 1.0 / std::sqrt(9.0 * channels);
        for (auto& w : e.weights_) w = scale * rng.normal();
        // The leading filters are structural probes; the rest are random draws
        // with their per-channel DC projected out so they respond to texture
        // rather than local brightness. Filter 0 (plain average) keeps
        // intensity shifts visible; 1/2 are vertical/horizontal differences
        // whose response vanishes on row- respectively column-replicated
        // content; 3 is a Laplacian measuring fine-detail energy (collapses
        // under blur, inflates under residual noise).
        static constexpr double kVDiff[9] = {-1, -1, -1, 0, 0, 0, 1, 1, 1};
        static constexpr double kHDiff[9] = {-1, 0, 1, -1, 0, 1, -1, 0, 1};
        static constexpr double kLap[9] = {-1, -1, -1, -1, 8, -1, -1, -1, -1};
        const double rt6 = std::sqrt(6.0), rt72 = std::sqrt(72.0);
        for (int f = 0; f < filters; ++f) {
            double* w = e.weights_.data() + static_cast<std::size_t>(f) * channels * 9;
            for (int c = 0; c < channels; ++c) {
                double* wc = w + c * 9;
                const double cs = 1.0 / std::sqrt(static_cast<double>(channels));
                if (f == 0) {
                    std::fill(wc, wc + 9, 1.0 / (9.0 * channels));
                } else if (f == 1 && filters > 4) {
                    for (int i = 0; i < 9; ++i) wc[i] = cs * kVDiff[i] / rt6;
                } else if (f == 2 && filters > 4) {
                    for (int i = 0; i < 9; ++i) wc[i] = cs * kHDiff[i] / rt6;
                } else if (f == 3 && filters > 4) {
                    for (int i = 0; i < 9; ++i) wc[i] = cs * kLap[i] / rt72;
                } else {
                    double m = 0.0;
                    for (int i = 0; i < 9; ++i) m += wc[i];
                    m /= 9.0;
                    for (int i = 0; i < 9; ++i) wc[i] -= m;
                }
            }
        }
        e.bias_.assign(static_cast<std::size_t>(filters), 0.0);
        return e;
    }

    EmbedderKind kind() const { return kind_; }
    int dim() const { return dim_; }
    int channels() const { return channels_; }

    std::vector<double> embed(const Image2D& img) const {
        if (img.channels != channels_)
            throw DataError("embedder: image has " + std::to_string(img.channels) +
                            " channels, expected " + std::to_string(channels_));
        const std::size_t px = static_cast<std::size_t>(img.rows) * img.cols;
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(dim_));
        auto push_stats = [&](const double* plane) {
            double s = 0, ss = 0;
            for (std::size_t i = 0; i < px; ++i) {
                s += plane[i];
                ss += plane[i] * plane[i];
            }
            const double m = s / static_cast<double>(px);
            out.push_back(m);
            out.push_back(ss / static_cast<double>(px) - m * m);
        };

        const BasicImage2D<double> dimg = img.cast<double>();
        if (kind_ == EmbedderKind::PooledStats) {
            for (int c = 0; c < channels_; ++c) push_stats(dimg.data.data() + c * px);
            return out;
        }
        std::vector<double> maps(static_cast<std::size_t>(filters_) * px);
        detail::conv3x3(dimg.data.data(), channels_, weights_.data(), bias_.data(),
                        maps.data(), filters_, img.rows, img.cols);
        // Rectify before pooling: the mean of a linear response is blind to
        // structural rearrangements (row shuffles, replication) that leave the
        // local average intact, while the mean absolute activation is not.
        for (auto& v : maps) v = std::abs(v);
        for (int f = 0; f < filters_; ++f) push_stats(maps.data() + f * px);
        return out;
    }

  private:
    EmbedderKind kind_ = EmbedderKind::RandomConv;
    int channels_ = 0;
    int filters_ = 0;
    int dim_ = 0;
    std::vector<double> weights_;
    std::vector<double> bias_;
};

// ---------------------------------------------------------------------------
// Gaussian moments and the Fréchet distance

struct GaussianStats {
    std::vector<double> mean;
    std::vector<double> cov;  // d x d row-major, symmetric
    std::size_t count = 0;

    int dim() const { return static_cast<int>(mean.size()); }
};

/// Sample mean and unbiased covariance. With fewer samples than dimensions
/// the covariance gains a 1e-6 ridge so the Fréchet square root stays PSD.
inline GaussianStats fit_gaussian(const std::vector<std::vector<double>>& features) {
    if (features.size() < 2) throw DataError("fit_gaussian: need at least 2 samples");
    const int d = static_cast<int>(features.front().size());
    for (const auto& f : features)
        if (static_cast<int>(f.size()) != d)
            throw DataError("fit_gaussian: inconsistent feature dimension");

    GaussianStats g;
    g.count = features.size();
    g.mean.assign(d, 0.0);
    for (const auto& f : features)
        for (int i = 0; i < d; ++i) g.mean[i] += f[i];
    for (int i = 0; i < d; ++i) g.mean[i] /= static_cast<double>(g.count);

    g.cov.assign(static_cast<std::size_t>(d) * d, 0.0);
    for (const auto& f : features)
        for (int i = 0; i < d; ++i) {
            const double di = f[i] - g.mean[i];
            for (int j = i; j < d; ++j) g.cov[i * d + j] += di * (f[j] - g.mean[j]);
        }
    const double denom = static_cast<double>(g.count - 1);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            g.cov[i * d + j] /= denom;
            g.cov[j * d + i] = g.cov[i * d + j];  // symmetry by construction
        }
    if (g.count < static_cast<std::size_t>(d))
        for (int i = 0; i < d; ++i) g.cov[i * d + i] += 1e-6;
    return g;
}

/// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}).
inline double frechet_distance(const GaussianStats& p, const GaussianStats& q) {
    const int d = p.dim();
    if (q.dim() != d) throw DataError("frechet_distance: dimension mismatch");

    double mean_term = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = p.mean[i] - q.mean[i];
        mean_term += diff * diff;
    }

    const std::vector<double> root1 = sqrt_psd(p.cov, d, "frechet_distance: cov1");
    std::vector<double> inner = matmul(matmul(root1, q.cov, d), root1, d);
    // symmetrize: the product is symmetric up to roundoff
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            inner[i * d + j] = inner[j * d + i] = 0.5 * (inner[i * d + j] + inner[j * d + i]);

    SymEig eig = jacobi_eigensymmetric(inner, d);
    const double tol = 1e-6 * std::max(std::abs(trace(inner, d)), 1.0);
    double tr_sqrt = 0.0;
    for (int i = 0; i < d; ++i) {
        if (eig.values[i] < -tol)
            throw NumericError("frechet_distance: cross term has negative eigenvalue " +
                               std::to_string(eig.values[i]) + " beyond tolerance");
        tr_sqrt += std::sqrt(std::max(0.0, eig.values[i]));
    }

    const double val = mean_term + trace(p.cov, d) + trace(q.cov, d) - 2.0 * tr_sqrt;
    return val < 0.0 ? 0.0 : val;  // clip the roundoff shadow below zero
}

// ---------------------------------------------------------------------------
// FID and SliceFID

inline double fid(const std::vector<Image2D>& reference,
                  const std::vector<Image2D>& candidates, const FeatureEmbedder& emb) {
    if (reference.empty() || candidates.empty()) throw DataError("fid: empty image set");
    auto embed_all = [&](const std::vector<Image2D>& images) {
        std::vector<std::vector<double>> out;
        out.reserve(images.size());
        for (const auto& img : images) out.push_back(emb.embed(img));
        return out;
    };
    return frechet_distance(fit_gaussian(embed_all(reference)),
                            fit_gaussian(embed_all(candidates)));
}

struct SliceFidReport {
    double fid_xy = 0.0;
    double fid_xz = 0.0;
    double fid_yz = 0.0;
    double slice_fid = 0.0;  // always the arithmetic mean of the three
};

/// FID of every slice along each axis of every volume against one reference
/// set; SliceFID is the mean of the three per-axis values.
inline SliceFidReport slice_fid(const std::vector<Image2D>& reference,
                                const std::vector<Volume>& volumes,
                                const FeatureEmbedder& emb) {
    if (volumes.empty()) throw DataError("slice_fid: no volumes");
    for (const auto& v : volumes)
        if (!v.isotropic())
            throw DataError("slice_fid: volume not isotropic: " +
                            shape_string(v.channels, v.height, v.width, v.depth));

    auto gather = [&](Axis axis) {
        std::vector<Image2D> slices;
        for (const auto& v : volumes)
            for (int i = 0; i < slice_count(v, axis); ++i) slices.push_back(slice(v, axis, i));
        return slices;
    };
    SliceFidReport r;
    r.fid_xy = fid(reference, gather(Axis::XY), emb);
    r.fid_xz = fid(reference, gather(Axis::XZ), emb);
    r.fid_yz = fid(reference, gather(Axis::YZ), emb);
    r.slice_fid = (r.fid_xy + r.fid_xz + r.fid_yz) / 3.0;
    return r;
}

// ---------------------------------------------------------------------------
// Paired 2D restoration protocol

struct Eval2DResult {
    int scale = 0;
    double fid = 0.0;
    double mean_ssim = 0.0;
    std::size_t pairs = 0;
};

/// Uniformly masks each test slice to n/scale rows, restores it with the
/// provided function, and scores mean SSIM per pair plus FID over the sets.
template <class RestoreFn>
inline Eval2DResult eval_paired_2d(const std::vector<Image2D>& truths, int scale,
                                   RestoreFn&& restore_fn, const FeatureEmbedder& emb) {
    if (scale != 2 && scale != 4 && scale != 8)
        throw ConfigError("eval_paired_2d: scale must be 2, 4, or 8");
    if (truths.empty()) throw DataError("eval_paired_2d: no test slices");
    const int n = truths.front().rows;
    if (truths.front().cols != n)
        throw DataError("eval_paired_2d: slices must be square");
    if (n % scale != 0) throw DataError("eval_paired_2d: scale must divide slice side");

    const RowMask mask = make_uniform_mask(n, n / scale);
    std::vector<Image2D> restored;
    restored.reserve(truths.size());
    double ssim_sum = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i].rows != n || truths[i].cols != n)
            throw DataError("eval_paired_2d: inconsistent slice shapes");
        const Image2D obs = gather_rows(truths[i], mask);
        Image2D out = restore_fn(obs, mask, i);
        require_same_shape(out, truths[i], "eval_paired_2d: restoration");
        ssim_sum += ssim(truths[i], out);
        restored.push_back(std::move(out));
    }

    Eval2DResult r;
    r.scale = scale;
    r.pairs = truths.size();
    r.mean_ssim = ssim_sum / static_cast<double>(truths.size());
    r.fid = fid(truths, restored, emb);
    return r;
}

// ---------------------------------------------------------------------------
// Report records

struct MetricRecord {
    std::string metric;  // "ssim", "fid", "slice_fid", ...
    std::string axis;    // "xy", "xz", "yz", "mean", or "" when not applicable
    std::string method;  // "msdsr", "nn", "linear", ...
    int scale = 0;
    double value = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;
};

inline std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string render_metrics_json(const std::vector<MetricRecord>& records) {
    std::string out = "[\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        char digest[24];
        std::snprintf(digest, sizeof digest, "%016llx",
                      static_cast<unsigned long long>(r.config_digest));
        out += "  {\"metric\":\"" + r.metric + "\",\"axis\":\"" + r.axis +
               "\",\"method\":\"" + r.method + "\",\"scale\":" + std::to_string(r.scale) +
               ",\"value\":" + format_double(r.value) +
               ",\"seed\":" + std::to_string(r.seed) + ",\"config\":\"" + digest + "\"}";
        out += i + 1 < records.size() ? ",\n" : "\n";
    }
    out += "]\n";
    return out;
}

inline std::string metrics_csv_header() {
    return "metric,axis,method,scale,value,seed,config\n";
}

inline std::string metrics_csv_rows(const std::vector<MetricRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        char digest[24];
        std::snprintf(digest, sizeof digest, "%016llx",
                      static_cast<unsigned long long>(r.config_digest));
        out += r.metric + "," + r.axis + "," + r.method + "," + std::to_string(r.scale) +
               "," + format_double(r.value) + "," + std::to_string(r.seed) + "," + digest +
               "\n";
    }
    return out;
}

}  // namespace voxsr
