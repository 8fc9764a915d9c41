#pragma once

// Small residual conv net predicting diffusion noise, with hand-rolled
// reverse-mode gradients. Templated on the scalar so training and gradient
// checks run in double while volume inference can use a float copy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "voxsr/common.hpp"
#include "voxsr/image.hpp"
#include "voxsr/mask.hpp"
#include "voxsr/rng.hpp"

namespace voxsr {

struct NetConfig {
    int channels = 1;    // output channels; also input image channels
    int features = 32;   // feature maps per hidden layer
    int blocks = 4;      // residual blocks
    int temb_freqs = 32; // sinusoidal frequencies; embedding dim = 2 * freqs
    int in_extra = 0;    // additional input channels (e.g. a second stacked plane)
    bool mask_channel = false;  // append the row mask as an extra input channel

    int in_channels() const { return channels + in_extra + (mask_channel ? 1 : 0); }
    int embed_dim() const { return 2 * temb_freqs; }

    std::string describe() const {
        return "net{c=" + std::to_string(channels) + ",f=" + std::to_string(features) +
               ",b=" + std::to_string(blocks) + ",k=" + std::to_string(temb_freqs) +
               ",x=" + std::to_string(in_extra) + ",mask=" + (mask_channel ? "1" : "0") + "}";
    }
};

/// Sinusoidal embedding of an integer timestep: freqs geometric in [1, 1/10000].
template <class T>
std::vector<T> timestep_embedding(int t, int freqs) {
    std::vector<T> emb(2 * static_cast<std::size_t>(freqs));
    for (int k = 0; k < freqs; ++k) {
        const double w =
            freqs > 1 ? std::exp(-std::log(10000.0) * k / (freqs - 1)) : 1.0;
        emb[k] = static_cast<T>(std::sin(t * w));
        emb[freqs + k] = static_cast<T>(std::cos(t * w));
    }
    return emb;
}

namespace detail {

/// 3x3 same-size convolution with zero padding, channel-major planes.
/// Accumulation order is fixed, so results are bit-reproducible.
template <class T>
void conv3x3(const T* in, int ci, const T* w, const T* b, T* out, int co, int rows, int cols) {
    for (int o = 0; o < co; ++o) {
        T* op = out + static_cast<std::size_t>(o) * rows * cols;
        for (int i = 0; i < rows * cols; ++i) op[i] = b[o];
        for (int c_in = 0; c_in < ci; ++c_in) {
            const T* ip = in + static_cast<std::size_t>(c_in) * rows * cols;
            const T* wk = w + (static_cast<std::size_t>(o) * ci + c_in) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                const T w0 = wk[ky * 3 + 0], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
                for (int r = 0; r < rows; ++r) {
                    const int rr = r + ky - 1;
                    if (rr < 0 || rr >= rows) continue;
                    const T* irow = ip + static_cast<std::size_t>(rr) * cols;
                    T* orow = op + static_cast<std::size_t>(r) * cols;
                    if (cols == 1) {
                        orow[0] += w1 * irow[0];
                        continue;
                    }
                    orow[0] += w1 * irow[0] + w2 * irow[1];
                    for (int c = 1; c < cols - 1; ++c)
                        orow[c] += w0 * irow[c - 1] + w1 * irow[c] + w2 * irow[c + 1];
                    orow[cols - 1] += w0 * irow[cols - 2] + w1 * irow[cols - 1];
                }
            }
        }
    }
}

/// Gradient of conv3x3 w.r.t. its weights/bias given the upstream gradient.
template <class T>
void conv3x3_grad_w(const T* in, int ci, const T* g, int co, int rows, int cols, T* dw, T* db) {
    for (int o = 0; o < co; ++o) {
        const T* gp = g + static_cast<std::size_t>(o) * rows * cols;
        T bsum = 0;
        for (int i = 0; i < rows * cols; ++i) bsum += gp[i];
        db[o] += bsum;
        for (int c_in = 0; c_in < ci; ++c_in) {
            const T* ip = in + static_cast<std::size_t>(c_in) * rows * cols;
            T* dwk = dw + (static_cast<std::size_t>(o) * ci + c_in) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                T a0 = 0, a1 = 0, a2 = 0;
                for (int r = 0; r < rows; ++r) {
                    const int rr = r + ky - 1;
                    if (rr < 0 || rr >= rows) continue;
                    const T* irow = ip + static_cast<std::size_t>(rr) * cols;
                    const T* grow = gp + static_cast<std::size_t>(r) * cols;
                    if (cols == 1) {
                        a1 += grow[0] * irow[0];
                        continue;
                    }
                    a1 += grow[0] * irow[0];
                    a2 += grow[0] * irow[1];
                    for (int c = 1; c < cols - 1; ++c) {
                        a0 += grow[c] * irow[c - 1];
                        a1 += grow[c] * irow[c];
                        a2 += grow[c] * irow[c + 1];
                    }
                    a0 += grow[cols - 1] * irow[cols - 2];
                    a1 += grow[cols - 1] * irow[cols - 1];
                }
                dwk[ky * 3 + 0] += a0;
                dwk[ky * 3 + 1] += a1;
                dwk[ky * 3 + 2] += a2;
            }
        }
    }
}

/// Gradient of conv3x3 w.r.t. its input: convolution with the flipped,
/// in/out-transposed kernel. Builds the transposed kernel on the fly.
template <class T>
void conv3x3_grad_in(const T* g, int co, const T* w, int ci, T* gin, int rows, int cols,
                     std::vector<T>& scratch) {
    scratch.assign(static_cast<std::size_t>(ci) * co * 9, T(0));
    for (int o = 0; o < co; ++o)
        for (int c_in = 0; c_in < ci; ++c_in)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx)
                    scratch[(static_cast<std::size_t>(c_in) * co + o) * 9 +
                            (2 - ky) * 3 + (2 - kx)] =
                        w[(static_cast<std::size_t>(o) * ci + c_in) * 9 + ky * 3 + kx];
    const std::vector<T> zero_bias(static_cast<std::size_t>(ci), T(0));
    conv3x3(g, co, scratch.data(), zero_bias.data(), gin, ci, rows, cols);
}

template <class T>
T silu(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    return x * s;
}

template <class T>
T silu_grad(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    return s * (T(1) + x * (T(1) - s));
}

}  // namespace detail

template <class T>
struct Conv3x3Layer {
    int in_ch = 0, out_ch = 0;
    std::vector<T> w;  // [out][in][3][3]
    std::vector<T> b;  // [out]

    static Conv3x3Layer zeros(int in_ch, int out_ch) {
        Conv3x3Layer l;
        l.in_ch = in_ch;
        l.out_ch = out_ch;
        l.w.assign(static_cast<std::size_t>(out_ch) * in_ch * 9, T(0));
        l.b.assign(static_cast<std::size_t>(out_ch), T(0));
        return l;
    }
};

template <class T>
struct LinearLayer {
    int in_dim = 0, out_dim = 0;
    std::vector<T> w;  // [out][in]
    std::vector<T> b;  // [out]

    static LinearLayer zeros(int in_dim, int out_dim) {
        LinearLayer l;
        l.in_dim = in_dim;
        l.out_dim = out_dim;
        l.w.assign(static_cast<std::size_t>(out_dim) * in_dim, T(0));
        l.b.assign(static_cast<std::size_t>(out_dim), T(0));
        return l;
    }
};

template <class T>
struct ParamRef {
    std::string name;
    std::vector<T>* data;
};

/// Activations retained by a forward pass for the matching backward pass.
template <class T>
struct NetTrace {
    BasicImage2D<T> input;              // net input (after any mask channel)
    std::vector<T> embed;               // timestep embedding
    std::vector<BasicImage2D<T>> h;     // h[0] = stem output, h[b] = block b output
    std::vector<BasicImage2D<T>> s;     // s[b] = SiLU(h[b]) feeding block b+1
};

/// Residual conv net: stem conv + additive timestep embedding, then
/// pre-activation residual blocks h += conv(SiLU(h)), then a zero-initialized
/// output conv so the untrained model predicts zero noise.
template <class T>
struct TinyDenoiserNet {
    NetConfig cfg;
    Conv3x3Layer<T> conv_in;
    LinearLayer<T> temb;
    std::vector<Conv3x3Layer<T>> blocks;
    Conv3x3Layer<T> conv_out;

    static TinyDenoiserNet shaped(const NetConfig& cfg) {
        TinyDenoiserNet net;
        net.cfg = cfg;
        net.conv_in = Conv3x3Layer<T>::zeros(cfg.in_channels(), cfg.features);
        net.temb = LinearLayer<T>::zeros(cfg.embed_dim(), cfg.features);
        net.blocks.assign(static_cast<std::size_t>(cfg.blocks),
                          Conv3x3Layer<T>::zeros(cfg.features, cfg.features));
        net.conv_out = Conv3x3Layer<T>::zeros(cfg.features, cfg.channels);
        return net;
    }

    /// He-style init for hidden convs, small init for the embedding projection,
    /// zeros for the output conv.
    static TinyDenoiserNet init(const NetConfig& cfg, std::uint64_t seed) {
        TinyDenoiserNet net = shaped(cfg);
        Rng rng(mix_seed({seed, 0x6e657469u}));  // distinct stream per purpose
        auto fill = [&rng](std::vector<T>& v, double scale) {
            for (auto& x : v) x = static_cast<T>(scale * rng.normal());
        };
        fill(net.conv_in.w, std::sqrt(2.0 / (9.0 * cfg.in_channels())));
        fill(net.temb.w, 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim())));
        for (auto& blk : net.blocks) fill(blk.w, std::sqrt(2.0 / (9.0 * cfg.features)));
        // conv_out stays zero
        return net;
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        out.push_back({"conv_in.w", &conv_in.w});
        out.push_back({"conv_in.b", &conv_in.b});
        out.push_back({"temb.w", &temb.w});
        out.push_back({"temb.b", &temb.b});
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            out.push_back({"block" + std::to_string(i) + ".w", &blocks[i].w});
            out.push_back({"block" + std::to_string(i) + ".b", &blocks[i].b});
        }
        out.push_back({"conv_out.w", &conv_out.w});
        out.push_back({"conv_out.b", &conv_out.b});
        return out;
    }

    std::size_t param_count() const {
        std::size_t n = conv_in.w.size() + conv_in.b.size() + temb.w.size() + temb.b.size() +
                        conv_out.w.size() + conv_out.b.size();
        for (const auto& blk : blocks) n += blk.w.size() + blk.b.size();
        return n;
    }

    void validate() const {
        auto ok = [](const std::vector<T>& v) { return all_finite(v); };
        bool fine = ok(conv_in.w) && ok(conv_in.b) && ok(temb.w) && ok(temb.b) &&
                    ok(conv_out.w) && ok(conv_out.b);
        for (const auto& blk : blocks) fine = fine && ok(blk.w) && ok(blk.b);
        if (!fine) throw NumericError("TinyDenoiserNet: non-finite parameters");
    }

    BasicImage2D<T> forward(const BasicImage2D<T>& x, int t, NetTrace<T>* trace = nullptr) const {
        if (x.channels != cfg.in_channels())
            throw DataError("TinyDenoiserNet: input has " + std::to_string(x.channels) +
                            " channels, expected " + std::to_string(cfg.in_channels()));
        validate();
        const int rows = x.rows, cols = x.cols;
        const int F = cfg.features;

        BasicImage2D<T> h(F, rows, cols);
        detail::conv3x3(x.data.data(), x.channels, conv_in.w.data(), conv_in.b.data(),
                        h.data.data(), F, rows, cols);

        const std::vector<T> emb = timestep_embedding<T>(t, cfg.temb_freqs);
        for (int f = 0; f < F; ++f) {
            T e = temb.b[f];
            const T* wf = temb.w.data() + static_cast<std::size_t>(f) * temb.in_dim;
            for (int k = 0; k < temb.in_dim; ++k) e += wf[k] * emb[k];
            T* plane = h.data.data() + static_cast<std::size_t>(f) * rows * cols;
            for (int i = 0; i < rows * cols; ++i) plane[i] += e;
        }

        if (trace) {
            trace->input = x;
            trace->embed = emb;
            trace->h.clear();
            trace->s.clear();
            trace->h.push_back(h);
        }

        BasicImage2D<T> act(F, rows, cols), delta(F, rows, cols);
        for (const auto& blk : blocks) {
            for (std::size_t i = 0; i < h.data.size(); ++i)
                act.data[i] = detail::silu(h.data[i]);
            detail::conv3x3(act.data.data(), F, blk.w.data(), blk.b.data(),
                            delta.data.data(), F, rows, cols);
            for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += delta.data[i];
            if (trace) {
                trace->s.push_back(act);
                trace->h.push_back(h);
            }
        }

        BasicImage2D<T> out(cfg.channels, rows, cols);
        detail::conv3x3(h.data.data(), F, conv_out.w.data(), conv_out.b.data(),
                        out.data.data(), cfg.channels, rows, cols);
        return out;
    }

    /// Accumulates parameter gradients of sum(upstream * forward(x, t)) into
    /// `grads`, which must be a same-shaped net (e.g. from shaped(cfg)).
    void backward(const NetTrace<T>& trace, const BasicImage2D<T>& upstream,
                  TinyDenoiserNet<T>& grads) const {
        const int rows = trace.input.rows, cols = trace.input.cols;
        const int F = cfg.features;
        if (upstream.channels != cfg.channels || upstream.rows != rows || upstream.cols != cols)
            throw DataError("TinyDenoiserNet: upstream gradient shape mismatch");
        if (static_cast<int>(trace.h.size()) != cfg.blocks + 1)
            throw DataError("TinyDenoiserNet: stale forward trace");

        std::vector<T> scratch;
        BasicImage2D<T> gh(F, rows, cols), gs(F, rows, cols);

        detail::conv3x3_grad_w(trace.h.back().data.data(), F, upstream.data.data(),
                               cfg.channels, rows, cols, grads.conv_out.w.data(),
                               grads.conv_out.b.data());
        detail::conv3x3_grad_in(upstream.data.data(), cfg.channels, conv_out.w.data(), F,
                                gh.data.data(), rows, cols, scratch);

        for (int b = cfg.blocks - 1; b >= 0; --b) {
            detail::conv3x3_grad_w(trace.s[b].data.data(), F, gh.data.data(), F, rows, cols,
                                   grads.blocks[b].w.data(), grads.blocks[b].b.data());
            detail::conv3x3_grad_in(gh.data.data(), F, blocks[b].w.data(), F, gs.data.data(),
                                    rows, cols, scratch);
            const auto& pre = trace.h[b].data;
            for (std::size_t i = 0; i < gh.data.size(); ++i)
                gh.data[i] += detail::silu_grad(pre[i]) * gs.data[i];
        }

        // timestep embedding: per-map sums feed the linear layer
        for (int f = 0; f < F; ++f) {
            const T* plane = gh.data.data() + static_cast<std::size_t>(f) * rows * cols;
            T de = 0;
            for (int i = 0; i < rows * cols; ++i) de += plane[i];
            grads.temb.b[f] += de;
            T* gw = grads.temb.w.data() + static_cast<std::size_t>(f) * temb.in_dim;
            for (int k = 0; k < temb.in_dim; ++k) gw[k] += de * trace.embed[k];
        }

        detail::conv3x3_grad_w(trace.input.data.data(), trace.input.channels, gh.data.data(),
                               F, rows, cols, grads.conv_in.w.data(), grads.conv_in.b.data());
    }

    template <class U>
    TinyDenoiserNet<U> cast() const {
        TinyDenoiserNet<U> out = TinyDenoiserNet<U>::shaped(cfg);
        auto copy = [](const std::vector<T>& src, std::vector<U>& dst) {
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<U>(src[i]);
        };
        copy(conv_in.w, out.conv_in.w);
        copy(conv_in.b, out.conv_in.b);
        copy(temb.w, out.temb.w);
        copy(temb.b, out.temb.b);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            copy(blocks[i].w, out.blocks[i].w);
            copy(blocks[i].b, out.blocks[i].b);
        }
        copy(conv_out.w, out.conv_out.w);
        copy(conv_out.b, out.conv_out.b);
        return out;
    }
};

/// Adapts a net to the (image, t) -> image denoiser call shape. When the net
/// expects a mask channel the adapter appends it (1 on conditioned rows).
template <class T>
class NetDenoiser {
  public:
    explicit NetDenoiser(const TinyDenoiserNet<T>& net, const RowMask* mask = nullptr)
        : net_(&net), mask_(mask) {
        if (net.cfg.mask_channel && !mask)
            throw ConfigError("NetDenoiser: net expects a mask channel but no mask given");
    }

    BasicImage2D<T> operator()(const BasicImage2D<T>& x, int t) const {
        if (!net_->cfg.mask_channel) return net_->forward(x, t);
        BasicImage2D<T> with_mask(x.channels + 1, x.rows, x.cols);
        std::copy(x.data.begin(), x.data.end(), with_mask.data.begin());
        const auto bits = mask_->bits();
        T* plane = with_mask.data.data() + x.data.size();
        for (int r = 0; r < x.rows; ++r)
            for (int c = 0; c < x.cols; ++c)
                plane[static_cast<std::size_t>(r) * x.cols + c] = bits[r] ? T(1) : T(0);
        BasicImage2D<T> out = net_->forward(with_mask, t);
        return out;
    }

  private:
    const TinyDenoiserNet<T>* net_;
    const RowMask* mask_;
};

}  // namespace voxsr
