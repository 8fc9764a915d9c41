#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "voxsr/net.hpp"

using namespace voxsr;

namespace {

BasicImage2D<double> random_image(int c, int r, int n, Rng& rng) {
    BasicImage2D<double> img(c, r, n);
    for (auto& x : img.data) x = rng.normal();
    return img;
}

void randomize_params(TinyDenoiserNet<double>& net, Rng& rng, double scale) {
    for (auto ref : net.params())
        for (auto& x : *ref.data) x = scale * rng.normal();
}

double weighted_output(const TinyDenoiserNet<double>& net, const BasicImage2D<double>& x,
                       int t, const BasicImage2D<double>& weight) {
    const BasicImage2D<double> out = net.forward(x, t);
    double s = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) s += weight.data[i] * out.data[i];
    return s;
}

}  // namespace

TEST_CASE("net forward honors its initialization and determinism contracts") {
    NetConfig cfg;
    cfg.channels = 1;
    cfg.features = 8;
    cfg.blocks = 2;
    cfg.temb_freqs = 8;
    const TinyDenoiserNet<double> net = TinyDenoiserNet<double>::init(cfg, 7);

    Rng rng(1);
    const BasicImage2D<double> x = random_image(1, 8, 8, rng);

    // zero-initialized output conv: prediction 0 everywhere
    const BasicImage2D<double> out = net.forward(x, 5);
    REQUIRE(out.channels == 1);
    REQUIRE(out.rows == 8);
    REQUIRE(out.cols == 8);
    for (double v : out.data) CHECK(v == 0.0);

    // same inputs -> identical outputs, bit for bit
    TinyDenoiserNet<double> live = net;
    Rng prng(2);
    randomize_params(live, prng, 0.2);
    const BasicImage2D<double> a = live.forward(x, 5);
    const BasicImage2D<double> b = live.forward(x, 5);
    CHECK(a == b);

    // the timestep reaches the output through the embedding
    const BasicImage2D<double> later = live.forward(x, 6);
    CHECK(a != later);

    BasicImage2D<double> wrong(2, 8, 8);
    CHECK_THROWS_AS(net.forward(wrong, 1), DataError);

    TinyDenoiserNet<double> poisoned = live;
    (*poisoned.params()[0].data)[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(poisoned.forward(x, 1), NumericError);
}

TEST_CASE("default architecture stays under the parameter budget") {
    const TinyDenoiserNet<double> net = TinyDenoiserNet<double>::init(NetConfig{}, 1);
    CHECK(net.param_count() == 39681);
    CHECK(net.param_count() <= 100000);

    NetConfig with_mask;
    with_mask.mask_channel = true;
    const TinyDenoiserNet<double> net2 = TinyDenoiserNet<double>::init(with_mask, 1);
    CHECK(net2.param_count() <= 100000);
    CHECK(net2.cfg.in_channels() == 2);
}

TEST_CASE("timestep embedding is bounded and t-dependent") {
    const auto e1 = timestep_embedding<double>(3, 16);
    const auto e2 = timestep_embedding<double>(4, 16);
    REQUIRE(e1.size() == 32);
    CHECK(e1 != e2);
    for (double v : e1) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    // lowest frequency is 1: first entry is sin(t)
    CHECK(e1[0] == Catch::Approx(std::sin(3.0)).margin(1e-12));
    CHECK(e1[16] == Catch::Approx(std::cos(3.0)).margin(1e-12));
}

TEST_CASE("backward gradients match central finite differences") {
    NetConfig cfg;
    cfg.channels = 1;
    cfg.features = 6;
    cfg.blocks = 2;
    cfg.temb_freqs = 8;

    const double h = 1e-4;
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        Rng rng(900 + trial);
        TinyDenoiserNet<double> net = TinyDenoiserNet<double>::init(cfg, 40 + trial);
        randomize_params(net, rng, 0.3);  // includes conv_out, else deep grads vanish

        const BasicImage2D<double> x = random_image(1, 8, 8, rng);
        const BasicImage2D<double> weight = random_image(1, 8, 8, rng);
        const int t = rng.uniform_int(1, 50);

        NetTrace<double> trace;
        net.forward(x, t, &trace);
        TinyDenoiserNet<double> grads = TinyDenoiserNet<double>::shaped(cfg);
        net.backward(trace, weight, grads);

        auto params = net.params();
        auto grad_refs = grads.params();
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            std::vector<double>& vec = *params[pi].data;
            for (std::size_t k = 0; k < vec.size(); ++k) {
                const double keep = vec[k];
                vec[k] = keep + h;
                const double plus = weighted_output(net, x, t, weight);
                vec[k] = keep - h;
                const double minus = weighted_output(net, x, t, weight);
                vec[k] = keep;
                const double fd = (plus - minus) / (2.0 * h);
                const double an = (*grad_refs[pi].data)[k];
                const double rel =
                    std::abs(an - fd) / std::max(1e-6, std::max(std::abs(an), std::abs(fd)));
                worst = std::max(worst, rel);
            }
        }
    }
    INFO("worst relative error " << worst);
    CHECK(worst < 1e-4);
}

TEST_CASE("backward edge contracts") {
    NetConfig cfg;
    cfg.channels = 1;
    cfg.features = 5;
    cfg.blocks = 1;
    cfg.temb_freqs = 4;
    Rng rng(11);
    TinyDenoiserNet<double> net = TinyDenoiserNet<double>::init(cfg, 3);
    randomize_params(net, rng, 0.3);

    const BasicImage2D<double> x = random_image(1, 6, 6, rng);
    NetTrace<double> trace;
    net.forward(x, 2, &trace);

    // zero upstream -> zero gradients everywhere
    TinyDenoiserNet<double> grads = TinyDenoiserNet<double>::shaped(cfg);
    net.backward(trace, BasicImage2D<double>(1, 6, 6, 0.0), grads);
    for (auto ref : grads.params())
        for (double g : *ref.data) CHECK(g == 0.0);

    // zero output conv blocks the chain: only conv_out tensors receive gradient
    TinyDenoiserNet<double> gated = net;
    std::fill(gated.conv_out.w.begin(), gated.conv_out.w.end(), 0.0);
    NetTrace<double> trace2;
    gated.forward(x, 2, &trace2);
    TinyDenoiserNet<double> grads2 = TinyDenoiserNet<double>::shaped(cfg);
    const BasicImage2D<double> ones(1, 6, 6, 1.0);
    gated.backward(trace2, ones, grads2);
    for (auto ref : grads2.params()) {
        const bool is_out = ref.name.rfind("conv_out", 0) == 0;
        double mag = 0.0;
        for (double g : *ref.data) mag += std::abs(g);
        if (is_out)
            CHECK(mag > 0.0);
        else
            CHECK(mag == 0.0);
    }

    BasicImage2D<double> bad(2, 6, 6);
    CHECK_THROWS_AS(net.backward(trace, bad, grads), DataError);
}

TEST_CASE("float cast preserves the function up to rounding") {
    NetConfig cfg;
    cfg.channels = 1;
    cfg.features = 8;
    cfg.blocks = 2;
    cfg.temb_freqs = 8;
    Rng rng(21);
    TinyDenoiserNet<double> net = TinyDenoiserNet<double>::init(cfg, 9);
    randomize_params(net, rng, 0.2);
    const TinyDenoiserNet<float> fnet = net.cast<float>();

    const BasicImage2D<double> x = random_image(1, 8, 8, rng);
    const BasicImage2D<double> out_d = net.forward(x, 3);
    const BasicImage2D<float> out_f = fnet.forward(x.cast<float>(), 3);
    for (std::size_t i = 0; i < out_d.data.size(); ++i)
        CHECK(std::abs(out_d.data[i] - out_f.data[i]) < 1e-4);
}

TEST_CASE("mask-channel adapter feeds the mask as an input plane") {
    NetConfig cfg;
    cfg.channels = 1;
    cfg.features = 6;
    cfg.blocks = 1;
    cfg.temb_freqs = 4;
    cfg.mask_channel = true;
    Rng rng(5);
    TinyDenoiserNet<double> net = TinyDenoiserNet<double>::init(cfg, 2);
    randomize_params(net, rng, 0.3);

    const RowMask mask = RowMask::from_indices(6, {0, 3});
    const NetDenoiser<double> den(net, &mask);
    const BasicImage2D<double> x = random_image(1, 6, 6, rng);
    const BasicImage2D<double> out = den(x, 1);
    CHECK(out.channels == 1);
    CHECK(out.rows == 6);

    // a different mask changes the prediction
    const RowMask other = RowMask::from_indices(6, {1, 4});
    const NetDenoiser<double> den2(net, &other);
    CHECK(out != den2(x, 1));

    CHECK_THROWS_AS(NetDenoiser<double>(net, nullptr), ConfigError);
}
