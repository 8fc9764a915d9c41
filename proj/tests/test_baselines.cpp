#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "voxsr/baselines.hpp"

using namespace voxsr;

namespace {

Volume ramp_z_volume(int n, int depth) {
    Volume v(1, n, n, depth);
    for (int h = 0; h < n; ++h)
        for (int w = 0; w < n; ++w)
            for (int z = 0; z < depth; ++z)
                v.data[v.index(0, h, w, z)] = 0.1f + 0.05f * z;
    return v;
}

NetConfig small_cfg(int channels = 1, int in_extra = 0) {
    NetConfig cfg;
    cfg.channels = channels;
    cfg.features = 8;
    cfg.blocks = 2;
    cfg.temb_freqs = 4;
    cfg.in_extra = in_extra;
    return cfg;
}

}  // namespace

TEST_CASE("nearest-neighbor upsampling replicates planes") {
    Rng rng(1);
    Volume v(2, 4, 4, 3);
    for (auto& x : v.data) x = static_cast<float>(rng.uniform01());

    CHECK(same_values(nn_upsample_z(v, 1), v));

    Volume two(1, 2, 2, 2);
    for (int h = 0; h < 2; ++h)
        for (int w = 0; w < 2; ++w) {
            two.data[two.index(0, h, w, 0)] = 0.25f;
            two.data[two.index(0, h, w, 1)] = 0.75f;
        }
    const Volume up = nn_upsample_z(two, 2);
    REQUIRE(up.depth == 4);
    const float plan[] = {0.25f, 0.25f, 0.75f, 0.75f};
    for (int z = 0; z < 4; ++z)
        CHECK(up.data[up.index(0, 1, 1, z)] == plan[z]);

    // grid planes preserved exactly
    const Volume up3 = nn_upsample_z(v, 4);
    for (int z = 0; z < v.depth; ++z)
        CHECK(slice(up3, Axis::XY, 4 * z) == slice(v, Axis::XY, z));
}

TEST_CASE("linear upsampling interpolates and clamps the tail") {
    // two planes 0 and 1, factor 2: inserted plane is their midpoint
    Volume two(1, 2, 2, 2);
    for (int h = 0; h < 2; ++h)
        for (int w = 0; w < 2; ++w) {
            two.data[two.index(0, h, w, 0)] = 0.0f;
            two.data[two.index(0, h, w, 1)] = 1.0f;
        }
    const Volume up = linear_upsample_z(two, 2);
    REQUIRE(up.depth == 4);
    CHECK(up.data[up.index(0, 0, 0, 0)] == 0.0f);
    CHECK(up.data[up.index(0, 0, 0, 1)] == 0.5f);
    CHECK(up.data[up.index(0, 0, 0, 2)] == 1.0f);
    CHECK(up.data[up.index(0, 0, 0, 3)] == 1.0f);  // clamped past the last plane

    // a z-linear volume is reproduced exactly on the interpolation range
    const Volume fine = ramp_z_volume(4, 8);
    const Volume coarse = downsample_z(fine, 4);
    const Volume rec = linear_upsample_z(coarse, 4);
    REQUIRE(rec.depth == 8);
    for (int z = 0; z <= 4; ++z)
        for (int h = 0; h < 4; ++h)
            for (int w = 0; w < 4; ++w)
                CHECK(rec.data[rec.index(0, h, w, z)] ==
                      Catch::Approx(fine.data[fine.index(0, h, w, z)]).margin(1e-6));

    // grid fidelity for an arbitrary volume
    Rng rng(7);
    Volume v(1, 4, 4, 3);
    for (auto& x : v.data) x = static_cast<float>(rng.uniform01());
    const Volume up2 = linear_upsample_z(v, 2);
    for (int z = 0; z < v.depth; ++z)
        CHECK(slice(up2, Axis::XY, 2 * z) == slice(v, Axis::XY, z));

    Volume thin(1, 4, 4, 1);
    CHECK_THROWS_AS(linear_upsample_z(thin, 2), DataError);
    CHECK_THROWS_AS(nn_upsample_z(thin, 0), DataError);
}

TEST_CASE("gaussian blur is separable, normalized, and constant-preserving") {
    const Volume flat(1, 5, 5, 5, 0.42f);
    const Volume blurred_flat = gaussian_blur_3d(flat);
    for (float x : blurred_flat.data) CHECK(x == Catch::Approx(0.42f).margin(1e-6));

    // interior impulse spreads as the separable [1,2,1]/4 product kernel
    Volume impulse(1, 7, 7, 7, 0.0f);
    impulse.data[impulse.index(0, 3, 3, 3)] = 1.0f;
    const Volume spread = gaussian_blur_3d(impulse);
    auto k = [](int off) { return off == 0 ? 0.5 : 0.25; };
    double mass = 0.0;
    for (int dh = -2; dh <= 2; ++dh)
        for (int dw = -2; dw <= 2; ++dw)
            for (int dz = -2; dz <= 2; ++dz) {
                const float got = spread.data[spread.index(0, 3 + dh, 3 + dw, 3 + dz)];
                const bool inside = std::abs(dh) <= 1 && std::abs(dw) <= 1 && std::abs(dz) <= 1;
                const double want = inside ? k(dh) * k(dw) * k(dz) : 0.0;
                CHECK(got == Catch::Approx(want).margin(1e-7));
            }
    for (float x : spread.data) mass += x;
    CHECK(mass == Catch::Approx(1.0).margin(1e-5));

    // shift equivariance away from the border
    Volume moved(1, 7, 7, 7, 0.0f);
    moved.data[moved.index(0, 3, 3, 4)] = 1.0f;
    const Volume spread2 = gaussian_blur_3d(moved);
    for (int dz = -1; dz <= 1; ++dz)
        CHECK(spread2.data[spread2.index(0, 3, 3, 4 + dz)] ==
              Catch::Approx(spread.data[spread.index(0, 3, 3, 3 + dz)]).margin(1e-7));
}

TEST_CASE("untrained regressor fills free rows with zero and keeps the observation") {
    const int n = 8;
    const TinyDenoiserNet<float> model =
        TinyDenoiserNet<double>::init(small_cfg(), 3).cast<float>();  // conv_out still zero

    const RowMask mask = make_uniform_mask(n, 2);
    Rng data_rng(5);
    const Image2D obs = uniform_image(1, 2, n, data_rng);
    Rng rng(9);
    const Image2D out = ms_regression_restore(model, obs, mask, rng);

    for (int k = 0; k < mask.count(); ++k)
        for (int c = 0; c < n; ++c)
            CHECK(out.at(0, mask.indices[k], c) == obs.at(0, k, c));
    const auto bits = mask.bits();
    for (int r = 0; r < n; ++r)
        if (!bits[r])
            for (int c = 0; c < n; ++c) CHECK(out.at(0, r, c) == 0.0f);

    // full conditioning returns the observation for any model
    const RowMask all = make_uniform_mask(n, n);
    const Image2D full = uniform_image(1, n, n, data_rng);
    Rng rng2(10);
    CHECK(ms_regression_restore(model, full, all, rng2) == full);
}

TEST_CASE("regressor trained on constants restores the constant") {
    const int n = 12;
    const std::vector<Image2D> dataset(4, Image2D(1, n, n, 0.7f));
    RegressionTrainConfig cfg;
    cfg.steps = 1000;
    cfg.batch = 4;
    cfg.l_min = 2;
    cfg.l_max = 6;
    cfg.optim.base_lr = 1e-2;
    cfg.optim.horizon = 1000;
    cfg.seed = 31;

    std::vector<TrainStepRecordLite> log;
    const TinyDenoiserNet<float> model =
        train_ms_regression(dataset, small_cfg(), cfg, &log).cast<float>();
    REQUIRE(log.size() == 1000);
    CHECK(log.back().loss < log.front().loss);

    const RowMask mask = make_uniform_mask(n, 4);
    const Image2D obs(1, 4, n, 0.7f);
    Rng rng(77);
    const Image2D out = ms_regression_restore(model, obs, mask, rng);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            CHECK(out.at(0, r, c) == Catch::Approx(0.7).margin(0.05));

    // volume driver: conditioned planes exact, free voxels near the constant
    Volume low(1, n, n, 4, 0.7f);
    const Volume up = ms_regression_upsample(low, model, 99);
    REQUIRE(up.depth == n);
    for (int j = 0; j < 4; ++j)
        CHECK(slice(up, Axis::XY, j * (n / 4)) == slice(low, Axis::XY, j));
    for (float x : up.data) CHECK(x == Catch::Approx(0.7).margin(0.05));

    // deterministic in the master seed and thread count
    CHECK(same_values(ms_regression_upsample(low, model, 99, 4), up));
}

TEST_CASE("two-plane interpolator contracts") {
    const TinyDenoiserNet<float> zero_model =
        TinyDenoiserNet<double>::init(small_cfg(1, 1), 3).cast<float>();

    const Image2D a(1, 6, 6, 0.3f), b(1, 6, 6, 0.9f);
    const Image2D mid = e2e_interp(zero_model, a, b);
    for (float v : mid.data) CHECK(v == 0.0f);  // zero-init output conv

    Image2D wrong(1, 5, 6, 0.0f);
    CHECK_THROWS_AS(e2e_interp(zero_model, a, wrong), DataError);

    // recursion arithmetic: depth l -> (l-1)*2^d + 1
    Volume v(1, 6, 6, 3, 0.5f);
    CHECK(e2e_recurse(v, zero_model, 0).depth == 3);
    CHECK(e2e_recurse(v, zero_model, 1).depth == 5);
    CHECK(e2e_recurse(v, zero_model, 2).depth == 9);

    // original planes land on the power-of-two grid
    const Volume grown = e2e_recurse(v, zero_model, 2);
    for (int z = 0; z < 3; ++z)
        CHECK(slice(grown, Axis::XY, 4 * z) == slice(v, Axis::XY, z));

    const Volume padded = e2e_upsample_z(v, zero_model, 4);
    CHECK(padded.depth == 12);
    // tail planes replicate the last grown plane
    CHECK(slice(padded, Axis::XY, 9) == slice(padded, Axis::XY, 8));
    CHECK(slice(padded, Axis::XY, 11) == slice(padded, Axis::XY, 8));
    CHECK_THROWS_AS(e2e_upsample_z(v, zero_model, 3), ConfigError);
}

TEST_CASE("interpolator trained on constant volumes predicts the constant") {
    const std::vector<Volume> volumes(3, Volume(1, 12, 12, 6, 0.6f));
    RegressionTrainConfig cfg;
    cfg.steps = 1000;
    cfg.batch = 4;
    cfg.optim.base_lr = 1e-2;
    cfg.optim.horizon = 1000;
    cfg.seed = 8;

    const TinyDenoiserNet<float> model =
        train_e2e(volumes, small_cfg(1, 1), cfg).cast<float>();
    const Image2D plane(1, 12, 12, 0.6f);
    const Image2D mid = e2e_interp(model, plane, plane);
    for (float v : mid.data) CHECK(v == Catch::Approx(0.6).margin(0.05));

    // config guards
    CHECK_THROWS_AS(train_e2e(volumes, small_cfg(1, 0), cfg), ConfigError);
    CHECK_THROWS_AS(train_e2e({}, small_cfg(1, 1), cfg), DataError);
    std::vector<Volume> shallow(1, Volume(1, 12, 12, 2, 0.5f));
    CHECK_THROWS_AS(train_e2e(shallow, small_cfg(1, 1), cfg), DataError);
}

TEST_CASE("row fills mirror the z-upsamplers on uniform masks") {
    // 2 channels, 8 rows, values encode (channel, source row)
    const RowMask mask = make_uniform_mask(8, 4);
    Image2D obs(2, 4, 3);
    for (int c = 0; c < 2; ++c)
        for (int r = 0; r < 4; ++r)
            for (int col = 0; col < 3; ++col) obs.at(c, r, col) = 10.0f * c + r;

    const Image2D nn = nn_restore_rows(obs, mask);
    REQUIRE(nn.rows == 8);
    for (int c = 0; c < 2; ++c)
        for (int r = 0; r < 8; ++r)
            CHECK(nn.at(c, r, 0) == 10.0f * c + r / 2);  // round-down replication

    const Image2D lin = linear_restore_rows(obs, mask);
    for (int c = 0; c < 2; ++c) {
        for (int k = 0; k < 4; ++k)  // conditioned rows bit-exact
            CHECK(lin.at(c, 2 * k, 0) == obs.at(c, k, 0));
        CHECK(lin.at(c, 1, 1) == Catch::Approx(10.0 * c + 0.5).margin(1e-6));
        CHECK(lin.at(c, 5, 2) == Catch::Approx(10.0 * c + 2.5).margin(1e-6));
        CHECK(lin.at(c, 7, 0) == obs.at(c, 3, 0));  // tail clamps
    }

    // irregular mask: interpolation spans follow the index gaps
    const RowMask gaps = RowMask::from_indices(6, {1, 4});
    Image2D two(1, 2, 1);
    two.at(0, 0, 0) = 0.0f;
    two.at(0, 1, 0) = 0.9f;
    const Image2D fill = linear_restore_rows(two, gaps);
    CHECK(fill.at(0, 0, 0) == 0.0f);  // clamps before the first row
    CHECK(fill.at(0, 2, 0) == Catch::Approx(0.3).margin(1e-6));
    CHECK(fill.at(0, 3, 0) == Catch::Approx(0.6).margin(1e-6));
    CHECK(fill.at(0, 5, 0) == 0.9f);
    const Image2D near = nn_restore_rows(two, gaps);
    CHECK(near.at(0, 0, 0) == 0.0f);
    CHECK(near.at(0, 3, 0) == 0.0f);
    CHECK(near.at(0, 4, 0) == 0.9f);

    Image2D wrong(1, 3, 1);
    CHECK_THROWS_AS(nn_restore_rows(wrong, mask), DataError);
    CHECK_THROWS_AS(linear_restore_rows(wrong, mask), DataError);
}
