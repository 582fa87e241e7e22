#include <doctest.h>

#include <cmath>
#include <vector>

#include "freqpde/csdp.hpp"
#include "freqpde/rng.hpp"
#include "freqpde/synth.hpp"

#include "oracles.hpp"

using namespace freqpde;

namespace {

WeightSet zero_weights(const std::vector<LayerGeometry>& geo) {
    WeightSet ws(0, "zero");
    for (const LayerGeometry& g : geo) ws.insert(g.name, Tensor(g.shape));
    return ws;
}

void check_bins_valid(const BinField& bins) {
    const std::size_t n = bins.centers.extent(0);
    const std::size_t h = bins.centers.extent(1);
    const std::size_t w = bins.centers.extent(2);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t b = 0; b < n; ++b) {
                const float c = bins.centers(b, y, x);
                CHECK(c >= static_cast<float>(bins.d_min));
                CHECK(c <= static_cast<float>(bins.d_max));
                if (b > 0) CHECK(bins.centers(b - 1, y, x) < c);
            }
}

}  // namespace

TEST_CASE("attractor delta: fixed point, closed form, and direction") {
    // All attractors at the center: no pull.
    const double at_center[] = {5.0, 5.0, 5.0};
    CHECK(attractor_delta(5.0, at_center, 300.0, 2.0) == 0.0);

    // Single attractor 0.1 above: delta = 0.1 / (1 + 300 * 0.01) = 0.025.
    const double above[] = {5.1};
    CHECK(std::abs(attractor_delta(5.0, above, 300.0, 2.0) - 0.025) < 1e-9);

    // Symmetric attractors cancel.
    const double sym[] = {4.9, 5.1};
    CHECK(std::abs(attractor_delta(5.0, sym, 300.0, 2.0)) < 1e-12);

    // Pull direction matches the attractor side and never overshoots.
    UniformStream rng(55, "attr");
    for (int i = 0; i < 200; ++i) {
        const double c = rng.next(1.0, 60.0);
        const double p = rng.next(1.0, 60.0);
        const double one[] = {p};
        const double d = attractor_delta(c, one, 300.0, 2.0);
        if (p > c) CHECK(d >= 0.0);
        if (p < c) CHECK(d <= 0.0);
        CHECK(std::abs(d) <= std::abs(p - c) + 1e-12);
    }
}

TEST_CASE("channel gate kernel width follows the channel count") {
    CHECK(eca_kernel_size(2) == 3);
    CHECK(eca_kernel_size(16) == 3);
    CHECK(eca_kernel_size(64) == 3);
    // log2(128)/2 + 1/2 = 4 sits between two odds; ties resolve upward.
    CHECK(eca_kernel_size(128) == 5);
    CHECK(eca_kernel_size(256) == 5);
    CHECK(eca_kernel_size(4096) == 7);
}

TEST_CASE("channel gating: zero weights halve the features, zeta matters") {
    const std::size_t c = 12;
    CsdpConfig cfg;
    const auto geo = csdp_geometry(1, c, cfg);
    const auto cams = synth_calibration(2, 352, 128);
    const FeatureMap f = oracle::random_feature(c, 4, 6, 3, "eca");

    const WeightSet zw = zero_weights(geo);
    const FeatureMap halved = eca_condition(f, cams[0], 4.0, zw, "csdp.l0.eca");
    for (std::size_t i = 0; i < f.tensor().size(); ++i)
        CHECK(halved.tensor()[i] == doctest::Approx(0.5f * f.tensor()[i]).epsilon(1e-6));

    const WeightSet ws = seeded_init(9, geo);
    const FeatureMap a = eca_condition(f, cams[0], 4.0, ws, "csdp.l0.eca");
    const FeatureMap b = eca_condition(f, cams[0], 8.0, ws, "csdp.l0.eca");
    CHECK(oracle::max_abs_diff(a.tensor(), b.tensor()) > 0.0);

    // Gates scale whole channels: output / input is constant per channel.
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double g0 = a.at(ch, 0, 0) / f.at(ch, 0, 0);
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 6; ++x)
                CHECK(a.at(ch, y, x) == doctest::Approx(g0 * f.at(ch, y, x)).epsilon(1e-4));
    }
}

TEST_CASE("width attention with mu zero is a bit-exact copy") {
    const std::size_t c = 8;
    CsdpConfig cfg;
    const auto ws = seeded_init(4, csdp_geometry(1, c, cfg));
    std::vector<FeatureMap> views{oracle::random_feature(c, 3, 10, 4, "cwa0"),
                                  oracle::random_feature(c, 3, 10, 5, "cwa1")};
    const auto out = cross_view_width_attention(views, 0.0, ws, "csdp.l0.cwa");
    REQUIRE(out.size() == 2);
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t i = 0; i < views[j].tensor().size(); ++i)
            CHECK(out[j].tensor()[i] == views[j].tensor()[i]);
}

TEST_CASE("width attention leaves interior columns bit-identical") {
    const std::size_t c = 8, w = 10;
    CsdpConfig cfg;
    const auto ws = seeded_init(4, csdp_geometry(1, c, cfg));
    std::vector<FeatureMap> views{oracle::random_feature(c, 3, w, 6, "cwa2"),
                                  oracle::random_feature(c, 3, w, 7, "cwa3")};
    const double mu = 0.2;  // m = 2 of 10 columns per side
    const auto out = cross_view_width_attention(views, mu, ws, "csdp.l0.cwa");
    bool border_changed = false;
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t y = 0; y < 3; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    const bool border = x < 2 || x >= w - 2;
                    if (!border)
                        CHECK(out[j].at(ch, y, x) == views[j].at(ch, y, x));
                    else if (out[j].at(ch, y, x) != views[j].at(ch, y, x))
                        border_changed = true;
                }
    CHECK(border_changed);
}

TEST_CASE("width attention matches a brute-force oracle") {
    const std::size_t c = 5, h = 2, w = 8, m = 2, band = 2 * m;
    CsdpConfig cfg;
    const auto ws = seeded_init(11, csdp_geometry(1, c, cfg));
    std::vector<FeatureMap> views{oracle::random_feature(c, h, w, 8, "cwa4"),
                                  oracle::random_feature(c, h, w, 9, "cwa5")};
    const auto got = cross_view_width_attention(views, 0.25, ws, "csdp.l0.cwa");

    const Tensor& wq = ws.at("csdp.l0.cwa.q");
    const Tensor& wk = ws.at("csdp.l0.cwa.k");
    const Tensor& wv = ws.at("csdp.l0.cwa.v");
    const Tensor& wo = ws.at("csdp.l0.cwa.o");
    const auto column_of = [&](std::size_t b) { return b < m ? b : w - band + b; };

    for (std::size_t y = 0; y < h; ++y) {
        std::vector<std::vector<double>> feat, q, k, v;
        for (std::size_t j = 0; j < views.size(); ++j)
            for (std::size_t b = 0; b < band; ++b) {
                std::vector<double> col(c);
                for (std::size_t ch = 0; ch < c; ++ch)
                    col[ch] = static_cast<double>(views[j].at(ch, y, column_of(b)));
                feat.push_back(col);
                q.push_back(oracle::matvec(wq, col));
                k.push_back(oracle::matvec(wk, col));
                v.push_back(oracle::matvec(wv, col));
            }
        for (std::size_t t = 0; t < feat.size(); ++t) {
            const std::vector<double> ctx = oracle::attention(q, k, v, t);
            const std::vector<double> mixed = oracle::matvec(wo, ctx);
            const std::size_t j = t / band;
            const std::size_t x = column_of(t % band);
            for (std::size_t ch = 0; ch < c; ++ch)
                CHECK(std::abs(static_cast<double>(got[j].at(ch, y, x)) -
                               (feat[t][ch] + mixed[ch])) < 1e-5);
        }
    }
}

TEST_CASE("initial bins: uniform widths under zero weights, always ordered") {
    const std::size_t c = 6;
    CsdpConfig cfg;
    cfg.bins = 4;
    const auto geo = csdp_geometry(1, c, cfg);
    const FeatureMap f = oracle::random_feature(c, 3, 4, 2, "bins");

    const WeightSet zw = zero_weights(geo);
    const BinField uniform = init_bins(f, 4, 0.0, 8.0, zw, "csdp.bins");
    REQUIRE(uniform.centers.shape() == std::vector<std::size_t>{4, 3, 4});
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 4; ++x) {
            CHECK(uniform.centers(0, y, x) == 1.0f);
            CHECK(uniform.centers(1, y, x) == 3.0f);
            CHECK(uniform.centers(2, y, x) == 5.0f);
            CHECK(uniform.centers(3, y, x) == 7.0f);
        }

    const WeightSet ws = seeded_init(31, geo);
    const BinField learned = init_bins(f, cfg.bins, cfg.d_min, cfg.d_max, ws, "csdp.bins");
    check_bins_valid(learned);
}

TEST_CASE("attractor refinement doubles the grid and keeps bins legal") {
    const std::size_t c = 6;
    CsdpConfig cfg;
    cfg.bins = 8;
    const auto geo = csdp_geometry(2, c, cfg);
    const WeightSet ws = seeded_init(17, geo);

    const FeatureMap coarse_f = oracle::random_feature(c, 3, 4, 12, "ar0");
    const FeatureMap fine_f = oracle::random_feature(c, 6, 8, 13, "ar1");
    const BinField coarse = init_bins(coarse_f, cfg.bins, cfg.d_min, cfg.d_max, ws, "csdp.bins");
    const BinField fine = attractor_refine(coarse, fine_f, cfg, ws, "csdp.l1.attr");
    REQUIRE(fine.centers.shape() == std::vector<std::size_t>{8, 6, 8});
    check_bins_valid(fine);

    const FeatureMap wrong(c, 5, 8);
    CHECK_THROWS_AS(attractor_refine(coarse, wrong, cfg, ws, "csdp.l1.attr"), ShapeError);
}

TEST_CASE("huge alpha freezes refinement to the upsampled centers") {
    // With alpha -> inf every pull vanishes, so refined centers equal the
    // bilinear upsample of the coarse centers (after the ordering pass).
    const std::size_t c = 4;
    CsdpConfig cfg;
    cfg.bins = 4;
    cfg.alpha = 1e18;
    const auto geo = csdp_geometry(2, c, cfg);
    const WeightSet ws = seeded_init(3, geo);
    const FeatureMap coarse_f = oracle::random_feature(c, 2, 2, 1, "fz0");
    const FeatureMap fine_f = oracle::random_feature(c, 4, 4, 2, "fz1");
    const BinField coarse = init_bins(coarse_f, cfg.bins, cfg.d_min, cfg.d_max, ws, "csdp.bins");
    const BinField fine = attractor_refine(coarse, fine_f, cfg, ws, "csdp.l1.attr");

    const Tensor up = bilinear_resize(coarse.centers, 4, 4);
    CHECK(oracle::max_abs_diff(fine.centers, up) < 1e-5);
}

TEST_CASE("bin probabilities form a simplex; expectation matches loop oracle") {
    const std::size_t c = 6;
    CsdpConfig cfg;
    cfg.bins = 8;
    const auto geo = csdp_geometry(1, c, cfg);
    const WeightSet ws = seeded_init(23, geo);
    const FeatureMap f = oracle::random_feature(c, 4, 5, 6, "prob");

    const ProbField probs = bin_probabilities(f, cfg.bins, ws, "csdp.l0.prob");
    REQUIRE(probs.shape() == std::vector<std::size_t>{8, 4, 5});
    const BinField bins = init_bins(f, cfg.bins, cfg.d_min, cfg.d_max, ws, "csdp.bins");
    const DepthMap d = categorical_depth(probs, bins);

    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 5; ++x) {
            double sum = 0.0, expect = 0.0;
            for (std::size_t b = 0; b < 8; ++b) {
                CHECK(probs(b, y, x) >= 0.0f);
                sum += static_cast<double>(probs(b, y, x));
                expect += static_cast<double>(probs(b, y, x)) *
                          static_cast<double>(bins.centers(b, y, x));
            }
            CHECK(std::abs(sum - 1.0) < 1e-5);
            CHECK(std::abs(static_cast<double>(d.at(y, x)) - expect) < 1e-5);
            CHECK(d.at(y, x) >= static_cast<float>(cfg.d_min) - 1e-4f);
            CHECK(d.at(y, x) <= static_cast<float>(cfg.d_max) + 1e-4f);
        }
}

TEST_CASE("regressed depth respects the range; fusion blends exactly") {
    const std::size_t c = 6;
    CsdpConfig cfg;
    const auto geo = csdp_geometry(1, c, cfg);
    const WeightSet ws = seeded_init(29, geo);
    const FeatureMap f = oracle::random_feature(c, 4, 5, 30, "reg");

    const DepthMap dr = regress_depth(f, cfg.d_min, cfg.d_max, ws, "csdp.l0.reg");
    for (std::size_t i = 0; i < dr.tensor().size(); ++i) {
        CHECK(dr.tensor()[i] > static_cast<float>(cfg.d_min) - 1e-5f);
        CHECK(dr.tensor()[i] < static_cast<float>(cfg.d_max) + 1e-5f);
    }

    const WeightSet zw = zero_weights(geo);
    const DepthMap mid = regress_depth(f, 0.0, 10.0, zw, "csdp.l0.reg");
    for (std::size_t i = 0; i < mid.tensor().size(); ++i)
        CHECK(mid.tensor()[i] == 5.0f);

    DepthMap a(2, 2), b(2, 2);
    a.at(0, 0) = 4.0f; b.at(0, 0) = 8.0f;
    a.at(1, 1) = 10.0f; b.at(1, 1) = 20.0f;
    const DepthMap half = fuse_depth(a, b, 0.5);
    CHECK(half.at(0, 0) == 6.0f);
    CHECK(half.at(1, 1) == 15.0f);
    const DepthMap all_a = fuse_depth(a, b, 1.0);
    CHECK(all_a.at(0, 0) == 4.0f);
    const DepthMap all_b = fuse_depth(a, b, 0.0);
    CHECK(all_b.at(1, 1) == 20.0f);
    CHECK_THROWS_AS(fuse_depth(a, b, 1.5), ValidationError);
}

TEST_CASE("full head: shapes, range, and zero-weight midpoint") {
    CsdpConfig cfg;
    cfg.bins = 8;
    cfg.attractors = 4;
    const std::size_t c = 6;
    RigFeatures rig;
    rig.levels.push_back({{oracle::random_feature(c, 2, 4, 1, "h00"),
                           oracle::random_feature(c, 2, 4, 2, "h01")},
                          16.0});
    rig.levels.push_back({{oracle::random_feature(c, 4, 8, 3, "h10"),
                           oracle::random_feature(c, 4, 8, 4, "h11")},
                          8.0});
    const auto cams = synth_calibration(2, 352, 128);
    const auto geo = csdp_geometry(2, c, cfg);

    const WeightSet ws = seeded_init(77, geo);
    const DepthOutputs out = csdp_forward(rig, cams, cfg, ws);
    REQUIRE(out.levels.size() == 2);
    REQUIRE(out.levels[0].size() == 2);
    CHECK(out.levels[1][0].height() == 4);
    CHECK(out.levels[1][1].width() == 8);
    for (const auto& level : out.levels)
        for (const DepthMap& d : level)
            for (std::size_t i = 0; i < d.tensor().size(); ++i) {
                CHECK(d.tensor()[i] >= static_cast<float>(cfg.d_min) - 1e-4f);
                CHECK(d.tensor()[i] <= static_cast<float>(cfg.d_max) + 1e-4f);
            }

    // All-zero weights collapse every stage to its symmetric midpoint.
    const WeightSet zw = zero_weights(geo);
    const DepthOutputs flat = csdp_forward(rig, cams, cfg, zw);
    const float midpoint = static_cast<float>(0.5 * (cfg.d_min + cfg.d_max));
    for (const auto& level : flat.levels)
        for (const DepthMap& d : level)
            for (std::size_t i = 0; i < d.tensor().size(); ++i)
                CHECK(std::abs(d.tensor()[i] - midpoint) < 1e-3f);
}

TEST_CASE("full head validates its inputs") {
    CsdpConfig cfg;
    const std::size_t c = 4;
    const auto cams2 = synth_calibration(2, 352, 128);
    const auto geo = csdp_geometry(1, c, cfg);
    const WeightSet ws = seeded_init(1, geo);

    RigFeatures solo;
    solo.levels.push_back({{oracle::random_feature(c, 2, 4, 1, "v0")}, 4.0});
    const std::vector<CameraModel> cams1(cams2.begin(), cams2.begin() + 1);
    CHECK_THROWS_AS(csdp_forward(solo, cams1, cfg, ws), ValidationError);

    RigFeatures mismatch;
    mismatch.levels.push_back({{oracle::random_feature(c, 2, 4, 1, "v1"),
                                oracle::random_feature(c, 2, 4, 2, "v2")},
                               4.0});
    const auto cams3 = synth_calibration(3, 352, 128);
    CHECK_THROWS_AS(csdp_forward(mismatch, cams3, cfg, ws), ValidationError);

    RigFeatures jagged;
    jagged.levels.push_back({{oracle::random_feature(c, 2, 4, 1, "v3"),
                              oracle::random_feature(c, 2, 4, 2, "v4")},
                             8.0});
    jagged.levels.push_back({{oracle::random_feature(c, 4, 9, 3, "v5"),
                              oracle::random_feature(c, 4, 9, 4, "v6")},
                             4.0});
    const auto geo2 = csdp_geometry(2, c, cfg);
    const WeightSet ws2 = seeded_init(1, geo2);
    CHECK_THROWS_AS(csdp_forward(jagged, cams2, cfg, ws2), ShapeError);

    CsdpConfig bad = cfg;
    bad.d_min = 10.0;
    bad.d_max = 2.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CsdpConfig bad2 = cfg;
    bad2.mu = 0.7;
    CHECK_THROWS_AS(bad2.validate(), ValidationError);
}

TEST_CASE("head weight layout names every stage") {
    CsdpConfig cfg;
    const auto geo = csdp_geometry(3, 12, cfg);
    const WeightSet ws = seeded_init(5, geo);
    CHECK(ws.contains("csdp.bins.w0"));
    CHECK(ws.contains("csdp.l0.eca.mlp.w0"));
    CHECK(ws.contains("csdp.l0.eca.conv.w"));
    CHECK(ws.contains("csdp.l0.cwa.q"));
    CHECK(ws.contains("csdp.l2.cwa.o"));
    CHECK(ws.contains("csdp.l0.prob.w0"));
    CHECK(ws.contains("csdp.l2.reg.b0"));
    CHECK(ws.contains("csdp.l1.attr.w0"));
    CHECK(ws.contains("csdp.l2.attr.w0"));
    CHECK_FALSE(ws.contains("csdp.l0.attr.w0"));  // coarsest level initializes
    CHECK(ws.at("csdp.l0.cwa.q").shape() == std::vector<std::size_t>{12, 12});
    CHECK(ws.at("csdp.l0.eca.conv.w").shape() == std::vector<std::size_t>{3});
}
