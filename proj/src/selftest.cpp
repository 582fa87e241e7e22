#include "freqpde/selftest.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "freqpde/config.hpp"
#include "freqpde/csdp.hpp"
#include "freqpde/fspe.hpp"
#include "freqpde/io.hpp"
#include "freqpde/pde.hpp"
#include "freqpde/rng.hpp"
#include "freqpde/supervision.hpp"
#include "freqpde/synth.hpp"

namespace freqpde {

namespace {

FeatureMap random_feature(std::size_t c, std::size_t h, std::size_t w, UniformStream& rng) {
    FeatureMap f(c, h, w);
    for (float& v : f.tensor().values()) v = static_cast<float>(rng.next(-1.0, 1.0));
    return f;
}

WeightSet zero_weights(const std::vector<LayerGeometry>& geometry) {
    WeightSet ws(0, "zero");
    for (const LayerGeometry& g : geometry) ws.insert(g.name, Tensor(g.shape));
    return ws;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

// Standalone double-precision hybrid loss used as the finite-difference
// reference; mirrors the documented formulas, not the library internals.
double loss_f64(const std::vector<double>& depth, std::size_t h, std::size_t w,
                const SparseDepthTarget& target, const std::vector<double>& pseudo,
                double lambda_s, double lambda_m) {
    double l_s = 0.0;
    for (const SparseDepthSample& s : target.samples) {
        const double x = depth[s.v * w + s.u] - static_cast<double>(s.depth);
        l_s += std::abs(x) < 1.0 ? 0.5 * x * x : std::abs(x) - 0.5;
    }
    l_s /= static_cast<double>(target.samples.size());

    const std::size_t n = h * w;
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = 1.0 / depth[i];
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    double l_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (r[i] - mean) / sd;
        l_m += (z - pseudo[i]) * (z - pseudo[i]);
    }
    l_m /= static_cast<double>(n);
    return lambda_s * l_s + lambda_m * l_m;
}

struct Suite {
    std::uint64_t seed;
    std::vector<PropertyResult> results;

    void check(const std::string& name, const std::function<std::string()>& body) {
        PropertyResult r{name, false, ""};
        try {
            r.detail = body();  // empty string means pass
            r.pass = r.detail.empty();
        } catch (const std::exception& e) {
            r.detail = std::string("exception: ") + e.what();
        }
        results.push_back(std::move(r));
    }
};

std::string expect(bool ok, const std::string& detail) { return ok ? "" : detail; }

}  // namespace

std::vector<PropertyResult> run_selftest(std::uint64_t seed) {
    Suite suite{seed, {}};

    suite.check("tensor-io-round-trip", [&] {
        UniformStream rng(seed, "tensor-io");
        Tensor t({3, 5, 7});
        for (float& v : t.values()) v = static_cast<float>(rng.next(-10.0, 10.0));
        std::stringstream buf;
        write_tensor(buf, t);
        const std::string first = buf.str();
        const Tensor back = read_tensor(buf, "selftest");
        if (!back.same_shape(t)) return std::string("shape changed across the container");
        for (std::size_t i = 0; i < t.size(); ++i)
            if (back[i] != t[i]) return std::string("payload changed across the container");
        std::stringstream again;
        write_tensor(again, back);
        return expect(again.str() == first, "rewrite is not byte-identical");
    });

    suite.check("weights-deterministic", [&] {
        std::vector<LayerGeometry> geo;
        append_mlp_geometry(geo, "probe", std::vector<std::size_t>{7, 5, 3});
        const WeightSet a = seeded_init(seed, geo);
        const WeightSet b = seeded_init(seed, geo);
        const WeightSet c = seeded_init(seed + 1, geo);
        if (a.serialize() != b.serialize()) return std::string("same seed produced different weights");
        return expect(a.serialize() != c.serialize(), "different seeds produced equal weights");
    });

    suite.check("wavelet-round-trip", [&] {
        UniformStream rng(seed, "wavelet");
        const FeatureMap f = random_feature(3, 8, 12, rng);
        const FeatureMap back = idwt_haar(dwt_haar(f));
        const double err = max_abs_diff(back.tensor(), f.tensor());
        return expect(err < 1e-6, "round-trip error " + std::to_string(err));
    });

    suite.check("filter-field-simplex", [&] {
        UniformStream rng(seed, "simplex");
        const std::size_t c = 4;
        const auto geo = fspe_geometry(2, c);
        const WeightSet ws = seeded_init(seed, geo);
        const FeatureMap f = random_feature(c, 6, 9, rng);
        const FilterField field = predict_lowpass_filters(f, ws, "fspe.fuse1.filter");
        const std::size_t k2 = field.weights.extent(0);
        for (std::size_t y = 0; y < 6; ++y)
            for (std::size_t x = 0; x < 9; ++x) {
                double sum = 0.0;
                for (std::size_t t = 0; t < k2; ++t) {
                    const float v = field.weights(t, y, x);
                    if (v < 0.0f) return std::string("negative filter weight");
                    sum += static_cast<double>(v);
                }
                if (std::abs(sum - 1.0) > 1e-6)
                    return "filter sum off simplex: " + std::to_string(sum);
            }
        return std::string();
    });

    suite.check("lowpass-matches-loop", [&] {
        UniformStream rng(seed, "lowpass");
        const std::size_t c = 3, h = 5, w = 7, k = 3;
        const FeatureMap f = random_feature(c, h, w, rng);
        FilterField field;
        field.kernel_size = k;
        field.weights = Tensor({k * k, h, w});
        // random simplex per pixel
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                double sum = 0.0;
                std::vector<double> raw(k * k);
                for (auto& v : raw) {
                    v = rng.next(0.05, 1.0);
                    sum += v;
                }
                for (std::size_t t = 0; t < k * k; ++t)
                    field.weights(t, y, x) = static_cast<float>(raw[t] / sum);
            }
        const FeatureMap got = apply_lowpass(f, field);
        const long r = static_cast<long>(k / 2);
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (long dy = -r; dy <= r; ++dy)
                        for (long dx = -r; dx <= r; ++dx) {
                            const long yy = static_cast<long>(y) + dy;
                            const long xx = static_cast<long>(x) + dx;
                            if (yy < 0 || yy >= static_cast<long>(h) || xx < 0 ||
                                xx >= static_cast<long>(w))
                                continue;
                            const std::size_t tap =
                                static_cast<std::size_t>(dy + r) * k +
                                static_cast<std::size_t>(dx + r);
                            acc += static_cast<double>(field.weights(tap, y, x)) *
                                   static_cast<double>(f.at(ch, static_cast<std::size_t>(yy),
                                                            static_cast<std::size_t>(xx)));
                        }
                    if (std::abs(acc - static_cast<double>(got.at(ch, y, x))) > 1e-6)
                        return std::string("mismatch against the loop reference");
                }
        return std::string();
    });

    suite.check("fusion-zero-coarse-doubles-fine", [&] {
        UniformStream rng(seed, "fusion");
        const std::size_t c = 4;
        const auto geo = fspe_geometry(2, c);
        const WeightSet ws = seeded_init(seed, geo);
        const FeatureMap fine = random_feature(c, 8, 10, rng);
        FeatureMap zero_coarse(c, 4, 5);
        const FeatureMap fused = fuse_level(zero_coarse, fine, ws, "fspe.fuse1.filter");
        double err = 0.0;
        for (std::size_t i = 0; i < fused.tensor().size(); ++i)
            err = std::max(err, std::abs(static_cast<double>(fused.tensor()[i]) -
                                         2.0 * static_cast<double>(fine.tensor()[i])));
        return expect(err < 1e-5, "zero coarse level should double the fine one, err " +
                                      std::to_string(err));
    });

    suite.check("attractor-fixed-point", [&] {
        const double c = 17.25;
        const double attractors[3] = {c, c, c};
        const double d = attractor_delta(c, attractors, 300.0, 2.0);
        return expect(d == 0.0, "delta " + std::to_string(d));
    });

    suite.check("attractor-closed-form", [&] {
        const double attractors[1] = {0.1};
        const double d = attractor_delta(0.0, attractors, 300.0, 2.0);
        return expect(std::abs(d - 0.025) < 1e-9, "delta " + std::to_string(d));
    });

    suite.check("bins-strictly-increasing", [&] {
        UniformStream rng(seed, "bins");
        CsdpConfig cfg;
        cfg.bins = 12;
        cfg.attractors = 4;
        const std::size_t c = 6;
        const auto geo = csdp_geometry(2, c, cfg);
        const WeightSet ws = seeded_init(seed, geo);
        const FeatureMap coarse = random_feature(c, 4, 5, rng);
        const FeatureMap fine = random_feature(c, 8, 10, rng);
        const BinField b0 = init_bins(coarse, cfg.bins, cfg.d_min, cfg.d_max, ws, "csdp.bins");
        const BinField b1 = attractor_refine(b0, fine, cfg, ws, "csdp.l1.attr");
        for (const BinField* b : {&b0, &b1}) {
            const std::size_t nb = b->centers.extent(0);
            for (std::size_t y = 0; y < b->centers.extent(1); ++y)
                for (std::size_t x = 0; x < b->centers.extent(2); ++x)
                    for (std::size_t k = 0; k < nb; ++k) {
                        const float v = b->centers(k, y, x);
                        if (v < static_cast<float>(cfg.d_min) ||
                            v > static_cast<float>(cfg.d_max))
                            return std::string("bin center escaped the depth range");
                        if (k > 0 && !(v > b->centers(k - 1, y, x)))
                            return std::string("bin centers not strictly increasing");
                    }
        }
        return std::string();
    });

    suite.check("categorical-within-bins", [&] {
        UniformStream rng(seed, "categorical");
        CsdpConfig cfg;
        cfg.bins = 8;
        const std::size_t c = 6;
        const auto geo = csdp_geometry(1, c, cfg);
        const WeightSet ws = seeded_init(seed, geo);
        const FeatureMap f = random_feature(c, 4, 6, rng);
        const BinField bins = init_bins(f, cfg.bins, cfg.d_min, cfg.d_max, ws, "csdp.bins");
        const ProbField probs = bin_probabilities(f, cfg.bins, ws, "csdp.l0.prob");
        const DepthMap d = categorical_depth(probs, bins);
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 6; ++x) {
                const float lo = bins.centers(0, y, x);
                const float hi = bins.centers(cfg.bins - 1, y, x);
                if (d.at(y, x) < lo - 1e-4f || d.at(y, x) > hi + 1e-4f)
                    return std::string("expectation escaped the bin span");
            }
        return std::string();
    });

    suite.check("cwa-identity-mu-zero", [&] {
        UniformStream rng(seed, "cwa0");
        CsdpConfig cfg;
        const std::size_t c = 6;
        const auto geo = csdp_geometry(1, c, cfg);
        const WeightSet ws = seeded_init(seed, geo);
        std::vector<FeatureMap> views{random_feature(c, 4, 10, rng),
                                      random_feature(c, 4, 10, rng)};
        const auto out = cross_view_width_attention(views, 0.0, ws, "csdp.l0.cwa");
        for (std::size_t j = 0; j < views.size(); ++j)
            for (std::size_t i = 0; i < views[j].tensor().size(); ++i)
                if (out[j].tensor()[i] != views[j].tensor()[i])
                    return std::string("mu=0 is not a bit-identical pass-through");
        return std::string();
    });

    suite.check("cwa-interior-untouched", [&] {
        UniformStream rng(seed, "cwa-interior");
        CsdpConfig cfg;
        const std::size_t c = 6, w = 10;
        const auto geo = csdp_geometry(1, c, cfg);
        const WeightSet ws = seeded_init(seed, geo);
        std::vector<FeatureMap> views{random_feature(c, 4, w, rng),
                                      random_feature(c, 4, w, rng)};
        const auto out = cross_view_width_attention(views, 0.2, ws, "csdp.l0.cwa");
        const std::size_t m = static_cast<std::size_t>(0.2 * w);
        for (std::size_t j = 0; j < views.size(); ++j)
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t y = 0; y < 4; ++y)
                    for (std::size_t x = m; x < w - m; ++x)
                        if (out[j].at(ch, y, x) != views[j].at(ch, y, x))
                            return std::string("interior column modified");
        return std::string();
    });

    suite.check("depth-in-range", [&] {
        UniformStream rng(seed, "range");
        CsdpConfig cfg;
        cfg.bins = 8;
        cfg.attractors = 4;
        const std::size_t c = 6;
        const auto geo = csdp_geometry(2, c, cfg);
        const WeightSet ws = seeded_init(seed, geo);
        RigFeatures rig;
        rig.levels.push_back({{random_feature(c, 4, 10, rng), random_feature(c, 4, 10, rng)}, 8.0});
        rig.levels.push_back({{random_feature(c, 8, 20, rng), random_feature(c, 8, 20, rng)}, 4.0});
        const auto cams = synth_calibration(2, 80, 32);
        const DepthOutputs out = csdp_forward(rig, cams, cfg, ws);
        for (const auto& level : out.levels)
            for (const DepthMap& d : level)
                for (std::size_t i = 0; i < d.tensor().size(); ++i) {
                    const float v = d.tensor()[i];
                    if (!(v >= static_cast<float>(cfg.d_min) &&
                          v <= static_cast<float>(cfg.d_max)))
                        return std::string("depth escaped [d_min, d_max]");
                }
        return std::string();
    });

    suite.check("zero-weights-midpoint", [&] {
        UniformStream rng(seed, "midpoint");
        CsdpConfig cfg;
        cfg.bins = 8;
        cfg.attractors = 4;
        const std::size_t c = 6;
        const WeightSet ws = zero_weights(csdp_geometry(2, c, cfg));
        RigFeatures rig;
        rig.levels.push_back({{random_feature(c, 4, 10, rng), random_feature(c, 4, 10, rng)}, 8.0});
        rig.levels.push_back({{random_feature(c, 8, 20, rng), random_feature(c, 8, 20, rng)}, 4.0});
        const auto cams = synth_calibration(2, 80, 32);
        const DepthOutputs out = csdp_forward(rig, cams, cfg, ws);
        const double mid = 0.5 * (cfg.d_min + cfg.d_max);
        for (const auto& level : out.levels)
            for (const DepthMap& d : level)
                for (std::size_t i = 0; i < d.tensor().size(); ++i)
                    if (std::abs(static_cast<double>(d.tensor()[i]) - mid) > 1e-5)
                        return "zero weights should produce the range midpoint, got " +
                               std::to_string(d.tensor()[i]);
        return std::string();
    });

    suite.check("parallel-schedule-stable", [&] {
        UniformStream rng(seed, "schedule");
        CsdpConfig cfg;
        cfg.bins = 8;
        cfg.attractors = 4;
        const std::size_t c = 6;
        const auto geo = csdp_geometry(2, c, cfg);
        const WeightSet ws = seeded_init(seed, geo);
        RigFeatures rig;
        rig.levels.push_back({{random_feature(c, 4, 10, rng), random_feature(c, 4, 10, rng)}, 8.0});
        rig.levels.push_back({{random_feature(c, 8, 20, rng), random_feature(c, 8, 20, rng)}, 4.0});
        const auto cams = synth_calibration(2, 80, 32);
        ::setenv("FREQPDE_THREADS", "1", 1);
        const DepthOutputs serial = csdp_forward(rig, cams, cfg, ws);
        ::setenv("FREQPDE_THREADS", "4", 1);
        const DepthOutputs wide = csdp_forward(rig, cams, cfg, ws);
        ::unsetenv("FREQPDE_THREADS");
        for (std::size_t i = 0; i < serial.levels.size(); ++i)
            for (std::size_t j = 0; j < serial.levels[i].size(); ++j)
                for (std::size_t p = 0; p < serial.levels[i][j].tensor().size(); ++p)
                    if (serial.levels[i][j].tensor()[p] != wide.levels[i][j].tensor()[p])
                        return std::string("results depend on the thread count");
        return std::string();
    });

    suite.check("project-unproject-round-trip", [&] {
        UniformStream rng(seed, "roundtrip");
        const auto cams = synth_calibration(3, 352, 128);
        for (std::size_t i = 0; i < 200; ++i) {
            const CameraModel& cam = cams[i % cams.size()];
            const double u = rng.next(0.0, 351.0);
            const double v = rng.next(0.0, 127.0);
            const double d = rng.next(0.5, 80.0);
            const Vec3 p = unproject(u, v, d, cam);
            const auto px = project(p, cam);
            if (!px) return std::string("round-trip point fell behind the camera");
            if (std::abs(px->u - u) > 1e-4 || std::abs(px->v - v) > 1e-4 ||
                std::abs(px->depth - d) > 1e-4)
                return std::string("pixel round-trip error above 1e-4");
        }
        return std::string();
    });

    suite.check("sparse-depth-min-collision", [&] {
        const auto cams = synth_calibration(2, 352, 128);
        const CameraModel& cam = cams[0];
        const Vec3 far_p = unproject(100.0, 60.0, 9.0, cam);
        const Vec3 near_p = unproject(100.2, 60.2, 4.0, cam);
        const std::vector<Vec3> cloud{far_p, near_p};
        const SparseDepthTarget t = lidar_to_sparse_depth(cloud, cam, 16, 44, 8.0);
        if (t.samples.size() != 1) return std::string("expected one collided cell");
        return expect(std::abs(static_cast<double>(t.samples[0].depth) - 4.0) < 1e-4,
                      "collision kept the wrong depth");
    });

    suite.check("coverage-monotone-zeta", [&] {
        const auto cloud = synth_cloud(4000, seed);
        const auto cams = synth_calibration(6, 704, 256);
        const Resolution res[1] = {{704, 256}};
        const double zetas[3] = {4.0, 8.0, 16.0};
        const CoverageReport rep = coverage_stats(cloud, cams, res, zetas);
        for (std::size_t i = 1; i < rep.entries.size(); ++i)
            if (rep.entries[i].coverage < rep.entries[i - 1].coverage - 1e-12)
                return std::string("coverage decreased as zeta grew");
        for (const CoverageEntry& e : rep.entries)
            if (e.coverage < 0.0 || e.coverage > 1.0)
                return std::string("coverage left [0, 1]");
        return std::string();
    });

    suite.check("sine-embed-bounds", [&] {
        UniformStream rng(seed, "sine");
        const PositionRange range;
        for (std::size_t i = 0; i < 50; ++i) {
            const Vec3 p{rng.next(-61.2, 61.2), rng.next(-61.2, 61.2), rng.next(-10.0, 10.0)};
            for (float v : sine_embed(p, 12, range))
                if (v < -1.0f || v > 1.0f) return std::string("embedding value left [-1, 1]");
        }
        const Vec3 origin{range.x.lo, range.y.lo, range.z.lo};  // normalizes to (0,0,0)
        const auto e = sine_embed(origin, 12, range);
        for (std::size_t i = 0; i < e.size(); ++i) {
            const float want = (i % 2 == 0) ? 0.0f : 1.0f;
            if (e[i] != want) return std::string("zero coordinate should give sin 0 / cos 1");
        }
        return std::string();
    });

    suite.check("sine-embed-distinct-points", [&] {
        const PositionRange range;
        const auto a = sine_embed({10.0, 5.0, 1.0}, 12, range);
        const auto b = sine_embed({11.0, 5.0, 1.0}, 12, range);
        double diff = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            diff = std::max(diff, std::abs(static_cast<double>(a[i]) - b[i]));
        return expect(diff > 1e-4, "points 1 m apart embedded identically");
    });

    suite.check("pe-fusion-additive", [&] {
        UniformStream rng(seed, "pe");
        const std::size_t c = 12;
        const auto geo = pde_geometry(c);
        const WeightSet ws = seeded_init(seed, geo);
        const auto cams = synth_calibration(2, 80, 32);
        DepthMap d(8, 20);
        for (std::size_t i = 0; i < d.tensor().size(); ++i)
            d.tensor()[i] = static_cast<float>(rng.next(2.0, 50.0));
        const PositionalEmbedding pe = depth_to_pe({d}, cams[0], c, PositionRange{}, ws);
        const FeatureMap f = random_feature(c, 8, 20, rng);
        const FeatureMap fused = fuse_features_pe(f, pe);
        for (std::size_t i = 0; i < fused.tensor().size(); ++i)
            if (fused.tensor()[i] != f.tensor()[i] + pe.values[i])
                return std::string("fusion is not the elementwise sum");
        return std::string();
    });

    suite.check("normalize-affine-invariance", [&] {
        UniformStream rng(seed, "affine");
        const std::size_t h = 6, w = 8;
        DepthMap d(h, w);
        for (std::size_t i = 0; i < d.tensor().size(); ++i)
            d.tensor()[i] = static_cast<float>(rng.next(2.0, 40.0));
        const double s = rng.next(0.5, 3.0);
        const double t = rng.next(0.01, 0.1);
        DepthMap d2(h, w);
        for (std::size_t i = 0; i < d.tensor().size(); ++i) {
            const double r = 1.0 / static_cast<double>(d.tensor()[i]);
            d2.tensor()[i] = static_cast<float>(1.0 / (s * r + t));
        }
        const RelDepthMap za = normalize_inv_depth(d);
        const RelDepthMap zb = normalize_inv_depth(d2);
        const double err = max_abs_diff(za, zb);
        return expect(err < 1e-5, "affine reciprocal changed the normalization by " +
                                      std::to_string(err));
    });

    suite.check("grad-matches-finite-difference", [&] {
        UniformStream rng(seed, "grad");
        const std::size_t h = 6, w = 6, n = h * w;
        DepthMap pred(h, w);
        std::vector<double> depth(n);
        for (std::size_t i = 0; i < n; ++i) {
            depth[i] = rng.next(2.0, 30.0);
            pred.tensor()[i] = static_cast<float>(depth[i]);
            depth[i] = static_cast<double>(pred.tensor()[i]);  // quantized value
        }
        SparseDepthTarget target;
        target.height = h;
        target.width = w;
        for (std::size_t i = 0; i < 8; ++i) {
            SparseDepthSample s;
            s.u = static_cast<std::size_t>(rng.next_index(w));
            s.v = static_cast<std::size_t>(rng.next_index(h));
            s.depth = static_cast<float>(rng.next(2.0, 30.0));
            target.samples.push_back(s);
        }
        Tensor pseudo_raw({h, w});
        for (std::size_t i = 0; i < n; ++i)
            pseudo_raw[i] = static_cast<float>(rng.next(0.2, 2.0));
        const RelDepthMap pseudo = normalize_relative(pseudo_raw);
        std::vector<double> pseudo_d(n);
        for (std::size_t i = 0; i < n; ++i) pseudo_d[i] = static_cast<double>(pseudo[i]);

        const Tensor grad = depth_loss_grad(pred, &target, &pseudo, 1.0, 1.0);
        const double hstep = 1e-3;
        double max_rel = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> up = depth, down = depth;
            up[i] += hstep;
            down[i] -= hstep;
            const double fd = (loss_f64(up, h, w, target, pseudo_d, 1.0, 1.0) -
                               loss_f64(down, h, w, target, pseudo_d, 1.0, 1.0)) /
                              (2.0 * hstep);
            const double rel = std::abs(static_cast<double>(grad[i]) - fd) /
                               std::max(std::abs(fd), 1e-6);
            max_rel = std::max(max_rel, rel);
        }
        return expect(max_rel < 1e-3, "max relative gradient error " + std::to_string(max_rel));
    });

    suite.check("loss-zero-at-optimum", [&] {
        const std::size_t h = 4, w = 5;
        DepthMap pred(h, w);
        UniformStream rng(seed, "optimum");
        for (std::size_t i = 0; i < pred.tensor().size(); ++i)
            pred.tensor()[i] = static_cast<float>(rng.next(2.0, 30.0));
        SparseDepthTarget target;
        target.height = h;
        target.width = w;
        target.samples = {{1, 1, pred.at(1, 1)}, {4, 2, pred.at(2, 4)}};
        const RelDepthMap self_rel = normalize_inv_depth(pred);
        const LossReport rep = hybrid_depth_loss(pred, &target, &self_rel, 1.0, 1.0);
        return expect(rep.l_depth < 1e-10 && rep.l_s == 0.0,
                      "loss at the optimum is " + std::to_string(rep.l_depth));
    });

    suite.check("total-loss-composition", [&] {
        const double t = total_loss(2.0, 4.0, 1.0);
        if (t != 5.0) return "defaults should give 2 + 2 + 1 = 5, got " + std::to_string(t);
        if (total_loss(0.0, 0.0, 0.0) != 0.0) return std::string("zero terms must give zero");
        return expect(total_loss(3.0, 7.0, 9.0, 1.0, 0.0, 0.0) == 3.0,
                      "lambda2 = lambda3 = 0 should leave only the depth term");
    });

    return suite.results;
}

}  // namespace freqpde
