#include "freqpde/csdp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "freqpde/parallel.hpp"

namespace freqpde {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Minimum spacing enforced between consecutive bin centers after clamping;
// relative to the depth range so it survives float storage at any scale.
constexpr double kBinGapScale = 1e-6;

// Restores strict ascending order in place: forward pass spreads ties
// upward, and if that overruns d_max a backward pass spreads them downward.
void enforce_strict_bins(std::vector<double>& c, double d_min, double d_max) {
    const double eps = (d_max - d_min) * kBinGapScale;
    c[0] = std::min(std::max(c[0], d_min), d_max);
    for (std::size_t k = 1; k < c.size(); ++k) {
        c[k] = std::min(std::max(c[k], d_min), d_max);
        if (c[k] < c[k - 1] + eps) c[k] = c[k - 1] + eps;
    }
    if (c.back() > d_max) {
        c.back() = d_max;
        for (std::size_t k = c.size() - 1; k-- > 0;)
            if (c[k] > c[k + 1] - eps) c[k] = c[k + 1] - eps;
    }
}

void check_same_rig_shapes(const std::vector<FeatureMap>& views, const char* where) {
    if (views.empty()) throw ShapeError(std::string(where) + ": no camera views");
    for (std::size_t j = 1; j < views.size(); ++j)
        if (!views[j].tensor().same_shape(views[0].tensor()))
            throw ShapeError(std::string(where) + ": camera views disagree on shape");
}

const Tensor& square_matrix(const WeightSet& weights, const std::string& name, std::size_t c) {
    const Tensor& m = weights.at(name);
    if (m.rank() != 2 || m.extent(0) != c || m.extent(1) != c)
        throw ShapeError(name + " must be " + std::to_string(c) + " x " + std::to_string(c));
    return m;
}

}  // namespace

void CsdpConfig::validate() const {
    if (!(omega >= 0.0 && omega <= 1.0)) throw ValidationError("omega must lie in [0, 1]");
    if (!(mu >= 0.0 && mu <= 0.5)) throw ValidationError("mu must lie in [0, 0.5]");
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    if (!(beta > 0.0)) throw ValidationError("beta must be positive");
    if (!(d_min < d_max)) throw ValidationError("depth range requires d_min < d_max");
    if (!std::isfinite(d_min) || !std::isfinite(d_max))
        throw ValidationError("depth range must be finite");
    if (attractors < 1) throw ValidationError("need at least one attractor per pixel");
    if (bins < 1) throw ValidationError("need at least one depth bin");
}

double attractor_delta(double center, std::span<const double> attractors, double alpha,
                       double beta) {
    double delta = 0.0;
    for (double p : attractors) {
        const double gap = p - center;
        delta += gap / (1.0 + alpha * std::pow(std::abs(gap), beta));
    }
    return delta;
}

std::size_t eca_kernel_size(std::size_t channels) {
    if (channels == 0) throw ShapeError("eca_kernel_size: channels must be positive");
    const double v = std::log2(static_cast<double>(channels)) / 2.0 + 0.5;
    const long long half = std::llround((v - 1.0) / 2.0);
    const long long k = 2 * std::max(half, 1ll) + 1;
    return static_cast<std::size_t>(k);
}

FeatureMap eca_condition(const FeatureMap& f, const CameraModel& cam, double zeta,
                         const WeightSet& weights, const std::string& prefix) {
    if (!(zeta > 0.0)) throw ValidationError("eca_condition: zeta must be positive");
    const std::size_t c = f.channels();
    const std::size_t h = f.height();
    const std::size_t w = f.width();

    // Intrinsics entering the perceptron: rows holding focal lengths and the
    // principal point are scaled by zeta, the homogeneous row is left alone.
    std::array<double, 9> k9 = cam.intrinsics();
    for (std::size_t i = 0; i < 6; ++i) k9[i] *= zeta;
    std::vector<float> kvec(9);
    for (std::size_t i = 0; i < 9; ++i) kvec[i] = static_cast<float>(k9[i]);
    const MlpSpec mlp{prefix + ".mlp", {9, c}, Activation::None};
    const std::vector<float> embed = perceptron(kvec, weights, mlp);

    const Tensor& cw = weights.at(prefix + ".conv.w");
    const Tensor& cb = weights.at(prefix + ".conv.b");
    if (cw.rank() != 1 || cw.extent(0) % 2 == 0)
        throw ShapeError(prefix + ".conv.w must be a rank-1 odd-length kernel");
    if (cb.rank() != 1 || cb.extent(0) != 1) throw ShapeError(prefix + ".conv.b must hold 1 value");
    const std::size_t kw = cw.extent(0);
    const long r = static_cast<long>(kw / 2);

    std::vector<double> desc(c);
    const double inv_px = 1.0 / static_cast<double>(h * w);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) acc += static_cast<double>(f.at(ch, y, x));
        desc[ch] = acc * inv_px + static_cast<double>(embed[ch]);
    }

    std::vector<double> gate(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double z = static_cast<double>(cb(0));
        for (std::size_t t = 0; t < kw; ++t) {
            const long src = static_cast<long>(ch) + static_cast<long>(t) - r;
            if (src < 0 || src >= static_cast<long>(c)) continue;
            z += static_cast<double>(cw(t)) * desc[static_cast<std::size_t>(src)];
        }
        gate[ch] = sigmoid(z);
    }

    FeatureMap out(c, h, w);
    parallel_for(c, [&](std::size_t ch) {
        const float g = static_cast<float>(gate[ch]);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(ch, y, x) = g * f.at(ch, y, x);
    });
    return out;
}

std::vector<FeatureMap> cross_view_width_attention(const std::vector<FeatureMap>& views, double mu,
                                                   const WeightSet& weights,
                                                   const std::string& prefix) {
    if (!(mu >= 0.0 && mu <= 0.5)) throw ValidationError("mu must lie in [0, 0.5]");
    check_same_rig_shapes(views, "cross_view_width_attention");

    const std::size_t j_total = views.size();
    const std::size_t c = views[0].channels();
    const std::size_t h = views[0].height();
    const std::size_t w = views[0].width();
    const std::size_t m = static_cast<std::size_t>(mu * static_cast<double>(w));

    std::vector<FeatureMap> out = views;
    if (m == 0) return out;

    const Tensor& wq = square_matrix(weights, prefix + ".q", c);
    const Tensor& wk = square_matrix(weights, prefix + ".k", c);
    const Tensor& wv = square_matrix(weights, prefix + ".v", c);
    const Tensor& wo = square_matrix(weights, prefix + ".o", c);

    const std::size_t band = 2 * m;       // participating columns per view
    const std::size_t tokens = j_total * band;
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    const auto column_of = [&](std::size_t b) { return b < m ? b : w - band + b; };

    parallel_for(h, [&](std::size_t y) {
        std::vector<double> feat(tokens * c), q(tokens * c), k(tokens * c), v(tokens * c);
        for (std::size_t t = 0; t < tokens; ++t) {
            const std::size_t view = t / band;
            const std::size_t x = column_of(t % band);
            for (std::size_t ch = 0; ch < c; ++ch)
                feat[t * c + ch] = static_cast<double>(views[view].at(ch, y, x));
        }
        for (std::size_t t = 0; t < tokens; ++t) {
            const double* src = feat.data() + t * c;
            for (std::size_t row = 0; row < c; ++row) {
                double aq = 0.0, ak = 0.0, av = 0.0;
                for (std::size_t col = 0; col < c; ++col) {
                    const double x = src[col];
                    aq += static_cast<double>(wq(row, col)) * x;
                    ak += static_cast<double>(wk(row, col)) * x;
                    av += static_cast<double>(wv(row, col)) * x;
                }
                q[t * c + row] = aq;
                k[t * c + row] = ak;
                v[t * c + row] = av;
            }
        }
        std::vector<double> scores(tokens), ctx(c), mixed(c);
        for (std::size_t t = 0; t < tokens; ++t) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t u = 0; u < tokens; ++u) {
                double dot = 0.0;
                for (std::size_t ch = 0; ch < c; ++ch) dot += q[t * c + ch] * k[u * c + ch];
                scores[u] = dot * scale;
                mx = std::max(mx, scores[u]);
            }
            double denom = 0.0;
            for (std::size_t u = 0; u < tokens; ++u) {
                scores[u] = std::exp(scores[u] - mx);
                denom += scores[u];
            }
            std::fill(ctx.begin(), ctx.end(), 0.0);
            for (std::size_t u = 0; u < tokens; ++u) {
                const double p = scores[u] / denom;
                const double* vu = v.data() + u * c;
                for (std::size_t ch = 0; ch < c; ++ch) ctx[ch] += p * vu[ch];
            }
            for (std::size_t row = 0; row < c; ++row) {
                double acc = 0.0;
                for (std::size_t col = 0; col < c; ++col)
                    acc += static_cast<double>(wo(row, col)) * ctx[col];
                mixed[row] = acc;
            }
            const std::size_t view = t / band;
            const std::size_t x = column_of(t % band);
            for (std::size_t ch = 0; ch < c; ++ch)
                out[view].at(ch, y, x) =
                    static_cast<float>(feat[t * c + ch] + mixed[ch]);
        }
    });
    return out;
}

BinField init_bins(const FeatureMap& top, std::size_t bins, double d_min, double d_max,
                   const WeightSet& weights, const std::string& prefix) {
    if (bins < 1) throw ValidationError("init_bins: need at least one bin");
    if (!(d_min < d_max)) throw ValidationError("init_bins: d_min must be below d_max");
    const std::size_t h = top.height();
    const std::size_t w = top.width();
    const MlpSpec spec{prefix, {top.channels(), bins}, Activation::None};
    const Tensor logits = map_mlp(top, weights, spec);

    const double range = d_max - d_min;
    BinField field{Tensor({bins, h, w}), d_min, d_max};
    parallel_for(h, [&](std::size_t y) {
        std::vector<double> width(bins), centers(bins);
        for (std::size_t x = 0; x < w; ++x) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < bins; ++b)
                mx = std::max(mx, static_cast<double>(logits(b, y, x)));
            double denom = 0.0;
            for (std::size_t b = 0; b < bins; ++b) {
                width[b] = std::exp(static_cast<double>(logits(b, y, x)) - mx);
                denom += width[b];
            }
            double cum = 0.0;
            for (std::size_t b = 0; b < bins; ++b) {
                const double wb = width[b] / denom;
                cum += wb;
                centers[b] = d_min + range * (cum - wb / 2.0);
            }
            enforce_strict_bins(centers, d_min, d_max);
            for (std::size_t b = 0; b < bins; ++b)
                field.centers(b, y, x) = static_cast<float>(centers[b]);
        }
    });
    return field;
}

BinField attractor_refine(const BinField& coarse, const FeatureMap& fine, const CsdpConfig& cfg,
                          const WeightSet& weights, const std::string& prefix) {
    if (coarse.centers.rank() != 3) throw ShapeError("attractor_refine: bins must be N_B x H x W");
    const std::size_t bins = coarse.centers.extent(0);
    const std::size_t ch = coarse.centers.extent(1);
    const std::size_t cw = coarse.centers.extent(2);
    const std::size_t h = fine.height();
    const std::size_t w = fine.width();
    if (h != 2 * ch || w != 2 * cw)
        throw ShapeError("attractor_refine: feature grid must be exactly twice the bin grid");

    const MlpSpec spec{prefix, {fine.channels(), cfg.attractors}, Activation::None};
    const Tensor logits = map_mlp(fine, weights, spec);
    const Tensor up = bilinear_resize(coarse.centers, h, w);

    const double range = cfg.range();
    BinField field{Tensor({bins, h, w}), cfg.d_min, cfg.d_max};
    parallel_for(h, [&](std::size_t y) {
        std::vector<double> attractors(cfg.attractors), centers(bins);
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t n = 0; n < cfg.attractors; ++n)
                attractors[n] =
                    cfg.d_min + range * sigmoid(static_cast<double>(logits(n, y, x)));
            for (std::size_t b = 0; b < bins; ++b) {
                const double c0 = static_cast<double>(up(b, y, x));
                centers[b] = c0 + attractor_delta(c0, attractors, cfg.alpha, cfg.beta);
            }
            std::sort(centers.begin(), centers.end());
            enforce_strict_bins(centers, cfg.d_min, cfg.d_max);
            for (std::size_t b = 0; b < bins; ++b)
                field.centers(b, y, x) = static_cast<float>(centers[b]);
        }
    });
    return field;
}

ProbField bin_probabilities(const FeatureMap& f, std::size_t bins, const WeightSet& weights,
                            const std::string& prefix) {
    if (bins < 1) throw ValidationError("bin_probabilities: need at least one bin");
    const MlpSpec spec{prefix, {f.channels(), bins}, Activation::None};
    return softmax_over_axis(map_mlp(f, weights, spec), 0);
}

DepthMap categorical_depth(const ProbField& probs, const BinField& bins) {
    if (!probs.same_shape(bins.centers))
        throw ShapeError("categorical_depth: probability and bin grids disagree");
    const std::size_t nb = probs.extent(0);
    const std::size_t h = probs.extent(1);
    const std::size_t w = probs.extent(2);
    DepthMap out(h, w);
    parallel_for(h, [&](std::size_t y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::size_t b = 0; b < nb; ++b)
                acc += static_cast<double>(probs(b, y, x)) *
                       static_cast<double>(bins.centers(b, y, x));
            out.at(y, x) = static_cast<float>(acc);
        }
    });
    return out;
}

DepthMap regress_depth(const FeatureMap& f, double d_min, double d_max, const WeightSet& weights,
                       const std::string& prefix) {
    if (!(d_min < d_max)) throw ValidationError("regress_depth: d_min must be below d_max");
    const MlpSpec spec{prefix, {f.channels(), 1}, Activation::None};
    const Tensor logits = map_mlp(f, weights, spec);
    const double range = d_max - d_min;
    DepthMap out(f.height(), f.width());
    parallel_for(f.height(), [&](std::size_t y) {
        for (std::size_t x = 0; x < f.width(); ++x)
            out.at(y, x) = static_cast<float>(
                d_min + range * sigmoid(static_cast<double>(logits(0, y, x))));
    });
    return out;
}

DepthMap fuse_depth(const DepthMap& categorical, const DepthMap& regressed, double omega) {
    if (!(omega >= 0.0 && omega <= 1.0)) throw ValidationError("omega must lie in [0, 1]");
    if (!categorical.tensor().same_shape(regressed.tensor()))
        throw ShapeError("fuse_depth: depth grids disagree");
    DepthMap out(categorical.height(), categorical.width());
    const float* dc = categorical.tensor().values().data();
    const float* dr = regressed.tensor().values().data();
    float* dst = out.tensor().values().data();
    for (std::size_t i = 0; i < out.tensor().size(); ++i)
        dst[i] = static_cast<float>(omega * static_cast<double>(dc[i]) +
                                    (1.0 - omega) * static_cast<double>(dr[i]));
    return out;
}

DepthOutputs csdp_forward(const RigFeatures& rig, std::span<const CameraModel> cams,
                          const CsdpConfig& cfg, const WeightSet& weights) {
    cfg.validate();
    if (rig.levels.empty()) throw ShapeError("csdp_forward: no pyramid levels");
    const std::size_t j_total = rig.levels[0].views.size();
    if (j_total < 2) throw ValidationError("csdp_forward: rig needs at least two cameras");
    if (cams.size() != j_total)
        throw ValidationError("csdp_forward: calibration count does not match camera views");
    for (std::size_t i = 0; i < rig.levels.size(); ++i) {
        const RigLevel& level = rig.levels[i];
        if (level.views.size() != j_total)
            throw ShapeError("csdp_forward: camera count varies across levels");
        check_same_rig_shapes(level.views, "csdp_forward");
        if (!(level.zeta > 0.0)) throw ValidationError("csdp_forward: zeta must be positive");
        if (i > 0) {
            const auto& prev = rig.levels[i - 1].views[0];
            const auto& cur = level.views[0];
            if (cur.height() != 2 * prev.height() || cur.width() != 2 * prev.width() ||
                cur.channels() != prev.channels())
                throw ShapeError("csdp_forward: levels must double resolution coarse to fine");
        }
    }

    DepthOutputs outputs;
    outputs.levels.resize(rig.levels.size());
    std::vector<BinField> bins(j_total);
    for (std::size_t i = 0; i < rig.levels.size(); ++i) {
        const RigLevel& level = rig.levels[i];
        const std::string lp = "csdp.l" + std::to_string(i);

        std::vector<FeatureMap> conditioned(j_total);
        for (std::size_t j = 0; j < j_total; ++j)
            conditioned[j] = eca_condition(level.views[j], cams[j], level.zeta, weights,
                                           lp + ".eca");
        const std::vector<FeatureMap> attended =
            cross_view_width_attention(conditioned, cfg.mu, weights, lp + ".cwa");

        outputs.levels[i].reserve(j_total);
        for (std::size_t j = 0; j < j_total; ++j) {
            bins[j] = (i == 0)
                          ? init_bins(attended[j], cfg.bins, cfg.d_min, cfg.d_max, weights,
                                      "csdp.bins")
                          : attractor_refine(bins[j], attended[j], cfg, weights, lp + ".attr");
            const ProbField probs = bin_probabilities(attended[j], cfg.bins, weights, lp + ".prob");
            const DepthMap dc = categorical_depth(probs, bins[j]);
            const DepthMap dr = regress_depth(attended[j], cfg.d_min, cfg.d_max, weights,
                                              lp + ".reg");
            outputs.levels[i].push_back(fuse_depth(dc, dr, cfg.omega));
        }
    }
    return outputs;
}

std::vector<LayerGeometry> csdp_geometry(std::size_t levels, std::size_t channels,
                                         const CsdpConfig& cfg) {
    if (levels == 0) throw ValidationError("csdp_geometry: need at least one level");
    cfg.validate();
    std::vector<LayerGeometry> geo;
    const std::size_t k = eca_kernel_size(channels);
    const std::size_t mlp_dims[2] = {9, channels};
    append_mlp_geometry(geo, "csdp.bins", std::vector<std::size_t>{channels, cfg.bins});
    for (std::size_t i = 0; i < levels; ++i) {
        const std::string lp = "csdp.l" + std::to_string(i);
        append_mlp_geometry(geo, lp + ".eca.mlp", mlp_dims);
        geo.push_back({lp + ".eca.conv.w", {k}, InitKind::XavierUniform});
        geo.push_back({lp + ".eca.conv.b", {1}, InitKind::Zero});
        for (const char* proj : {".q", ".k", ".v", ".o"})
            geo.push_back({lp + ".cwa" + proj, {channels, channels}, InitKind::XavierUniform});
        append_mlp_geometry(geo, lp + ".prob", std::vector<std::size_t>{channels, cfg.bins});
        append_mlp_geometry(geo, lp + ".reg", std::vector<std::size_t>{channels, 1});
        if (i > 0)
            append_mlp_geometry(geo, lp + ".attr",
                                std::vector<std::size_t>{channels, cfg.attractors});
    }
    return geo;
}

}  // namespace freqpde
