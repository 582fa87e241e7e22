#include "freqpde/fspe.hpp"

#include <cmath>

#include "freqpde/parallel.hpp"

namespace freqpde {

FilterField predict_lowpass_filters(const FeatureMap& s_n, const WeightSet& weights,
                                    const std::string& prefix) {
    const Tensor& kernel = weights.at(prefix + ".w");
    const Tensor& bias = weights.at(prefix + ".b");
    const std::size_t k_sq = kernel.extent(0);
    const auto k = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(k_sq))));
    if (k * k != k_sq || k % 2 == 0)
        throw ShapeError("filter conv must emit an odd-K K^2 channel count, got " +
                         std::to_string(k_sq));
    const FeatureMap logits = conv2d_3x3(s_n, kernel, bias);
    return FilterField{k, softmax_over_axis(logits.tensor(), 0)};
}

FeatureMap apply_lowpass(const FeatureMap& s_n, const FilterField& field) {
    const std::size_t h = s_n.height();
    const std::size_t w = s_n.width();
    const std::size_t k = field.kernel_size;
    if (field.weights.rank() != 3 || field.weights.extent(0) != k * k ||
        field.weights.extent(1) != h || field.weights.extent(2) != w)
        throw ShapeError("filter field grid does not match feature map");
    const long r = static_cast<long>(k / 2);

    FeatureMap out(s_n.channels(), h, w);
    parallel_for(s_n.channels() * h, [&](std::size_t task) {
        const std::size_t c = task / h;
        const std::size_t y = task % h;
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            std::size_t tap = 0;
            for (long dy = -r; dy <= r; ++dy) {
                for (long dx = -r; dx <= r; ++dx, ++tap) {
                    const long yy = static_cast<long>(y) + dy;
                    const long xx = static_cast<long>(x) + dx;
                    if (yy < 0 || yy >= static_cast<long>(h) || xx < 0 ||
                        xx >= static_cast<long>(w))
                        continue;  // zero padding
                    acc += static_cast<double>(field.weights(tap, y, x)) *
                           static_cast<double>(s_n.at(c, static_cast<std::size_t>(yy),
                                                      static_cast<std::size_t>(xx)));
                }
            }
            out.at(c, y, x) = static_cast<float>(acc);
        }
    });
    return out;
}

WaveletQuad dwt_haar(const FeatureMap& s) {
    const std::size_t h = s.height();
    const std::size_t w = s.width();
    if (h % 2 != 0 || w % 2 != 0)
        throw ShapeError("dwt_haar requires even extents, got " + std::to_string(h) + "x" +
                         std::to_string(w));
    const std::size_t c = s.channels();
    WaveletQuad q{FeatureMap(c, h / 2, w / 2), FeatureMap(c, h / 2, w / 2),
                  FeatureMap(c, h / 2, w / 2), FeatureMap(c, h / 2, w / 2)};
    parallel_for(c, [&](std::size_t ch) {
        for (std::size_t y = 0; y < h / 2; ++y) {
            for (std::size_t x = 0; x < w / 2; ++x) {
                const double a = s.at(ch, 2 * y, 2 * x);
                const double b = s.at(ch, 2 * y, 2 * x + 1);
                const double cc = s.at(ch, 2 * y + 1, 2 * x);
                const double d = s.at(ch, 2 * y + 1, 2 * x + 1);
                q.ll.at(ch, y, x) = static_cast<float>((a + b + cc + d) * 0.5);
                q.lh.at(ch, y, x) = static_cast<float>((a + b - cc - d) * 0.5);
                q.hl.at(ch, y, x) = static_cast<float>((a - b + cc - d) * 0.5);
                q.hh.at(ch, y, x) = static_cast<float>((a - b - cc + d) * 0.5);
            }
        }
    });
    return q;
}

FeatureMap idwt_haar(const WaveletQuad& q) {
    if (!q.ll.tensor().same_shape(q.lh.tensor()) || !q.ll.tensor().same_shape(q.hl.tensor()) ||
        !q.ll.tensor().same_shape(q.hh.tensor()))
        throw ShapeError("wavelet quad sub-bands must share one shape");
    const std::size_t c = q.ll.channels();
    const std::size_t h = q.ll.height();
    const std::size_t w = q.ll.width();
    FeatureMap out(c, 2 * h, 2 * w);
    parallel_for(c, [&](std::size_t ch) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const double ll = q.ll.at(ch, y, x);
                const double lh = q.lh.at(ch, y, x);
                const double hl = q.hl.at(ch, y, x);
                const double hh = q.hh.at(ch, y, x);
                out.at(ch, 2 * y, 2 * x) = static_cast<float>((ll + lh + hl + hh) * 0.5);
                out.at(ch, 2 * y, 2 * x + 1) = static_cast<float>((ll + lh - hl - hh) * 0.5);
                out.at(ch, 2 * y + 1, 2 * x) = static_cast<float>((ll - lh + hl - hh) * 0.5);
                out.at(ch, 2 * y + 1, 2 * x + 1) = static_cast<float>((ll - lh - hl + hh) * 0.5);
            }
        }
    });
    return out;
}

FeatureMap fuse_level(const FeatureMap& s_n, const FeatureMap& s_prev, const WeightSet& weights,
                      const std::string& prefix) {
    if (s_prev.channels() != s_n.channels())
        throw ShapeError("fuse_level requires equal channel counts across levels");
    if (s_prev.height() != 2 * s_n.height() || s_prev.width() != 2 * s_n.width())
        throw ShapeError("fuse_level: low-level feature must be exactly 2x the high-level extent");

    const FilterField field = predict_lowpass_filters(s_n, weights, prefix);
    const FeatureMap smoothed = apply_lowpass(s_n, field);
    WaveletQuad q = dwt_haar(s_prev);
    for (std::size_t i = 0; i < q.ll.tensor().size(); ++i)
        q.ll.tensor()[i] = static_cast<float>(static_cast<double>(q.ll.tensor()[i]) +
                                              static_cast<double>(smoothed.tensor()[i]));
    FeatureMap fused = idwt_haar(q);
    for (std::size_t i = 0; i < fused.tensor().size(); ++i)
        fused.tensor()[i] = static_cast<float>(static_cast<double>(fused.tensor()[i]) +
                                               static_cast<double>(s_prev.tensor()[i]));
    return fused;
}

Pyramid build_pyramid(const std::vector<FeatureMap>& levels, const WeightSet& weights,
                      double zeta_finest) {
    if (levels.size() < 2) throw ShapeError("build_pyramid needs at least 2 levels");
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (levels[i].channels() != levels[0].channels())
            throw ShapeError("build_pyramid: channel counts must be pre-unified across levels");
        if (levels[i].height() != 2 * levels[i - 1].height() ||
            levels[i].width() != 2 * levels[i - 1].width())
            throw ShapeError("build_pyramid: each finer level must double H and W");
    }
    Pyramid out;
    out.levels.reserve(levels.size());
    const auto zeta_of = [&](std::size_t i) {
        return zeta_finest * static_cast<double>(1ull << (levels.size() - 1 - i));
    };
    out.levels.push_back({levels.front(), zeta_of(0)});
    for (std::size_t i = 1; i < levels.size(); ++i) {
        const std::string prefix = "fspe.fuse" + std::to_string(i) + ".filter";
        out.levels.push_back({fuse_level(out.levels.back().feature, levels[i], weights, prefix),
                              zeta_of(i)});
    }
    return out;
}

std::vector<LayerGeometry> fspe_geometry(std::size_t levels, std::size_t channels,
                                         std::size_t kernel_size) {
    if (kernel_size % 2 == 0) throw ShapeError("low-pass kernel size must be odd");
    std::vector<LayerGeometry> g;
    for (std::size_t i = 1; i < levels; ++i)
        append_conv3x3_geometry(g, "fspe.fuse" + std::to_string(i) + ".filter",
                                kernel_size * kernel_size, channels);
    return g;
}

}  // namespace freqpde
