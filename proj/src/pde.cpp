#include "freqpde/pde.hpp"

#include <cmath>

#include "freqpde/parallel.hpp"

namespace freqpde {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double normalize_axis(double v, const AxisRange& r) { return (v - r.lo) / (r.hi - r.lo); }

}  // namespace

void PositionRange::validate() const {
    for (const AxisRange& a : {x, y, z})
        if (!(a.lo < a.hi)) throw ValidationError("position range axes need lo < hi");
}

std::vector<float> sine_embed(const Vec3& p, std::size_t channels, const PositionRange& range,
                              double temperature) {
    if (channels == 0 || channels % 6 != 0)
        throw ShapeError("sine_embed: channel count must be divisible by 6");
    if (!(temperature > 0.0)) throw ValidationError("sine_embed: temperature must be positive");
    range.validate();

    const std::size_t d = channels / 3;
    const double coords[3] = {normalize_axis(p.x, range.x), normalize_axis(p.y, range.y),
                              normalize_axis(p.z, range.z)};
    std::vector<float> out(channels);
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const double scaled = coords[axis] * kTwoPi;
        for (std::size_t i = 0; i < d; ++i) {
            const double freq =
                std::pow(temperature, 2.0 * static_cast<double>(i / 2) / static_cast<double>(d));
            const double angle = scaled / freq;
            out[axis * d + i] =
                static_cast<float>((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
        }
    }
    return out;
}

PositionalEmbedding depth_to_pe(const std::vector<DepthMap>& depth_levels, const CameraModel& cam,
                                std::size_t channels, const PositionRange& range,
                                const WeightSet& weights, const std::string& prefix,
                                double temperature) {
    if (depth_levels.empty()) throw ValidationError("depth_to_pe: need at least one depth level");
    if (channels == 0 || channels % 6 != 0)
        throw ShapeError("depth_to_pe: channel count must be divisible by 6");
    range.validate();

    // Finest grid among the provided levels hosts the fused map.
    std::size_t h = 0, w = 0;
    for (const DepthMap& level : depth_levels) {
        if (level.height() == 0 || level.width() == 0)
            throw ShapeError("depth_to_pe: empty depth map");
        if (level.height() * level.width() > h * w) {
            h = level.height();
            w = level.width();
        }
    }

    std::vector<Tensor> resized;
    resized.reserve(depth_levels.size());
    for (const DepthMap& level : depth_levels)
        resized.push_back(bilinear_resize(level.tensor(), h, w));

    Tensor fused({h, w});
    const double inv_levels = 1.0 / static_cast<double>(depth_levels.size());
    for (std::size_t i = 0; i < fused.size(); ++i) {
        double acc = 0.0;
        for (const Tensor& t : resized) acc += static_cast<double>(t[i]);
        fused[i] = static_cast<float>(acc * inv_levels);
    }

    // Native-image pixel centers for each fused cell.
    const double sx = static_cast<double>(cam.width()) / static_cast<double>(w);
    const double sy = static_cast<double>(cam.height()) / static_cast<double>(h);
    FeatureMap raw(channels, h, w);
    parallel_for(h, [&](std::size_t y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double u = (static_cast<double>(x) + 0.5) * sx;
            const double v = (static_cast<double>(y) + 0.5) * sy;
            const double d = static_cast<double>(fused(y, x));
            const Vec3 p = unproject(u, v, d, cam);
            const std::vector<float> emb = sine_embed(p, channels, range, temperature);
            for (std::size_t c = 0; c < channels; ++c) raw.at(c, y, x) = emb[c];
        }
    });

    const MlpSpec mix{prefix, {channels, channels, channels}, Activation::None};
    return PositionalEmbedding{map_mlp(raw, weights, mix), range};
}

FeatureMap fuse_features_pe(const FeatureMap& f, const PositionalEmbedding& pe) {
    if (!f.tensor().same_shape(pe.values))
        throw ShapeError("fuse_features_pe: feature and embedding shapes disagree");
    FeatureMap out(f.channels(), f.height(), f.width());
    const float* a = f.tensor().values().data();
    const float* b = pe.values.values().data();
    float* dst = out.tensor().values().data();
    for (std::size_t i = 0; i < out.tensor().size(); ++i) dst[i] = a[i] + b[i];
    return out;
}

std::vector<LayerGeometry> pde_geometry(std::size_t channels, const std::string& prefix) {
    if (channels == 0 || channels % 6 != 0)
        throw ShapeError("pde_geometry: channel count must be divisible by 6");
    std::vector<LayerGeometry> geo;
    append_mlp_geometry(geo, prefix, std::vector<std::size_t>{channels, channels, channels});
    return geo;
}

}  // namespace freqpde
