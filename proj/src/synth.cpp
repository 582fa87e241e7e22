#include "freqpde/synth.hpp"

#include <cmath>

#include "freqpde/rng.hpp"

namespace freqpde {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void SynthSpec::validate() const {
    if (levels == 0) throw ValidationError("synth: need at least one level");
    if (cameras < 2) throw ValidationError("synth: rig needs at least two cameras");
    if (channels == 0) throw ValidationError("synth: need at least one channel");
    const std::size_t div = std::size_t{1} << (levels - 1);
    if (height == 0 || width == 0 || height % div != 0 || width % div != 0)
        throw ValidationError("synth: finest grid must divide evenly across the levels");
}

RigFeatures synth_rig_features(const SynthSpec& spec, double zeta_finest) {
    spec.validate();
    if (!(zeta_finest >= 1.0)) throw ValidationError("synth: zeta_finest must be >= 1");
    RigFeatures rig;
    for (std::size_t i = 0; i < spec.levels; ++i) {
        // level 0 is the coarsest
        const std::size_t shift = spec.levels - 1 - i;
        RigLevel level;
        level.zeta = zeta_finest * static_cast<double>(std::size_t{1} << shift);
        const std::size_t h = spec.height >> shift;
        const std::size_t w = spec.width >> shift;
        for (std::size_t j = 0; j < spec.cameras; ++j) {
            UniformStream rng(spec.seed,
                              "feat.l" + std::to_string(i) + ".cam" + std::to_string(j));
            FeatureMap f(spec.channels, h, w);
            for (float& v : f.tensor().values()) v = static_cast<float>(rng.next(-1.0, 1.0));
            level.views.push_back(std::move(f));
        }
        rig.levels.push_back(std::move(level));
    }
    return rig;
}

std::vector<CameraModel> synth_calibration(std::size_t cameras, std::size_t native_w,
                                           std::size_t native_h) {
    if (cameras < 2) throw ValidationError("synth: rig needs at least two cameras");
    if (native_w == 0 || native_h == 0) throw ValidationError("synth: empty native resolution");
    std::vector<CameraModel> cams;
    const double fx = 0.6 * static_cast<double>(native_w);
    for (std::size_t j = 0; j < cameras; ++j) {
        const double theta = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(cameras);
        const double c = std::cos(theta), s = std::sin(theta);
        // rows: camera x (image right), y (image down), z (optical axis,
        // pointing outward); position on a 1 m circle at 1.6 m height.
        const std::array<double, 16> extr = {
            s,   -c,  0.0, 0.0,   //
            0.0, 0.0, -1.0, 1.6,  //
            c,   s,   0.0, -1.0,  //
            0.0, 0.0, 0.0, 1.0};
        cams.emplace_back(fx, fx, static_cast<double>(native_w) / 2.0,
                          static_cast<double>(native_h) / 2.0, extr, native_w, native_h);
    }
    return cams;
}

std::vector<Vec3> synth_cloud(std::size_t count, std::uint64_t seed) {
    UniformStream rng(seed, "cloud");
    std::vector<Vec3> points;
    points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double phi = rng.next(0.0, 2.0 * kPi);
        const double rho = rng.next(4.0, 55.0);
        const double z = rng.next(-1.5, 3.5);
        points.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
    }
    return points;
}

Tensor synth_pseudo(std::size_t height, std::size_t width, std::uint64_t seed,
                    const std::string& key) {
    if (height == 0 || width == 0) throw ValidationError("synth: empty pseudo map");
    UniformStream rng(seed, key);
    Tensor t({height, width});
    for (float& v : t.values()) v = static_cast<float>(rng.next(0.2, 2.0));
    return t;
}

}  // namespace freqpde
