#pragma once

#include <cstdint>
#include <vector>

#include "freqpde/camera.hpp"
#include "freqpde/csdp.hpp"

namespace freqpde {

/// Shape of a generated rig: `height` x `width` is the FINEST feature grid;
/// coarser levels halve both extents.
struct SynthSpec {
    std::size_t height = 64;
    std::size_t width = 176;
    std::size_t channels = 12;
    std::size_t levels = 3;
    std::size_t cameras = 6;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Random rig features, uniform in [-1, 1], streams keyed per (level, camera).
RigFeatures synth_rig_features(const SynthSpec& spec, double zeta_finest);

/// Cameras on a 1 m circle at 1.6 m height, yaw-spread evenly, looking
/// outward; fx = fy = 0.6 * native width, principal point centered.
std::vector<CameraModel> synth_calibration(std::size_t cameras, std::size_t native_w,
                                           std::size_t native_h);

/// Ring-shaped cloud: radius in [4, 55] m, height in [-1.5, 3.5] m.
std::vector<Vec3> synth_cloud(std::size_t count, std::uint64_t seed);

/// Raw (un-normalized) relative pseudo-depth map, uniform in [0.2, 2.0].
Tensor synth_pseudo(std::size_t height, std::size_t width, std::uint64_t seed,
                    const std::string& key);

}  // namespace freqpde
