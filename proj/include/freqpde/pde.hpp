#pragma once

#include <string>
#include <vector>

#include "freqpde/camera.hpp"
#include "freqpde/nn.hpp"
#include "freqpde/tensor.hpp"

namespace freqpde {

struct AxisRange {
    double lo = 0.0;
    double hi = 1.0;
};

/// Spatial volume used to normalize coordinates into [0,1] before the sine
/// expansion.
struct PositionRange {
    AxisRange x{-61.2, 61.2};
    AxisRange y{-61.2, 61.2};
    AxisRange z{-10.0, 10.0};
    void validate() const;
};

struct PositionalEmbedding {
    Tensor values;  // C x H x W
    PositionRange range;
};

/// Sine expansion of a 3-D point: each coordinate is normalized by its axis
/// range, scaled by 2*pi, and expanded into C/3 interleaved sin/cos values at
/// geometric frequencies temperature^(2*floor(i/2)/(C/3)); coordinates are
/// concatenated x, y, z. C must be divisible by 6.
std::vector<float> sine_embed(const Vec3& p, std::size_t channels, const PositionRange& range,
                              double temperature = 10000.0);

/// Depth maps -> positional embedding: levels are bilinearly resized to the
/// finest provided grid and averaged, each cell center is unprojected to the
/// LiDAR frame, sine-embedded, then mixed by a two-layer perceptron C -> C.
/// Weights: {prefix}.w0/.b0/.w1/.b1.
PositionalEmbedding depth_to_pe(const std::vector<DepthMap>& depth_levels, const CameraModel& cam,
                                std::size_t channels, const PositionRange& range,
                                const WeightSet& weights, const std::string& prefix = "pde.mix",
                                double temperature = 10000.0);

/// F_3D = F + PE, elementwise.
FeatureMap fuse_features_pe(const FeatureMap& f, const PositionalEmbedding& pe);

std::vector<LayerGeometry> pde_geometry(std::size_t channels, const std::string& prefix = "pde.mix");

}  // namespace freqpde
