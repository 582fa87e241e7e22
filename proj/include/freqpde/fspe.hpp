#pragma once

#include <string>
#include <vector>

#include "freqpde/nn.hpp"
#include "freqpde/tensor.hpp"

namespace freqpde {

/// Per-pixel low-pass filter bank: K*K weights per pixel, each pixel's
/// weights non-negative and summing to one.
struct FilterField {
    std::size_t kernel_size = 3;  // odd
    Tensor weights;               // K^2 x H x W
};

/// Haar sub-bands of a feature map, each C x H/2 x W/2.
struct WaveletQuad {
    FeatureMap ll, lh, hl, hh;
};

struct PyramidLevel {
    FeatureMap feature;
    double zeta = 1.0;  // downsampling factor relative to the input image
};

/// Fused multi-scale features, coarsest first, each finer level doubling H,W.
struct Pyramid {
    std::vector<PyramidLevel> levels;
};

/// W = Softmax(Conv3x3(S_n)) along the K^2 kernel axis.
/// Weights: {prefix}.w (K^2 x C x 3 x 3) and {prefix}.b (K^2).
FilterField predict_lowpass_filters(const FeatureMap& s_n, const WeightSet& weights,
                                    const std::string& prefix = "fspe.fuse1.filter");

/// Per-pixel weighted sum over the K x K neighborhood, zero padded, shared
/// across channels.
FeatureMap apply_lowpass(const FeatureMap& s_n, const FilterField& field);

/// Orthonormal Haar analysis of each non-overlapping 2x2 block. Extents must
/// be even; no implicit padding.
WaveletQuad dwt_haar(const FeatureMap& s);

/// Exact inverse of dwt_haar.
FeatureMap idwt_haar(const WaveletQuad& q);

/// One top-down fusion step: inject the low-passed high-level feature into
/// the LL band of the low-level feature's wavelet decomposition, reconstruct,
/// and add the low-level residual. s_prev must be 2x the extent of s_n.
FeatureMap fuse_level(const FeatureMap& s_n, const FeatureMap& s_prev, const WeightSet& weights,
                      const std::string& prefix = "fspe.fuse1.filter");

/// Runs fuse_level down the pyramid. levels are coarse to fine; level i>0
/// uses weights under "fspe.fuse{i}.filter". zeta_finest is the finest
/// level's downsampling factor; coarser levels double it.
Pyramid build_pyramid(const std::vector<FeatureMap>& levels, const WeightSet& weights,
                      double zeta_finest = 4.0);

/// Geometry for seeded_init covering build_pyramid on `levels` inputs.
std::vector<LayerGeometry> fspe_geometry(std::size_t levels, std::size_t channels,
                                         std::size_t kernel_size = 3);

}  // namespace freqpde
