#pragma once

#include <span>
#include <string>
#include <vector>

#include "freqpde/camera.hpp"
#include "freqpde/nn.hpp"
#include "freqpde/tensor.hpp"

namespace freqpde {

struct CsdpConfig {
    double alpha = 300.0;   // attractor strength
    double beta = 2.0;      // attractor distance exponent
    double omega = 0.5;     // categorical/regressed fusion weight
    double mu = 0.2;        // width-attention mask ratio
    std::size_t attractors = 8;
    std::size_t bins = 64;
    double d_min = 1.0;     // meters
    double d_max = 61.2;

    double range() const { return d_max - d_min; }
    void validate() const;
};

/// One pyramid level of a multi-camera rig: one feature map per camera,
/// cameras ordered by yaw so adjacent indices overlap (circular).
struct RigLevel {
    std::vector<FeatureMap> views;
    double zeta = 1.0;
};

/// Levels coarsest first, each finer level doubling H and W.
struct RigFeatures {
    std::vector<RigLevel> levels;
};

/// Per-pixel depth bin centers, N_B x H x W, strictly increasing along the
/// bin axis and confined to [d_min, d_max].
struct BinField {
    Tensor centers;
    double d_min = 0.0;
    double d_max = 0.0;
};

/// Per-pixel bin probabilities, N_B x H x W, simplex along the bin axis.
using ProbField = Tensor;

/// Net pull on one bin center: sum over attractors p of
/// (p - c) / (1 + alpha * |p - c|^beta). Double precision on purpose; the
/// tensor path routes every bin through this kernel.
double attractor_delta(double center, std::span<const double> attractors, double alpha,
                       double beta);

/// Channel-conv kernel width: nearest odd integer to log2(C)/2 + 1/2, at
/// least 3.
std::size_t eca_kernel_size(std::size_t channels);

/// Per-channel gating conditioned on scaled camera intrinsics. Descriptor =
/// GAP(F) + perceptron(flattened intrinsics with the first two rows scaled
/// by zeta); gates = sigmoid(conv1d(descriptor)); output = gates * F.
/// Weights: {prefix}.mlp.w0/.b0 (9 -> C), {prefix}.conv.w (k), {prefix}.conv.b (1).
FeatureMap eca_condition(const FeatureMap& f, const CameraModel& cam, double zeta,
                         const WeightSet& weights, const std::string& prefix);

/// Row-wise attention over the mu*W leftmost and rightmost columns of every
/// view; interior columns pass through untouched. Weights: {prefix}.q/.k/.v/.o,
/// each C x C, bias-free single head.
std::vector<FeatureMap> cross_view_width_attention(const std::vector<FeatureMap>& views, double mu,
                                                   const WeightSet& weights,
                                                   const std::string& prefix);

/// Softmax-width bins: widths = softmax(perceptron(F)), centers at cumulative
/// width midpoints scaled into [d_min, d_max].
/// Weights: {prefix}.w0/.b0 (C -> N_B).
BinField init_bins(const FeatureMap& top, std::size_t bins, double d_min, double d_max,
                   const WeightSet& weights, const std::string& prefix);

/// Upsample coarse centers 2x to fine's grid, pull every center toward the
/// predicted attractors, clamp, re-sort ascending.
/// Weights: {prefix}.w0/.b0 (C -> N attractor logits).
BinField attractor_refine(const BinField& coarse, const FeatureMap& fine, const CsdpConfig& cfg,
                          const WeightSet& weights, const std::string& prefix);

/// Per-pixel softmax over predicted bin logits.
/// Weights: {prefix}.w0/.b0 (C -> N_B).
ProbField bin_probabilities(const FeatureMap& f, std::size_t bins, const WeightSet& weights,
                            const std::string& prefix);

/// Expectation of bin centers under P per pixel.
DepthMap categorical_depth(const ProbField& probs, const BinField& bins);

/// depth = d_min + (d_max - d_min) * sigmoid(perceptron(F)).
/// Weights: {prefix}.w0/.b0 (C -> 1).
DepthMap regress_depth(const FeatureMap& f, double d_min, double d_max, const WeightSet& weights,
                       const std::string& prefix);

/// omega * categorical + (1 - omega) * regressed, elementwise.
DepthMap fuse_depth(const DepthMap& categorical, const DepthMap& regressed, double omega);

/// Per-level (coarsest first), per-camera predicted depth maps.
struct DepthOutputs {
    std::vector<std::vector<DepthMap>> levels;
};

/// Full head: per level, ECA conditioning -> cross-view width attention ->
/// bins (initialized at the coarsest level, attractor-refined at finer ones)
/// -> categorical expectation fused with a regressed estimate.
DepthOutputs csdp_forward(const RigFeatures& rig, std::span<const CameraModel> cams,
                          const CsdpConfig& cfg, const WeightSet& weights);

/// Learnable-tensor layout for a head over `levels` pyramid levels with
/// C-channel features. Prefixes: csdp.bins (coarsest level bin init) and
/// per-level csdp.l{i}.{eca,cwa,prob,reg,attr}.
std::vector<LayerGeometry> csdp_geometry(std::size_t levels, std::size_t channels,
                                         const CsdpConfig& cfg);

}  // namespace freqpde
