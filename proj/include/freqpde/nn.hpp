#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "freqpde/tensor.hpp"

namespace freqpde {

enum class InitKind { XavierUniform, Zero };

/// Declared geometry of one learnable tensor.
struct LayerGeometry {
    std::string name;
    std::vector<std::size_t> shape;
    InitKind init = InitKind::XavierUniform;
};

/// Named map of parameter tensors plus creation metadata.
class WeightSet {
public:
    WeightSet() = default;
    WeightSet(std::uint64_t seed, std::string scheme) : seed_(seed), scheme_(std::move(scheme)) {}

    void insert(std::string name, Tensor t);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    std::size_t count() const { return tensors_.size(); }

    std::uint64_t seed() const { return seed_; }
    const std::string& scheme() const { return scheme_; }

    /// Byte-stable dump (names in map order, each tensor in container format).
    void serialize(std::ostream& out) const;
    std::string serialize() const;

private:
    std::map<std::string, Tensor> tensors_;
    std::uint64_t seed_ = 0;
    std::string scheme_;
};

/// Reproducible Xavier-uniform init: values uniform in [-a, a] with
/// a = sqrt(6 / (fan_in + fan_out)). Each tensor gets its own stream keyed
/// by (seed, name), so adding layers never perturbs existing ones.
WeightSet seeded_init(std::uint64_t seed, std::span<const LayerGeometry> geometry);

enum class Activation { None, Relu, Sigmoid };

/// Affine chain: dims = {in, hidden..., out}; ReLU between layers, `output`
/// on the last. Weights are looked up as {prefix}.w0/.b0, {prefix}.w1/...
struct MlpSpec {
    std::string prefix;
    std::vector<std::size_t> dims;
    Activation output = Activation::None;
};

void append_mlp_geometry(std::vector<LayerGeometry>& out, const std::string& prefix,
                         std::span<const std::size_t> dims);
void append_conv3x3_geometry(std::vector<LayerGeometry>& out, const std::string& prefix,
                             std::size_t out_channels, std::size_t in_channels);

/// 3x3 convolution, stride 1, zero padding 1. kernel: C_out x C_in x 3 x 3.
FeatureMap conv2d_3x3(const FeatureMap& input, const Tensor& kernel, const Tensor& bias);

/// Numerically stable softmax along one axis.
Tensor softmax_over_axis(const Tensor& x, std::size_t axis);

std::vector<float> perceptron(std::span<const float> x, const WeightSet& weights,
                              const MlpSpec& spec);

/// Applies the perceptron at every pixel of F (channels as input vector).
/// Result: dims.back() x H x W.
Tensor map_mlp(const FeatureMap& f, const WeightSet& weights, const MlpSpec& spec);

/// Bilinear resampling with half-pixel sample centers and edge clamping.
/// Accepts H x W or C x H x W; the channel axis is untouched.
Tensor bilinear_resize(const Tensor& src, std::size_t out_h, std::size_t out_w);

}  // namespace freqpde
