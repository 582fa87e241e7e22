#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "freqpde/errors.hpp"

namespace freqpde {

/// Dense row-major float32 array. Values are plain data; operations on
/// tensors are free functions that return new tensors.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<float> values);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t extent(std::size_t axis) const;

    std::span<const float> values() const noexcept { return data_; }
    std::span<float> values() noexcept { return data_; }

    float operator[](std::size_t flat) const { return data_[flat]; }
    float& operator[](std::size_t flat) { return data_[flat]; }

    float operator()(std::size_t i0) const { return data_[i0]; }
    float& operator()(std::size_t i0) { return data_[i0]; }
    float operator()(std::size_t i0, std::size_t i1) const {
        return data_[i0 * stride_[0] + i1];
    }
    float& operator()(std::size_t i0, std::size_t i1) {
        return data_[i0 * stride_[0] + i1];
    }
    float operator()(std::size_t i0, std::size_t i1, std::size_t i2) const {
        return data_[i0 * stride_[0] + i1 * stride_[1] + i2];
    }
    float& operator()(std::size_t i0, std::size_t i1, std::size_t i2) {
        return data_[i0 * stride_[0] + i1 * stride_[1] + i2];
    }
    float operator()(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
        return data_[i0 * stride_[0] + i1 * stride_[1] + i2 * stride_[2] + i3];
    }
    float& operator()(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
        return data_[i0 * stride_[0] + i1 * stride_[1] + i2 * stride_[2] + i3];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<std::size_t> stride_;  // strides for axes 0..rank-2
    std::vector<float> data_;
};

/// One camera's C x H x W activation grid at one pyramid level.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(std::size_t channels, std::size_t height, std::size_t width)
        : t_(Tensor({channels, height, width})) {}
    explicit FeatureMap(Tensor t);

    std::size_t channels() const { return t_.extent(0); }
    std::size_t height() const { return t_.extent(1); }
    std::size_t width() const { return t_.extent(2); }

    float at(std::size_t c, std::size_t y, std::size_t x) const { return t_(c, y, x); }
    float& at(std::size_t c, std::size_t y, std::size_t x) { return t_(c, y, x); }

    const Tensor& tensor() const { return t_; }
    Tensor& tensor() { return t_; }

private:
    Tensor t_;
};

/// Per-pixel metric depth in meters, H x W.
class DepthMap {
public:
    DepthMap() = default;
    DepthMap(std::size_t height, std::size_t width) : t_(Tensor({height, width})) {}
    explicit DepthMap(Tensor t);

    std::size_t height() const { return t_.extent(0); }
    std::size_t width() const { return t_.extent(1); }

    float at(std::size_t y, std::size_t x) const { return t_(y, x); }
    float& at(std::size_t y, std::size_t x) { return t_(y, x); }

    const Tensor& tensor() const { return t_; }
    Tensor& tensor() { return t_; }

private:
    Tensor t_;
};

// Binary tensor container: magic "FPDE", version u32 LE, dtype u8 (0 = f32),
// rank u8, rank x u32 extents LE, then raw little-endian f32 payload
// row-major. The reader rejects NaN/Inf payloads.

void write_tensor(std::ostream& out, const Tensor& t);
void write_tensor_file(const std::string& path, const Tensor& t);
/// Reads one container and requires end-of-stream afterwards.
Tensor read_tensor(std::istream& in, const std::string& origin = "<stream>");
/// Reads one container from a stream that may hold more data after it.
Tensor read_tensor_embedded(std::istream& in, const std::string& origin = "<stream>");
Tensor read_tensor_file(const std::string& path);

/// Deterministic sum with a fixed pairwise reduction order.
double pairwise_sum(std::span<const double> v);

}  // namespace freqpde
