#include "freqpde/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace freqpde {

namespace {

std::vector<std::size_t> make_strides(const std::vector<std::size_t>& shape) {
    if (shape.size() < 2) return {};
    std::vector<std::size_t> s(shape.size() - 1);
    std::size_t acc = 1;
    for (std::size_t i = shape.size() - 1; i >= 1; --i) {
        acc *= shape[i];
        s[i - 1] = acc;
    }
    return s;
}

std::size_t checked_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw ShapeError("tensor rank must be >= 1");
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive");
        if (e > std::numeric_limits<std::uint32_t>::max())
            throw ShapeError("tensor extent exceeds u32 range");
        if (n > std::numeric_limits<std::size_t>::max() / e)
            throw ShapeError("tensor element count overflows");
        n *= e;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), stride_(make_strides(shape_)), data_(checked_count(shape_), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> values)
    : shape_(std::move(shape)), stride_(make_strides(shape_)), data_(std::move(values)) {
    if (data_.size() != checked_count(shape_))
        throw ShapeError("tensor data length does not match shape");
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) throw ShapeError("tensor axis out of range");
    return shape_[axis];
}

FeatureMap::FeatureMap(Tensor t) : t_(std::move(t)) {
    if (t_.rank() != 3) throw ShapeError("feature map requires a rank-3 tensor (C,H,W)");
}

DepthMap::DepthMap(Tensor t) : t_(std::move(t)) {
    if (t_.rank() != 2) throw ShapeError("depth map requires a rank-2 tensor (H,W)");
}

namespace {

constexpr char kMagic[4] = {'F', 'P', 'D', 'E'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                                static_cast<unsigned char>((v >> 8) & 0xFF),
                                static_cast<unsigned char>((v >> 16) & 0xFF),
                                static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& origin) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw ValidationError("truncated tensor container: " + origin);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t f32_bits(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    return u;
}

float bits_f32(std::uint32_t u) {
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    const std::uint8_t dtype = kDtypeF32;
    const std::uint8_t rank = static_cast<std::uint8_t>(t.rank());
    out.write(reinterpret_cast<const char*>(&dtype), 1);
    out.write(reinterpret_cast<const char*>(&rank), 1);
    for (std::size_t e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (float f : t.values()) put_u32(out, f32_bits(f));
}

void write_tensor_file(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    write_tensor(out, t);
    out.flush();
    if (!out) throw ValidationError("write failed: " + path);
}

Tensor read_tensor(std::istream& in, const std::string& origin) {
    Tensor t = read_tensor_embedded(in, origin);
    if (in.peek() != std::char_traits<char>::eof())
        throw ValidationError("trailing bytes in tensor container: " + origin);
    return t;
}

Tensor read_tensor_embedded(std::istream& in, const std::string& origin) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw ValidationError("bad magic in tensor container: " + origin);
    const std::uint32_t version = get_u32(in, origin);
    if (version != kVersion)
        throw ValidationError("unsupported tensor container version " + std::to_string(version) +
                              ": " + origin);
    std::uint8_t dtype = 0, rank = 0;
    if (!in.read(reinterpret_cast<char*>(&dtype), 1) || !in.read(reinterpret_cast<char*>(&rank), 1))
        throw ValidationError("truncated tensor container: " + origin);
    if (dtype != kDtypeF32)
        throw ValidationError("unsupported dtype " + std::to_string(dtype) + ": " + origin);
    if (rank == 0) throw ValidationError("tensor rank must be >= 1: " + origin);
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        shape[i] = get_u32(in, origin);
        if (shape[i] == 0) throw ValidationError("zero extent in tensor container: " + origin);
        count *= shape[i];
    }
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        const float f = bits_f32(get_u32(in, origin));
        if (!std::isfinite(f))
            throw ValidationError("non-finite value in tensor container: " + origin);
        data[i] = f;
    }
    return Tensor(std::move(shape), std::move(data));
}

Tensor read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open tensor file: " + path);
    return read_tensor(in, path);
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 32) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

}  // namespace freqpde
