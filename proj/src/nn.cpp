#include "freqpde/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "freqpde/parallel.hpp"
#include "freqpde/rng.hpp"

namespace freqpde {

void WeightSet::insert(std::string name, Tensor t) {
    auto [it, fresh] = tensors_.emplace(std::move(name), std::move(t));
    if (!fresh) throw ValidationError("duplicate weight tensor name: " + it->first);
}

const Tensor& WeightSet::at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ValidationError("missing weight tensor: " + name);
    return it->second;
}

void WeightSet::serialize(std::ostream& out) const {
    for (const auto& [name, tensor] : tensors_) {
        const auto len = static_cast<std::uint32_t>(name.size());
        const unsigned char b[4] = {static_cast<unsigned char>(len & 0xFF),
                                    static_cast<unsigned char>((len >> 8) & 0xFF),
                                    static_cast<unsigned char>((len >> 16) & 0xFF),
                                    static_cast<unsigned char>((len >> 24) & 0xFF)};
        out.write(reinterpret_cast<const char*>(b), 4);
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_tensor(out, tensor);
    }
}

std::string WeightSet::serialize() const {
    std::ostringstream out(std::ios::binary);
    serialize(out);
    return out.str();
}

namespace {

// Receptive-field-aware fans: affine [out, in] and conv [out, in, kh, kw].
void xavier_fans(const std::vector<std::size_t>& shape, std::size_t& fan_in,
                 std::size_t& fan_out) {
    if (shape.size() == 1) {
        fan_in = fan_out = shape[0];
        return;
    }
    std::size_t field = 1;
    for (std::size_t i = 2; i < shape.size(); ++i) field *= shape[i];
    fan_in = shape[1] * field;
    fan_out = shape[0] * field;
}

}  // namespace

WeightSet seeded_init(std::uint64_t seed, std::span<const LayerGeometry> geometry) {
    WeightSet ws(seed, "xavier_uniform");
    for (const auto& layer : geometry) {
        Tensor t(layer.shape);
        if (layer.init == InitKind::XavierUniform) {
            std::size_t fan_in = 0, fan_out = 0;
            xavier_fans(layer.shape, fan_in, fan_out);
            const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            UniformStream rng(seed, layer.name);
            for (float& v : t.values()) v = static_cast<float>(rng.next(-a, a));
        }
        ws.insert(layer.name, std::move(t));
    }
    return ws;
}

void append_mlp_geometry(std::vector<LayerGeometry>& out, const std::string& prefix,
                         std::span<const std::size_t> dims) {
    if (dims.size() < 2) throw ShapeError("mlp needs at least input and output dims");
    for (std::size_t t = 0; t + 1 < dims.size(); ++t) {
        const std::string idx = std::to_string(t);
        out.push_back({prefix + ".w" + idx, {dims[t + 1], dims[t]}, InitKind::XavierUniform});
        out.push_back({prefix + ".b" + idx, {dims[t + 1]}, InitKind::Zero});
    }
}

void append_conv3x3_geometry(std::vector<LayerGeometry>& out, const std::string& prefix,
                             std::size_t out_channels, std::size_t in_channels) {
    out.push_back({prefix + ".w", {out_channels, in_channels, 3, 3}, InitKind::XavierUniform});
    out.push_back({prefix + ".b", {out_channels}, InitKind::Zero});
}

FeatureMap conv2d_3x3(const FeatureMap& input, const Tensor& kernel, const Tensor& bias) {
    if (kernel.rank() != 4 || kernel.extent(2) != 3 || kernel.extent(3) != 3)
        throw ShapeError("conv2d_3x3 kernel must be C_out x C_in x 3 x 3");
    const std::size_t c_out = kernel.extent(0);
    const std::size_t c_in = kernel.extent(1);
    if (c_in != input.channels())
        throw ShapeError("conv2d_3x3 channel mismatch: kernel C_in " + std::to_string(c_in) +
                         " vs input C " + std::to_string(input.channels()));
    if (bias.rank() != 1 || bias.extent(0) != c_out)
        throw ShapeError("conv2d_3x3 bias must have C_out entries");

    const std::size_t h = input.height();
    const std::size_t w = input.width();
    FeatureMap out(c_out, h, w);
    // One task per output (channel, row); padding is implicit zeros.
    parallel_for(c_out * h, [&](std::size_t task) {
        const std::size_t co = task / h;
        const std::size_t y = task % h;
        for (std::size_t x = 0; x < w; ++x) {
            double acc = static_cast<double>(bias(co));
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                for (int dy = -1; dy <= 1; ++dy) {
                    const long yy = static_cast<long>(y) + dy;
                    if (yy < 0 || yy >= static_cast<long>(h)) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const long xx = static_cast<long>(x) + dx;
                        if (xx < 0 || xx >= static_cast<long>(w)) continue;
                        acc += static_cast<double>(kernel(co, ci, static_cast<std::size_t>(dy + 1),
                                                          static_cast<std::size_t>(dx + 1))) *
                               static_cast<double>(input.at(ci, static_cast<std::size_t>(yy),
                                                            static_cast<std::size_t>(xx)));
                    }
                }
            }
            out.at(co, y, x) = static_cast<float>(acc);
        }
    });
    return out;
}

Tensor softmax_over_axis(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) throw ShapeError("softmax axis out of range");
    const std::size_t len = x.extent(axis);
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.extent(i);
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= x.extent(i);

    Tensor out(x.shape());
    const float* src = x.values().data();
    float* dst = out.values().data();
    parallel_for(outer * inner, [&](std::size_t task) {
        const std::size_t o = task / inner;
        const std::size_t in = task % inner;
        const std::size_t base = o * len * inner + in;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < len; ++k)
            mx = std::max(mx, static_cast<double>(src[base + k * inner]));
        double denom = 0.0;
        for (std::size_t k = 0; k < len; ++k)
            denom += std::exp(static_cast<double>(src[base + k * inner]) - mx);
        for (std::size_t k = 0; k < len; ++k)
            dst[base + k * inner] = static_cast<float>(
                std::exp(static_cast<double>(src[base + k * inner]) - mx) / denom);
    });
    return out;
}

namespace {

double apply_activation(double v, Activation act) {
    switch (act) {
        case Activation::None: return v;
        case Activation::Relu: return v > 0.0 ? v : 0.0;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
    }
    return v;
}

// Runs the chain on a double-valued input buffer.
void run_mlp(const WeightSet& weights, const MlpSpec& spec, std::vector<double>& buf,
             std::vector<double>& scratch) {
    const std::size_t layers = spec.dims.size() - 1;
    for (std::size_t t = 0; t < layers; ++t) {
        const std::string idx = std::to_string(t);
        const Tensor& wm = weights.at(spec.prefix + ".w" + idx);
        const Tensor& bv = weights.at(spec.prefix + ".b" + idx);
        const std::size_t in = spec.dims[t];
        const std::size_t out = spec.dims[t + 1];
        if (wm.rank() != 2 || wm.extent(0) != out || wm.extent(1) != in)
            throw ShapeError("mlp weight " + spec.prefix + ".w" + idx + " has unexpected shape");
        if (bv.rank() != 1 || bv.extent(0) != out)
            throw ShapeError("mlp bias " + spec.prefix + ".b" + idx + " has unexpected shape");
        if (buf.size() != in)
            throw ShapeError("mlp input length " + std::to_string(buf.size()) +
                             " does not match layer input " + std::to_string(in));
        scratch.assign(out, 0.0);
        const Activation act = (t + 1 == layers) ? spec.output : Activation::Relu;
        for (std::size_t r = 0; r < out; ++r) {
            double acc = static_cast<double>(bv(r));
            for (std::size_t c = 0; c < in; ++c)
                acc += static_cast<double>(wm(r, c)) * buf[c];
            scratch[r] = apply_activation(acc, act);
        }
        buf.swap(scratch);
    }
}

}  // namespace

std::vector<float> perceptron(std::span<const float> x, const WeightSet& weights,
                              const MlpSpec& spec) {
    if (spec.dims.size() < 2) throw ShapeError("mlp needs at least input and output dims");
    if (x.size() != spec.dims.front())
        throw ShapeError("perceptron input length " + std::to_string(x.size()) +
                         " does not match spec input " + std::to_string(spec.dims.front()));
    std::vector<double> buf(x.begin(), x.end());
    std::vector<double> scratch;
    run_mlp(weights, spec, buf, scratch);
    std::vector<float> out(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = static_cast<float>(buf[i]);
    return out;
}

Tensor map_mlp(const FeatureMap& f, const WeightSet& weights, const MlpSpec& spec) {
    if (spec.dims.size() < 2) throw ShapeError("mlp needs at least input and output dims");
    if (f.channels() != spec.dims.front())
        throw ShapeError("map_mlp: feature channels " + std::to_string(f.channels()) +
                         " do not match spec input " + std::to_string(spec.dims.front()));
    const std::size_t h = f.height();
    const std::size_t w = f.width();
    const std::size_t c_in = spec.dims.front();
    const std::size_t c_out = spec.dims.back();
    Tensor out({c_out, h, w});
    parallel_for(h, [&](std::size_t y) {
        std::vector<double> buf;
        std::vector<double> scratch;
        for (std::size_t x = 0; x < w; ++x) {
            buf.resize(c_in);
            for (std::size_t c = 0; c < c_in; ++c) buf[c] = static_cast<double>(f.at(c, y, x));
            run_mlp(weights, spec, buf, scratch);
            for (std::size_t c = 0; c < c_out; ++c)
                out(c, y, x) = static_cast<float>(buf[c]);
        }
    });
    return out;
}

Tensor bilinear_resize(const Tensor& src, std::size_t out_h, std::size_t out_w) {
    if (src.rank() != 2 && src.rank() != 3)
        throw ShapeError("bilinear_resize expects a H x W or C x H x W tensor");
    if (out_h == 0 || out_w == 0) throw ShapeError("bilinear_resize target must be non-empty");
    const bool has_channels = src.rank() == 3;
    const std::size_t channels = has_channels ? src.extent(0) : 1;
    const std::size_t in_h = src.extent(has_channels ? 1 : 0);
    const std::size_t in_w = src.extent(has_channels ? 2 : 1);

    std::vector<std::size_t> shape =
        has_channels ? std::vector<std::size_t>{channels, out_h, out_w}
                     : std::vector<std::size_t>{out_h, out_w};
    Tensor out(std::move(shape));
    if (in_h == out_h && in_w == out_w) {
        std::copy(src.values().begin(), src.values().end(), out.values().begin());
        return out;
    }

    const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
    const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
    const auto src_at = [&](std::size_t c, std::size_t y, std::size_t x) -> double {
        return has_channels ? src(c, y, x) : src(y, x);
    };
    float* dst = out.values().data();
    parallel_for(out_h, [&](std::size_t oy) {
        double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(in_h - 1));
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, in_h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(in_w - 1));
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, in_w - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < channels; ++c) {
                const double top = src_at(c, y0, x0) * (1.0 - wx) + src_at(c, y0, x1) * wx;
                const double bot = src_at(c, y1, x0) * (1.0 - wx) + src_at(c, y1, x1) * wx;
                dst[(c * out_h + oy) * out_w + ox] = static_cast<float>(top * (1.0 - wy) + bot * wy);
            }
        }
    });
    return out;
}

}  // namespace freqpde
