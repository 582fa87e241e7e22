#include "freqpde/supervision.hpp"

#include <cmath>
#include <vector>

namespace freqpde {

namespace {

constexpr double kVarFloor = 1e-12;

// mean and population variance of v, pairwise-summed for bit stability
void mean_and_var(const std::vector<double>& v, double& mean, double& var) {
    mean = pairwise_sum(v) / static_cast<double>(v.size());
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - mean;
        sq[i] = d * d;
    }
    var = pairwise_sum(sq) / static_cast<double>(v.size());
}

std::vector<double> normalized_values(const std::vector<double>& raw, double& std_out,
                                      const char* what) {
    if (raw.size() < 2)
        throw ValidationError(std::string(what) + ": need at least two pixels to normalize");
    double mean = 0.0, var = 0.0;
    mean_and_var(raw, mean, var);
    if (!(var > kVarFloor))
        throw DegenerateInputError(std::string(what) + ": constant field has no scale to normalize");
    std_out = std::sqrt(var);
    std::vector<double> z(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) z[i] = (raw[i] - mean) / std_out;
    return z;
}

std::vector<double> reciprocal_field(const DepthMap& depth) {
    std::vector<double> r(depth.tensor().size());
    const float* src = depth.tensor().values().data();
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(src[i] > 0.0f)) throw ValidationError("inverse-depth normalization needs depth > 0");
        r[i] = 1.0 / static_cast<double>(src[i]);
    }
    return r;
}

void check_target_grid(const DepthMap& pred, const SparseDepthTarget& target) {
    if (target.height != pred.height() || target.width != pred.width())
        throw ShapeError("sparse target grid does not match the prediction");
    for (const SparseDepthSample& s : target.samples)
        if (s.u >= target.width || s.v >= target.height || !(s.depth > 0.0f))
            throw ValidationError("sparse target sample outside the grid or non-positive");
}

double smooth_l1(double x) {
    const double a = std::abs(x);
    return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double smooth_l1_slope(double x) {
    const double a = std::abs(x);
    return a < 1.0 ? x : (x > 0.0 ? 1.0 : -1.0);
}

}  // namespace

RelDepthMap normalize_inv_depth(const DepthMap& depth) {
    const std::vector<double> r = reciprocal_field(depth);
    double std_dev = 0.0;
    const std::vector<double> z = normalized_values(r, std_dev, "normalize_inv_depth");
    Tensor out({depth.height(), depth.width()});
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = static_cast<float>(z[i]);
    return out;
}

RelDepthMap normalize_relative(const Tensor& rel) {
    if (rel.rank() != 2) throw ShapeError("relative depth map must be H x W");
    std::vector<double> raw(rel.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<double>(rel[i]);
    double std_dev = 0.0;
    const std::vector<double> z = normalized_values(raw, std_dev, "normalize_relative");
    Tensor out(rel.shape());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = static_cast<float>(z[i]);
    return out;
}

double smooth_l1_sparse(const DepthMap& pred, const SparseDepthTarget& target) {
    if (target.samples.empty())
        throw ValidationError("smooth_l1_sparse: sparse target holds no samples");
    check_target_grid(pred, target);
    std::vector<double> terms(target.samples.size());
    for (std::size_t i = 0; i < target.samples.size(); ++i) {
        const SparseDepthSample& s = target.samples[i];
        terms[i] = smooth_l1(static_cast<double>(pred.at(s.v, s.u)) -
                             static_cast<double>(s.depth));
    }
    return pairwise_sum(terms) / static_cast<double>(terms.size());
}

double mse_rel(const RelDepthMap& pred_rel, const RelDepthMap& pseudo_rel) {
    if (!pred_rel.same_shape(pseudo_rel)) throw ShapeError("mse_rel: map shapes disagree");
    if (pred_rel.size() == 0) throw ShapeError("mse_rel: empty maps");
    std::vector<double> terms(pred_rel.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const double d = static_cast<double>(pred_rel[i]) - static_cast<double>(pseudo_rel[i]);
        terms[i] = d * d;
    }
    return pairwise_sum(terms) / static_cast<double>(terms.size());
}

LossReport hybrid_depth_loss(const DepthMap& pred, const SparseDepthTarget* target,
                             const RelDepthMap* pseudo_rel, double lambda_s, double lambda_m) {
    if (!std::isfinite(lambda_s) || !std::isfinite(lambda_m) || lambda_s < 0.0 || lambda_m < 0.0)
        throw ValidationError("loss weights must be finite and non-negative");
    LossReport report;
    report.weights.lambda_s = lambda_s;
    report.weights.lambda_m = lambda_m;
    if (lambda_s != 0.0) {
        if (target == nullptr)
            throw ValidationError("hybrid_depth_loss: lambda_s > 0 needs a sparse target");
        report.l_s = smooth_l1_sparse(pred, *target);
    }
    if (lambda_m != 0.0) {
        if (pseudo_rel == nullptr)
            throw ValidationError("hybrid_depth_loss: lambda_m > 0 needs a pseudo label map");
        if (pseudo_rel->rank() != 2 || pseudo_rel->extent(0) != pred.height() ||
            pseudo_rel->extent(1) != pred.width())
            throw ShapeError("hybrid_depth_loss: pseudo map grid does not match the prediction");
        report.l_m = mse_rel(normalize_inv_depth(pred), *pseudo_rel);
    }
    report.l_depth = lambda_s * report.l_s + lambda_m * report.l_m;
    report.l_total = report.l_depth;
    return report;
}

double total_loss(double l_depth, double l_samp, double l_reg, double lambda1, double lambda2,
                  double lambda3) {
    for (double v : {l_depth, l_samp, l_reg, lambda1, lambda2, lambda3})
        if (!std::isfinite(v)) throw ValidationError("total_loss: terms must be finite");
    return lambda1 * l_depth + lambda2 * l_samp + lambda3 * l_reg;
}

Tensor depth_loss_grad(const DepthMap& pred, const SparseDepthTarget* target,
                       const RelDepthMap* pseudo_rel, double lambda_s, double lambda_m) {
    if (!std::isfinite(lambda_s) || !std::isfinite(lambda_m) || lambda_s < 0.0 || lambda_m < 0.0)
        throw ValidationError("loss weights must be finite and non-negative");
    const std::size_t h = pred.height();
    const std::size_t w = pred.width();
    const std::size_t n = h * w;
    Tensor grad({h, w});
    std::vector<double> acc(n, 0.0);

    if (lambda_s != 0.0) {
        if (target == nullptr)
            throw ValidationError("depth_loss_grad: lambda_s > 0 needs a sparse target");
        if (target->samples.empty())
            throw ValidationError("depth_loss_grad: sparse target holds no samples");
        check_target_grid(pred, *target);
        const double inv = 1.0 / static_cast<double>(target->samples.size());
        for (const SparseDepthSample& s : target->samples) {
            const double x =
                static_cast<double>(pred.at(s.v, s.u)) - static_cast<double>(s.depth);
            acc[s.v * w + s.u] += lambda_s * smooth_l1_slope(x) * inv;
        }
    }

    if (lambda_m != 0.0) {
        if (pseudo_rel == nullptr)
            throw ValidationError("depth_loss_grad: lambda_m > 0 needs a pseudo label map");
        if (pseudo_rel->rank() != 2 || pseudo_rel->extent(0) != h || pseudo_rel->extent(1) != w)
            throw ShapeError("depth_loss_grad: pseudo map grid does not match the prediction");

        const std::vector<double> r = reciprocal_field(pred);
        double std_dev = 0.0;
        const std::vector<double> z = normalized_values(r, std_dev, "depth_loss_grad");

        // L_m = mean((z - y)^2); back through z = (r - mean r)/std and r = 1/D:
        // dL/dr_q = (g_q - mean(g) - z_q * mean(g*z)) / std, g_p = 2 (z_p - y_p)/n.
        std::vector<double> g(n), gz(n);
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = 2.0 * (z[i] - static_cast<double>((*pseudo_rel)[i])) / static_cast<double>(n);
            gz[i] = g[i] * z[i];
        }
        const double g_mean = pairwise_sum(g) / static_cast<double>(n);
        const double gz_mean = pairwise_sum(gz) / static_cast<double>(n);
        const float* d = pred.tensor().values().data();
        for (std::size_t i = 0; i < n; ++i) {
            const double dl_dr = (g[i] - g_mean - z[i] * gz_mean) / std_dev;
            const double dd = static_cast<double>(d[i]);
            acc[i] += lambda_m * dl_dr * (-1.0 / (dd * dd));
        }
    }

    for (std::size_t i = 0; i < n; ++i) grad[i] = static_cast<float>(acc[i]);
    return grad;
}

}  // namespace freqpde
