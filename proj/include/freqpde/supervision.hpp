#pragma once

#include "freqpde/camera.hpp"
#include "freqpde/tensor.hpp"

namespace freqpde {

/// Dimensionless relative depth, H x W; normalized maps have zero mean and
/// unit population variance.
using RelDepthMap = Tensor;

struct LossWeights {
    double lambda_s = 1.0;  // metric smooth-L1 term
    double lambda_m = 1.0;  // relative-depth MSE term
    double lambda1 = 1.0;   // depth loss
    double lambda2 = 0.5;   // sampling loss (external)
    double lambda3 = 1.0;   // regularization loss (external)
};

struct LossReport {
    double l_s = 0.0;
    double l_m = 0.0;
    double l_depth = 0.0;
    double l_samp = 0.0;
    double l_reg = 0.0;
    double l_total = 0.0;
    LossWeights weights;
};

/// Mean-variance normalization of inverse depth: r = 1/D, then
/// (r - mean(r)) / sqrt(population variance). Invariant to positive affine
/// maps of 1/D, which is what makes scale/shift-ambiguous pseudo labels
/// comparable.
RelDepthMap normalize_inv_depth(const DepthMap& depth);

/// Same normalization for maps that are already relative (no reciprocal);
/// used when ingesting raw pseudo-label files.
RelDepthMap normalize_relative(const Tensor& rel);

/// Smooth-L1 (transition at 1.0) between predictions and sparse metric
/// targets, averaged over the target pixels only.
double smooth_l1_sparse(const DepthMap& pred, const SparseDepthTarget& target);

/// Dense mean squared error between two relative-depth maps.
double mse_rel(const RelDepthMap& pred_rel, const RelDepthMap& pseudo_rel);

/// L_depth = lambda_s * smooth_l1_sparse(pred, target)
///         + lambda_m * mse_rel(normalize_inv_depth(pred), pseudo_rel).
/// A term with zero weight is skipped entirely, so its operand may be null.
LossReport hybrid_depth_loss(const DepthMap& pred, const SparseDepthTarget* target,
                             const RelDepthMap* pseudo_rel, double lambda_s, double lambda_m);

/// lambda1 * l_depth + lambda2 * l_samp + lambda3 * l_reg.
double total_loss(double l_depth, double l_samp, double l_reg, double lambda1 = 1.0,
                  double lambda2 = 0.5, double lambda3 = 1.0);

/// Exact analytic d(L_depth)/d(pred) per pixel, chained through the
/// reciprocal and the mean/variance of the normalization.
Tensor depth_loss_grad(const DepthMap& pred, const SparseDepthTarget* target,
                       const RelDepthMap* pseudo_rel, double lambda_s, double lambda_m);

}  // namespace freqpde
