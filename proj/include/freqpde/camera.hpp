#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqpde/errors.hpp"

namespace freqpde {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

/// Pinhole camera: intrinsics (fx, fy, cx, cy in pixels), a rigid
/// LiDAR-to-camera extrinsic, and the native image size. The extrinsic
/// inverse is derived at construction, never stored in files.
class CameraModel {
public:
    CameraModel(double fx, double fy, double cx, double cy,
                const std::array<double, 16>& extrinsic, std::size_t width, std::size_t height);

    double fx() const { return fx_; }
    double fy() const { return fy_; }
    double cx() const { return cx_; }
    double cy() const { return cy_; }
    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    const std::array<double, 16>& extrinsic() const { return extrinsic_; }

    /// Full 3x3 intrinsics, row-major.
    std::array<double, 9> intrinsics() const;

    Vec3 to_camera(const Vec3& lidar) const;
    Vec3 to_lidar(const Vec3& camera) const;

private:
    double fx_, fy_, cx_, cy_;
    std::array<double, 16> extrinsic_;          // LiDAR -> camera
    std::array<double, 16> inverse_extrinsic_;  // camera -> LiDAR
    std::size_t width_, height_;
};

struct PixelDepth {
    double u = 0.0, v = 0.0, depth = 0.0;
};

/// Projects a LiDAR-frame point; empty when the point is behind the camera.
std::optional<PixelDepth> project(const Vec3& point, const CameraModel& cam);

/// Lifts pixel (u, v) at metric depth d back into the LiDAR frame.
Vec3 unproject(double u, double v, double depth, const CameraModel& cam);

struct SparseDepthSample {
    std::size_t u = 0;  // column
    std::size_t v = 0;  // row
    float depth = 0.0f;
};

/// Pixel -> nearest-surface depth pairs on a stated grid, sorted by (v, u).
struct SparseDepthTarget {
    std::size_t height = 0, width = 0;
    std::vector<SparseDepthSample> samples;
};

/// Projects a cloud onto an H x W grid downsampled by zeta. Behind-camera
/// and out-of-bounds points are dropped; cell collisions keep min depth.
SparseDepthTarget lidar_to_sparse_depth(std::span<const Vec3> points, const CameraModel& cam,
                                        std::size_t height, std::size_t width, double zeta);

struct Resolution {
    std::size_t width = 0, height = 0;
};

struct CoverageEntry {
    Resolution resolution;
    double zeta = 0.0;
    double coverage = 0.0;  // covered-cell fraction, averaged over cameras
};

struct CoverageReport {
    std::vector<CoverageEntry> entries;
};

/// Covered-cell fraction of the projected cloud for each (resolution, zeta),
/// with intrinsics rescaled from the native size to each resolution.
CoverageReport coverage_stats(std::span<const Vec3> points, std::span<const CameraModel> cams,
                              std::span<const Resolution> resolutions,
                              std::span<const double> zetas);

/// Calibration JSON: {"version":1,"cameras":[{fx,fy,cx,cy,width,height,
/// extrinsic:[16 row-major numbers, LiDAR->camera]}...]}.
std::vector<CameraModel> load_calibration_file(const std::string& path);
void write_calibration_file(const std::string& path, std::span<const CameraModel> cams);

/// Point-cloud CSV: one "x,y,z" triple per line, extra columns ignored.
std::vector<Vec3> load_cloud_csv(const std::string& path);

}  // namespace freqpde
