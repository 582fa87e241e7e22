#include "freqpde/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "freqpde/parallel.hpp"

namespace freqpde {

namespace {

constexpr double kBehindEps = 1e-6;
constexpr double kOrthonormalTol = 1e-5;

Vec3 apply_rigid(const std::array<double, 16>& m, const Vec3& p) {
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
}

}  // namespace

CameraModel::CameraModel(double fx, double fy, double cx, double cy,
                         const std::array<double, 16>& extrinsic, std::size_t width,
                         std::size_t height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), extrinsic_(extrinsic), width_(width), height_(height) {
    if (!(fx_ > 0.0) || !(fy_ > 0.0)) throw ValidationError("camera focal lengths must be positive");
    if (width_ == 0 || height_ == 0) throw ValidationError("camera image size must be positive");
    if (extrinsic_[12] != 0.0 || extrinsic_[13] != 0.0 || extrinsic_[14] != 0.0 ||
        extrinsic_[15] != 1.0)
        throw ValidationError("extrinsic bottom row must be (0,0,0,1)");

    // R R^T = I within tolerance and det(R) = +1.
    const double* r = extrinsic_.data();
    const auto row = [&](int i) { return std::array<double, 3>{r[4 * i], r[4 * i + 1], r[4 * i + 2]}; };
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const auto a = row(i);
            const auto b = row(j);
            const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            const double expect = (i == j) ? 1.0 : 0.0;
            if (std::abs(dot - expect) > kOrthonormalTol)
                throw ValidationError("extrinsic rotation block is not orthonormal");
        }
    }
    const double det = r[0] * (r[5] * r[10] - r[6] * r[9]) - r[1] * (r[4] * r[10] - r[6] * r[8]) +
                       r[2] * (r[4] * r[9] - r[5] * r[8]);
    if (std::abs(det - 1.0) > kOrthonormalTol)
        throw ValidationError("extrinsic rotation block must have determinant +1");

    // [R t]^-1 = [R^T  -R^T t]
    inverse_extrinsic_ = {r[0], r[4], r[8],  0.0, r[1], r[5], r[9],  0.0,
                          r[2], r[6], r[10], 0.0, 0.0,  0.0,  0.0,   1.0};
    const Vec3 t{r[3], r[7], r[11]};
    inverse_extrinsic_[3] = -(r[0] * t.x + r[4] * t.y + r[8] * t.z);
    inverse_extrinsic_[7] = -(r[1] * t.x + r[5] * t.y + r[9] * t.z);
    inverse_extrinsic_[11] = -(r[2] * t.x + r[6] * t.y + r[10] * t.z);
}

std::array<double, 9> CameraModel::intrinsics() const {
    return {fx_, 0.0, cx_, 0.0, fy_, cy_, 0.0, 0.0, 1.0};
}

Vec3 CameraModel::to_camera(const Vec3& lidar) const { return apply_rigid(extrinsic_, lidar); }

Vec3 CameraModel::to_lidar(const Vec3& camera) const {
    return apply_rigid(inverse_extrinsic_, camera);
}

std::optional<PixelDepth> project(const Vec3& point, const CameraModel& cam) {
    const Vec3 q = cam.to_camera(point);
    if (q.z <= kBehindEps) return std::nullopt;
    return PixelDepth{cam.fx() * q.x / q.z + cam.cx(), cam.fy() * q.y / q.z + cam.cy(), q.z};
}

Vec3 unproject(double u, double v, double depth, const CameraModel& cam) {
    if (!(depth > 0.0)) throw DegenerateInputError("unproject requires depth > 0");
    const Vec3 q{depth * (u - cam.cx()) / cam.fx(), depth * (v - cam.cy()) / cam.fy(), depth};
    return cam.to_lidar(q);
}

SparseDepthTarget lidar_to_sparse_depth(std::span<const Vec3> points, const CameraModel& cam,
                                        std::size_t height, std::size_t width, double zeta) {
    if (!(zeta >= 1.0)) throw ValidationError("zeta must be >= 1");
    if (height == 0 || width == 0) throw ValidationError("sparse depth grid must be non-empty");

    // Deterministic partitioned min-merge: thread-local cell maps, then a
    // global min over cells (min is order-independent).
    const std::size_t workers = std::max<std::size_t>(1, std::min(thread_budget(), std::size_t{8}));
    const std::size_t chunk = points.empty() ? 1 : (points.size() + workers - 1) / workers;
    std::vector<std::map<std::pair<std::size_t, std::size_t>, float>> partial(workers);
    parallel_for(workers, [&](std::size_t w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(begin + chunk, points.size());
        auto& local = partial[w];
        for (std::size_t i = begin; i < end; ++i) {
            const auto px = project(points[i], cam);
            if (!px) continue;
            const double uc = px->u / zeta;
            const double vc = px->v / zeta;
            if (uc < 0.0 || vc < 0.0) continue;
            const auto col = static_cast<std::size_t>(std::floor(uc));
            const auto row = static_cast<std::size_t>(std::floor(vc));
            if (col >= width || row >= height) continue;
            const float d = static_cast<float>(px->depth);
            auto [it, fresh] = local.emplace(std::make_pair(row, col), d);
            if (!fresh) it->second = std::min(it->second, d);
        }
    });

    std::map<std::pair<std::size_t, std::size_t>, float> cells;
    for (const auto& local : partial) {
        for (const auto& [cell, d] : local) {
            auto [it, fresh] = cells.emplace(cell, d);
            if (!fresh) it->second = std::min(it->second, d);
        }
    }

    SparseDepthTarget target;
    target.height = height;
    target.width = width;
    target.samples.reserve(cells.size());
    for (const auto& [cell, d] : cells)
        target.samples.push_back({cell.second, cell.first, d});
    return target;
}

CoverageReport coverage_stats(std::span<const Vec3> points, std::span<const CameraModel> cams,
                              std::span<const Resolution> resolutions,
                              std::span<const double> zetas) {
    if (cams.empty() || resolutions.empty() || zetas.empty())
        throw ValidationError("coverage_stats needs cameras, resolutions and zetas");
    CoverageReport report;
    for (const Resolution& res : resolutions) {
        if (res.width == 0 || res.height == 0)
            throw ValidationError("coverage resolution must be positive");
        for (double zeta : zetas) {
            if (!(zeta >= 1.0)) throw ValidationError("zeta must be >= 1");
            const std::size_t gw =
                std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(res.width / zeta)));
            const std::size_t gh =
                std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(res.height / zeta)));
            double sum = 0.0;
            for (const CameraModel& cam : cams) {
                const double sx = static_cast<double>(res.width) / static_cast<double>(cam.width());
                const double sy =
                    static_cast<double>(res.height) / static_cast<double>(cam.height());
                std::vector<std::uint8_t> covered(gw * gh, 0);
                for (const Vec3& p : points) {
                    const auto px = project(p, cam);
                    if (!px) continue;
                    const double uc = px->u * sx / zeta;
                    const double vc = px->v * sy / zeta;
                    if (uc < 0.0 || vc < 0.0) continue;
                    const auto col = static_cast<std::size_t>(std::floor(uc));
                    const auto row = static_cast<std::size_t>(std::floor(vc));
                    if (col >= gw || row >= gh) continue;
                    covered[row * gw + col] = 1;
                }
                std::size_t hit = 0;
                for (std::uint8_t c : covered) hit += c;
                sum += static_cast<double>(hit) / static_cast<double>(gw * gh);
            }
            report.entries.push_back({res, zeta, sum / static_cast<double>(cams.size())});
        }
    }
    return report;
}

std::vector<CameraModel> load_calibration_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open calibration file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("calibration JSON parse error in " + path + ": " + e.what());
    }
    if (!doc.contains("cameras") || !doc["cameras"].is_array() || doc["cameras"].empty())
        throw ValidationError("calibration file has no cameras: " + path);
    std::vector<CameraModel> cams;
    for (const auto& c : doc["cameras"]) {
        try {
            std::array<double, 16> e{};
            const auto& ext = c.at("extrinsic");
            if (!ext.is_array() || ext.size() != 16)
                throw ValidationError("extrinsic must hold 16 row-major numbers");
            for (std::size_t i = 0; i < 16; ++i) e[i] = ext[i].get<double>();
            cams.emplace_back(c.at("fx").get<double>(), c.at("fy").get<double>(),
                              c.at("cx").get<double>(), c.at("cy").get<double>(), e,
                              c.at("width").get<std::size_t>(), c.at("height").get<std::size_t>());
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("bad camera entry in " + path + ": " + e.what());
        }
    }
    return cams;
}

void write_calibration_file(const std::string& path, std::span<const CameraModel> cams) {
    if (cams.empty()) throw ValidationError("write_calibration_file: no cameras");
    nlohmann::json doc;
    doc["version"] = 1;
    nlohmann::json arr = nlohmann::json::array();
    for (const CameraModel& c : cams) {
        nlohmann::json jc;
        jc["fx"] = c.fx();
        jc["fy"] = c.fy();
        jc["cx"] = c.cx();
        jc["cy"] = c.cy();
        jc["width"] = c.width();
        jc["height"] = c.height();
        jc["extrinsic"] = c.extrinsic();
        arr.push_back(std::move(jc));
    }
    doc["cameras"] = std::move(arr);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write calibration file: " + path);
    out << doc.dump(2) << "\n";
}

std::vector<Vec3> load_cloud_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open cloud file: " + path);
    std::vector<Vec3> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // tolerate blank lines and a trailing newline
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        Vec3 p;
        char comma1 = 0, comma2 = 0;
        if (!(ss >> p.x >> comma1 >> p.y >> comma2 >> p.z) || comma1 != ',' || comma2 != ',')
            throw ValidationError("malformed cloud CSV at line " + std::to_string(lineno) + ": " +
                                  path);
        points.push_back(p);
    }
    return points;
}

}  // namespace freqpde
