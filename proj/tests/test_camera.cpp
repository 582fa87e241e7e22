#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "freqpde/camera.hpp"
#include "freqpde/rng.hpp"
#include "freqpde/synth.hpp"

#include "oracles.hpp"

using namespace freqpde;
namespace fs = std::filesystem;

namespace {

std::array<double, 16> identity_pose() {
    return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
}

CameraModel simple_cam() {
    return CameraModel(100.0, 110.0, 80.0, 60.0, identity_pose(), 160, 120);
}

fs::path temp_dir(const char* tag) {
    fs::path dir = fs::temp_directory_path() / (std::string("freqpde_cam_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("camera validation rejects bad intrinsics and extrinsics") {
    CHECK_THROWS_AS(CameraModel(0.0, 1.0, 0.0, 0.0, identity_pose(), 4, 4), ValidationError);
    CHECK_THROWS_AS(CameraModel(1.0, 1.0, 0.0, 0.0, identity_pose(), 0, 4), ValidationError);

    auto bad_row = identity_pose();
    bad_row[15] = 2.0;
    CHECK_THROWS_AS(CameraModel(1.0, 1.0, 0.0, 0.0, bad_row, 4, 4), ValidationError);

    auto scaled = identity_pose();
    scaled[0] = 2.0;  // not orthonormal
    CHECK_THROWS_AS(CameraModel(1.0, 1.0, 0.0, 0.0, scaled, 4, 4), ValidationError);

    auto mirrored = identity_pose();
    mirrored[0] = -1.0;  // determinant -1
    CHECK_THROWS_AS(CameraModel(1.0, 1.0, 0.0, 0.0, mirrored, 4, 4), ValidationError);
}

TEST_CASE("project and unproject are inverse maps") {
    UniformStream rng(101, "roundtrip");
    for (int trial = 0; trial < 50; ++trial) {
        const double angle = rng.next(0.0, 6.28);
        const auto cams = synth_calibration(6, 352, 128);
        const CameraModel& cam = cams[static_cast<std::size_t>(rng.next_index(6))];

        const double u = rng.next(0.0, 352.0), v = rng.next(0.0, 128.0);
        const double d = rng.next(0.5, 60.0);
        const Vec3 p = unproject(u, v, d, cam);
        const auto back = project(p, cam);
        REQUIRE(back.has_value());
        CHECK(std::abs(back->u - u) < 1e-6);
        CHECK(std::abs(back->v - v) < 1e-6);
        CHECK(std::abs(back->depth - d) < 1e-6);
        (void)angle;
    }
}

TEST_CASE("points behind the camera do not project") {
    const CameraModel cam = simple_cam();
    CHECK_FALSE(project({0.0, 0.0, -1.0}, cam).has_value());
    CHECK_FALSE(project({0.0, 0.0, 0.0}, cam).has_value());
    CHECK(project({0.0, 0.0, 2.0}, cam).has_value());
    CHECK_THROWS_AS(unproject(10.0, 10.0, 0.0, cam), DegenerateInputError);
    CHECK_THROWS_AS(unproject(10.0, 10.0, -3.0, cam), DegenerateInputError);
}

TEST_CASE("extrinsic transforms invert each other") {
    const auto cams = synth_calibration(4, 200, 100);
    UniformStream rng(7, "extr");
    for (const CameraModel& cam : cams)
        for (int i = 0; i < 20; ++i) {
            const Vec3 p{rng.next(-30.0, 30.0), rng.next(-30.0, 30.0), rng.next(-3.0, 5.0)};
            const Vec3 q = cam.to_camera(p);
            const Vec3 back = cam.to_lidar(q);
            CHECK(std::abs(back.x - p.x) < 1e-9);
            CHECK(std::abs(back.y - p.y) < 1e-9);
            CHECK(std::abs(back.z - p.z) < 1e-9);
        }
}

TEST_CASE("sparse projection matches the brute-force oracle") {
    const auto cams = synth_calibration(3, 352, 128);
    const std::vector<Vec3> cloud = synth_cloud(4000, 99);
    const double zeta = 8.0;
    const std::size_t gh = 16, gw = 44;
    for (const CameraModel& cam : cams) {
        const SparseDepthTarget t = lidar_to_sparse_depth(cloud, cam, gh, gw, zeta);
        const auto ref = oracle::project_min(cloud, cam, gh, gw, zeta);
        REQUIRE(t.samples.size() == ref.size());
        std::size_t i = 0;
        for (const auto& [cell, depth] : ref) {
            CHECK(t.samples[i].v == cell.first);
            CHECK(t.samples[i].u == cell.second);
            CHECK(t.samples[i].depth == depth);
            ++i;
        }
        // Sorted by row then column, no duplicate cells.
        for (std::size_t s = 1; s < t.samples.size(); ++s) {
            const auto& a = t.samples[s - 1];
            const auto& b = t.samples[s];
            CHECK((a.v < b.v || (a.v == b.v && a.u < b.u)));
        }
    }
}

TEST_CASE("colliding points keep the minimum depth") {
    const CameraModel cam = simple_cam();
    // Both points land in the same 8x8 native-pixel cell.
    const std::vector<Vec3> pts{unproject(100.5, 60.5, 9.0, cam),
                                unproject(100.2, 60.2, 4.0, cam)};
    const SparseDepthTarget t = lidar_to_sparse_depth(pts, cam, 15, 20, 8.0);
    REQUIRE(t.samples.size() == 1);
    CHECK(t.samples[0].u == 12);
    CHECK(t.samples[0].v == 7);
    CHECK(t.samples[0].depth == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("coverage decreases with zeta and increases with resolution") {
    const auto cams = synth_calibration(6, 352, 128);
    const std::vector<Vec3> cloud = synth_cloud(30000, 5);
    const Resolution r1{352, 128}, r2{704, 256};
    const double zetas[] = {4.0, 8.0, 16.0};
    const CoverageReport rep = coverage_stats(cloud, cams, std::vector<Resolution>{r1, r2},
                                              zetas);
    REQUIRE(rep.entries.size() == 6);

    const auto find = [&](std::size_t w, double z) {
        for (const CoverageEntry& e : rep.entries)
            if (e.resolution.width == w && e.zeta == z) return e.coverage;
        FAIL("entry missing");
        return 0.0;
    };
    // Larger zeta -> coarser grid -> higher fraction of covered cells.
    CHECK(find(352, 4.0) <= find(352, 8.0));
    CHECK(find(352, 8.0) <= find(352, 16.0));
    // Higher input resolution with the same zeta -> more, finer cells ->
    // lower fraction covered by the same cloud.
    CHECK(find(704, 8.0) <= find(352, 8.0));
    for (const CoverageEntry& e : rep.entries) {
        CHECK(e.coverage >= 0.0);
        CHECK(e.coverage <= 1.0);
    }
}

TEST_CASE("calibration files round-trip") {
    const auto dir = temp_dir("calib");
    const auto cams = synth_calibration(3, 352, 128);
    const std::string path = (dir / "calib.json").string();
    write_calibration_file(path, cams);
    const auto back = load_calibration_file(path);
    REQUIRE(back.size() == cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        CHECK(back[i].fx() == doctest::Approx(cams[i].fx()).epsilon(1e-12));
        CHECK(back[i].cx() == doctest::Approx(cams[i].cx()).epsilon(1e-12));
        CHECK(back[i].width() == cams[i].width());
        for (int k = 0; k < 16; ++k)
            CHECK(back[i].extrinsic()[static_cast<std::size_t>(k)] ==
                  doctest::Approx(cams[i].extrinsic()[static_cast<std::size_t>(k)])
                      .epsilon(1e-12));
    }
    fs::remove_all(dir);
}

TEST_CASE("cloud CSV parses points and rejects garbage") {
    const auto dir = temp_dir("csv");
    const std::string good = (dir / "good.csv").string();
    {
        std::ofstream out(good);
        out << "1.5,2.5,3.5\n\n-4,0.25,7\n";
    }
    const auto pts = load_cloud_csv(good);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].y == doctest::Approx(2.5));
    CHECK(pts[1].x == doctest::Approx(-4.0));

    const std::string bad = (dir / "bad.csv").string();
    {
        std::ofstream out(bad);
        out << "1,2,3\nnot,a,point\n";
    }
    CHECK_THROWS_AS(load_cloud_csv(bad), ValidationError);
    CHECK_THROWS_AS(load_cloud_csv((dir / "missing.csv").string()), ValidationError);
    fs::remove_all(dir);
}
