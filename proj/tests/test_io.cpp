#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "freqpde/config.hpp"
#include "freqpde/io.hpp"
#include "freqpde/synth.hpp"

#include "oracles.hpp"

using namespace freqpde;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    fs::path dir = fs::temp_directory_path() / (std::string("freqpde_io_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("rig bundles round-trip bit-exactly") {
    const auto dir = temp_dir("rig");
    SynthSpec spec;
    spec.height = 8;
    spec.width = 12;
    spec.channels = 6;
    spec.levels = 2;
    spec.cameras = 2;
    spec.seed = 5;
    const RigFeatures rig = synth_rig_features(spec, 4.0);
    const std::string manifest = write_rig_bundle(dir.string(), "features", rig);

    const RigFeatures back = read_rig_bundle(manifest);
    REQUIRE(back.levels.size() == rig.levels.size());
    for (std::size_t i = 0; i < rig.levels.size(); ++i) {
        CHECK(back.levels[i].zeta == rig.levels[i].zeta);
        REQUIRE(back.levels[i].views.size() == rig.levels[i].views.size());
        for (std::size_t j = 0; j < rig.levels[i].views.size(); ++j)
            CHECK(oracle::max_abs_diff(back.levels[i].views[j].tensor(),
                                       rig.levels[i].views[j].tensor()) == 0.0);
    }

    // Writing the same content twice produces identical bytes everywhere.
    const auto dir2 = temp_dir("rig2");
    write_rig_bundle(dir2.string(), "features", rig);
    CHECK(slurp(dir / "features.json") == slurp(dir2 / "features.json"));
    CHECK(slurp(dir / "features_l0_cam1.fpde") == slurp(dir2 / "features_l0_cam1.fpde"));
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("rig bundle reader rejects manifest/tensor disagreement") {
    const auto dir = temp_dir("rigbad");
    SynthSpec spec;
    spec.height = 4;
    spec.width = 4;
    spec.channels = 6;
    spec.levels = 1;
    spec.cameras = 2;
    spec.seed = 1;
    const RigFeatures rig = synth_rig_features(spec, 4.0);
    const std::string manifest = write_rig_bundle(dir.string(), "features", rig);
    // Overwrite the tensor with one of a different grid.
    write_tensor_file((dir / "features_l0_cam0.fpde").string(), Tensor({6, 3, 4}));
    CHECK_THROWS_AS(read_rig_bundle(manifest), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("depth bundles round-trip") {
    const auto dir = temp_dir("depth");
    DepthBundle bundle;
    bundle.levels.push_back({oracle::random_depth(2, 3, 1, "d00"),
                             oracle::random_depth(2, 3, 2, "d01")});
    bundle.levels.push_back({oracle::random_depth(4, 6, 3, "d10"),
                             oracle::random_depth(4, 6, 4, "d11")});
    bundle.zetas = {8.0, 4.0};
    const std::string manifest = write_depth_bundle(dir.string(), "depth", bundle);
    const DepthBundle back = read_depth_bundle(manifest);
    REQUIRE(back.levels.size() == 2);
    REQUIRE(back.levels[1].size() == 2);
    CHECK(back.zetas == bundle.zetas);
    CHECK(oracle::max_abs_diff(back.levels[1][0].tensor(),
                               bundle.levels[1][0].tensor()) == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("sparse targets round-trip and validate on read") {
    const auto dir = temp_dir("target");
    SparseDepthTarget t;
    t.height = 4;
    t.width = 6;
    t.samples.push_back({2, 1, 7.25f});
    t.samples.push_back({5, 3, 11.5f});
    const std::string path = (dir / "t.json").string();
    write_sparse_target(path, t);
    const SparseDepthTarget back = read_sparse_target(path);
    CHECK(back.height == 4);
    CHECK(back.width == 6);
    REQUIRE(back.samples.size() == 2);
    CHECK(back.samples[1].u == 5);
    CHECK(back.samples[1].v == 3);
    CHECK(back.samples[1].depth == 11.5f);

    // Out-of-grid samples are rejected.
    std::ofstream bad(dir / "bad.json");
    bad << R"({"version":1,"height":2,"width":2,"samples":[[3,0,1.0]]})";
    bad.close();
    CHECK_THROWS_AS(read_sparse_target((dir / "bad.json").string()), ValidationError);

    std::ofstream neg(dir / "neg.json");
    neg << R"({"version":1,"height":2,"width":2,"samples":[[0,0,-1.0]]})";
    neg.close();
    CHECK_THROWS_AS(read_sparse_target((dir / "neg.json").string()), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("pipeline config: defaults, file loading, unknown keys") {
    const PipelineConfig def;
    CHECK(def.csdp.alpha == 300.0);
    CHECK(def.csdp.beta == 2.0);
    CHECK(def.csdp.omega == 0.5);
    CHECK(def.csdp.mu == 0.2);
    CHECK(def.csdp.d_max == 61.2);
    CHECK(def.loss.lambda1 == 1.0);
    CHECK(def.loss.lambda2 == 0.5);
    CHECK(def.loss.lambda3 == 1.0);
    def.validate();

    const auto dir = temp_dir("cfg");
    {
        std::ofstream out(dir / "cfg.json");
        out << R"({"version":1,"alpha":120.0,"bins":32,"mu":0.1,)"
            << R"("position_range":{"x":[-10,10],"y":[-20,20],"z":[-3,3]}})";
    }
    const PipelineConfig cfg = load_pipeline_config((dir / "cfg.json").string());
    CHECK(cfg.csdp.alpha == 120.0);
    CHECK(cfg.csdp.bins == 32);
    CHECK(cfg.csdp.mu == 0.1);
    CHECK(cfg.csdp.beta == 2.0);  // untouched default
    CHECK(cfg.position.x.lo == -10.0);
    CHECK(cfg.position.z.hi == 3.0);

    {
        std::ofstream out(dir / "unknown.json");
        out << R"({"version":1,"alhpa":120.0})";
    }
    CHECK_THROWS_AS(load_pipeline_config((dir / "unknown.json").string()), ValidationError);

    {
        std::ofstream out(dir / "bad.json");
        out << R"({"version":1,"mu":0.9})";
    }
    CHECK_THROWS_AS(load_pipeline_config((dir / "bad.json").string()), ValidationError);

    // Serialization is stable and re-loadable.
    const std::string dumped = pipeline_config_json(cfg);
    {
        std::ofstream out(dir / "redump.json");
        out << dumped;
    }
    const PipelineConfig again = load_pipeline_config((dir / "redump.json").string());
    CHECK(again.csdp.alpha == cfg.csdp.alpha);
    CHECK(pipeline_config_json(again) == dumped);
    fs::remove_all(dir);
}

TEST_CASE("synthetic generators are deterministic and structurally sound") {
    SynthSpec spec;
    spec.height = 8;
    spec.width = 16;
    spec.channels = 6;
    spec.levels = 3;
    spec.cameras = 2;
    spec.seed = 9;
    const RigFeatures a = synth_rig_features(spec, 4.0);
    const RigFeatures b = synth_rig_features(spec, 4.0);
    REQUIRE(a.levels.size() == 3);
    CHECK(a.levels[0].views[0].height() == 2);  // coarsest quarters the finest
    CHECK(a.levels[0].zeta == 16.0);
    CHECK(a.levels[2].views[0].width() == 16);
    CHECK(a.levels[2].zeta == 4.0);
    CHECK(oracle::max_abs_diff(a.levels[1].views[1].tensor(),
                               b.levels[1].views[1].tensor()) == 0.0);

    SynthSpec bad = spec;
    bad.width = 18;  // not divisible by 2^(levels-1)
    CHECK_THROWS_AS(synth_rig_features(bad, 4.0), ValidationError);

    const auto cloud1 = synth_cloud(500, 3);
    const auto cloud2 = synth_cloud(500, 3);
    REQUIRE(cloud1.size() == 500);
    for (std::size_t i = 0; i < 500; ++i) {
        CHECK(cloud1[i].x == cloud2[i].x);
        const double rho = std::sqrt(cloud1[i].x * cloud1[i].x + cloud1[i].y * cloud1[i].y);
        CHECK(rho >= 3.9);
        CHECK(rho <= 55.1);
    }
}
