#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "freqpde/tensor.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path work_root() {
    static const fs::path root = [] {
        fs::path p(FREQPDE_TEST_TMP);
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = work_root() / tag;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunResult run(const std::string& args, const fs::path& dir, const std::string& env = "") {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = "cd '" + dir.string() + "' && " + env + (env.empty() ? "" : " ") +
                            "'" + std::string(FREQPDE_CLI_PATH) + "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    r.out = slurp(out);
    r.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return r;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("cli: full stage chain succeeds and chains through files") {
    const fs::path dir = fresh_dir("chain");
    const std::string synth = "--synth 8 24 12 2 2 5";

    const RunResult fspe = run("fspe " + synth + " --out s1 --cloud-points 4000", dir);
    REQUIRE(fspe.code == 0);
    const json jf = json::parse(fspe.out);
    CHECK(jf.at("version") == 1);
    CHECK(jf.at("levels").size() == 2);
    CHECK(fs::exists(dir / "s1/fused.json"));
    CHECK(fs::exists(dir / "s1/calib.json"));
    CHECK(fs::exists(dir / "s1/cloud.csv"));
    CHECK(fs::exists(dir / "s1/pseudo_l0_cam0.fpde"));

    const RunResult depth =
        run("depth --features s1/fused.json --calib s1/calib.json --seed 5 --out s2", dir);
    REQUIRE(depth.code == 0);
    CHECK(fs::exists(dir / "s2/depth.json"));
    CHECK(fs::exists(dir / "s2/depth_l1_cam1.fpde"));

    const RunResult pe = run("pe --depth s2/depth.json --calib s1/calib.json "
                             "--features s1/fused.json --seed 5 --out s3",
                             dir);
    REQUIRE(pe.code == 0);
    CHECK(fs::exists(dir / "s3/pe_cam0.fpde"));
    CHECK(fs::exists(dir / "s3/f3d_l1_cam0.fpde"));   // finest only by default
    CHECK_FALSE(fs::exists(dir / "s3/f3d_l0_cam0.fpde"));

    const RunResult pe_all = run("pe --depth s2/depth.json --calib s1/calib.json "
                                 "--features s1/fused.json --seed 5 --out s3all "
                                 "--apply-levels all",
                                 dir);
    REQUIRE(pe_all.code == 0);
    CHECK(fs::exists(dir / "s3all/f3d_l0_cam1.fpde"));
    CHECK(fs::exists(dir / "s3all/f3d_l1_cam1.fpde"));

    const RunResult project =
        run("project --cloud s1/cloud.csv --calib s1/calib.json --out s4 --levels 2", dir);
    REQUIRE(project.code == 0);
    CHECK(fs::exists(dir / "s4/target_cam0_z8.json"));
    CHECK(fs::exists(dir / "s4/target_cam1_z4.json"));
    CHECK(fs::exists(dir / "s4/coverage.json"));

    const RunResult loss = run("loss --pred s2/depth_l0_cam0.fpde --target s4/target_cam0_z8.json "
                               "--pseudo s1/pseudo_l0_cam0.fpde "
                               "--pred s2/depth_l1_cam0.fpde --target s4/target_cam0_z4.json "
                               "--pseudo s1/pseudo_l1_cam0.fpde --mean --out s5.json",
                               dir);
    REQUIRE(loss.code == 0);
    const json jl = json::parse(loss.out);
    CHECK(jl.at("levels").size() == 2);
    CHECK(jl.at("mean_l_depth").get<double>() > 0.0);
    CHECK(json::parse(file_bytes(dir / "s5.json")) == jl);

    const RunResult grad = run("loss --pred s2/depth_l0_cam0.fpde "
                               "--target s4/target_cam0_z8.json "
                               "--pseudo s1/pseudo_l0_cam0.fpde --grad-check",
                               dir);
    REQUIRE(grad.code == 0);
    const json jg = json::parse(grad.out);
    CHECK(jg.at("grad_pass") == true);
    CHECK(jg.at("grad_max_rel_error").get<double>() < 1e-3);
}

TEST_CASE("cli: reruns are byte-identical, including across thread counts") {
    const fs::path dir = fresh_dir("determinism");
    const std::string synth = "--synth 8 16 12 2 2 11";

    // Two roots with identical relative layouts so summaries are comparable.
    const fs::path p1 = dir / "t1";
    const fs::path p2 = dir / "t4";
    fs::create_directories(p1);
    fs::create_directories(p2);

    const RunResult a = run("fspe " + synth + " --out in --cloud-points 2000", p1,
                            "FREQPDE_THREADS=1");
    const RunResult b = run("fspe " + synth + " --out in --cloud-points 2000", p2,
                            "FREQPDE_THREADS=4");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
    CHECK(file_bytes(p1 / "in/fused_l1_cam0.fpde") == file_bytes(p2 / "in/fused_l1_cam0.fpde"));
    CHECK(file_bytes(p1 / "in/fused.json") == file_bytes(p2 / "in/fused.json"));
    CHECK(file_bytes(p1 / "in/cloud.csv") == file_bytes(p2 / "in/cloud.csv"));

    const RunResult da = run("depth --features in/fused.json --calib in/calib.json --seed 11 "
                             "--out out",
                             p1, "FREQPDE_THREADS=1");
    const RunResult db = run("depth --features in/fused.json --calib in/calib.json --seed 11 "
                             "--out out",
                             p2, "FREQPDE_THREADS=3");
    REQUIRE(da.code == 0);
    REQUIRE(db.code == 0);
    CHECK(file_bytes(p1 / "out/depth_l1_cam1.fpde") == file_bytes(p2 / "out/depth_l1_cam1.fpde"));
    CHECK(file_bytes(p1 / "out/depth.json") == file_bytes(p2 / "out/depth.json"));
    CHECK(da.out == db.out);
}

TEST_CASE("cli: config file is honored and flags win") {
    const fs::path dir = fresh_dir("config");
    {
        std::ofstream out(dir / "cfg.json");
        out << R"({"version":1,"lambda_m":0.25,"lambda2":0.125})";
    }
    {
        // Tiny valid pred/target pair.
        const RunResult gen = run("fspe --synth 8 16 12 2 2 3 --out g --cloud-points 2000", dir);
        REQUIRE(gen.code == 0);
        const RunResult d = run("depth --features g/fused.json --calib g/calib.json --seed 3 "
                                "--out gd",
                                dir);
        REQUIRE(d.code == 0);
    }
    const RunResult from_file = run("loss --config cfg.json --pred gd/depth_l0_cam0.fpde "
                                    "--pseudo g/pseudo_l0_cam0.fpde --lambda-s 0",
                                    dir);
    REQUIRE(from_file.code == 0);
    const json j1 = json::parse(from_file.out);
    CHECK(j1.at("lambda_m") == 0.25);
    CHECK(j1.at("lambda2") == 0.125);
    CHECK(j1.at("lambda_s") == 0.0);  // flag overrides the default

    const RunResult flag_wins = run("loss --config cfg.json --pred gd/depth_l0_cam0.fpde "
                                    "--pseudo g/pseudo_l0_cam0.fpde --lambda-s 0 --lambda-m 0.5",
                                    dir);
    REQUIRE(flag_wins.code == 0);
    CHECK(json::parse(flag_wins.out).at("lambda_m") == 0.5);
}

TEST_CASE("cli: failure modes map to documented exit codes") {
    const fs::path dir = fresh_dir("errors");

    // Validation problems (bad files, bad flags, impossible config) -> 1.
    CHECK(run("depth --features missing.json --calib also_missing.json", dir).code == 1);
    CHECK(run("fspe --synth 8 16 12 2 2 3 --out x --d-min 10 --d-max 2", dir).code == 1);
    {
        std::ofstream out(dir / "bad.json");
        out << R"({"version":1,"not_a_key":3})";
    }
    CHECK(run("fspe --config bad.json --synth 8 16 12 2 2 3 --out y", dir).code == 1);
    const RunResult junk = run("depth --features missing.json --calib c.json", dir);
    CHECK(junk.code == 1);
    CHECK(junk.err.rfind("error:", 0) == 0);  // single-line machine-parsable

    // Numerically degenerate input -> 2.
    freqpde::Tensor flat({2, 3}, std::vector<float>(6, 2.0f));
    freqpde::write_tensor_file((dir / "flat.fpde").string(), flat);
    const RunResult degen =
        run("loss --pred flat.fpde --pseudo flat.fpde --lambda-s 0", dir);
    CHECK(degen.code == 2);
    CHECK(degen.err.rfind("error: degenerate input", 0) == 0);

    // No subcommand -> parse error -> 1.
    CHECK(run("", dir).code == 1);
    CHECK(run("frobnicate", dir).code == 1);
}

TEST_CASE("cli: selftest reports one line per property and passes") {
    const fs::path dir = fresh_dir("selftest");
    const RunResult r = run("selftest --seed 2", dir);
    REQUIRE(r.code == 0);
    std::size_t pass_lines = 0;
    std::istringstream lines(r.out);
    std::string line;
    bool summary_seen = false;
    while (std::getline(lines, line)) {
        if (line.rfind("PASS ", 0) == 0) ++pass_lines;
        if (line.rfind("FAIL ", 0) == 0) FAIL(("selftest property failed: " + line));
        if (line.rfind("selftest:", 0) == 0) summary_seen = true;
    }
    CHECK(pass_lines >= 20);
    CHECK(summary_seen);
}
