// freqpde: stage-by-stage pipeline driver.
// Exit codes: 0 success, 1 validation/shape/file error, 2 numerical degeneracy.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freqpde/config.hpp"
#include "freqpde/csdp.hpp"
#include "freqpde/fspe.hpp"
#include "freqpde/io.hpp"
#include "freqpde/pde.hpp"
#include "freqpde/selftest.hpp"
#include "freqpde/supervision.hpp"
#include "freqpde/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace freqpde;

namespace {

// Binds config-file loading plus flag overrides to a subcommand; flags win.
class ConfigBinder {
public:
    void attach(CLI::App* cmd) {
        cmd->add_option("--config", path_, "pipeline config JSON file");
        o_alpha_ = cmd->add_option("--alpha", v_.csdp.alpha, "attractor strength");
        o_beta_ = cmd->add_option("--beta", v_.csdp.beta, "attractor exponent");
        o_omega_ = cmd->add_option("--omega", v_.csdp.omega, "depth fusion weight");
        o_mu_ = cmd->add_option("--mu", v_.csdp.mu, "width-attention mask ratio");
        o_attr_ = cmd->add_option("--attractors", v_.csdp.attractors, "attractors per pixel");
        o_bins_ = cmd->add_option("--bins", v_.csdp.bins, "depth bins per pixel");
        o_dmin_ = cmd->add_option("--d-min", v_.csdp.d_min, "minimum depth, meters");
        o_dmax_ = cmd->add_option("--d-max", v_.csdp.d_max, "maximum depth, meters");
        o_pec_ = cmd->add_option("--pe-channels", v_.pe_channels, "embedding channels");
        o_levels_ = cmd->add_option("--levels", v_.levels, "pyramid level count");
        o_cams_ = cmd->add_option("--cameras", v_.cameras, "rig camera count");
        o_seed_ = cmd->add_option("--seed", v_.seed, "weight seed");
        o_ls_ = cmd->add_option("--lambda-s", v_.loss.lambda_s, "metric loss weight");
        o_lm_ = cmd->add_option("--lambda-m", v_.loss.lambda_m, "distribution loss weight");
        o_l1_ = cmd->add_option("--lambda1", v_.loss.lambda1, "depth loss weight");
        o_l2_ = cmd->add_option("--lambda2", v_.loss.lambda2, "sampling loss weight");
        o_l3_ = cmd->add_option("--lambda3", v_.loss.lambda3, "regularization loss weight");
        o_zeta_ = cmd->add_option("--zeta-finest", v_.zeta_finest,
                                  "downsampling factor of the finest level");
        o_temp_ = cmd->add_option("--temperature", v_.temperature, "sine frequency base");
    }

    PipelineConfig resolve() const {
        PipelineConfig cfg = path_.empty() ? PipelineConfig{} : load_pipeline_config(path_);
        if (o_alpha_->count()) cfg.csdp.alpha = v_.csdp.alpha;
        if (o_beta_->count()) cfg.csdp.beta = v_.csdp.beta;
        if (o_omega_->count()) cfg.csdp.omega = v_.csdp.omega;
        if (o_mu_->count()) cfg.csdp.mu = v_.csdp.mu;
        if (o_attr_->count()) cfg.csdp.attractors = v_.csdp.attractors;
        if (o_bins_->count()) cfg.csdp.bins = v_.csdp.bins;
        if (o_dmin_->count()) cfg.csdp.d_min = v_.csdp.d_min;
        if (o_dmax_->count()) cfg.csdp.d_max = v_.csdp.d_max;
        if (o_pec_->count()) cfg.pe_channels = v_.pe_channels;
        if (o_levels_->count()) cfg.levels = v_.levels;
        if (o_cams_->count()) cfg.cameras = v_.cameras;
        if (o_seed_->count()) cfg.seed = v_.seed;
        if (o_ls_->count()) cfg.loss.lambda_s = v_.loss.lambda_s;
        if (o_lm_->count()) cfg.loss.lambda_m = v_.loss.lambda_m;
        if (o_l1_->count()) cfg.loss.lambda1 = v_.loss.lambda1;
        if (o_l2_->count()) cfg.loss.lambda2 = v_.loss.lambda2;
        if (o_l3_->count()) cfg.loss.lambda3 = v_.loss.lambda3;
        if (o_zeta_->count()) cfg.zeta_finest = v_.zeta_finest;
        if (o_temp_->count()) cfg.temperature = v_.temperature;
        cfg.validate();
        return cfg;
    }

private:
    std::string path_;
    PipelineConfig v_;
    CLI::Option *o_alpha_ = nullptr, *o_beta_ = nullptr, *o_omega_ = nullptr, *o_mu_ = nullptr,
                *o_attr_ = nullptr, *o_bins_ = nullptr, *o_dmin_ = nullptr, *o_dmax_ = nullptr,
                *o_pec_ = nullptr, *o_levels_ = nullptr, *o_cams_ = nullptr, *o_seed_ = nullptr,
                *o_ls_ = nullptr, *o_lm_ = nullptr, *o_l1_ = nullptr, *o_l2_ = nullptr,
                *o_l3_ = nullptr, *o_zeta_ = nullptr, *o_temp_ = nullptr;
};

struct SynthArgs {
    std::vector<std::uint64_t> raw;  // H W C levels J seed

    bool given() const { return !raw.empty(); }
    SynthSpec spec() const {
        SynthSpec s;
        s.height = raw[0];
        s.width = raw[1];
        s.channels = raw[2];
        s.levels = raw[3];
        s.cameras = raw[4];
        s.seed = raw[5];
        return s;
    }
};

WeightSet make_weights(const std::string& init, std::uint64_t seed,
                       const std::vector<LayerGeometry>& geometry) {
    if (init == "zero") {
        WeightSet ws(seed, "zero");
        for (const LayerGeometry& g : geometry) ws.insert(g.name, Tensor(g.shape));
        return ws;
    }
    if (init != "seeded") throw ValidationError("unknown --init value: " + init);
    return seeded_init(seed, geometry);
}

std::string trim_number(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
}

void emit(const json& doc) { std::cout << doc.dump(2) << "\n"; }

void write_cloud_csv(const std::string& path, const std::vector<Vec3>& cloud) {
    std::ostringstream ss;
    ss.precision(17);
    for (const Vec3& p : cloud) ss << p.x << "," << p.y << "," << p.z << "\n";
    write_text_file(path, ss.str());
}

// Writes every synthetic artifact downstream stages consume: input feature
// bundle, calibration, cloud, per-level pseudo labels, resolved config.
RigFeatures write_synth_inputs(const SynthSpec& spec, const PipelineConfig& cfg,
                               const std::string& dir, std::size_t cloud_points,
                               json& summary) {
    RigFeatures rig = synth_rig_features(spec, cfg.zeta_finest);
    fs::create_directories(dir);

    const std::size_t native_w =
        static_cast<std::size_t>(std::lround(spec.width * cfg.zeta_finest));
    const std::size_t native_h =
        static_cast<std::size_t>(std::lround(spec.height * cfg.zeta_finest));
    const auto cams = synth_calibration(spec.cameras, native_w, native_h);
    write_calibration_file((fs::path(dir) / "calib.json").string(), cams);
    write_cloud_csv((fs::path(dir) / "cloud.csv").string(), synth_cloud(cloud_points, spec.seed));

    for (std::size_t i = 0; i < rig.levels.size(); ++i) {
        const auto& level = rig.levels[i];
        for (std::size_t j = 0; j < level.views.size(); ++j) {
            const std::string key = "pseudo.l" + std::to_string(i) + ".cam" + std::to_string(j);
            const std::string name =
                "pseudo_l" + std::to_string(i) + "_cam" + std::to_string(j) + ".fpde";
            write_tensor_file((fs::path(dir) / name).string(),
                              synth_pseudo(level.views[j].height(), level.views[j].width(),
                                           spec.seed, key));
        }
    }
    const std::string features = write_rig_bundle(dir, "features", rig);
    write_text_file((fs::path(dir) / "config.json").string(), pipeline_config_json(cfg));
    summary["features"] = features;
    summary["calibration"] = (fs::path(dir) / "calib.json").string();
    summary["cloud"] = (fs::path(dir) / "cloud.csv").string();
    summary["native_width"] = native_w;
    summary["native_height"] = native_h;
    return rig;
}

int cmd_fspe(const ConfigBinder& binder, const SynthArgs& synth, const std::string& features_path,
             const std::string& out_dir, const std::string& init, std::size_t cloud_points) {
    PipelineConfig cfg = binder.resolve();
    json summary;
    summary["version"] = 1;
    summary["command"] = "fspe";

    RigFeatures rig;
    if (synth.given()) {
        SynthSpec spec = synth.spec();
        cfg.levels = spec.levels;
        cfg.cameras = spec.cameras;
        cfg.seed = spec.seed;
        rig = write_synth_inputs(spec, cfg, out_dir, cloud_points, summary);
    } else {
        if (features_path.empty())
            throw ValidationError("fspe needs --features or --synth");
        rig = read_rig_bundle(features_path);
    }
    if (rig.levels.empty()) throw ValidationError("fspe: empty feature bundle");
    const std::size_t channels = rig.levels[0].views[0].channels();
    const WeightSet weights =
        make_weights(init, cfg.seed, fspe_geometry(rig.levels.size(), channels));

    RigFeatures fused;
    fused.levels.resize(rig.levels.size());
    const std::size_t cameras = rig.levels[0].views.size();
    for (std::size_t j = 0; j < cameras; ++j) {
        std::vector<FeatureMap> column;
        for (const RigLevel& level : rig.levels) {
            if (level.views.size() != cameras)
                throw ValidationError("fspe: camera count varies across levels");
            column.push_back(level.views[j]);
        }
        Pyramid p = build_pyramid(column, weights, cfg.zeta_finest);
        for (std::size_t i = 0; i < p.levels.size(); ++i) {
            fused.levels[i].zeta = p.levels[i].zeta;
            fused.levels[i].views.push_back(std::move(p.levels[i].feature));
        }
    }
    const std::string manifest = write_rig_bundle(out_dir, "fused", fused);
    summary["manifest"] = manifest;
    json jl = json::array();
    for (const RigLevel& level : fused.levels)
        jl.push_back({{"height", level.views[0].height()},
                      {"width", level.views[0].width()},
                      {"zeta", level.zeta}});
    summary["levels"] = jl;
    emit(summary);
    return 0;
}

int cmd_depth(const ConfigBinder& binder, const SynthArgs& synth, const std::string& features_path,
              const std::string& calib_path, const std::string& out_dir, const std::string& init,
              std::size_t cloud_points) {
    PipelineConfig cfg = binder.resolve();
    json summary;
    summary["version"] = 1;
    summary["command"] = "depth";

    RigFeatures rig;
    std::vector<CameraModel> cams;
    if (synth.given()) {
        SynthSpec spec = synth.spec();
        cfg.levels = spec.levels;
        cfg.cameras = spec.cameras;
        cfg.seed = spec.seed;
        rig = write_synth_inputs(spec, cfg, out_dir, cloud_points, summary);
        cams = load_calibration_file((fs::path(out_dir) / "calib.json").string());
    } else {
        if (features_path.empty() || calib_path.empty())
            throw ValidationError("depth needs --features and --calib, or --synth");
        rig = read_rig_bundle(features_path);
        cams = load_calibration_file(calib_path);
    }
    if (rig.levels.empty()) throw ValidationError("depth: empty feature bundle");
    const std::size_t channels = rig.levels[0].views[0].channels();
    const WeightSet weights =
        make_weights(init, cfg.seed, csdp_geometry(rig.levels.size(), channels, cfg.csdp));

    const DepthOutputs out = csdp_forward(rig, cams, cfg.csdp, weights);
    DepthBundle bundle;
    bundle.levels = out.levels;
    for (const RigLevel& level : rig.levels) bundle.zetas.push_back(level.zeta);
    const std::string manifest = write_depth_bundle(out_dir, "depth", bundle);
    summary["manifest"] = manifest;
    summary["levels"] = bundle.levels.size();
    summary["cameras"] = bundle.levels[0].size();
    emit(summary);
    return 0;
}

int cmd_pe(const ConfigBinder& binder, const std::string& depth_path,
           const std::string& calib_path, const std::string& features_path,
           const std::string& out_dir, const std::string& init, const std::string& apply_levels) {
    const PipelineConfig cfg = binder.resolve();
    if (apply_levels != "finest" && apply_levels != "all")
        throw ValidationError("--apply-levels must be 'finest' or 'all'");
    const DepthBundle depth = read_depth_bundle(depth_path);
    const std::vector<CameraModel> cams = load_calibration_file(calib_path);
    const std::size_t cameras = depth.levels[0].size();
    if (cams.size() != cameras)
        throw ValidationError("pe: calibration camera count does not match depth maps");

    RigFeatures rig;
    std::size_t channels = cfg.pe_channels;
    if (!features_path.empty()) {
        rig = read_rig_bundle(features_path);
        if (rig.levels.size() != depth.levels.size())
            throw ValidationError("pe: feature and depth level counts disagree");
        channels = rig.levels[0].views[0].channels();
    }
    if (channels == 0 || channels % 6 != 0)
        throw ValidationError("pe: channel count must be divisible by 6");
    const WeightSet weights = make_weights(init, cfg.seed, pde_geometry(channels));

    fs::create_directories(out_dir);
    json files = json::array();
    for (std::size_t j = 0; j < cameras; ++j) {
        std::vector<DepthMap> levels_j;
        for (const auto& level : depth.levels) levels_j.push_back(level[j]);
        const PositionalEmbedding pe =
            depth_to_pe(levels_j, cams[j], channels, cfg.position, weights, "pde.mix",
                        cfg.temperature);
        const std::string pe_name = "pe_cam" + std::to_string(j) + ".fpde";
        write_tensor_file((fs::path(out_dir) / pe_name).string(), pe.values);
        files.push_back(pe_name);

        if (!rig.levels.empty()) {
            if (apply_levels == "finest") {
                const FeatureMap& f = rig.levels.back().views[j];
                if (f.height() != pe.values.extent(1) || f.width() != pe.values.extent(2))
                    throw ValidationError("pe: finest feature grid does not match the embedding");
                const FeatureMap f3d = fuse_features_pe(f, pe);
                const std::string name = "f3d_l" + std::to_string(rig.levels.size() - 1) +
                                         "_cam" + std::to_string(j) + ".fpde";
                write_tensor_file((fs::path(out_dir) / name).string(), f3d.tensor());
                files.push_back(name);
            } else {
                for (std::size_t i = 0; i < rig.levels.size(); ++i) {
                    const PositionalEmbedding pe_i =
                        depth_to_pe({depth.levels[i][j]}, cams[j], channels, cfg.position,
                                    weights, "pde.mix", cfg.temperature);
                    const FeatureMap f3d = fuse_features_pe(rig.levels[i].views[j], pe_i);
                    const std::string name = "f3d_l" + std::to_string(i) + "_cam" +
                                             std::to_string(j) + ".fpde";
                    write_tensor_file((fs::path(out_dir) / name).string(), f3d.tensor());
                    files.push_back(name);
                }
            }
        }
    }
    json summary;
    summary["version"] = 1;
    summary["command"] = "pe";
    summary["channels"] = channels;
    summary["files"] = files;
    write_text_file((fs::path(out_dir) / "pe.json").string(), summary.dump(2) + "\n");
    emit(summary);
    return 0;
}

json coverage_json(const CoverageReport& report) {
    json entries = json::array();
    for (const CoverageEntry& e : report.entries)
        entries.push_back({{"width", e.resolution.width},
                           {"height", e.resolution.height},
                           {"zeta", e.zeta},
                           {"coverage", e.coverage}});
    json doc;
    doc["version"] = 1;
    doc["entries"] = entries;
    return doc;
}

std::vector<Resolution> parse_resolutions(const std::vector<std::string>& specs,
                                          const CameraModel& native) {
    std::vector<Resolution> out;
    if (specs.empty()) {
        out.push_back({native.width(), native.height()});
        out.push_back({native.width() * 2, native.height() * 2});
        return out;
    }
    for (const std::string& s : specs) {
        const auto sep = s.find('x');
        if (sep == std::string::npos)
            throw ValidationError("resolution must look like WIDTHxHEIGHT: " + s);
        try {
            const std::size_t w = std::stoull(s.substr(0, sep));
            const std::size_t h = std::stoull(s.substr(sep + 1));
            out.push_back({w, h});
        } catch (const std::exception&) {
            throw ValidationError("resolution must look like WIDTHxHEIGHT: " + s);
        }
    }
    return out;
}

int cmd_project(const ConfigBinder& binder, const std::string& cloud_path,
                const std::string& calib_path, const std::string& out_dir,
                std::vector<double> target_zetas, const std::vector<std::string>& res_specs,
                std::vector<double> zetas) {
    const PipelineConfig cfg = binder.resolve();
    const std::vector<Vec3> cloud = load_cloud_csv(cloud_path);
    const std::vector<CameraModel> cams = load_calibration_file(calib_path);
    fs::create_directories(out_dir);

    if (target_zetas.empty())
        for (std::size_t i = 0; i < cfg.levels; ++i)
            target_zetas.push_back(cfg.zeta_finest *
                                   static_cast<double>(std::size_t{1} << (cfg.levels - 1 - i)));
    if (zetas.empty()) zetas = {4.0, 8.0, 16.0};

    json targets = json::array();
    for (std::size_t j = 0; j < cams.size(); ++j) {
        for (double z : target_zetas) {
            if (!(z >= 1.0)) throw ValidationError("target zeta must be >= 1");
            const std::size_t gh = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::floor(cams[j].height() / z)));
            const std::size_t gw = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::floor(cams[j].width() / z)));
            const SparseDepthTarget t = lidar_to_sparse_depth(cloud, cams[j], gh, gw, z);
            const std::string name =
                "target_cam" + std::to_string(j) + "_z" + trim_number(z) + ".json";
            write_sparse_target((fs::path(out_dir) / name).string(), t);
            targets.push_back({{"file", name},
                               {"camera", j},
                               {"zeta", z},
                               {"samples", t.samples.size()}});
        }
    }

    const std::vector<Resolution> resolutions = parse_resolutions(res_specs, cams[0]);
    const CoverageReport report = coverage_stats(cloud, cams, resolutions, zetas);
    const json cov = coverage_json(report);
    write_text_file((fs::path(out_dir) / "coverage.json").string(), cov.dump(2) + "\n");

    json summary;
    summary["version"] = 1;
    summary["command"] = "project";
    summary["points"] = cloud.size();
    summary["targets"] = targets;
    summary["coverage"] = cov["entries"];
    emit(summary);
    return 0;
}

int cmd_coverage(const std::string& cloud_path, const std::string& calib_path,
                 const std::string& out_path, const std::vector<std::string>& res_specs,
                 std::vector<double> zetas) {
    const std::vector<Vec3> cloud = load_cloud_csv(cloud_path);
    const std::vector<CameraModel> cams = load_calibration_file(calib_path);
    if (zetas.empty()) zetas = {4.0, 8.0, 16.0};
    const std::vector<Resolution> resolutions = parse_resolutions(res_specs, cams[0]);
    const json cov = coverage_json(coverage_stats(cloud, cams, resolutions, zetas));
    if (!out_path.empty()) write_text_file(out_path, cov.dump(2) + "\n");
    emit(cov);
    return 0;
}

// Double-precision reference loss for --grad-check, following the documented
// formulas directly.
double reference_loss(const std::vector<double>& depth, std::size_t h, std::size_t w,
                      const SparseDepthTarget* target, const std::vector<double>* pseudo,
                      double lambda_s, double lambda_m) {
    double total = 0.0;
    if (lambda_s != 0.0) {
        double l = 0.0;
        for (const SparseDepthSample& s : target->samples) {
            const double x = depth[s.v * w + s.u] - static_cast<double>(s.depth);
            l += std::abs(x) < 1.0 ? 0.5 * x * x : std::abs(x) - 0.5;
        }
        total += lambda_s * l / static_cast<double>(target->samples.size());
    }
    if (lambda_m != 0.0) {
        const std::size_t n = h * w;
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = 1.0 / depth[i];
        double mean = 0.0;
        for (double v : r) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : r) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        double l = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = (r[i] - mean) / sd;
            l += (z - (*pseudo)[i]) * (z - (*pseudo)[i]);
        }
        total += lambda_m * l / static_cast<double>(n);
    }
    return total;
}

int cmd_loss(const ConfigBinder& binder, const std::vector<std::string>& pred_paths,
             const std::vector<std::string>& target_paths,
             const std::vector<std::string>& pseudo_paths, bool grad_check, bool mean_flag,
             double l_samp, double l_reg, const std::string& out_path) {
    const PipelineConfig cfg = binder.resolve();
    const double ls = cfg.loss.lambda_s;
    const double lm = cfg.loss.lambda_m;
    if (pred_paths.empty()) throw ValidationError("loss needs at least one --pred");
    if (ls != 0.0 && target_paths.size() != pred_paths.size())
        throw ValidationError("loss: lambda_s > 0 needs one --target per --pred");
    if (lm != 0.0 && pseudo_paths.size() != pred_paths.size())
        throw ValidationError("loss: lambda_m > 0 needs one --pseudo per --pred");

    json levels = json::array();
    double depth_sum = 0.0;
    double worst_grad = 0.0;
    for (std::size_t i = 0; i < pred_paths.size(); ++i) {
        Tensor pred_t = read_tensor_file(pred_paths[i]);
        if (pred_t.rank() != 2) throw ValidationError("prediction must be H x W: " + pred_paths[i]);
        const DepthMap pred(std::move(pred_t));

        SparseDepthTarget target;
        const SparseDepthTarget* target_ptr = nullptr;
        if (ls != 0.0) {
            target = read_sparse_target(target_paths[i]);
            target_ptr = &target;
        }
        RelDepthMap pseudo;
        const RelDepthMap* pseudo_ptr = nullptr;
        if (lm != 0.0) {
            pseudo = normalize_relative(read_tensor_file(pseudo_paths[i]));
            pseudo_ptr = &pseudo;
        }

        const LossReport rep = hybrid_depth_loss(pred, target_ptr, pseudo_ptr, ls, lm);
        const double lt = total_loss(rep.l_depth, l_samp, l_reg, cfg.loss.lambda1,
                                     cfg.loss.lambda2, cfg.loss.lambda3);
        depth_sum += rep.l_depth;
        json jl;
        jl["pred"] = pred_paths[i];
        jl["l_s"] = rep.l_s;
        jl["l_m"] = rep.l_m;
        jl["l_depth"] = rep.l_depth;
        jl["l_total"] = lt;

        if (grad_check) {
            const std::size_t h = pred.height(), w = pred.width(), n = h * w;
            std::vector<double> depth(n);
            for (std::size_t p = 0; p < n; ++p)
                depth[p] = static_cast<double>(pred.tensor()[p]);
            std::vector<double> pseudo_d;
            if (pseudo_ptr) {
                pseudo_d.resize(n);
                for (std::size_t p = 0; p < n; ++p)
                    pseudo_d[p] = static_cast<double>(pseudo[p]);
            }
            const Tensor grad = depth_loss_grad(pred, target_ptr, pseudo_ptr, ls, lm);
            const double hstep = 1e-3;
            double max_rel = 0.0;
            for (std::size_t p = 0; p < n; ++p) {
                std::vector<double> up = depth, down = depth;
                up[p] += hstep;
                down[p] -= hstep;
                const double fd =
                    (reference_loss(up, h, w, target_ptr, pseudo_ptr ? &pseudo_d : nullptr, ls,
                                    lm) -
                     reference_loss(down, h, w, target_ptr, pseudo_ptr ? &pseudo_d : nullptr, ls,
                                    lm)) /
                    (2.0 * hstep);
                const double rel = std::abs(static_cast<double>(grad[p]) - fd) /
                                   std::max(std::abs(fd), 1e-6);
                max_rel = std::max(max_rel, rel);
            }
            jl["grad_max_rel_error"] = max_rel;
            jl["grad_pass"] = max_rel < 1e-3;
            worst_grad = std::max(worst_grad, max_rel);
        }
        levels.push_back(std::move(jl));
    }

    json doc;
    doc["version"] = 1;
    doc["command"] = "loss";
    doc["lambda_s"] = ls;
    doc["lambda_m"] = lm;
    doc["lambda1"] = cfg.loss.lambda1;
    doc["lambda2"] = cfg.loss.lambda2;
    doc["lambda3"] = cfg.loss.lambda3;
    doc["l_samp"] = l_samp;
    doc["l_reg"] = l_reg;
    doc["levels"] = levels;
    if (mean_flag) doc["mean_l_depth"] = depth_sum / static_cast<double>(pred_paths.size());
    if (grad_check) {
        doc["grad_max_rel_error"] = worst_grad;
        doc["grad_pass"] = worst_grad < 1e-3;
    }
    if (!out_path.empty()) write_text_file(out_path, doc.dump(2) + "\n");
    emit(doc);
    if (grad_check && worst_grad >= 1e-3)
        throw DegenerateInputError("gradient check failed: max relative error " +
                                   std::to_string(worst_grad));
    return 0;
}

int cmd_selftest(std::uint64_t seed) {
    const std::vector<PropertyResult> results = run_selftest(seed);
    std::size_t passed = 0;
    for (const PropertyResult& r : results) {
        if (r.pass) {
            ++passed;
            std::cout << "PASS " << r.name << "\n";
        } else {
            std::cout << "FAIL " << r.name << ": " << r.detail << "\n";
        }
    }
    std::cout << "selftest: " << passed << "/" << results.size() << " properties passed (seed "
              << seed << ")\n";
    return passed == results.size() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frequency-aware pyramid fusion and cross-view depth pipeline"};
    app.require_subcommand(1);

    // fspe
    auto* fspe = app.add_subcommand("fspe", "fuse a feature pyramid");
    ConfigBinder fspe_cfg;
    fspe_cfg.attach(fspe);
    SynthArgs fspe_synth;
    fspe->add_option("--synth", fspe_synth.raw, "generate inputs: H W C levels J seed")
        ->expected(6);
    std::string fspe_features, fspe_out = "out", fspe_init = "seeded";
    std::size_t fspe_cloud_points = 20000;
    fspe->add_option("--features", fspe_features, "input rig bundle manifest");
    fspe->add_option("--out", fspe_out, "output directory");
    fspe->add_option("--init", fspe_init, "weight init: seeded|zero");
    fspe->add_option("--cloud-points", fspe_cloud_points, "synthetic cloud size");

    // depth
    auto* depth = app.add_subcommand("depth", "predict per-level per-camera depth");
    ConfigBinder depth_cfg;
    depth_cfg.attach(depth);
    SynthArgs depth_synth;
    depth->add_option("--synth", depth_synth.raw, "generate inputs: H W C levels J seed")
        ->expected(6);
    std::string depth_features, depth_calib, depth_out = "out", depth_init = "seeded";
    std::size_t depth_cloud_points = 20000;
    depth->add_option("--features", depth_features, "fused rig bundle manifest");
    depth->add_option("--calib", depth_calib, "calibration JSON");
    depth->add_option("--out", depth_out, "output directory");
    depth->add_option("--init", depth_init, "weight init: seeded|zero");
    depth->add_option("--cloud-points", depth_cloud_points, "synthetic cloud size");

    // pe
    auto* pe = app.add_subcommand("pe", "positional depth embedding and 3D features");
    ConfigBinder pe_cfg;
    pe_cfg.attach(pe);
    std::string pe_depth, pe_calib, pe_features, pe_out = "out", pe_init = "seeded";
    std::string pe_apply = "finest";
    pe->add_option("--depth", pe_depth, "depth bundle manifest")->required();
    pe->add_option("--calib", pe_calib, "calibration JSON")->required();
    pe->add_option("--features", pe_features, "feature bundle to fuse with the embedding");
    pe->add_option("--out", pe_out, "output directory");
    pe->add_option("--init", pe_init, "weight init: seeded|zero");
    pe->add_option("--apply-levels", pe_apply, "fuse embedding into: finest|all");

    // project
    auto* project = app.add_subcommand("project", "project a cloud to sparse depth targets");
    ConfigBinder project_cfg;
    project_cfg.attach(project);
    std::string project_cloud, project_calib, project_out = "out";
    std::vector<double> project_target_zetas, project_zetas;
    std::vector<std::string> project_res;
    project->add_option("--cloud", project_cloud, "point cloud CSV")->required();
    project->add_option("--calib", project_calib, "calibration JSON")->required();
    project->add_option("--out", project_out, "output directory");
    project->add_option("--target-zeta", project_target_zetas, "grid factors for sparse targets");
    project->add_option("--res", project_res, "coverage resolutions, WIDTHxHEIGHT");
    project->add_option("--zetas", project_zetas, "coverage downsampling factors");

    // coverage
    auto* coverage = app.add_subcommand("coverage", "coverage statistics only");
    std::string cov_cloud, cov_calib, cov_out;
    std::vector<std::string> cov_res;
    std::vector<double> cov_zetas;
    coverage->add_option("--cloud", cov_cloud, "point cloud CSV")->required();
    coverage->add_option("--calib", cov_calib, "calibration JSON")->required();
    coverage->add_option("--out", cov_out, "coverage JSON output path");
    coverage->add_option("--res", cov_res, "resolutions, WIDTHxHEIGHT");
    coverage->add_option("--zetas", cov_zetas, "downsampling factors");

    // loss
    auto* loss = app.add_subcommand("loss", "hybrid depth loss and gradient check");
    ConfigBinder loss_cfg;
    loss_cfg.attach(loss);
    std::vector<std::string> loss_preds, loss_targets, loss_pseudos;
    bool loss_grad_check = false, loss_mean = false;
    double loss_l_samp = 0.0, loss_l_reg = 0.0;
    std::string loss_out;
    loss->add_option("--pred", loss_preds, "predicted depth tensor file (repeatable)");
    loss->add_option("--target", loss_targets, "sparse target JSON (repeatable)");
    loss->add_option("--pseudo", loss_pseudos, "raw pseudo relative-depth tensor (repeatable)");
    loss->add_flag("--grad-check", loss_grad_check, "verify the analytic gradient");
    loss->add_flag("--mean", loss_mean, "also report the mean depth loss across levels");
    loss->add_option("--l-samp", loss_l_samp, "external sampling loss term");
    loss->add_option("--l-reg", loss_l_reg, "external regularization loss term");
    loss->add_option("--out", loss_out, "loss report JSON output path");

    // selftest
    auto* selftest = app.add_subcommand("selftest", "run the invariant suite");
    std::uint64_t selftest_seed = 1;
    selftest->add_option("--seed", selftest_seed, "instance seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (fspe->parsed())
            return cmd_fspe(fspe_cfg, fspe_synth, fspe_features, fspe_out, fspe_init,
                            fspe_cloud_points);
        if (depth->parsed())
            return cmd_depth(depth_cfg, depth_synth, depth_features, depth_calib, depth_out,
                             depth_init, depth_cloud_points);
        if (pe->parsed())
            return cmd_pe(pe_cfg, pe_depth, pe_calib, pe_features, pe_out, pe_init, pe_apply);
        if (project->parsed())
            return cmd_project(project_cfg, project_cloud, project_calib, project_out,
                               project_target_zetas, project_res, project_zetas);
        if (coverage->parsed())
            return cmd_coverage(cov_cloud, cov_calib, cov_out, cov_res, cov_zetas);
        if (loss->parsed())
            return cmd_loss(loss_cfg, loss_preds, loss_targets, loss_pseudos, loss_grad_check,
                            loss_mean, loss_l_samp, loss_l_reg, loss_out);
        if (selftest->parsed()) return cmd_selftest(selftest_seed);
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const DegenerateInputError& e) {
        std::cerr << "error: degenerate input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
