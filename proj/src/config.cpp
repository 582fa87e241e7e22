#include "freqpde/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace freqpde {

namespace {

using nlohmann::json;

AxisRange axis_from(const json& j, const char* name) {
    if (!j.is_array() || j.size() != 2)
        throw ValidationError(std::string("config: ") + name + " must be [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void PipelineConfig::validate() const {
    csdp.validate();
    position.validate();
    if (pe_channels == 0 || pe_channels % 6 != 0)
        throw ValidationError("config: pe_channels must be divisible by 6");
    if (levels == 0) throw ValidationError("config: need at least one pyramid level");
    if (cameras < 2) throw ValidationError("config: rig needs at least two cameras");
    if (!(zeta_finest >= 1.0)) throw ValidationError("config: zeta_finest must be >= 1");
    if (!(temperature > 0.0)) throw ValidationError("config: temperature must be positive");
    if (loss.lambda_s < 0.0 || loss.lambda_m < 0.0)
        throw ValidationError("config: loss weights must be non-negative");
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("config JSON parse error in " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config must be a JSON object: " + path);

    static const std::set<std::string> known = {
        "version",    "alpha",      "beta",     "omega",       "mu",          "attractors",
        "bins",       "d_min",      "d_max",    "pe_channels", "position_range", "levels",
        "cameras",    "seed",       "lambda_s", "lambda_m",    "lambda1",     "lambda2",
        "lambda3",    "zeta_finest", "temperature"};
    for (const auto& [key, value] : doc.items())
        if (!known.count(key)) throw ValidationError("config: unknown key '" + key + "'");

    PipelineConfig cfg;
    try {
        if (doc.contains("alpha")) cfg.csdp.alpha = doc["alpha"].get<double>();
        if (doc.contains("beta")) cfg.csdp.beta = doc["beta"].get<double>();
        if (doc.contains("omega")) cfg.csdp.omega = doc["omega"].get<double>();
        if (doc.contains("mu")) cfg.csdp.mu = doc["mu"].get<double>();
        if (doc.contains("attractors")) cfg.csdp.attractors = doc["attractors"].get<std::size_t>();
        if (doc.contains("bins")) cfg.csdp.bins = doc["bins"].get<std::size_t>();
        if (doc.contains("d_min")) cfg.csdp.d_min = doc["d_min"].get<double>();
        if (doc.contains("d_max")) cfg.csdp.d_max = doc["d_max"].get<double>();
        if (doc.contains("pe_channels")) cfg.pe_channels = doc["pe_channels"].get<std::size_t>();
        if (doc.contains("position_range")) {
            const json& pr = doc["position_range"];
            if (pr.contains("x")) cfg.position.x = axis_from(pr["x"], "position_range.x");
            if (pr.contains("y")) cfg.position.y = axis_from(pr["y"], "position_range.y");
            if (pr.contains("z")) cfg.position.z = axis_from(pr["z"], "position_range.z");
        }
        if (doc.contains("levels")) cfg.levels = doc["levels"].get<std::size_t>();
        if (doc.contains("cameras")) cfg.cameras = doc["cameras"].get<std::size_t>();
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("lambda_s")) cfg.loss.lambda_s = doc["lambda_s"].get<double>();
        if (doc.contains("lambda_m")) cfg.loss.lambda_m = doc["lambda_m"].get<double>();
        if (doc.contains("lambda1")) cfg.loss.lambda1 = doc["lambda1"].get<double>();
        if (doc.contains("lambda2")) cfg.loss.lambda2 = doc["lambda2"].get<double>();
        if (doc.contains("lambda3")) cfg.loss.lambda3 = doc["lambda3"].get<double>();
        if (doc.contains("zeta_finest")) cfg.zeta_finest = doc["zeta_finest"].get<double>();
        if (doc.contains("temperature")) cfg.temperature = doc["temperature"].get<double>();
    } catch (const json::exception& e) {
        throw ValidationError("config field error in " + path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string pipeline_config_json(const PipelineConfig& cfg) {
    json doc;
    doc["version"] = 1;
    doc["alpha"] = cfg.csdp.alpha;
    doc["beta"] = cfg.csdp.beta;
    doc["omega"] = cfg.csdp.omega;
    doc["mu"] = cfg.csdp.mu;
    doc["attractors"] = cfg.csdp.attractors;
    doc["bins"] = cfg.csdp.bins;
    doc["d_min"] = cfg.csdp.d_min;
    doc["d_max"] = cfg.csdp.d_max;
    doc["pe_channels"] = cfg.pe_channels;
    doc["position_range"] = {{"x", {cfg.position.x.lo, cfg.position.x.hi}},
                             {"y", {cfg.position.y.lo, cfg.position.y.hi}},
                             {"z", {cfg.position.z.lo, cfg.position.z.hi}}};
    doc["levels"] = cfg.levels;
    doc["cameras"] = cfg.cameras;
    doc["seed"] = cfg.seed;
    doc["lambda_s"] = cfg.loss.lambda_s;
    doc["lambda_m"] = cfg.loss.lambda_m;
    doc["lambda1"] = cfg.loss.lambda1;
    doc["lambda2"] = cfg.loss.lambda2;
    doc["lambda3"] = cfg.loss.lambda3;
    doc["zeta_finest"] = cfg.zeta_finest;
    doc["temperature"] = cfg.temperature;
    return doc.dump(2) + "\n";
}

}  // namespace freqpde
