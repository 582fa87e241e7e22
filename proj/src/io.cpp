#include "freqpde/io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace freqpde {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("JSON parse error in " + path + ": " + e.what());
    }
    return doc;
}

void dump_json(const std::string& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << doc.dump(2) << "\n";
}

struct ManifestLevel {
    std::size_t height = 0, width = 0;
    double zeta = 1.0;
    std::vector<std::string> views;
};

json manifest_json(const char* kind, std::size_t channels,
                   const std::vector<ManifestLevel>& levels) {
    json doc;
    doc["version"] = 1;
    doc["kind"] = kind;
    if (channels > 0) doc["channels"] = channels;
    json jl = json::array();
    for (const ManifestLevel& l : levels)
        jl.push_back({{"height", l.height},
                      {"width", l.width},
                      {"zeta", l.zeta},
                      {"views", l.views}});
    doc["levels"] = jl;
    return doc;
}

std::vector<ManifestLevel> parse_manifest(const json& doc, const char* kind,
                                          const std::string& path) {
    try {
        if (doc.at("kind").get<std::string>() != kind)
            throw ValidationError("manifest kind mismatch in " + path + ": expected " + kind);
        std::vector<ManifestLevel> levels;
        for (const auto& jl : doc.at("levels")) {
            ManifestLevel l;
            l.height = jl.at("height").get<std::size_t>();
            l.width = jl.at("width").get<std::size_t>();
            l.zeta = jl.at("zeta").get<double>();
            l.views = jl.at("views").get<std::vector<std::string>>();
            levels.push_back(std::move(l));
        }
        if (levels.empty()) throw ValidationError("manifest lists no levels: " + path);
        return levels;
    } catch (const json::exception& e) {
        throw ValidationError("bad manifest " + path + ": " + e.what());
    }
}

}  // namespace

std::string write_rig_bundle(const std::string& dir, const std::string& stem,
                             const RigFeatures& rig) {
    if (rig.levels.empty()) throw ValidationError("write_rig_bundle: empty rig");
    fs::create_directories(dir);
    std::vector<ManifestLevel> levels;
    for (std::size_t i = 0; i < rig.levels.size(); ++i) {
        const RigLevel& level = rig.levels[i];
        if (level.views.empty()) throw ValidationError("write_rig_bundle: level has no views");
        ManifestLevel ml{level.views[0].height(), level.views[0].width(), level.zeta, {}};
        for (std::size_t j = 0; j < level.views.size(); ++j) {
            const std::string name =
                stem + "_l" + std::to_string(i) + "_cam" + std::to_string(j) + ".fpde";
            write_tensor_file((fs::path(dir) / name).string(), level.views[j].tensor());
            ml.views.push_back(name);
        }
        levels.push_back(std::move(ml));
    }
    const std::string manifest = (fs::path(dir) / (stem + ".json")).string();
    dump_json(manifest, manifest_json("rig", rig.levels[0].views[0].channels(), levels));
    return manifest;
}

RigFeatures read_rig_bundle(const std::string& manifest_path) {
    const json doc = load_json(manifest_path);
    const auto levels = parse_manifest(doc, "rig", manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    RigFeatures rig;
    for (const ManifestLevel& ml : levels) {
        RigLevel level;
        level.zeta = ml.zeta;
        for (const std::string& name : ml.views) {
            Tensor t = read_tensor_file((base / name).string());
            if (t.rank() != 3) throw ValidationError("feature file is not C x H x W: " + name);
            if (t.extent(1) != ml.height || t.extent(2) != ml.width)
                throw ValidationError("feature file grid disagrees with manifest: " + name);
            level.views.emplace_back(std::move(t));
        }
        rig.levels.push_back(std::move(level));
    }
    return rig;
}

std::string write_depth_bundle(const std::string& dir, const std::string& stem,
                               const DepthBundle& bundle) {
    if (bundle.levels.empty()) throw ValidationError("write_depth_bundle: empty bundle");
    if (bundle.zetas.size() != bundle.levels.size())
        throw ValidationError("write_depth_bundle: zeta list does not match level count");
    fs::create_directories(dir);
    std::vector<ManifestLevel> levels;
    for (std::size_t i = 0; i < bundle.levels.size(); ++i) {
        const auto& maps = bundle.levels[i];
        if (maps.empty()) throw ValidationError("write_depth_bundle: level has no views");
        ManifestLevel ml{maps[0].height(), maps[0].width(), bundle.zetas[i], {}};
        for (std::size_t j = 0; j < maps.size(); ++j) {
            const std::string name =
                stem + "_l" + std::to_string(i) + "_cam" + std::to_string(j) + ".fpde";
            write_tensor_file((fs::path(dir) / name).string(), maps[j].tensor());
            ml.views.push_back(name);
        }
        levels.push_back(std::move(ml));
    }
    const std::string manifest = (fs::path(dir) / (stem + ".json")).string();
    dump_json(manifest, manifest_json("depth", 0, levels));
    return manifest;
}

DepthBundle read_depth_bundle(const std::string& manifest_path) {
    const json doc = load_json(manifest_path);
    const auto levels = parse_manifest(doc, "depth", manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    DepthBundle bundle;
    for (const ManifestLevel& ml : levels) {
        std::vector<DepthMap> maps;
        for (const std::string& name : ml.views) {
            Tensor t = read_tensor_file((base / name).string());
            if (t.rank() != 2) throw ValidationError("depth file is not H x W: " + name);
            if (t.extent(0) != ml.height || t.extent(1) != ml.width)
                throw ValidationError("depth file grid disagrees with manifest: " + name);
            maps.emplace_back(std::move(t));
        }
        bundle.levels.push_back(std::move(maps));
        bundle.zetas.push_back(ml.zeta);
    }
    return bundle;
}

void write_sparse_target(const std::string& path, const SparseDepthTarget& target) {
    json doc;
    doc["version"] = 1;
    doc["height"] = target.height;
    doc["width"] = target.width;
    json samples = json::array();
    for (const SparseDepthSample& s : target.samples)
        samples.push_back({s.u, s.v, s.depth});
    doc["samples"] = samples;
    dump_json(path, doc);
}

SparseDepthTarget read_sparse_target(const std::string& path) {
    const json doc = load_json(path);
    SparseDepthTarget target;
    try {
        target.height = doc.at("height").get<std::size_t>();
        target.width = doc.at("width").get<std::size_t>();
        for (const auto& js : doc.at("samples")) {
            if (!js.is_array() || js.size() != 3)
                throw ValidationError("sparse target sample must be [u, v, depth]: " + path);
            SparseDepthSample s;
            s.u = js[0].get<std::size_t>();
            s.v = js[1].get<std::size_t>();
            s.depth = js[2].get<float>();
            if (s.u >= target.width || s.v >= target.height || !(s.depth > 0.0f))
                throw ValidationError("sparse target sample out of range in " + path);
            target.samples.push_back(s);
        }
    } catch (const json::exception& e) {
        throw ValidationError("bad sparse target " + path + ": " + e.what());
    }
    return target;
}

}  // namespace freqpde
