#pragma once

#include <string>
#include <vector>

#include "freqpde/camera.hpp"
#include "freqpde/csdp.hpp"

namespace freqpde {

/// Per-level per-camera depth maps plus each level's downsampling factor.
struct DepthBundle {
    std::vector<std::vector<DepthMap>> levels;  // coarsest first
    std::vector<double> zetas;
};

/// Writes {dir}/{stem}.json plus one tensor file per (level, camera) named
/// {stem}_l{i}_cam{j}.fpde; returns the manifest path. Manifest entries are
/// relative to its directory.
std::string write_rig_bundle(const std::string& dir, const std::string& stem,
                             const RigFeatures& rig);
RigFeatures read_rig_bundle(const std::string& manifest_path);

std::string write_depth_bundle(const std::string& dir, const std::string& stem,
                               const DepthBundle& bundle);
DepthBundle read_depth_bundle(const std::string& manifest_path);

void write_sparse_target(const std::string& path, const SparseDepthTarget& target);
SparseDepthTarget read_sparse_target(const std::string& path);

}  // namespace freqpde
