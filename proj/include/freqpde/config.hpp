#pragma once

#include <cstdint>
#include <string>

#include "freqpde/csdp.hpp"
#include "freqpde/pde.hpp"
#include "freqpde/supervision.hpp"

namespace freqpde {

/// Everything the pipeline stages share: depth-head hyper-parameters, the
/// embedding volume, pyramid/rig layout, loss weights and the weight seed.
struct PipelineConfig {
    CsdpConfig csdp;
    PositionRange position;
    LossWeights loss;
    std::size_t pe_channels = 12;  // divisible by 6
    std::size_t levels = 3;
    std::size_t cameras = 6;
    std::uint64_t seed = 1;
    double zeta_finest = 4.0;
    double temperature = 10000.0;

    void validate() const;
};

/// Reads a JSON config; unknown keys are rejected so typos fail loudly.
PipelineConfig load_pipeline_config(const std::string& path);

std::string pipeline_config_json(const PipelineConfig& cfg);

}  // namespace freqpde
