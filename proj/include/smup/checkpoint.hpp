#pragma once

#include <string>
#include <vector>

#include "smup/model.hpp"

namespace smup {

/// Flat binary container: versioned magic string, structured-text header
/// with the model config and resolved group hyperparameters, then raw
/// float64 blocks for every named matrix (optimizer moments included when
/// present).
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const TransformerParams& params,
                     const std::vector<AdamState>* opt = nullptr);

struct Checkpoint {
    ModelConfig cfg;
    TransformerParams params;
    std::vector<AdamState> opt;  // empty if none stored
    bool has_opt = false;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace smup
