#pragma once

#include <string>

#include "attnex/model.hpp"
#include "attnex/train.hpp"
#include "json.hpp"

namespace attnex {

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

/// Versioned binary container: magic, JSON header (config + array
/// manifest), row-major 64-bit payload, FNV-1a content checksum.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace attnex
