#pragma once

#include <filesystem>
#include <json.hpp>
#include <memory>

#include "cvae.hpp"
#include "train.hpp"

namespace lsr {

// Binary container: magic "LSRCKPT1", u64 header length, JSON header
// (format version, tool version, vocabulary table, model and training
// configs, step, tensor table, embedded run config), then little-endian
// float64 payloads for every parameter and the Adam moments.
struct Checkpoint {
  std::unique_ptr<nn::Model> model;
  nn::TrainConfig train;
  nn::AdamState adam;
  long step = 0;
  nlohmann::json run_config;  // opaque echo of the producing run
};

void save_checkpoint(const std::filesystem::path& path, const nn::Model& model, const nn::TrainConfig& train,
                     const nn::AdamState& adam, long step, const nlohmann::json& run_config);
// Throws IoError on malformed files or vocabulary mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const nn::ModelConfig& c);
nn::ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const nn::TrainConfig& c);
nn::TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace lsr
