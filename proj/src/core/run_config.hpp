#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "cvae.hpp"
#include "datagen.hpp"
#include "pipeline.hpp"
#include "train.hpp"

namespace lsr {

// Everything that determines an artifact. Component seeds are derived from
// the single global seed; output paths are not part of the configuration so
// that a re-run can write elsewhere and still reproduce the bytes.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;

  GenConfig gen;
  std::size_t count = 2000;

  // pad_len 0: train uses the longest skeleton in its corpus.
  nn::ModelConfig model = [] {
    nn::ModelConfig m;
    m.pad_len = 0;
    return m;
  }();
  nn::TrainConfig train;
  std::string resume;  // checkpoint to continue training from

  SearchOptions search;  // jobs is a runtime option and is never serialized

  std::string corpus;
  std::string checkpoint;
  std::string data;
  std::string data_b;
  std::size_t pairs = 20;
  std::vector<double> ratios = default_interpolation_ratios();
  std::string branch = "both";
  std::vector<double> levels = default_noise_levels();
  std::vector<std::string> targets;  // prefix token bodies, e.g. "add x0 x1"
  std::string compare;               // other methods' results for Pareto ranking
  std::size_t limit = 0;             // 0 = every corpus entry

  // Fills the component seeds from `seed`.
  void derive_seeds();
  void validate() const;
};

const std::vector<std::string>& command_names();
std::vector<std::string> default_bench_targets();

nlohmann::json to_json(const RunConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig default_run_config(const std::string& command);

// The configuration embedded in an artifact: JSON files ("config" field),
// CSV files (leading "# config: " line), checkpoints and corpus sidecars.
nlohmann::json extract_config(const std::string& path);

// Parses a prefix body such as "add x0 x1" (BOS/EOS optional).
Expr parse_prefix_text(const std::string& text);

}  // namespace lsr
