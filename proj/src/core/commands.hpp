#pragma once

#include <functional>
#include <json.hpp>
#include <string>

#include "run_config.hpp"

namespace lsr {

// Artifact-producing commands. Each output embeds to_json(cfg); re-running
// with that configuration rewrites the same bytes, apart from the wall-time
// fields of search and bench outputs.

struct Outputs {
  std::string out;      // main artifact
  std::string aux;      // train: log CSV; search: trace CSV; bench: summary CSV
  std::string pareto;   // bench: Pareto JSON (only with cfg.compare)
};

using ProgressFn = std::function<void(const std::string& line)>;

nlohmann::json run_gen_corpus(const RunConfig& cfg, const Outputs& out);
nlohmann::json run_train(const RunConfig& cfg, const Outputs& out, const ProgressFn& progress = {});
// Throws DegenerateError after writing the failure record when the search
// produced no expression at all.
nlohmann::json run_search(const RunConfig& cfg, const Outputs& out, int jobs = 1);
nlohmann::json run_interp(const RunConfig& cfg, const Outputs& out);
nlohmann::json run_recon(const RunConfig& cfg, const Outputs& out);
nlohmann::json run_bench(const RunConfig& cfg, const Outputs& out, int jobs = 1);
nlohmann::json run_export_latents(const RunConfig& cfg, const Outputs& out);

nlohmann::json run_command(const RunConfig& cfg, const Outputs& out, int jobs = 1, const ProgressFn& progress = {});

// Finite numbers as JSON numbers, others as "inf" / "-inf" / "nan".
nlohmann::json json_number(double v);

}  // namespace lsr
