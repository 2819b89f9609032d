// lsr: command-line front end over the latentsr C API.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latentsr/latentsr.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitComputation = 3;
constexpr int kExitDegenerate = 4;

struct Invocation {
  std::string command;
  std::string config_file;
  std::map<std::string, json> overrides;  // json pointer -> value
  std::string out, aux, pareto;
  int jobs = 1;
  bool quiet = false;
};

int exit_code(lsr_status s) {
  switch (s) {
    case LSR_OK:
      return kExitOk;
    case LSR_E_INVALID_ARGUMENT:
      return kExitUsage;
    case LSR_E_DEGENERATE:
      return kExitDegenerate;
    default:
      return kExitComputation;
  }
}

std::optional<json> take_string(lsr_status s, char* text) {
  if (s != LSR_OK) return std::nullopt;
  json j = json::parse(text);
  lsr_string_free(text);
  return j;
}

template <typename T>
void bind(CLI::App* app, Invocation& inv, const std::string& flag, const std::string& pointer, const std::string& help) {
  app->add_option_function<T>(flag, [&inv, pointer](const T& v) { inv.overrides[pointer] = v; }, help);
}

void common(CLI::App* app, Invocation& inv) {
  app->add_option("--config", inv.config_file,
                  "Configuration JSON, or any artifact whose embedded configuration is reused");
  bind<std::uint64_t>(app, inv, "--seed", "/seed", "Global seed; every random stream derives from it");
}

void search_flags(CLI::App* app, Invocation& inv) {
  bind<double>(app, inv, "--omega", "/search/omega", "Complexity weight in the fitness");
  bind<int>(app, inv, "--population", "/search/population", "Candidates per generation (s)");
  bind<int>(app, inv, "--parents", "/search/parents", "Selected candidates per generation (p, 0 = s/2)");
  bind<int>(app, inv, "--top-k", "/search/active_dims", "Adapted latent dimensions (k, 0 = d/2)");
  bind<double>(app, inv, "--step", "/search/initial_step", "Initial step size t");
  bind<int>(app, inv, "--generations", "/search/max_generations", "Maximum generations");
  bind<double>(app, inv, "--split", "/search/fit_fraction", "Share of rows used for fitting");
  bind<int>(app, inv, "--patience", "/search/patience", "Generations without improvement before stopping");
  app->add_option("--jobs", inv.jobs, "Worker threads for candidate evaluation")->check(CLI::PositiveNumber);
}

void model_flags(CLI::App* app, Invocation& inv) {
  bind<int>(app, inv, "--latent-dim", "/model/latent_dim", "Latent and model width d");
  bind<int>(app, inv, "--embed-dim", "/model/numeric_embed_dim", "Numeric token embedding width");
  bind<int>(app, inv, "--layers", "/model/layers", "Encoder and decoder depth");
  bind<int>(app, inv, "--heads", "/model/heads", "Attention heads");
  bind<int>(app, inv, "--ffn-dim", "/model/ffn_dim", "Feed-forward width");
  bind<int>(app, inv, "--model-vars", "/model/max_vars", "Variables the model accepts");
  bind<int>(app, inv, "--pad-len", "/model/pad_len", "Equation length including BOS and EOS");
  bind<int>(app, inv, "--latent-samples", "/model/latent_samples", "Latent draws fused per example");
}

void gen_flags(CLI::App* app, Invocation& inv) {
  bind<std::string>(app, inv, "--ops", "/gen/ops", "Operator set: logexp, trig, exp-family, log-family, trig-family");
  bind<int>(app, inv, "--max-tokens", "/gen/max_tokens", "Maximum expression complexity");
  bind<int>(app, inv, "--max-vars", "/gen/max_vars", "Maximum number of variables");
  bind<int>(app, inv, "--m", "/gen/samples", "Samples per equation");
  bind<double>(app, inv, "--domain-lo", "/gen/domain_lo", "Lower input bound");
  bind<double>(app, inv, "--domain-hi", "/gen/domain_hi", "Upper input bound");
}

json build_config(const Invocation& inv, lsr_status& status) {
  char* text = nullptr;
  status = lsr_config_default(inv.command.c_str(), &text);
  auto base = take_string(status, text);
  if (!base) return {};
  if (!inv.config_file.empty()) {
    char* extracted = nullptr;
    status = lsr_config_extract(inv.config_file.c_str(), &extracted);
    auto file = take_string(status, extracted);
    if (!file) return {};
    file->erase("tool_version");
    base->merge_patch(*file);
  }
  for (const auto& [ptr, v] : inv.overrides) (*base)[json::json_pointer(ptr)] = v;
  (*base)["command"] = inv.command;
  return *base;
}

void print_progress(const char* line, void* user) {
  if (!*static_cast<bool*>(user)) std::cerr << line << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space symbolic regression"};
  app.set_version_flag("--version", std::string("lsr ") + lsr_version());
  app.require_subcommand(1);
  app.fallthrough();
  Invocation inv;
  app.add_flag("-q,--quiet", inv.quiet, "Suppress progress output");

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic equation corpus");
  common(gen, inv);
  gen_flags(gen, inv);
  bind<std::size_t>(gen, inv, "--count", "/count", "Number of unique entries");
  gen->add_option("--out", inv.out, "Corpus output (JSON lines)")->required();

  auto* train = app.add_subcommand("train", "Train the model on a corpus");
  common(train, inv);
  model_flags(train, inv);
  bind<std::string>(train, inv, "--corpus", "/corpus", "Training corpus");
  bind<std::string>(train, inv, "--resume", "/resume", "Checkpoint to continue from");
  bind<int>(train, inv, "--batch-size", "/train/batch_size", "Examples per step");
  bind<int>(train, inv, "--epochs", "/train/epochs", "Epochs");
  bind<int>(train, inv, "--steps-per-epoch", "/train/steps_per_epoch", "Steps per epoch");
  bind<double>(train, inv, "--lr", "/train/base_lr", "Base learning rate of the Noam schedule");
  bind<int>(train, inv, "--warmup", "/train/warmup", "Warm-up steps");
  bind<double>(train, inv, "--kl-fraction", "/train/kl_fraction", "Share of steps over which the KL weight ramps to 1");
  train->add_flag_function(
      "--resample", [&inv](std::int64_t) { inv.overrides["/train/resample"] = true; },
      "Draw fresh inputs for each corpus expression whenever it is used");
  train->add_option("--out", inv.out, "Checkpoint output")->required();
  train->add_option("--log", inv.aux, "Training log CSV");

  auto* srch = app.add_subcommand("search", "Search for an expression fitting a dataset");
  common(srch, inv);
  search_flags(srch, inv);
  bind<std::string>(srch, inv, "--checkpoint", "/checkpoint", "Trained checkpoint");
  bind<std::string>(srch, inv, "--data", "/data", "CSV with header x0..x{D-1},y");
  srch->add_option("--out", inv.out, "Result JSON")->required();
  srch->add_option("--trace", inv.aux, "Per-generation trace CSV");

  auto* interp = app.add_subcommand("interp", "Decode interpolations between two datasets' latents");
  common(interp, inv);
  bind<std::string>(interp, inv, "--checkpoint", "/checkpoint", "Trained checkpoint");
  bind<std::string>(interp, inv, "--data", "/data", "First dataset CSV");
  bind<std::string>(interp, inv, "--data-b", "/data_b", "Second dataset CSV");
  bind<std::string>(interp, inv, "--corpus", "/corpus", "Corpus whose consecutive entries form the pairs");
  bind<std::size_t>(interp, inv, "--pairs", "/pairs", "Number of corpus pairs");
  bind<std::vector<double>>(interp, inv, "--ratios", "/ratios", "Interpolation ratios");
  interp->add_option("--out", inv.out, "Report JSON")->required();

  auto* recon = app.add_subcommand("recon-eval", "Reconstruction edit distance of a corpus");
  common(recon, inv);
  bind<std::string>(recon, inv, "--checkpoint", "/checkpoint", "Trained checkpoint");
  bind<std::string>(recon, inv, "--corpus", "/corpus", "Corpus to reconstruct");
  bind<std::string>(recon, inv, "--branch", "/branch", "posterior, prior or both");
  bind<std::size_t>(recon, inv, "--limit", "/limit", "Use only the first N entries");
  recon->add_option("--out", inv.out, "Report CSV")->required();

  auto* bench = app.add_subcommand("bench", "Noise benchmark over planted targets");
  common(bench, inv);
  search_flags(bench, inv);
  gen_flags(bench, inv);
  bind<std::string>(bench, inv, "--checkpoint", "/checkpoint", "Trained checkpoint");
  bind<std::vector<std::string>>(bench, inv, "--targets", "/targets", "Target expressions in prefix form");
  bind<std::vector<double>>(bench, inv, "--levels", "/levels", "Noise levels");
  bind<std::string>(bench, inv, "--compare", "/compare", "Other methods' results CSV for Pareto ranking");
  bench->add_option("--out", inv.out, "Per-run results CSV")->required();
  bench->add_option("--summary", inv.aux, "Per-level summary CSV");
  bench->add_option("--pareto", inv.pareto, "Pareto report JSON");

  auto* exp = app.add_subcommand("export-latents", "Prior means of a corpus as CSV");
  common(exp, inv);
  bind<std::string>(exp, inv, "--checkpoint", "/checkpoint", "Trained checkpoint");
  bind<std::string>(exp, inv, "--corpus", "/corpus", "Corpus");
  bind<std::size_t>(exp, inv, "--limit", "/limit", "Use only the first N entries");
  exp->add_option("--out", inv.out, "Latent CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  inv.command = app.get_subcommands().front()->get_name();

  lsr_status status = LSR_OK;
  const json cfg = build_config(inv, status);
  if (status != LSR_OK) {
    std::cerr << "lsr: " << lsr_last_error() << '\n';
    return exit_code(status);
  }
  const std::string text = cfg.dump();
  char* summary = nullptr;
  status = lsr_run(text.c_str(), inv.out.c_str(), inv.aux.empty() ? nullptr : inv.aux.c_str(),
                   inv.pareto.empty() ? nullptr : inv.pareto.c_str(), inv.jobs, print_progress, &inv.quiet, &summary);
  if (status != LSR_OK) {
    std::cerr << "lsr: " << lsr_last_error() << '\n';
    return exit_code(status);
  }
  if (summary) {
    if (!inv.quiet) std::cout << summary << '\n';
    lsr_string_free(summary);
  }
  return kExitOk;
}
