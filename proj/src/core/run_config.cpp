#include "run_config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "checkpoint.hpp"
#include "errors.hpp"
#include "prefix.hpp"

namespace lsr {

using nlohmann::json;

namespace {

json gen_to_json(const GenConfig& g) {
  return {{"ops", op_set_name(g.ops)}, {"max_tokens", g.max_tokens}, {"max_vars", g.max_vars},
          {"samples", g.samples},      {"domain_lo", g.domain_lo},   {"domain_hi", g.domain_hi}};
}

json search_to_json(const SearchOptions& s) {
  return {{"population", s.cma.population},
          {"parents", s.cma.parents},
          {"active_dims", s.cma.active_dims},
          {"initial_step", s.cma.initial_step},
          {"max_generations", s.cma.max_generations},
          {"omega", s.cma.omega},
          {"fit_fraction", s.fit_fraction},
          {"patience", s.patience},
          {"min_improvement", s.min_improvement},
          {"widen_retries", s.widen_retries},
          {"bfgs_starts", s.bfgs.starts},
          {"bfgs_max_iterations", s.bfgs.max_iterations}};
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw InvalidArgument("unknown configuration key '" + where + "." + k + "'");
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> n = {"gen-corpus", "train", "search", "interp",
                                             "recon-eval", "bench", "export-latents"};
  return n;
}

std::vector<std::string> default_bench_targets() {
  return {"add x0 x1", "mul x0 x1", "sub x0 x1", "exp x0", "add x0 mul x0 x1"};
}

void RunConfig::derive_seeds() {
  const Rng root(seed);
  gen.seed = root.derive("corpus").seed();
  model.init_seed = root.derive("init").seed();
  train.seed = root.derive("train").seed();
  search.cma.seed = root.derive("search").seed();
}

void RunConfig::validate() const {
  gen.validate();
  nn::ModelConfig m = model;
  if (m.pad_len == 0) m.pad_len = 3;
  m.validate();
  train.validate();
  search.cma.validate(model.latent_dim);
  if (branch != "posterior" && branch != "prior" && branch != "both")
    throw InvalidArgument("branch must be posterior, prior or both");
  for (double l : levels)
    if (!(l >= 0.0)) throw InvalidArgument("noise levels must be non-negative");
}

json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"tool_version", LSR_VERSION},
          {"seed", c.seed},
          {"gen", gen_to_json(c.gen)},
          {"count", c.count},
          {"model", model_config_to_json(c.model)},
          {"train", train_config_to_json(c.train)},
          {"resume", c.resume},
          {"search", search_to_json(c.search)},
          {"corpus", c.corpus},
          {"checkpoint", c.checkpoint},
          {"data", c.data},
          {"data_b", c.data_b},
          {"pairs", c.pairs},
          {"ratios", c.ratios},
          {"branch", c.branch},
          {"levels", c.levels},
          {"targets", c.targets},
          {"compare", c.compare},
          {"limit", c.limit}};
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j,
             {"command", "tool_version", "seed", "gen", "count", "model", "train", "resume", "search", "corpus",
              "checkpoint", "data", "data_b", "pairs", "ratios", "branch", "levels", "targets", "compare", "limit"},
             "config");
  RunConfig c;
  try {
    take(j, "command", c.command);
    take(j, "seed", c.seed);
    if (j.contains("gen")) {
      const auto& g = j.at("gen");
      check_keys(g, {"ops", "max_tokens", "max_vars", "samples", "domain_lo", "domain_hi"}, "gen");
      if (g.contains("ops")) c.gen.ops = parse_op_set(g.at("ops").get<std::string>());
      take(g, "max_tokens", c.gen.max_tokens);
      take(g, "max_vars", c.gen.max_vars);
      take(g, "samples", c.gen.samples);
      take(g, "domain_lo", c.gen.domain_lo);
      take(g, "domain_hi", c.gen.domain_hi);
    }
    take(j, "count", c.count);
    if (j.contains("model")) {
      check_keys(j.at("model"),
                 {"latent_dim", "numeric_embed_dim", "layers", "heads", "ffn_dim", "max_vars", "pad_len",
                  "latent_samples", "init_seed"},
                 "model");
      c.model = model_config_from_json(j.at("model"));
      if (!j.at("model").contains("pad_len")) c.model.pad_len = 0;
    }
    if (j.contains("train")) {
      check_keys(j.at("train"), {"batch_size", "epochs", "steps_per_epoch", "base_lr", "warmup", "kl_fraction", "resample", "seed"},
                 "train");
      c.train = train_config_from_json(j.at("train"));
    }
    take(j, "resume", c.resume);
    if (j.contains("search")) {
      const auto& s = j.at("search");
      check_keys(s,
                 {"population", "parents", "active_dims", "initial_step", "max_generations", "omega", "fit_fraction",
                  "patience", "min_improvement", "widen_retries", "bfgs_starts", "bfgs_max_iterations"},
                 "search");
      take(s, "population", c.search.cma.population);
      take(s, "parents", c.search.cma.parents);
      take(s, "active_dims", c.search.cma.active_dims);
      take(s, "initial_step", c.search.cma.initial_step);
      take(s, "max_generations", c.search.cma.max_generations);
      take(s, "omega", c.search.cma.omega);
      take(s, "fit_fraction", c.search.fit_fraction);
      take(s, "patience", c.search.patience);
      take(s, "min_improvement", c.search.min_improvement);
      take(s, "widen_retries", c.search.widen_retries);
      take(s, "bfgs_starts", c.search.bfgs.starts);
      take(s, "bfgs_max_iterations", c.search.bfgs.max_iterations);
    }
    take(j, "corpus", c.corpus);
    take(j, "checkpoint", c.checkpoint);
    take(j, "data", c.data);
    take(j, "data_b", c.data_b);
    take(j, "pairs", c.pairs);
    take(j, "ratios", c.ratios);
    take(j, "branch", c.branch);
    take(j, "levels", c.levels);
    take(j, "targets", c.targets);
    take(j, "compare", c.compare);
    take(j, "limit", c.limit);
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("invalid configuration value: ") + ex.what());
  }
  c.derive_seeds();
  return c;
}

RunConfig default_run_config(const std::string& command) {
  bool known = false;
  for (const auto& n : command_names()) known = known || n == command;
  if (!known) throw InvalidArgument("unknown command '" + command + "'");
  RunConfig c;
  c.command = command;
  if (command == "bench") c.targets = default_bench_targets();
  c.derive_seeds();
  return c;
}

json extract_config(const std::string& path) {
  const std::string sidecar = path + ".config.json";
  if (std::filesystem::exists(sidecar)) return extract_config(sidecar);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  char head[8] = {};
  in.read(head, sizeof head);
  in.clear();
  in.seekg(0);
  if (std::string(head, 7) == "LSRCKPT") {
    in.close();
    Checkpoint ck = load_checkpoint(path);
    return ck.run_config;
  }
  std::string first;
  std::getline(in, first);
  static const std::string kPrefix = "# config: ";
  try {
    if (first.rfind(kPrefix, 0) == 0) return json::parse(first.substr(kPrefix.size()));
    in.seekg(0);
    const json doc = json::parse(in);
    if (doc.contains("config")) return doc.at("config");
    return doc;
  } catch (const json::exception& ex) {
    throw IoError("no embedded configuration in " + path + ": " + ex.what());
  }
}

Expr parse_prefix_text(const std::string& text) {
  TokenSeq ids = parse_tokens(text);
  if (ids.empty() || ids.front() != Vocabulary::kBos) ids.insert(ids.begin(), Vocabulary::kBos);
  if (ids.back() != Vocabulary::kEos) ids.push_back(Vocabulary::kEos);
  return from_prefix(ids);
}

}  // namespace lsr
