#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "checkpoint.hpp"
#include "corpus.hpp"
#include "errors.hpp"
#include "prefix.hpp"

namespace lsr {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  if (path.empty()) throw InvalidArgument("an output path is required");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

std::string csv_header(const RunConfig& cfg) { return "# config: " + to_json(cfg).dump() + "\n"; }

std::string num(double v) { return format_double(v); }

// Also copies the checkpoint's model and training settings into cfg so the
// echoed config describes the model that was actually used.
std::unique_ptr<nn::Model> load_model(RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw InvalidArgument("a checkpoint is required");
  auto ckpt = load_checkpoint(cfg.checkpoint);
  cfg.model = ckpt.model->config();
  cfg.train = ckpt.train;
  return std::move(ckpt.model);
}

std::vector<CorpusEntry> load_limited(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw InvalidArgument("a corpus is required");
  auto entries = load_corpus(cfg.corpus);
  if (cfg.limit > 0 && entries.size() > cfg.limit) entries.resize(cfg.limit);
  return entries;
}


std::string prefix_body_text(const Expr& e) { return join_tokens(body_tokens(to_prefix(e))); }

// Column-named CSV reader for comparison results.
std::vector<std::map<std::string, std::string>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json run_gen_corpus(const RunConfig& cfg, const Outputs& out) {
  if (out.out.empty()) throw InvalidArgument("gen-corpus needs an output path");
  build_corpus(cfg.gen, cfg.count, out.out);
  write_text(out.out + ".config.json", json{{"config", to_json(cfg)}}.dump(2) + "\n");
  return {{"entries", cfg.count}, {"path", out.out}};
}

json run_train(const RunConfig& in, const Outputs& out, const ProgressFn& progress) {
  if (out.out.empty()) throw InvalidArgument("train needs a checkpoint output path");
  RunConfig cfg = in;
  const auto corpus = load_corpus(cfg.corpus);
  if (corpus.empty()) throw InvalidArgument("training corpus is empty");
  // Resampling draws from the domain the corpus was generated on.
  if (cfg.train.resample && std::filesystem::exists(cfg.corpus + ".config.json"))
    cfg.gen = run_config_from_json(extract_config(cfg.corpus)).gen;

  std::unique_ptr<nn::Model> model;
  nn::AdamState adam;
  long step = 0;
  if (cfg.model.pad_len == 0) {
    if (!cfg.resume.empty()) {
      cfg.model.pad_len = load_checkpoint(cfg.resume).model->config().pad_len;
    } else {
      for (const auto& e : corpus)
        cfg.model.pad_len = std::max(cfg.model.pad_len, static_cast<int>(to_prefix(canonicalize_constants(e.expr)).size()));
      cfg.model.pad_len = std::max(cfg.model.pad_len, 3);
    }
  }
  if (!cfg.resume.empty()) {
    Checkpoint ck = load_checkpoint(cfg.resume);
    if (!(ck.model->config() == cfg.model)) throw InvalidArgument("resume checkpoint has a different model configuration");
    model = std::move(ck.model);
    adam = std::move(ck.adam);
    step = ck.step;
  } else {
    model = std::make_unique<nn::Model>(cfg.model);
  }
  const auto examples = nn::make_examples(*model, corpus);
  nn::Trainer trainer(*model, cfg.train);
  trainer.set_source(corpus, cfg.gen);
  if (!cfg.resume.empty()) {
    trainer.adam() = std::move(adam);
    trainer.set_step(step);
  }

  std::ostringstream log;
  log << csv_header(cfg) << "step,lce,lkl,lambda,lr\n";
  const json echo = to_json(cfg);
  nn::TrainLogRow last;
  trainer.run(
      examples,
      [&](const nn::TrainLogRow& r) {
        log << r.step << ',' << num(r.lce) << ',' << num(r.lkl) << ',' << num(r.lambda) << ',' << num(r.lr) << '\n';
        last = r;
        if (progress && (r.step % 50 == 0 || r.step == cfg.train.total_steps()))
          progress("step " + std::to_string(r.step) + " lce " + num(r.lce) + " lkl " + num(r.lkl));
      },
      [&](long) { save_checkpoint(out.out, *model, cfg.train, trainer.adam(), trainer.step(), echo); });
  save_checkpoint(out.out, *model, cfg.train, trainer.adam(), trainer.step(), echo);
  if (!out.aux.empty()) write_text(out.aux, log.str());
  return {{"step", trainer.step()}, {"lce", json_number(last.lce)}, {"lkl", json_number(last.lkl)}};
}

json run_search(const RunConfig& in, const Outputs& out, int jobs) {
  RunConfig cfg = in;
  if (out.out.empty()) throw InvalidArgument("search needs an output path");
  const auto model = load_model(cfg);
  if (cfg.data.empty()) throw InvalidArgument("search needs a data file");
  const Dataset data = load_csv(cfg.data);
  SearchOptions opt = cfg.search;
  opt.jobs = jobs;
  const SearchResult res = search(*model, data, opt);

  json j;
  j["config"] = to_json(cfg);
  j["status"] = search_status_name(res.status);
  j["expr"] = res.expr ? json(to_text(*res.expr)) : json(nullptr);
  j["prefix"] = res.expr ? json(prefix_body_text(*res.expr)) : json(nullptr);
  j["r2"] = json_number(res.r2);
  j["fit_r2"] = json_number(res.fit_r2);
  j["complexity"] = res.complexity;
  j["fitness"] = json_number(res.fitness);
  j["time_s"] = res.time_s;
  j["time_includes_constant_fitting"] = true;
  j["seed"] = cfg.seed;
  j["generations"] = res.generations;
  j["fit_rows"] = res.fit_rows;
  j["heldout_rows"] = res.heldout_rows;
  if (!out.aux.empty()) j["trace"] = std::filesystem::path(out.aux).filename().string();
  write_text(out.out, j.dump(2) + "\n");

  if (!out.aux.empty()) {
    std::ostringstream t;
    t << csv_header(cfg) << "gen,best_fitness,best_r2,best_complexity,mean_sigma,active_dims\n";
    for (const auto& r : res.trace)
      t << r.gen << ',' << num(r.best_fitness) << ',' << num(r.best_r2) << ',' << r.best_complexity << ','
        << num(r.mean_sigma) << ',' << r.active_dims << '\n';
    write_text(out.aux, t.str());
  }
  if (res.status == SearchStatus::kFailed) throw DegenerateError("search found no valid expression");
  return j;
}

json run_interp(const RunConfig& in, const Outputs& out) {
  RunConfig cfg = in;
  if (out.out.empty()) throw InvalidArgument("interp needs an output path");
  const auto model = load_model(cfg);
  std::vector<std::pair<Dataset, Dataset>> pairs;
  if (!cfg.data.empty() || !cfg.data_b.empty()) {
    if (cfg.data.empty() || cfg.data_b.empty()) throw InvalidArgument("interp needs both data files");
    pairs.emplace_back(load_csv(cfg.data), load_csv(cfg.data_b));
  } else {
    const auto corpus = load_corpus(cfg.corpus);
    for (std::size_t i = 0; i < cfg.pairs && 2 * i + 1 < corpus.size(); ++i)
      pairs.emplace_back(corpus[2 * i].data, corpus[2 * i + 1].data);
    if (pairs.empty()) throw InvalidArgument("corpus holds fewer than two entries");
  }
  json list = json::array();
  double validity = 0.0;
  std::size_t endpoint_total = 0, endpoint_ok = 0;
  for (const auto& [a, b] : pairs) {
    const auto rep = interpolate(*model, a, b, cfg.ratios);
    json pts = json::array();
    for (const auto& p : rep.points)
      pts.push_back({{"ratio", p.ratio}, {"expr", p.expr ? to_text(*p.expr) : std::string("INVALID")}});
    validity += rep.validity;
    for (const auto* d : {&a, &b}) {
      try {
        from_prefix(direct_decode(*model, *d));
        ++endpoint_total;
      } catch (const SyntaxError&) {
        continue;
      }
      const double r = d == &a ? 0.0 : 1.0;
      for (const auto& p : rep.points)
        if (p.ratio == r && p.expr) {
          ++endpoint_ok;
          break;
        }
    }
    list.push_back({{"points", std::move(pts)}, {"validity", rep.validity}});
  }
  json j;
  j["config"] = to_json(cfg);
  j["pairs"] = std::move(list);
  j["validity"] = validity / static_cast<double>(pairs.size());
  j["endpoint_validity"] = endpoint_total ? static_cast<double>(endpoint_ok) / static_cast<double>(endpoint_total) : 1.0;
  write_text(out.out, j.dump(2) + "\n");
  return {{"validity", j["validity"]}, {"pairs", pairs.size()}};
}

json run_recon(const RunConfig& in, const Outputs& out) {
  RunConfig cfg = in;
  if (out.out.empty()) throw InvalidArgument("recon-eval needs an output path");
  const auto model = load_model(cfg);
  const auto corpus = load_limited(cfg);
  std::vector<Branch> branches;
  if (cfg.branch == "posterior" || cfg.branch == "both") branches.push_back(Branch::kPosterior);
  if (cfg.branch == "prior" || cfg.branch == "both") branches.push_back(Branch::kPrior);
  std::ostringstream csv;
  csv << csv_header(cfg) << "branch,count,mean,std\n";
  json summary = json::object();
  for (Branch b : branches) {
    const auto rep = reconstruction_eval(*model, corpus, b);
    csv << branch_name(b) << ',' << rep.count << ',' << num(rep.mean) << ',' << num(rep.std) << '\n';
    summary[branch_name(b)] = {{"mean", rep.mean}, {"std", rep.std}};
  }
  write_text(out.out, csv.str());
  return summary;
}

json run_bench(const RunConfig& in, const Outputs& out, int jobs) {
  RunConfig cfg = in;
  if (out.out.empty()) throw InvalidArgument("bench needs an output path");
  const auto model = load_model(cfg);
  std::vector<Expr> targets;
  for (const auto& t : cfg.targets) targets.push_back(parse_prefix_text(t));
  if (targets.empty()) throw InvalidArgument("bench needs at least one target");
  BenchOptions opt;
  opt.levels = cfg.levels;
  opt.data = cfg.gen;
  opt.search = cfg.search;
  opt.search.jobs = jobs;
  const BenchReport rep = noise_bench(*model, targets, opt);

  std::ostringstream csv;
  csv << csv_header(cfg) << "method,dataset,noise,r2,time_s,complexity,seed\n";
  for (const auto& r : rep.runs)
    csv << "latentsr," << prefix_body_text(targets[r.target]) << ',' << num(r.level) << ',' << num(r.result.r2)
        << ',' << num(r.result.time_s) << ',' << r.result.complexity << ',' << r.seed << '\n';
  write_text(out.out, csv.str());

  if (!out.aux.empty()) {
    std::ostringstream s;
    s << csv_header(cfg) << "noise,mean_r2,mean_time_s,mean_complexity,runs\n";
    for (const auto& l : rep.levels)
      s << num(l.level) << ',' << num(l.mean_r2) << ',' << num(l.mean_time_s) << ',' << num(l.mean_complexity) << ','
        << l.runs << '\n';
    write_text(out.aux, s.str());
  }

  json levels = json::array();
  for (const auto& l : rep.levels)
    levels.push_back({{"noise", l.level}, {"mean_r2", json_number(l.mean_r2)}, {"mean_time_s", l.mean_time_s},
                      {"mean_complexity", l.mean_complexity}});

  if (!cfg.compare.empty()) {
    if (out.pareto.empty()) throw InvalidArgument("a Pareto output path is required with a comparison file");
    std::map<std::string, std::vector<MethodSummary>> by_method;
    for (const auto& r : read_csv_rows(cfg.compare)) {
      try {
        by_method[r.at("method")].push_back(
            {r.at("method"), std::stod(r.at("r2")), std::stod(r.at("complexity")), std::stod(r.at("time_s"))});
      } catch (const std::exception&) {
        throw InvalidArgument("comparison rows need method, r2, complexity and time_s columns");
      }
    }
    for (const auto& r : rep.runs)
      by_method["latentsr"].push_back(
          {"latentsr", r.result.r2, static_cast<double>(r.result.complexity), r.result.time_s});
    std::vector<MethodSummary> methods;
    for (const auto& [name, rows] : by_method) {
      MethodSummary m{name, 0.0, 0.0, 0.0};
      for (const auto& r : rows) {
        m.r2 += r.r2 / static_cast<double>(rows.size());
        m.complexity += r.complexity / static_cast<double>(rows.size());
        m.time_s += r.time_s / static_cast<double>(rows.size());
      }
      if (!std::isfinite(m.r2)) m.r2 = -1e300;
      methods.push_back(m);
    }
    const ParetoReport pr = rank_methods(methods);
    json rows = json::array();
    for (std::size_t i = 0; i < pr.rows.size(); ++i)
      rows.push_back({{"method", pr.rows[i].method},
                      {"r2_rank", pr.rows[i].ranks[0]},
                      {"complexity_rank", pr.rows[i].ranks[1]},
                      {"time_rank", pr.rows[i].ranks[2]},
                      {"front", pr.front[i]}});
    write_text(out.pareto, json{{"config", to_json(cfg)}, {"methods", rows}}.dump(2) + "\n");
  }
  return {{"levels", levels}};
}

json run_export_latents(const RunConfig& in, const Outputs& out) {
  RunConfig cfg = in;
  if (out.out.empty()) throw InvalidArgument("export-latents needs an output path");
  const auto model = load_model(cfg);
  const auto corpus = load_limited(cfg);
  const auto rows = export_latents(*model, corpus);
  std::ostringstream csv;
  csv << csv_header(cfg) << "index,family,expr";
  for (int j = 0; j < model->config().latent_dim; ++j) csv << ",z" << j;
  csv << '\n';
  for (const auto& r : rows) {
    csv << r.index << ',' << r.family << ',' << r.expr;
    for (double v : r.mean) csv << ',' << num(v);
    csv << '\n';
  }
  write_text(out.out, csv.str());
  return {{"rows", rows.size()}};
}

json run_command(const RunConfig& cfg, const Outputs& out, int jobs, const ProgressFn& progress) {
  cfg.validate();
  const std::string& c = cfg.command;
  if (c == "gen-corpus") return run_gen_corpus(cfg, out);
  if (c == "train") return run_train(cfg, out, progress);
  if (c == "search") return run_search(cfg, out, jobs);
  if (c == "interp") return run_interp(cfg, out);
  if (c == "recon-eval") return run_recon(cfg, out);
  if (c == "bench") return run_bench(cfg, out, jobs);
  if (c == "export-latents") return run_export_latents(cfg, out);
  throw InvalidArgument("unknown command '" + c + "'");
}

}  // namespace lsr
