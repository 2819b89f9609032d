#include "latentsr/latentsr.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "checkpoint.hpp"
#include "commands.hpp"
#include "errors.hpp"
#include "gaussian.hpp"
#include "metrics.hpp"
#include "numeric_tokens.hpp"
#include "pareto.hpp"
#include "pipeline.hpp"
#include "prefix.hpp"
#include "run_config.hpp"

struct lsr_expr {
  lsr::Expr expr;
};

struct lsr_model {
  std::unique_ptr<lsr::nn::Model> model;
};

struct lsr_dataset {
  lsr::Dataset data;
};

namespace {

thread_local std::string g_last_error;

lsr_status set_error(lsr_status s, const char* msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
lsr_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LSR_OK;
  } catch (const lsr::Error& e) {
    return set_error(static_cast<lsr_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(LSR_E_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return set_error(LSR_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(LSR_E_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw lsr::InvalidArgument(std::string(what) + " must not be null");
}

}  // namespace

extern "C" {

const char* lsr_version(void) { return LSR_VERSION; }

const char* lsr_last_error(void) { return g_last_error.c_str(); }

void lsr_string_free(char* s) { std::free(s); }

lsr_status lsr_expr_from_prefix(const char* tokens, lsr_expr** out) {
  return guarded([&] {
    require(tokens, "tokens");
    require(out, "out");
    *out = new lsr_expr{lsr::parse_prefix_text(tokens)};
  });
}

void lsr_expr_free(lsr_expr* e) { delete e; }

lsr_status lsr_expr_eval(const lsr_expr* e, const double* x, size_t n, double* out) {
  return guarded([&] {
    require(e, "expression");
    require(out, "out");
    if (n > 0) require(x, "x");
    *out = lsr::eval(e->expr, std::span<const double>(x, n));
  });
}

lsr_status lsr_expr_complexity(const lsr_expr* e, size_t* out) {
  return guarded([&] {
    require(e, "expression");
    require(out, "out");
    *out = lsr::complexity(e->expr);
  });
}

lsr_status lsr_expr_to_text(const lsr_expr* e, char** out) {
  return guarded([&] {
    require(e, "expression");
    require(out, "out");
    *out = dup_string(lsr::to_text(e->expr));
  });
}

lsr_status lsr_expr_to_prefix(const lsr_expr* e, char** out) {
  return guarded([&] {
    require(e, "expression");
    require(out, "out");
    *out = dup_string(lsr::join_tokens(lsr::to_prefix(e->expr)));
  });
}

lsr_status lsr_tokenize_float(double v, char** out) {
  return guarded([&] {
    require(out, "out");
    const auto t = lsr::tokenize_float(v).tokens();
    *out = dup_string(lsr::join_tokens(lsr::TokenSeq(t.begin(), t.end())));
  });
}

lsr_status lsr_detokenize_float(const char* tokens, double* out) {
  return guarded([&] {
    require(tokens, "tokens");
    require(out, "out");
    const lsr::TokenSeq ids = lsr::parse_tokens(tokens);
    using V = lsr::Vocabulary;
    if (ids.size() != 3 || !V::is_sign(ids[0]) || !V::is_mantissa(ids[1]) || !V::is_exponent(ids[2]))
      throw lsr::SyntaxError("a float is written as sign, mantissa, exponent tokens");
    *out = lsr::detokenize_float({ids[0] == V::kMinus, V::mantissa_of(ids[1]), V::exponent_of(ids[2])});
  });
}

lsr_status lsr_edit_distance(const char* a, const char* b, size_t* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = lsr::edit_distance(lsr::parse_tokens(a), lsr::parse_tokens(b));
  });
}

lsr_status lsr_kl_divergence(const double* mean_q, const double* var_q, const double* mean_p, const double* var_p,
                             size_t dim, double* out) {
  return guarded([&] {
    require(out, "out");
    if (dim > 0) {
      require(mean_q, "mean_q");
      require(var_q, "var_q");
      require(mean_p, "mean_p");
      require(var_p, "var_p");
    }
    lsr::DiagGaussian q{{mean_q, mean_q + dim}, {var_q, var_q + dim}};
    lsr::DiagGaussian p{{mean_p, mean_p + dim}, {var_p, var_p + dim}};
    *out = lsr::kl_divergence(q, p);
  });
}

lsr_status lsr_r2(const double* y, const double* yhat, size_t n, double* out) {
  return guarded([&] {
    require(out, "out");
    if (n > 0) {
      require(y, "y");
      require(yhat, "yhat");
    }
    *out = lsr::r2(std::span<const double>(y, n), std::span<const double>(yhat, n));
  });
}

lsr_status lsr_fitness(double r2, size_t complexity, double omega, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = lsr::fitness(r2, complexity, omega);
  });
}

lsr_status lsr_pareto_rank(const double* ranks, size_t methods, size_t metrics, int* fronts) {
  return guarded([&] {
    if (methods == 0) return;
    require(ranks, "ranks");
    require(fronts, "fronts");
    std::vector<lsr::ParetoRow> rows;
    for (size_t i = 0; i < methods; ++i)
      rows.push_back({std::to_string(i), {ranks + i * metrics, ranks + (i + 1) * metrics}});
    const auto rep = lsr::pareto_rank(rows);
    for (size_t i = 0; i < methods; ++i) fronts[i] = rep.front[i];
  });
}

lsr_status lsr_dataset_load_csv(const char* path, lsr_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new lsr_dataset{lsr::load_csv(path)};
  });
}

lsr_status lsr_dataset_from_arrays(const double* x, const double* y, size_t n, int dim, lsr_dataset** out) {
  return guarded([&] {
    require(out, "out");
    if (dim < 1 || dim > lsr::kMaxVariables) throw lsr::InvalidArgument("dimension must lie in [1, 10]");
    if (n > 0) {
      require(x, "x");
      require(y, "y");
    }
    lsr::Dataset d;
    d.dim = dim;
    for (size_t i = 0; i < n; ++i)
      d.push_back(std::span<const double>(x + i * static_cast<size_t>(dim), static_cast<size_t>(dim)), y[i]);
    *out = new lsr_dataset{std::move(d)};
  });
}

void lsr_dataset_free(lsr_dataset* d) { delete d; }

size_t lsr_dataset_size(const lsr_dataset* d) { return d ? d->data.size() : 0; }

lsr_status lsr_model_load(const char* checkpoint, lsr_model** out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    *out = new lsr_model{std::move(lsr::load_checkpoint(checkpoint).model)};
  });
}

void lsr_model_free(lsr_model* m) { delete m; }

lsr_status lsr_model_info(const lsr_model* m, char** out_json) {
  return guarded([&] {
    require(m, "model");
    require(out_json, "out_json");
    nlohmann::json j = lsr::model_config_to_json(m->model->config());
    j["parameters"] = m->model->parameter_count();
    *out_json = dup_string(j.dump());
  });
}

lsr_status lsr_localize(const lsr_model* m, const lsr_dataset* d, double* mean, double* var) {
  return guarded([&] {
    require(m, "model");
    require(d, "dataset");
    require(mean, "mean");
    require(var, "var");
    const auto g = lsr::localize(*m->model, d->data);
    std::copy(g.mean.begin(), g.mean.end(), mean);
    std::copy(g.var.begin(), g.var.end(), var);
  });
}

lsr_status lsr_search(const lsr_model* m, const lsr_dataset* d, const char* options_json, int jobs, char** out_json) {
  return guarded([&] {
    require(m, "model");
    require(d, "dataset");
    require(out_json, "out_json");
    nlohmann::json j = options_json ? nlohmann::json::parse(options_json) : nlohmann::json::object();
    const lsr::RunConfig cfg = lsr::run_config_from_json(j);
    lsr::SearchOptions opt = cfg.search;
    opt.jobs = jobs;
    const auto res = lsr::search(*m->model, d->data, opt);
    nlohmann::json r = {{"status", lsr::search_status_name(res.status)},
                        {"expr", res.expr ? nlohmann::json(lsr::to_text(*res.expr)) : nlohmann::json(nullptr)},
                        {"r2", lsr::json_number(res.r2)},
                        {"complexity", res.complexity},
                        {"fitness", lsr::json_number(res.fitness)},
                        {"time_s", res.time_s},
                        {"generations", res.generations},
                        {"seed", cfg.seed}};
    *out_json = dup_string(r.dump());
  });
}

lsr_status lsr_config_default(const char* command, char** out_json) {
  return guarded([&] {
    require(command, "command");
    require(out_json, "out_json");
    *out_json = dup_string(lsr::to_json(lsr::default_run_config(command)).dump(2));
  });
}

lsr_status lsr_config_resolve(const char* config_json, char** out_json) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out_json, "out_json");
    const auto cfg = lsr::run_config_from_json(nlohmann::json::parse(config_json));
    cfg.validate();
    *out_json = dup_string(lsr::to_json(cfg).dump(2));
  });
}

lsr_status lsr_config_extract(const char* artifact_path, char** out_json) {
  return guarded([&] {
    require(artifact_path, "artifact_path");
    require(out_json, "out_json");
    *out_json = dup_string(lsr::extract_config(artifact_path).dump(2));
  });
}

lsr_status lsr_run(const char* config_json, const char* out_path, const char* aux_path, const char* pareto_path,
                   int jobs, lsr_progress_fn progress, void* user, char** summary_json) {
  return guarded([&] {
    require(config_json, "config_json");
    const auto cfg = lsr::run_config_from_json(nlohmann::json::parse(config_json));
    lsr::Outputs out{out_path ? out_path : "", aux_path ? aux_path : "", pareto_path ? pareto_path : ""};
    lsr::ProgressFn fn;
    if (progress) fn = [&](const std::string& line) { progress(line.c_str(), user); };
    const auto summary = lsr::run_command(cfg, out, jobs, fn);
    if (summary_json) *summary_json = dup_string(summary.dump());
  });
}

}  // extern "C"
