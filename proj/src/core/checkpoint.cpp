#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace lsr {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'L', 'S', 'R', 'C', 'K', 'P', 'T', '1'};
constexpr int kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint payloads assume little-endian hosts");

void write_matrix(std::ofstream& out, const ad::Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void read_matrix(std::ifstream& in, ad::Matrix& m) {
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw IoError("checkpoint payload truncated");
}

}  // namespace

json model_config_to_json(const nn::ModelConfig& c) {
  return {{"latent_dim", c.latent_dim}, {"numeric_embed_dim", c.numeric_embed_dim},
          {"layers", c.layers},         {"heads", c.heads},
          {"ffn_dim", c.ffn_dim},       {"max_vars", c.max_vars},
          {"pad_len", c.pad_len},       {"latent_samples", c.latent_samples},
          {"init_seed", c.init_seed}};
}

nn::ModelConfig model_config_from_json(const json& j) {
  nn::ModelConfig c;
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.numeric_embed_dim = j.value("numeric_embed_dim", c.numeric_embed_dim);
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.max_vars = j.value("max_vars", c.max_vars);
  c.pad_len = j.value("pad_len", c.pad_len);
  c.latent_samples = j.value("latent_samples", c.latent_samples);
  c.init_seed = j.value("init_seed", c.init_seed);
  return c;
}

json train_config_to_json(const nn::TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"epochs", c.epochs},   {"steps_per_epoch", c.steps_per_epoch},
          {"base_lr", c.base_lr},       {"warmup", c.warmup}, {"kl_fraction", c.kl_fraction},
          {"resample", c.resample},     {"seed", c.seed}};
}

nn::TrainConfig train_config_from_json(const json& j) {
  nn::TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.steps_per_epoch = j.value("steps_per_epoch", c.steps_per_epoch);
  c.base_lr = j.value("base_lr", c.base_lr);
  c.warmup = j.value("warmup", c.warmup);
  c.kl_fraction = j.value("kl_fraction", c.kl_fraction);
  c.resample = j.value("resample", c.resample);
  c.seed = j.value("seed", c.seed);
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const nn::Model& model, const nn::TrainConfig& train,
                     const nn::AdamState& adam, long step, const json& run_config) {
  const auto& params = model.parameters();
  const bool with_adam = adam.m.size() == params.size();
  json tensors = json::array();
  for (const auto& p : params) tensors.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  json vocab = json::array();
  const auto& v = Vocabulary::standard();
  for (int i = 0; i < Vocabulary::kSize; ++i) vocab.push_back(v.token(TokenId{i}));

  json header = {{"format", kFormatVersion},
                 {"tool_version", LSR_VERSION},
                 {"vocab_version", Vocabulary::kVersion},
                 {"vocabulary", std::move(vocab)},
                 {"model", model_config_to_json(model.config())},
                 {"train", train_config_to_json(train)},
                 {"step", step},
                 {"adam_t", adam.t},
                 {"has_adam", with_adam},
                 {"tensors", std::move(tensors)},
                 {"config", run_config}};
  const std::string text = header.dump();

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : params) write_matrix(out, p.value);
    if (with_adam) {
      for (const auto& m : adam.m) write_matrix(out, m);
      for (const auto& m : adam.v) write_matrix(out, m);
    }
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError(path.string() + " is not a checkpoint");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len > (1ULL << 32)) throw IoError("corrupt checkpoint header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("checkpoint header truncated");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& ex) {
    throw IoError(std::string("corrupt checkpoint header: ") + ex.what());
  }
  if (header.value("format", 0) != kFormatVersion) throw IoError("unsupported checkpoint format");
  const auto& vocab = header.at("vocabulary");
  const auto& v = Vocabulary::standard();
  if (vocab.size() != static_cast<std::size_t>(Vocabulary::kSize)) throw IoError("vocabulary size mismatch");
  for (int i = 0; i < Vocabulary::kSize; ++i)
    if (vocab[static_cast<std::size_t>(i)].get<std::string>() != v.token(TokenId{i}))
      throw IoError("vocabulary mismatch at id " + std::to_string(i));

  Checkpoint ck;
  ck.model = std::make_unique<nn::Model>(model_config_from_json(header.at("model")));
  ck.train = train_config_from_json(header.at("train"));
  ck.step = header.at("step").get<long>();
  ck.run_config = header.value("config", json::object());

  auto& params = ck.model->parameters();
  const auto& table = header.at("tensors");
  if (table.size() != params.size()) throw IoError("tensor count does not match the model configuration");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = table[i];
    if (t.at("name").get<std::string>() != params[i].name || t.at("rows").get<long>() != params[i].value.rows() ||
        t.at("cols").get<long>() != params[i].value.cols())
      throw IoError("tensor " + params[i].name + " has an unexpected shape");
    read_matrix(in, params[i].value);
  }
  ck.adam.reset(params);
  if (header.value("has_adam", false)) {
    for (auto& m : ck.adam.m) read_matrix(in, m);
    for (auto& m : ck.adam.v) read_matrix(in, m);
    ck.adam.t = header.value("adam_t", 0L);
  }
  return ck;
}

}  // namespace lsr
