#include "corpus.hpp"

#include <fstream>
#include <json.hpp>

#include "errors.hpp"
#include "prefix.hpp"

namespace lsr {

using nlohmann::json;

std::string corpus_entry_to_json(const CorpusEntry& e) {
  json j;
  json prefix = json::array();
  for (TokenId id : to_prefix(e.expr)) prefix.push_back(Vocabulary::standard().token(id));
  j["expr_prefix"] = std::move(prefix);
  json samples = json::array();
  for (std::size_t i = 0; i < e.data.size(); ++i) {
    auto p = e.data.point(i);
    samples.push_back(json::array({json(std::vector<double>(p.begin(), p.end())), e.data.y[i]}));
  }
  j["samples"] = std::move(samples);
  j["family"] = e.family;
  j["D"] = e.data.dim;
  j["seed"] = e.seed;
  return j.dump();
}

CorpusEntry corpus_entry_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw IoError(std::string("malformed corpus line: ") + ex.what());
  }
  try {
    CorpusEntry e;
    TokenSeq ids;
    for (const auto& tok : j.at("expr_prefix")) ids.push_back(Vocabulary::standard().id(tok.get<std::string>()));
    e.expr = from_prefix(ids);
    e.data.dim = j.at("D").get<int>();
    for (const auto& s : j.at("samples")) {
      auto x = s.at(0).get<std::vector<double>>();
      if (static_cast<int>(x.size()) != e.data.dim) throw IoError("sample width does not match D");
      e.data.push_back(x, s.at(1).get<double>());
    }
    e.family = j.value("family", "");
    e.seed = j.value("seed", std::uint64_t{0});
    return e;
  } catch (const json::exception& ex) {
    throw IoError(std::string("malformed corpus entry: ") + ex.what());
  }
}

void save_corpus(const std::vector<CorpusEntry>& entries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : entries) out << corpus_entry_to_json(e) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<CorpusEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(corpus_entry_from_json(line));
  }
  return out;
}

}  // namespace lsr
