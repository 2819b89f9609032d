#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "datagen.hpp"

namespace lsr {

// JSON-lines corpus: one object per line with fields
// expr_prefix (token strings), samples ([[x...], y] pairs), family, D, seed.
std::string corpus_entry_to_json(const CorpusEntry& e);
CorpusEntry corpus_entry_from_json(const std::string& line);

void save_corpus(const std::vector<CorpusEntry>& entries, const std::filesystem::path& path);
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path);

}  // namespace lsr
