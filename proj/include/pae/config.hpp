#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "pae/expansion.hpp"
#include "pae/ranking.hpp"

namespace pae {

enum class ScorerBackend { kLexical, kRemote };
enum class TranslatorBackend { kNone, kRemote, kCache };

struct Config {
  std::string host = "127.0.0.1";
  int port = 8080;

  ScorerBackend scorer = ScorerBackend::kLexical;
  std::string scorer_url;
  std::size_t scorer_batch_size = 32;
  std::size_t scorer_in_flight = 4;

  TranslatorBackend translator = TranslatorBackend::kNone;
  std::string translator_url;
  std::filesystem::path translator_cache;

  std::filesystem::path rules;
  std::filesystem::path embeddings;
  std::filesystem::path lexicon;

  ExpansionConfig expansion = ExpansionConfig::all();
  RankingConfig ranking;
  std::size_t k = 10;

  std::filesystem::path data_dir = "pae-data";
  std::size_t max_eval_rows = 20000;

  // Sets one key from its textual value; throws ConfigError.
  void set(std::string_view key, std::string_view value);
  // Checks urls and that configured paths exist.
  void validate() const;
};

// Flat "key = value" lines, '#' comments.
Config parse_config(std::string_view text, const std::string& source = "<config>");
Config load_config(const std::filesystem::path& path);

// PAE_<KEY> environment variables override file values.
void apply_env_overrides(Config& config);
void apply_env_overrides(Config& config, const std::map<std::string, std::string>& env);

}  // namespace pae
