#include "pae/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "pae/errors.hpp"
#include "pae/translator.hpp"

extern char** environ;

namespace pae {
namespace {

constexpr std::string_view kKeys[] = {
    "host",         "port",       "scorer",      "scorer_batch_size", "scorer_in_flight", "translator",
    "rules",        "embeddings", "lexicon",     "expansion",         "strict",           "pivot",
    "aggregation",  "transform",  "k",           "tau",               "data_dir",         "max_eval_rows",
    "embedding_k",  "min_sim",    "embedding_cap",
};

std::size_t to_size(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + s + "'");
  }
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(std::string(key) + ": expected true/false, got '" + std::string(value) + "'");
}

}  // namespace

void Config::set(std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  if (key == "host") {
    host = std::string(value);
  } else if (key == "port") {
    const auto p = to_size(key, value);
    if (p > 65535) throw ConfigError("port out of range");
    port = static_cast<int>(p);
  } else if (key == "scorer") {
    if (value == "lexical") {
      scorer = ScorerBackend::kLexical;
      scorer_url.clear();
    } else if (value.starts_with("remote:")) {
      scorer = ScorerBackend::kRemote;
      scorer_url = std::string(value.substr(7));
    } else {
      throw ConfigError("scorer: expected 'lexical' or 'remote:<url>'");
    }
  } else if (key == "scorer_batch_size") {
    scorer_batch_size = std::max<std::size_t>(1, to_size(key, value));
  } else if (key == "scorer_in_flight") {
    scorer_in_flight = std::max<std::size_t>(1, to_size(key, value));
  } else if (key == "translator") {
    if (value == "none") {
      translator = TranslatorBackend::kNone;
    } else if (value.starts_with("remote:")) {
      translator = TranslatorBackend::kRemote;
      translator_url = std::string(value.substr(7));
    } else if (value.starts_with("cache:")) {
      translator = TranslatorBackend::kCache;
      translator_cache = std::string(value.substr(6));
    } else {
      throw ConfigError("translator: expected 'none', 'remote:<url>' or 'cache:<path>'");
    }
  } else if (key == "rules") {
    rules = std::string(value);
  } else if (key == "embeddings") {
    embeddings = std::string(value);
  } else if (key == "lexicon") {
    lexicon = std::string(value);
  } else if (key == "expansion") {
    ExpansionConfig e = expansion;
    e.rule_one = e.rule_all = e.embedding = e.back_translation = false;
    std::stringstream ss{std::string(value)};
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto name = trim(item);
      if (name.empty() || name == "none") continue;
      if (name == "rule_one") e.rule_one = true;
      else if (name == "rule_all") e.rule_all = true;
      else if (name == "embedding") e.embedding = true;
      else if (name == "back_translation") e.back_translation = true;
      else if (name == "all") e.rule_one = e.rule_all = e.embedding = e.back_translation = true;
      else throw ConfigError("expansion: unknown method '" + std::string(name) + "'");
    }
    expansion = e;
  } else if (key == "strict") {
    expansion.strict = to_bool(key, value);
  } else if (key == "pivot") {
    if (value.empty()) throw ConfigError("pivot must not be empty");
    expansion.pivot = std::string(value);
  } else if (key == "embedding_k") {
    expansion.embedding_options.k = to_size(key, value);
  } else if (key == "min_sim") {
    expansion.embedding_options.min_sim = to_double(key, value);
  } else if (key == "embedding_cap") {
    expansion.embedding_options.cap = to_size(key, value);
  } else if (key == "aggregation") {
    const auto a = parse_aggregation(value);
    if (!a) throw ConfigError("aggregation: expected max or mean");
    ranking.aggregation = *a;
  } else if (key == "transform") {
    const auto t = parse_transform(value);
    if (!t) throw ConfigError("transform: expected identity or logistic");
    ranking.transform = *t;
  } else if (key == "k") {
    k = to_size(key, value);
    if (k == 0) throw ConfigError("k must be at least 1");
  } else if (key == "tau") {
    ranking.tau = to_double(key, value);
  } else if (key == "data_dir") {
    data_dir = std::string(value);
  } else if (key == "max_eval_rows") {
    max_eval_rows = to_size(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void Config::validate() const {
  if (scorer == ScorerBackend::kRemote) split_url(scorer_url);
  if (translator == TranslatorBackend::kRemote) split_url(translator_url);
  const auto must_exist = [](const std::filesystem::path& p, const char* what) {
    if (!p.empty() && !std::filesystem::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  };
  if (translator == TranslatorBackend::kCache) {
    if (translator_cache.empty()) throw ConfigError("translator cache path is empty");
    must_exist(translator_cache, "translator cache");
  }
  must_exist(rules, "rules file");
  must_exist(embeddings, "embeddings file");
  must_exist(lexicon, "lexicon file");
}

Config parse_config(std::string_view text, const std::string& source) {
  Config config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string_view::npos) throw FormatError(source, line_no, "expected key = value");
    try {
      config.set(trim(content.substr(0, eq)), content.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw FormatError(source, line_no, e.what());
    }
  }
  return config;
}

Config load_config(const std::filesystem::path& path) {
  auto config = parse_config(read_file(path), path.string());
  // Relative paths in a config file are relative to the file.
  const auto base = path.parent_path();
  for (auto* p : {&config.rules, &config.embeddings, &config.lexicon, &config.translator_cache, &config.data_dir}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return config;
}

void apply_env_overrides(Config& config, const std::map<std::string, std::string>& env) {
  for (auto key : kKeys) {
    std::string name = "PAE_";
    for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const auto it = env.find(name);
    if (it != env.end()) config.set(key, it->second);
  }
}

void apply_env_overrides(Config& config) {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view entry(*e);
    if (!entry.starts_with("PAE_")) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
  }
  apply_env_overrides(config, env);
}

}  // namespace pae
