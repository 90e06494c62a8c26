#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pae/corpus.hpp"
#include "pae/embeddings.hpp"
#include "pae/translator.hpp"

namespace pae {

enum class Method { kOriginal, kRuleOne, kRuleAll, kEmbedding, kBackTranslation };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view name);

struct SubstitutionRule {
  std::vector<std::string> lhs;  // normalized tokens
  std::string rhs;               // replacement text, may be empty

  std::string describe() const;
};

struct Paraphrase {
  std::string text;
  Method method = Method::kOriginal;
  std::string provenance;

  bool operator==(const Paraphrase&) const = default;
};

struct ParaphraseSet {
  std::string query_id;
  std::vector<Paraphrase> items;  // items[0] is the ORIGINAL

  const Paraphrase& original() const { return items.front(); }
  std::size_t size() const { return items.size(); }
};

// "lhs => rhs" per line, '#' comments. Throws FormatError / DuplicateRule.
std::vector<SubstitutionRule> parse_rules(std::string_view text, const std::string& source = "<rules>");
std::vector<SubstitutionRule> load_rules(const std::filesystem::path& path);

// One paraphrase per matching rule, each rule applied at all its occurrences.
std::vector<Paraphrase> apply_rules_single(std::string_view query, const std::vector<SubstitutionRule>& rules);
// All matching rules at once; empty unless at least two distinct rules match.
std::vector<Paraphrase> apply_rules_all(std::string_view query, const std::vector<SubstitutionRule>& rules);

struct EmbeddingSubstitution {
  std::size_t k = 5;
  double min_sim = 0.5;
  std::size_t cap = 10;
};

std::vector<Paraphrase> substitute_embeddings(std::string_view query, const EmbeddingStore& store,
                                              const PosLexicon& lexicon, const EmbeddingSubstitution& options = {});

// Round trip "en" -> pivot -> "en". Empty when the result normalizes to the input.
std::vector<Paraphrase> back_translate(std::string_view query, Translator& translator,
                                       const std::string& pivot = "de", const std::string& source_lang = "en");

struct ExpansionConfig {
  bool rule_one = false;
  bool rule_all = false;
  bool embedding = false;
  bool back_translation = false;
  // Translator failures propagate instead of being logged and skipped.
  bool strict = false;
  std::string pivot = "de";
  EmbeddingSubstitution embedding_options;

  static ExpansionConfig none() { return {}; }
  static ExpansionConfig all() {
    ExpansionConfig c;
    c.rule_one = c.rule_all = c.embedding = c.back_translation = true;
    return c;
  }
  bool enabled(Method m) const;
};

// Non-owning view of the expansion resources; any may be null.
class Expander {
 public:
  Expander(ExpansionConfig config, const std::vector<SubstitutionRule>* rules, const EmbeddingStore* store,
           const PosLexicon* lexicon, Translator* translator);

  ParaphraseSet expand(const QueryRecord& query) const;
  ParaphraseSet expand(std::string_view question, std::string query_id = {}) const;

  const ExpansionConfig& config() const { return config_; }
  Expander with_config(ExpansionConfig config) const;

 private:
  ExpansionConfig config_;
  const std::vector<SubstitutionRule>* rules_;
  const EmbeddingStore* store_;
  const PosLexicon* lexicon_;
  Translator* translator_;
};

}  // namespace pae
