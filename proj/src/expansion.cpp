#include "pae/expansion.hpp"

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include "pae/errors.hpp"

namespace pae {
namespace {

struct Match {
  std::size_t first_token;
  std::size_t last_token;  // inclusive
  const SubstitutionRule* rule;
};

std::vector<Match> find_matches(const std::vector<Token>& tokens, const SubstitutionRule& rule) {
  std::vector<Match> matches;
  const std::size_t n = rule.lhs.size();
  for (std::size_t i = 0; i + n <= tokens.size();) {
    bool hit = true;
    for (std::size_t j = 0; j < n && hit; ++j) hit = tokens[i + j].normalized == rule.lhs[j];
    if (hit) {
      matches.push_back({i, i + n - 1, &rule});
      i += n;
    } else {
      ++i;
    }
  }
  return matches;
}

bool starts_upper(std::string_view s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])); }

std::string match_case(std::string replacement, std::string_view original) {
  if (starts_upper(original) && !replacement.empty()) {
    replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
  }
  return replacement;
}

struct Edit {
  std::size_t begin;
  std::size_t end;
  std::string replacement;
};

// Applies non-overlapping byte-range edits sorted by position. Whitespace
// left doubled by an empty replacement is collapsed.
std::string apply_edits(std::string_view text, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.begin < b.begin; });
  std::string out;
  std::size_t cursor = 0;
  for (const auto& e : edits) {
    out.append(text.substr(cursor, e.begin - cursor));
    if (e.replacement.empty()) {
      while (!out.empty() && out.back() == ' ') out.pop_back();
      std::size_t next = e.end;
      if (out.empty()) {
        while (next < text.size() && text[next] == ' ') ++next;
      }
      cursor = next;
      continue;
    }
    out.append(e.replacement);
    cursor = e.end;
  }
  out.append(text.substr(cursor));
  return out;
}

Edit edit_for(const Match& m, const std::vector<Token>& tokens) {
  const auto begin = tokens[m.first_token].begin;
  const auto end = tokens[m.last_token].end;
  return {begin, end, match_case(m.rule->rhs, tokens[m.first_token].surface)};
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kOriginal: return "ORIGINAL";
    case Method::kRuleOne: return "RULE_ONE";
    case Method::kRuleAll: return "RULE_ALL";
    case Method::kEmbedding: return "EMBEDDING";
    case Method::kBackTranslation: return "BACK_TRANSLATION";
  }
  return "ORIGINAL";
}

std::optional<Method> parse_method(std::string_view name) {
  for (auto m : {Method::kOriginal, Method::kRuleOne, Method::kRuleAll, Method::kEmbedding, Method::kBackTranslation}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::string SubstitutionRule::describe() const {
  std::string out;
  for (const auto& t : lhs) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out + " => " + rhs;
}

std::vector<SubstitutionRule> parse_rules(std::string_view text, const std::string& source) {
  std::vector<SubstitutionRule> rules;
  std::set<std::vector<std::string>> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto arrow = content.find("=>");
    if (arrow == std::string_view::npos) throw FormatError(source, line_no, "expected 'lhs => rhs'");
    SubstitutionRule rule;
    for (auto& token : tokenize(content.substr(0, arrow))) rule.lhs.push_back(std::move(token.normalized));
    rule.rhs = std::string(trim(content.substr(arrow + 2)));
    if (rule.lhs.empty()) throw FormatError(source, line_no, "empty left-hand side");
    std::string lhs_text;
    for (const auto& t : rule.lhs) lhs_text += (lhs_text.empty() ? "" : " ") + t;
    if (normalize_text(rule.rhs) == lhs_text) {
      throw FormatError(source, line_no, "rule does not change its input");
    }
    if (!seen.insert(rule.lhs).second) {
      throw DuplicateRule(source + ":" + std::to_string(line_no) + ": duplicate rule for '" +
                          std::string(trim(content.substr(0, arrow))) + "'");
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<SubstitutionRule> load_rules(const std::filesystem::path& path) {
  return parse_rules(read_file(path), path.string());
}

std::vector<Paraphrase> apply_rules_single(std::string_view query, const std::vector<SubstitutionRule>& rules) {
  const auto tokens = tokenize(query);
  std::vector<Paraphrase> out;
  for (const auto& rule : rules) {
    const auto matches = find_matches(tokens, rule);
    if (matches.empty()) continue;
    std::vector<Edit> edits;
    for (const auto& m : matches) edits.push_back(edit_for(m, tokens));
    auto text = apply_edits(query, std::move(edits));
    if (normalize_text(text).empty()) continue;
    out.push_back({std::move(text), Method::kRuleOne, rule.describe()});
  }
  return out;
}

std::vector<Paraphrase> apply_rules_all(std::string_view query, const std::vector<SubstitutionRule>& rules) {
  const auto tokens = tokenize(query);
  std::vector<bool> claimed(tokens.size(), false);
  std::vector<Edit> edits;
  std::string provenance;
  std::size_t rules_applied = 0;
  for (const auto& rule : rules) {
    bool used = false;
    for (const auto& m : find_matches(tokens, rule)) {
      // Earlier rules win overlapping spans.
      if (std::any_of(claimed.begin() + static_cast<std::ptrdiff_t>(m.first_token),
                      claimed.begin() + static_cast<std::ptrdiff_t>(m.last_token + 1), [](bool b) { return b; })) {
        continue;
      }
      std::fill(claimed.begin() + static_cast<std::ptrdiff_t>(m.first_token),
                claimed.begin() + static_cast<std::ptrdiff_t>(m.last_token + 1), true);
      edits.push_back(edit_for(m, tokens));
      used = true;
    }
    if (used) {
      ++rules_applied;
      if (!provenance.empty()) provenance += "; ";
      provenance += rule.describe();
    }
  }
  if (rules_applied < 2) return {};
  auto text = apply_edits(query, std::move(edits));
  if (normalize_text(text).empty()) return {};
  return {{std::move(text), Method::kRuleAll, std::move(provenance)}};
}

std::vector<Paraphrase> substitute_embeddings(std::string_view query, const EmbeddingStore& store,
                                              const PosLexicon& lexicon, const EmbeddingSubstitution& options) {
  std::vector<Paraphrase> out;
  if (options.cap == 0) return out;
  const auto tokens = tokenize(query, lexicon);
  for (const auto& token : tokens) {
    if (token.pos != Pos::kNoun && token.pos != Pos::kVerb) continue;
    if (!store.contains(token.normalized)) continue;
    for (const auto& n : store.nearest(token.normalized, options.k, token.pos, lexicon)) {
      if (n.similarity < options.min_sim) continue;
      auto text = apply_edits(query, {{token.begin, token.end, match_case(n.word, token.surface)}});
      out.push_back({std::move(text), Method::kEmbedding, token.normalized + " -> " + n.word});
      if (out.size() == options.cap) return out;
    }
  }
  return out;
}

std::vector<Paraphrase> back_translate(std::string_view query, Translator& translator, const std::string& pivot,
                                       const std::string& source_lang) {
  const std::string source(query);
  const auto forward = translator.translate(source, source_lang, pivot);
  auto back = std::string(trim(translator.translate(forward, pivot, source_lang)));
  const auto normalized = normalize_text(back);
  if (normalized.empty() || normalized == normalize_text(query)) return {};
  return {{std::move(back), Method::kBackTranslation, "pivot=" + pivot}};
}

bool ExpansionConfig::enabled(Method m) const {
  switch (m) {
    case Method::kOriginal: return true;
    case Method::kRuleOne: return rule_one;
    case Method::kRuleAll: return rule_all;
    case Method::kEmbedding: return embedding;
    case Method::kBackTranslation: return back_translation;
  }
  return false;
}

Expander::Expander(ExpansionConfig config, const std::vector<SubstitutionRule>* rules, const EmbeddingStore* store,
                   const PosLexicon* lexicon, Translator* translator)
    : config_(std::move(config)), rules_(rules), store_(store), lexicon_(lexicon), translator_(translator) {}

Expander Expander::with_config(ExpansionConfig config) const {
  return Expander(std::move(config), rules_, store_, lexicon_, translator_);
}

ParaphraseSet Expander::expand(const QueryRecord& query) const { return expand(query.text, query.id); }

ParaphraseSet Expander::expand(std::string_view question, std::string query_id) const {
  ParaphraseSet set;
  set.query_id = std::move(query_id);
  std::set<std::string> seen;
  const auto add = [&](Paraphrase p) {
    auto key = normalize_text(p.text);
    if (key.empty() && p.method != Method::kOriginal) return;
    if (seen.insert(std::move(key)).second) set.items.push_back(std::move(p));
  };
  add({std::string(question), Method::kOriginal, "query"});

  if (rules_ != nullptr) {
    if (config_.rule_one) {
      for (auto& p : apply_rules_single(question, *rules_)) add(std::move(p));
    }
    if (config_.rule_all) {
      for (auto& p : apply_rules_all(question, *rules_)) add(std::move(p));
    }
  }
  if (config_.embedding && store_ != nullptr && lexicon_ != nullptr) {
    for (auto& p : substitute_embeddings(question, *store_, *lexicon_, config_.embedding_options)) add(std::move(p));
  }
  if (config_.back_translation && translator_ != nullptr) {
    try {
      for (auto& p : back_translate(question, *translator_, config_.pivot)) add(std::move(p));
    } catch (const TranslatorUnavailable& e) {
      const std::string id = set.query_id.empty() ? std::string("<adhoc>") : set.query_id;
      if (config_.strict) throw TranslatorUnavailable("query " + id + ": " + e.what());
      std::clog << "warning: back-translation skipped for query " << id << ": " << e.what() << '\n';
    }
  }
  return set;
}

}  // namespace pae
