#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pae {

enum class Pos { kNoun, kVerb, kAdj, kOther };

std::string_view to_string(Pos pos);
std::optional<Pos> parse_pos(std::string_view tag);

struct Token {
  std::string surface;
  std::string normalized;
  Pos pos = Pos::kOther;
  // Byte range of `surface` inside the tokenized text.
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

// word -> tag. Lookups use the normalized (lowercased) form.
class PosLexicon {
 public:
  PosLexicon() = default;

  // "word<TAB>TAG" per line, '#' comments. A repeated word keeps its last tag.
  static PosLexicon load(const std::filesystem::path& path);
  static PosLexicon parse(std::string_view text, const std::string& source = "<lexicon>");

  void insert(std::string word, Pos pos);
  Pos tag(std::string_view normalized) const;
  std::size_t size() const { return tags_.size(); }

 private:
  std::unordered_map<std::string, Pos> tags_;
};

// Splits on whitespace and punctuation. Apostrophes and hyphens joining two
// word characters stay inside the token ("user's", "third-party").
std::vector<Token> tokenize(std::string_view text, const PosLexicon& lexicon);
std::vector<Token> tokenize(std::string_view text);

// Space-joined normalized tokens; the dedup key for paraphrases.
std::string normalize_text(std::string_view text);

std::string lowercase(std::string_view text);
std::string_view trim(std::string_view text);

struct Segment {
  std::string policy_id;
  std::size_t index = 0;
  std::string text;
  std::vector<Token> tokens;

  bool operator==(const Segment&) const = default;
};

struct PolicyDocument {
  std::string id;
  std::string title;
  std::vector<Segment> segments;

  std::size_t size() const { return segments.size(); }
  bool operator==(const PolicyDocument&) const = default;
};

struct QueryRecord {
  std::string id;
  std::string policy_id;
  std::string text;
  std::set<std::size_t> relevant_indices;

  bool out_of_scope() const { return relevant_indices.empty(); }
  bool operator==(const QueryRecord&) const = default;
};

// Blank-line split of raw text; empty segments dropped. Throws EmptyPolicy.
PolicyDocument ingest_policy(std::string id, std::string_view raw, const PosLexicon& lexicon,
                             std::string title = {});
PolicyDocument ingest_policy(std::string id, const std::vector<std::string>& segments,
                             const PosLexicon& lexicon, std::string title = {});

struct Dataset {
  std::vector<PolicyDocument> policies;
  std::vector<QueryRecord> queries;

  const PolicyDocument* find_policy(std::string_view id) const;
};

// Tab-separated: DocID, QueryID, Query, SegmentID, Segment, Ann1..AnnN.
// Policies are assembled from the rows.
Dataset load_privacyqa(const std::filesystem::path& path, const PosLexicon& lexicon);
// Rows are checked against `known` policies; unseen DocID -> UnknownPolicy.
Dataset load_privacyqa(const std::filesystem::path& path, const std::vector<PolicyDocument>& known,
                       const PosLexicon& lexicon);

struct SpanRecord {
  std::string id;
  std::string question;
  std::string passage;
  // Byte offset into `passage`; converted from the character offset on load.
  std::size_t answer_start = 0;
  std::string answer_text;

  bool operator==(const SpanRecord&) const = default;
};

// Reading-comprehension JSON ({"data":[{"paragraphs":[{"context","qas"}]}]}).
std::vector<SpanRecord> load_policyqa(const std::filesystem::path& path);
std::vector<SpanRecord> parse_policyqa(std::string_view json_text, const std::string& source = "<policyqa>");

std::string read_file(const std::filesystem::path& path);

}  // namespace pae
