#include "pae/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "pae/errors.hpp"

namespace pae {
namespace {

bool is_ascii_word(unsigned char c) { return std::isalnum(c) != 0; }

// Length of a UTF-8 punctuation/space sequence starting at text[i], or 0.
// Covers the quotes, dashes and spaces that show up in scraped policies.
std::size_t unicode_separator_length(std::string_view text, std::size_t i) {
  static constexpr std::string_view kSeparators[] = {
      " ", "‘", "’", "“", "”", "–", "—", "…", "«", "»",
  };
  for (std::string_view sep : kSeparators) {
    if (text.substr(i, sep.size()) == sep) return sep.size();
  }
  return 0;
}

// Returns the byte length of the word character at i, 0 if it is not one.
std::size_t word_char_length(std::string_view text, std::size_t i) {
  const auto c = static_cast<unsigned char>(text[i]);
  if (c < 0x80) return is_ascii_word(c) ? 1 : 0;
  if (unicode_separator_length(text, i) > 0) return 0;
  std::size_t len = 1;
  if ((c & 0xE0) == 0xC0) len = 2;
  else if ((c & 0xF0) == 0xE0) len = 3;
  else if ((c & 0xF8) == 0xF0) len = 4;
  return std::min(len, text.size() - i);
}

bool is_joiner(char c) { return c == '\'' || c == '-'; }

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::optional<std::size_t> parse_index(std::string_view s) {
  s = trim(s);
  std::size_t value = 0;
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), last, value);
  if (ec != std::errc() || ptr != last || s.empty()) return std::nullopt;
  return value;
}

// Character (code point) offset to byte offset.
std::optional<std::size_t> char_to_byte_offset(std::string_view text, std::size_t chars) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
    if (seen == chars) return i;
    ++seen;
  }
  if (seen == chars) return text.size();
  return std::nullopt;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string_view to_string(Pos pos) {
  switch (pos) {
    case Pos::kNoun: return "NOUN";
    case Pos::kVerb: return "VERB";
    case Pos::kAdj: return "ADJ";
    case Pos::kOther: return "OTHER";
  }
  return "OTHER";
}

std::optional<Pos> parse_pos(std::string_view tag) {
  if (tag == "NOUN") return Pos::kNoun;
  if (tag == "VERB") return Pos::kVerb;
  if (tag == "ADJ") return Pos::kAdj;
  if (tag == "OTHER") return Pos::kOther;
  return std::nullopt;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PosLexicon PosLexicon::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

PosLexicon PosLexicon::parse(std::string_view text, const std::string& source) {
  PosLexicon lexicon;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto tab = content.find('\t');
    if (tab == std::string_view::npos) throw FormatError(source, line_no, "expected word<TAB>TAG");
    const auto word = trim(content.substr(0, tab));
    const auto tag = parse_pos(trim(content.substr(tab + 1)));
    if (word.empty() || !tag) throw FormatError(source, line_no, "bad lexicon entry");
    lexicon.insert(lowercase(word), *tag);
  }
  return lexicon;
}

void PosLexicon::insert(std::string word, Pos pos) { tags_[std::move(word)] = pos; }

Pos PosLexicon::tag(std::string_view normalized) const {
  const auto it = tags_.find(std::string(normalized));
  return it == tags_.end() ? Pos::kOther : it->second;
}

std::vector<Token> tokenize(std::string_view text, const PosLexicon& lexicon) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = word_char_length(text, i);
    if (len == 0) {
      const std::size_t sep = unicode_separator_length(text, i);
      i += sep > 0 ? sep : 1;
      continue;
    }
    const std::size_t begin = i;
    i += len;
    while (i < text.size()) {
      if ((len = word_char_length(text, i)) > 0) {
        i += len;
      } else if (is_joiner(text[i]) && i + 1 < text.size() && word_char_length(text, i + 1) > 0) {
        ++i;
      } else {
        break;
      }
    }
    Token token;
    token.surface = std::string(text.substr(begin, i - begin));
    token.normalized = lowercase(token.surface);
    token.pos = lexicon.tag(token.normalized);
    token.begin = begin;
    token.end = i;
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::vector<Token> tokenize(std::string_view text) {
  static const PosLexicon kEmpty;
  return tokenize(text, kEmpty);
}

std::string normalize_text(std::string_view text) {
  std::string out;
  for (const auto& token : tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += token.normalized;
  }
  return out;
}

PolicyDocument ingest_policy(std::string id, const std::vector<std::string>& segments,
                             const PosLexicon& lexicon, std::string title) {
  PolicyDocument doc;
  doc.id = std::move(id);
  doc.title = std::move(title);
  for (const auto& raw : segments) {
    const auto text = trim(raw);
    if (text.empty()) continue;
    Segment seg;
    seg.policy_id = doc.id;
    seg.index = doc.segments.size();
    seg.text = std::string(text);
    seg.tokens = tokenize(seg.text, lexicon);
    doc.segments.push_back(std::move(seg));
  }
  if (doc.segments.empty()) throw EmptyPolicy("policy '" + doc.id + "' has no non-empty segments");
  return doc;
}

PolicyDocument ingest_policy(std::string id, std::string_view raw, const PosLexicon& lexicon,
                             std::string title) {
  std::vector<std::string> paragraphs;
  std::string current;
  std::istringstream in{std::string(raw)};
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (trim(line).empty()) {
      if (!current.empty()) paragraphs.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (!current.empty()) current += '\n';
    current += line;
  }
  if (!current.empty()) paragraphs.push_back(std::move(current));
  return ingest_policy(std::move(id), paragraphs, lexicon, std::move(title));
}

const PolicyDocument* Dataset::find_policy(std::string_view id) const {
  for (const auto& p : policies) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

namespace {

struct PrivacyQaRow {
  std::size_t line = 0;
  std::string doc_id;
  std::string query_id;
  std::string query;
  std::size_t segment_id = 0;
  std::string segment;
  bool relevant = false;
};

std::vector<PrivacyQaRow> read_privacyqa_rows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string source = path.string();
  std::vector<PrivacyQaRow> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line_no == 1) {
      columns = split_tabs(line).size();
      if (columns < 6) throw FormatError(source, line_no, "header needs at least 6 columns");
      continue;
    }
    if (trim(line).empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != columns) {
      throw FormatError(source, line_no,
                        "expected " + std::to_string(columns) + " columns, got " + std::to_string(fields.size()));
    }
    PrivacyQaRow row;
    row.line = line_no;
    row.doc_id = std::string(trim(fields[0]));
    row.query_id = std::string(trim(fields[1]));
    row.query = std::string(trim(fields[2]));
    if (row.doc_id.empty()) throw FormatError(source, line_no, "missing DocID");
    if (row.query_id.empty()) throw FormatError(source, line_no, "missing QueryID");
    if (row.query.empty()) throw FormatError(source, line_no, "missing Query");
    const auto seg_id = parse_index(fields[3]);
    if (!seg_id) throw FormatError(source, line_no, "SegmentID must be a non-negative integer");
    row.segment_id = *seg_id;
    row.segment = std::string(trim(fields[4]));
    for (std::size_t c = 5; c < fields.size(); ++c) {
      const auto label = trim(fields[c]);
      if (label == "Relevant") {
        row.relevant = true;
      } else if (label != "Irrelevant" && label != "None" && !label.empty()) {
        throw FormatError(source, line_no, "annotation must be Relevant or Irrelevant, got '" +
                                               std::string(label) + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (line_no == 0) throw FormatError(source, 0, "empty file");
  return rows;
}

std::vector<QueryRecord> collect_queries(const std::vector<PrivacyQaRow>& rows, const std::string& source) {
  std::vector<QueryRecord> queries;
  std::map<std::pair<std::string, std::string>, std::size_t> by_key;
  for (const auto& row : rows) {
    const auto key = std::make_pair(row.doc_id, row.query_id);
    auto [it, inserted] = by_key.try_emplace(key, queries.size());
    if (inserted) {
      queries.push_back(QueryRecord{row.query_id, row.doc_id, row.query, {}});
    } else if (queries[it->second].text != row.query) {
      throw FormatError(source, row.line, "query " + row.query_id + " has conflicting text");
    }
    if (row.relevant) queries[it->second].relevant_indices.insert(row.segment_id);
  }
  return queries;
}

}  // namespace

Dataset load_privacyqa(const std::filesystem::path& path, const PosLexicon& lexicon) {
  const auto rows = read_privacyqa_rows(path);
  const std::string source = path.string();

  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, std::pair<std::string, std::size_t>>> texts;
  for (const auto& row : rows) {
    if (!texts.count(row.doc_id)) order.push_back(row.doc_id);
    auto& segs = texts[row.doc_id];
    if (row.segment.empty()) throw FormatError(source, row.line, "empty Segment text");
    auto [it, inserted] = segs.try_emplace(row.segment_id, row.segment, row.line);
    if (!inserted && it->second.first != row.segment) {
      throw FormatError(source, row.line,
                        "segment " + std::to_string(row.segment_id) + " of " + row.doc_id + " has conflicting text");
    }
  }

  Dataset dataset;
  for (const auto& doc_id : order) {
    std::vector<std::string> segments;
    for (const auto& [index, text_line] : texts[doc_id]) {
      if (index != segments.size()) {
        throw FormatError(source, text_line.second,
                          "segment ids of " + doc_id + " are not contiguous from 0 (missing " +
                              std::to_string(segments.size()) + ")");
      }
      segments.push_back(text_line.first);
    }
    dataset.policies.push_back(ingest_policy(doc_id, segments, lexicon, doc_id));
    if (dataset.policies.back().size() != segments.size()) {
      throw FormatError(source, 0, "policy " + doc_id + " contains blank segments");
    }
  }
  dataset.queries = collect_queries(rows, source);
  return dataset;
}

Dataset load_privacyqa(const std::filesystem::path& path, const std::vector<PolicyDocument>& known,
                       const PosLexicon& lexicon) {
  (void)lexicon;
  const auto rows = read_privacyqa_rows(path);
  const std::string source = path.string();
  Dataset dataset;
  std::set<std::string> used;
  for (const auto& row : rows) {
    const auto it = std::find_if(known.begin(), known.end(), [&](const auto& p) { return p.id == row.doc_id; });
    if (it == known.end()) {
      throw UnknownPolicy(source + ":" + std::to_string(row.line) + ": unknown policy '" + row.doc_id + "'");
    }
    if (row.segment_id >= it->size()) {
      throw FormatError(source, row.line,
                        "segment " + std::to_string(row.segment_id) + " out of range for " + row.doc_id);
    }
    if (used.insert(row.doc_id).second) dataset.policies.push_back(*it);
  }
  dataset.queries = collect_queries(rows, source);
  return dataset;
}

std::vector<SpanRecord> parse_policyqa(std::string_view json_text, const std::string& source) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(source, 0, e.what());
  }
  std::vector<SpanRecord> records;
  try {
    for (const auto& article : root.at("data")) {
      for (const auto& para : article.at("paragraphs")) {
        const auto context = para.at("context").get<std::string>();
        for (const auto& qa : para.at("qas")) {
          const auto question = qa.at("question").get<std::string>();
          const auto id = qa.contains("id") ? qa.at("id").get<std::string>() : std::string();
          for (const auto& answer : qa.at("answers")) {
            SpanRecord rec;
            rec.id = id;
            rec.question = question;
            rec.passage = context;
            rec.answer_text = answer.at("text").get<std::string>();
            const auto chars = answer.at("answer_start").get<long long>();
            const auto bytes = chars < 0 ? std::nullopt : char_to_byte_offset(context, static_cast<std::size_t>(chars));
            if (!bytes || context.compare(*bytes, rec.answer_text.size(), rec.answer_text) != 0) {
              throw SpanMismatch(source + ": record '" + id + "': answer_start " + std::to_string(chars) +
                                 " does not point at '" + rec.answer_text + "'");
            }
            rec.answer_start = *bytes;
            records.push_back(std::move(rec));
          }
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source, 0, e.what());
  }
  return records;
}

std::vector<SpanRecord> load_policyqa(const std::filesystem::path& path) {
  return parse_policyqa(read_file(path), path.string());
}

}  // namespace pae
