#pragma once

// Test-only helpers: a mock scorer service, a planted-answer corpus generator
// and brute-force oracles that share no code with the library paths they check.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "pae/corpus.hpp"
#include "pae/scoring.hpp"

namespace pae::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("pae-test-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// HTTP server speaking the scorer protocol; handlers are swappable.
class MockScorerServer {
 public:
  using Handler = std::function<void(const nlohmann::json& request, httplib::Response& res)>;

  MockScorerServer() {
    server_.Post("/v1/relevance", [this](const httplib::Request& req, httplib::Response& res) {
      ++relevance_calls;
      relevance(nlohmann::json::parse(req.body), res);
    });
    server_.Post("/v1/spans", [this](const httplib::Request& req, httplib::Response& res) {
      ++span_calls;
      spans(nlohmann::json::parse(req.body), res);
    });
    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(nlohmann::json{{"status", "ok"}, {"model", "mock"}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockScorerServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  static void reply(httplib::Response& res, const nlohmann::json& body) {
    res.set_content(body.dump(), "application/json");
  }
  static void reply_raw(httplib::Response& res, const std::string& body) { res.set_content(body, "application/json"); }

  Handler relevance = [](const nlohmann::json& req, httplib::Response& res) {
    reply(res, {{"scores", std::vector<double>(req["pairs"].size(), 0.5)}});
  };
  Handler spans = [](const nlohmann::json& req, httplib::Response& res) {
    nlohmann::json results = nlohmann::json::array();
    for (std::size_t i = 0; i < req["pairs"].size(); ++i) {
      results.push_back({{"tokens", {"a"}}, {"start_logits", {0.0}}, {"end_logits", {0.0}}, {"null_score", 0.0}});
    }
    reply(res, {{"results", results}});
  };

  std::atomic<int> relevance_calls{0};
  std::atomic<int> span_calls{0};

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// Lowercase alphanumeric runs; only valid for the plain-ASCII fixtures below.
inline std::vector<std::string> oracle_terms(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text + " ") {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  return out;
}

// tf-idf cosine plus 2 * max idf of shared terms, computed from raw text.
inline double oracle_lexical_answerability(const std::string& question, const std::vector<std::string>& segments,
                                           std::size_t target) {
  const double n = static_cast<double>(segments.size());
  std::map<std::string, double> df;
  for (const auto& s : segments) {
    const auto terms = oracle_terms(s);
    for (const auto& t : std::set<std::string>(terms.begin(), terms.end())) df[t] += 1.0;
  }
  const auto idf = [&](const std::string& t) { return std::log(1.0 + n / std::max(1.0, df[t])); };
  std::map<std::string, double> q, s;
  for (const auto& t : oracle_terms(question)) q[t] += 1.0;
  for (const auto& t : oracle_terms(segments[target])) s[t] += 1.0;
  double dot = 0, nq = 0, ns = 0, best_idf = 0;
  for (auto& [t, w] : q) {
    const double wq = w * idf(t);
    nq += wq * wq;
    if (s.count(t)) {
      dot += wq * s[t] * idf(t);
      best_idf = std::max(best_idf, idf(t));
    }
  }
  for (auto& [t, w] : s) ns += (w * idf(t)) * (w * idf(t));
  const double rel = (dot == 0 || nq == 0 || ns == 0) ? 0.0 : dot / std::sqrt(nq * ns);
  return rel + 2.0 * best_idf;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "lorem",     "ipsum",   "dolor",     "amet",     "consectetur", "adipiscing", "elit",      "eiusmod",
      "tempor",    "incididunt", "labore", "dolore",   "magna",       "aliqua",     "enim",      "minim",
      "veniam",    "quis",    "nostrud",   "exercitation", "ullamco", "laboris",    "nisi",      "aliquip",
      "commodo",   "consequat", "duis",    "aute",     "irure",       "reprehenderit", "voluptate", "velit",
      "esse",      "cillum",  "fugiat",    "nulla",    "pariatur",    "excepteur",  "sint",      "occaecat",
  };
  return words;
}

struct PlantedCorpus {
  Dataset dataset;
  std::vector<std::vector<std::string>> segment_texts;  // per policy
  std::vector<std::size_t> planted;                      // per query
};

// Each query "does the app collect my <u1> <u2>?" has unique words u1, u2 that
// appear only in its planted segment; every other segment is filler.
inline PlantedCorpus make_planted_corpus(std::size_t n_policies, std::size_t n_segments, std::size_t queries_per_policy,
                                         std::uint64_t seed, const PosLexicon& lexicon) {
  std::mt19937_64 rng(seed);
  const auto& filler = filler_words();
  PlantedCorpus out;
  for (std::size_t p = 0; p < n_policies; ++p) {
    std::vector<std::string> segments;
    for (std::size_t s = 0; s < n_segments; ++s) {
      std::string text;
      const std::size_t len = 8 + rng() % 8;
      for (std::size_t w = 0; w < len; ++w) text += (w ? " " : "") + filler[rng() % filler.size()];
      segments.push_back(text + ".");
    }
    const std::string policy_id = "policy" + std::to_string(p);
    std::vector<std::size_t> used;
    for (std::size_t q = 0; q < queries_per_policy; ++q) {
      std::size_t target;
      do {
        target = rng() % n_segments;
      } while (std::find(used.begin(), used.end(), target) != used.end());
      used.push_back(target);
      const std::string u1 = "plant" + std::to_string(p) + "x" + std::to_string(q) + "a";
      const std::string u2 = "plant" + std::to_string(p) + "x" + std::to_string(q) + "b";
      segments[target].pop_back();
      segments[target] += " " + u1 + " " + u2 + ".";
      QueryRecord record;
      record.id = policy_id + "-q" + std::to_string(q);
      record.policy_id = policy_id;
      record.text = "Does the app collect my " + u1 + " " + u2 + "?";
      record.relevant_indices = {target};
      out.dataset.queries.push_back(record);
      out.planted.push_back(target);
    }
    out.dataset.policies.push_back(ingest_policy(policy_id, segments, lexicon, "Policy " + std::to_string(p)));
    out.segment_texts.push_back(segments);
  }
  return out;
}

// Writes a dataset in the PrivacyQA adapter format with two annotator columns.
inline void write_privacyqa(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  out << "DocID\tQueryID\tQuery\tSegmentID\tSegment\tAnn1\tAnn2\n";
  for (const auto& q : dataset.queries) {
    const auto* policy = dataset.find_policy(q.policy_id);
    for (const auto& s : policy->segments) {
      const bool rel = q.relevant_indices.count(s.index) > 0;
      out << q.policy_id << '\t' << q.id << '\t' << q.text << '\t' << s.index << '\t' << s.text << '\t'
          << (rel ? "Relevant" : "Irrelevant") << "\tIrrelevant\n";
    }
  }
}

// O(n^2) enumeration; strict '>' in (a, b) order keeps the smallest a, then b.
struct BruteSpan {
  double score;
  std::size_t start;
  std::size_t end;
};

inline BruteSpan brute_force_span(const std::vector<double>& start, const std::vector<double>& end) {
  BruteSpan best{start[0] + end[0], 0, 0};
  for (std::size_t a = 0; a < start.size(); ++a) {
    for (std::size_t b = a; b < end.size(); ++b) {
      if (start[a] + end[b] > best.score) best = {start[a] + end[b], a, b};
    }
  }
  return best;
}

inline double brute_precision(const std::vector<std::size_t>& ranked, const std::set<std::size_t>& rel, std::size_t k) {
  double hits = 0;
  for (std::size_t i = 0; i < k && i < ranked.size(); ++i) hits += rel.count(ranked[i]) ? 1 : 0;
  return 100.0 * hits / static_cast<double>(k);
}

inline double brute_rr(const std::vector<std::size_t>& ranked, const std::set<std::size_t>& rel) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (rel.count(ranked[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

inline double brute_f(const std::vector<std::vector<std::size_t>>& rankings, const std::vector<std::set<std::size_t>>& rel,
                      std::size_t k, bool exclude_out_of_scope) {
  double hits = 0, denom = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (exclude_out_of_scope && rel[q].empty()) continue;
    denom += 1;
    bool found = false;
    for (std::size_t i = 0; i < k && i < rankings[q].size(); ++i) found = found || rel[q].count(rankings[q][i]) > 0;
    hits += found ? 1 : 0;
  }
  return denom == 0 ? 0.0 : 100.0 * hits / denom;
}

}  // namespace pae::testing
