#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pae/corpus.hpp"

namespace pae {

// Per-token span logits from a QA backend. `tokens` are the backend's own
// tokens; span indices refer to them.
struct SpanScores {
  std::vector<std::string> tokens;
  std::vector<double> start_logits;
  std::vector<double> end_logits;
  double null_score = 0.0;

  bool operator==(const SpanScores&) const = default;
};

// Throws ProtocolError unless lengths agree, are >= 1, and all values are finite.
void validate(const SpanScores& spans);

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

struct Informativeness {
  double score = 0.0;
  Span best_span;
  bool answerable = false;
};

// max over a <= b of start[a] + end[b], in one pass. Ties go to the smallest
// a, then the smallest b. answerable <=> score > null_score + tau.
Informativeness informativeness_from_spans(const SpanScores& spans, double tau = 0.0);

struct ScoredPair {
  double relevance = 0.0;
  double informativeness = 0.0;
  Span best_span;
  bool answerable = false;
  double null_score = 0.0;
};

ScoredPair make_scored_pair(double relevance, const SpanScores& spans, double tau = 0.0);

// Document frequencies of normalized terms over one policy's segments.
class TermStats {
 public:
  explicit TermStats(const PolicyDocument& policy);

  std::size_t n_segments() const { return n_; }
  std::size_t df(std::string_view term) const;
  // ln(1 + N/df); terms unseen in the policy use df = 1.
  double idf(std::string_view term) const;

 private:
  std::size_t n_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

// tf-idf unigram cosine, clamped to [0, 1].
double lexical_relevance(std::string_view paraphrase, const Segment& segment, const TermStats& stats);

// start = end = idf(t) for segment tokens present in the paraphrase, else 0.
// null_score = 0.
SpanScores lexical_span_scores(std::string_view paraphrase, const Segment& segment, const TermStats& stats);

struct QuestionSegment {
  std::string question;
  std::size_t segment_index = 0;
};

// A relevance + span backend. Calls are policy-scoped batches and results
// follow request order. Implementations are safe for concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> relevance(const PolicyDocument& policy, std::span<const QuestionSegment> pairs) const = 0;
  virtual std::vector<SpanScores> spans(const PolicyDocument& policy, std::span<const QuestionSegment> pairs) const = 0;
};

class LexicalScorer : public Scorer {
 public:
  std::string name() const override { return "lexical"; }
  std::vector<double> relevance(const PolicyDocument& policy, std::span<const QuestionSegment> pairs) const override;
  std::vector<SpanScores> spans(const PolicyDocument& policy, std::span<const QuestionSegment> pairs) const override;
};

struct RemoteScorerOptions {
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  std::size_t attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds timeout{30000};
};

struct TextPair {
  std::string question;
  std::string segment;
};

struct HealthStatus {
  bool ok = false;
  std::string model;
  std::string detail;
};

// Client for the scorer wire protocol (/v1/relevance, /v1/spans, /v1/health).
class RemoteScorer : public Scorer {
 public:
  explicit RemoteScorer(std::string base_url, RemoteScorerOptions options = {});

  std::string name() const override { return "remote(" + base_url_ + ")"; }
  std::vector<double> relevance(const PolicyDocument& policy, std::span<const QuestionSegment> pairs) const override;
  std::vector<SpanScores> spans(const PolicyDocument& policy, std::span<const QuestionSegment> pairs) const override;

  std::vector<double> relevance_batch(std::span<const TextPair> pairs) const;
  std::vector<SpanScores> span_batch(std::span<const TextPair> pairs) const;
  HealthStatus health() const;

 private:
  std::string post_with_retry(const std::string& path, const std::string& body) const;
  template <typename Result, typename Decode>
  std::vector<Result> chunked(const std::string& path, std::span<const TextPair> pairs, Decode decode) const;

  std::string base_url_;
  RemoteScorerOptions options_;
};

}  // namespace pae
