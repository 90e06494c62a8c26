#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pae/corpus.hpp"
#include "pae/expansion.hpp"
#include "pae/scoring.hpp"

namespace pae {

enum class Transform { kIdentity, kLogistic };
enum class Aggregation { kMax, kMean };
enum class PresentationOrder { kRank, kDocument };

std::string_view to_string(Transform t);
std::string_view to_string(Aggregation a);
std::string_view to_string(PresentationOrder o);
std::optional<Transform> parse_transform(std::string_view s);
std::optional<Aggregation> parse_aggregation(std::string_view s);
std::optional<PresentationOrder> parse_order(std::string_view s);

// R + I, or R + σ(I) under kLogistic.
double answerability(double relevance, double informativeness, Transform transform = Transform::kIdentity);

struct Aggregate {
  double score = 0.0;
  std::size_t winner = 0;  // index of the maximal element, earliest on ties
};

// Throws EmptyParaphraseSet on empty input.
Aggregate aggregate(std::span<const double> scores, Aggregation mode);

struct RankingConfig {
  Aggregation aggregation = Aggregation::kMax;
  Transform transform = Transform::kIdentity;
  bool ablate_informativeness = false;
  bool ablate_expansion = false;
  double tau = 0.0;
};

struct SegmentAnswerability {
  std::size_t segment_index = 0;
  double score = 0.0;
  std::size_t winner = 0;  // index into the scored paraphrase set
  Paraphrase winning_paraphrase;
  double winning_relevance = 0.0;
  double winning_informativeness = 0.0;
  Span best_span;
  bool answerable = false;
};

// Scores for every (paraphrase, segment) pair, row-major by paraphrase.
struct ScoreMatrix {
  std::size_t n_paraphrases = 0;
  std::size_t n_segments = 0;
  std::vector<ScoredPair> pairs;

  const ScoredPair& at(std::size_t paraphrase, std::size_t segment) const {
    return pairs[paraphrase * n_segments + segment];
  }
};

ScoreMatrix score_pairs(const PolicyDocument& policy, const ParaphraseSet& pset, const Scorer& scorer, double tau);

// Pure reduction of a score matrix: aggregation per segment, then descending
// score with ties by segment index.
std::vector<SegmentAnswerability> rank_matrix(const ScoreMatrix& matrix, const ParaphraseSet& pset,
                                              const RankingConfig& config);

// With ablate_expansion only the ORIGINAL item is scored.
std::vector<SegmentAnswerability> rank_segments(const PolicyDocument& policy, const ParaphraseSet& pset,
                                                const Scorer& scorer, const RankingConfig& config);

struct SummaryEntry {
  std::size_t rank = 0;  // 1-based position in the ranking
  std::size_t segment_index = 0;
  double score = 0.0;
  Paraphrase winning_paraphrase;
  Span best_span;
};

struct Summary {
  std::string query_id;
  PresentationOrder order = PresentationOrder::kRank;
  std::vector<SummaryEntry> entries;
};

// Throws ConfigError for k == 0.
Summary build_summary(std::string query_id, const std::vector<SegmentAnswerability>& ranked, std::size_t k,
                      PresentationOrder order = PresentationOrder::kRank);

// Segment texts of the summary joined by blank lines.
std::string summary_text(const Summary& summary, const PolicyDocument& policy);

// One JSON object per line: query_id, segment_index, rank, score (9 dp), winner_method.
void write_ranking_golden(std::ostream& out, std::string_view query_id,
                          const std::vector<SegmentAnswerability>& ranked);

}  // namespace pae
