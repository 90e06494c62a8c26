#include "pae/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "pae/errors.hpp"

namespace pae {

std::string_view to_string(Transform t) { return t == Transform::kIdentity ? "identity" : "logistic"; }
std::string_view to_string(Aggregation a) { return a == Aggregation::kMax ? "max" : "mean"; }
std::string_view to_string(PresentationOrder o) { return o == PresentationOrder::kRank ? "rank" : "document"; }

std::optional<Transform> parse_transform(std::string_view s) {
  if (s == "identity") return Transform::kIdentity;
  if (s == "logistic") return Transform::kLogistic;
  return std::nullopt;
}

std::optional<Aggregation> parse_aggregation(std::string_view s) {
  if (s == "max") return Aggregation::kMax;
  if (s == "mean") return Aggregation::kMean;
  return std::nullopt;
}

std::optional<PresentationOrder> parse_order(std::string_view s) {
  if (s == "rank") return PresentationOrder::kRank;
  if (s == "document") return PresentationOrder::kDocument;
  return std::nullopt;
}

double answerability(double relevance, double informativeness, Transform transform) {
  if (transform == Transform::kLogistic) return relevance + sigmoid(informativeness);
  return relevance + informativeness;
}

Aggregate aggregate(std::span<const double> scores, Aggregation mode) {
  if (scores.empty()) throw EmptyParaphraseSet("cannot aggregate an empty paraphrase set");
  Aggregate out;
  out.score = scores[0];
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sum += scores[i];
    if (scores[i] > out.score) {
      out.score = scores[i];
      out.winner = i;
    }
  }
  if (mode == Aggregation::kMean) out.score = sum / static_cast<double>(scores.size());
  return out;
}

ScoreMatrix score_pairs(const PolicyDocument& policy, const ParaphraseSet& pset, const Scorer& scorer, double tau) {
  std::vector<QuestionSegment> requests;
  requests.reserve(pset.size() * policy.size());
  for (const auto& p : pset.items) {
    for (std::size_t s = 0; s < policy.size(); ++s) requests.push_back({p.text, s});
  }
  const auto context = [&] { return "query " + pset.query_id + " on policy " + policy.id + ": "; };
  std::vector<double> relevance;
  std::vector<SpanScores> spans;
  try {
    relevance = scorer.relevance(policy, requests);
    spans = scorer.spans(policy, requests);
  } catch (const ScorerUnavailable& e) {
    throw ScorerUnavailable(context() + e.what());
  } catch (const ScoreOutOfRange& e) {
    throw ScoreOutOfRange(context() + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(context() + e.what());
  }
  if (relevance.size() != requests.size() || spans.size() != requests.size()) {
    throw ProtocolError(context() + "scorer returned the wrong number of results");
  }

  ScoreMatrix matrix{pset.size(), policy.size(), {}};
  matrix.pairs.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const double r = relevance[i];
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ScoreOutOfRange(context() + "relevance " + std::to_string(r) + " for segment " +
                            std::to_string(requests[i].segment_index));
    }
    validate(spans[i]);
    matrix.pairs.push_back(make_scored_pair(r, spans[i], tau));
  }
  return matrix;
}

std::vector<SegmentAnswerability> rank_matrix(const ScoreMatrix& matrix, const ParaphraseSet& pset,
                                              const RankingConfig& config) {
  if (matrix.n_paraphrases == 0) throw EmptyParaphraseSet("query " + pset.query_id + " has no paraphrases");
  std::vector<SegmentAnswerability> ranked;
  ranked.reserve(matrix.n_segments);
  // Row 0 is the ORIGINAL query.
  const std::size_t rows = config.ablate_expansion ? 1 : matrix.n_paraphrases;
  std::vector<double> column(rows);
  for (std::size_t s = 0; s < matrix.n_segments; ++s) {
    for (std::size_t p = 0; p < rows; ++p) {
      const auto& pair = matrix.at(p, s);
      const double info = config.ablate_informativeness ? 0.0 : pair.informativeness;
      column[p] = answerability(pair.relevance, info, config.transform);
    }
    const auto agg = aggregate(column, config.aggregation);
    const auto& win = matrix.at(agg.winner, s);
    SegmentAnswerability entry;
    entry.segment_index = s;
    entry.score = agg.score;
    entry.winner = agg.winner;
    entry.winning_paraphrase = pset.items.at(agg.winner);
    entry.winning_relevance = win.relevance;
    entry.winning_informativeness = config.ablate_informativeness ? 0.0 : win.informativeness;
    entry.best_span = win.best_span;
    entry.answerable = win.answerable;
    ranked.push_back(std::move(entry));
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.segment_index < b.segment_index;
  });
  return ranked;
}

std::vector<SegmentAnswerability> rank_segments(const PolicyDocument& policy, const ParaphraseSet& pset,
                                                const Scorer& scorer, const RankingConfig& config) {
  if (policy.size() == 0) throw EmptyPolicy("policy " + policy.id + " has no segments");
  if (pset.items.empty()) throw EmptyParaphraseSet("query " + pset.query_id + " has no paraphrases");
  if (config.ablate_expansion) {
    ParaphraseSet original{pset.query_id, {pset.original()}};
    return rank_matrix(score_pairs(policy, original, scorer, config.tau), original, config);
  }
  return rank_matrix(score_pairs(policy, pset, scorer, config.tau), pset, config);
}

Summary build_summary(std::string query_id, const std::vector<SegmentAnswerability>& ranked, std::size_t k,
                      PresentationOrder order) {
  if (k == 0) throw ConfigError("k must be at least 1");
  Summary summary;
  summary.query_id = std::move(query_id);
  summary.order = order;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = ranked[i];
    summary.entries.push_back({i + 1, r.segment_index, r.score, r.winning_paraphrase, r.best_span});
  }
  if (order == PresentationOrder::kDocument) {
    std::sort(summary.entries.begin(), summary.entries.end(),
              [](const auto& a, const auto& b) { return a.segment_index < b.segment_index; });
  }
  return summary;
}

std::string summary_text(const Summary& summary, const PolicyDocument& policy) {
  std::string out;
  for (const auto& e : summary.entries) {
    if (!out.empty()) out += "\n\n";
    out += policy.segments.at(e.segment_index).text;
  }
  return out;
}

void write_ranking_golden(std::ostream& out, std::string_view query_id,
                          const std::vector<SegmentAnswerability>& ranked) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& r = ranked[i];
    char score[64];
    std::snprintf(score, sizeof score, "%.9f", r.score);
    out << "{\"query_id\":" << nlohmann::json(std::string(query_id)).dump() << ",\"segment_index\":" << r.segment_index
        << ",\"rank\":" << i + 1 << ",\"score\":" << score << ",\"winner_method\":\""
        << to_string(r.winning_paraphrase.method) << "\"}\n";
  }
}

}  // namespace pae
