#include "pae/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pae/errors.hpp"

namespace pae {

void validate(const SpanScores& spans) {
  const std::size_t n = spans.tokens.size();
  if (n == 0) throw ProtocolError("span scores have no tokens");
  if (spans.start_logits.size() != n || spans.end_logits.size() != n) {
    throw ProtocolError("span scores misaligned: " + std::to_string(n) + " tokens, " +
                        std::to_string(spans.start_logits.size()) + " start logits, " +
                        std::to_string(spans.end_logits.size()) + " end logits");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(spans.start_logits.begin(), spans.start_logits.end(), finite) ||
      !std::all_of(spans.end_logits.begin(), spans.end_logits.end(), finite) || !std::isfinite(spans.null_score)) {
    throw ProtocolError("span scores contain a non-finite value");
  }
}

Informativeness informativeness_from_spans(const SpanScores& spans, double tau) {
  const auto& start = spans.start_logits;
  const auto& end = spans.end_logits;
  Informativeness best;
  std::size_t prefix_arg = 0;
  for (std::size_t b = 0; b < end.size(); ++b) {
    if (start[b] > start[prefix_arg]) prefix_arg = b;
    const double candidate = start[prefix_arg] + end[b];
    // b only grows, so an equal score replaces the incumbent only when it
    // starts earlier.
    if (b == 0 || candidate > best.score || (candidate == best.score && prefix_arg < best.best_span.start)) {
      best.score = candidate;
      best.best_span = {prefix_arg, b};
    }
  }
  best.answerable = best.score > spans.null_score + tau;
  return best;
}

ScoredPair make_scored_pair(double relevance, const SpanScores& spans, double tau) {
  const auto info = informativeness_from_spans(spans, tau);
  return {relevance, info.score, info.best_span, info.answerable, spans.null_score};
}

TermStats::TermStats(const PolicyDocument& policy) : n_(policy.size()) {
  for (const auto& seg : policy.segments) {
    std::set<std::string_view> terms;
    for (const auto& t : seg.tokens) terms.insert(t.normalized);
    for (auto term : terms) ++df_[std::string(term)];
  }
}

std::size_t TermStats::df(std::string_view term) const {
  const auto it = df_.find(std::string(term));
  return it == df_.end() ? 0 : it->second;
}

double TermStats::idf(std::string_view term) const {
  const std::size_t d = std::max<std::size_t>(1, df(term));
  return std::log(1.0 + static_cast<double>(n_) / static_cast<double>(d));
}

namespace {

std::map<std::string, double> tfidf(const std::vector<Token>& tokens, const TermStats& stats) {
  std::map<std::string, double> counts;
  for (const auto& t : tokens) counts[t.normalized] += 1.0;
  for (auto& [term, w] : counts) w *= stats.idf(term);
  return counts;
}

}  // namespace

double lexical_relevance(std::string_view paraphrase, const Segment& segment, const TermStats& stats) {
  const auto q = tfidf(tokenize(paraphrase), stats);
  const auto s = tfidf(segment.tokens, stats);
  double dot = 0.0, nq = 0.0, ns = 0.0;
  for (const auto& [term, w] : q) {
    nq += w * w;
    const auto it = s.find(term);
    if (it != s.end()) dot += w * it->second;
  }
  for (const auto& [term, w] : s) ns += w * w;
  if (dot == 0.0 || nq == 0.0 || ns == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nq) * std::sqrt(ns)), 0.0, 1.0);
}

SpanScores lexical_span_scores(std::string_view paraphrase, const Segment& segment, const TermStats& stats) {
  std::set<std::string> query_terms;
  for (auto& t : tokenize(paraphrase)) query_terms.insert(std::move(t.normalized));
  SpanScores out;
  for (const auto& t : segment.tokens) {
    const double logit = query_terms.count(t.normalized) ? stats.idf(t.normalized) : 0.0;
    out.tokens.push_back(t.normalized);
    out.start_logits.push_back(logit);
    out.end_logits.push_back(logit);
  }
  if (out.tokens.empty()) {
    // Segments made only of punctuation still need one scorable position.
    out.tokens.emplace_back();
    out.start_logits.push_back(0.0);
    out.end_logits.push_back(0.0);
  }
  out.null_score = 0.0;
  return out;
}

namespace {

const Segment& segment_at(const PolicyDocument& policy, std::size_t index) {
  if (index >= policy.size()) {
    throw Error("segment " + std::to_string(index) + " out of range for policy " + policy.id);
  }
  return policy.segments[index];
}

}  // namespace

std::vector<double> LexicalScorer::relevance(const PolicyDocument& policy,
                                             std::span<const QuestionSegment> pairs) const {
  const TermStats stats(policy);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(lexical_relevance(p.question, segment_at(policy, p.segment_index), stats));
  return out;
}

std::vector<SpanScores> LexicalScorer::spans(const PolicyDocument& policy,
                                             std::span<const QuestionSegment> pairs) const {
  const TermStats stats(policy);
  std::vector<SpanScores> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(lexical_span_scores(p.question, segment_at(policy, p.segment_index), stats));
  return out;
}

}  // namespace pae
