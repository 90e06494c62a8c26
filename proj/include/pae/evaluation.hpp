#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pae/corpus.hpp"
#include "pae/expansion.hpp"
#include "pae/ranking.hpp"
#include "pae/scoring.hpp"

namespace pae {

using Ranking = std::vector<std::size_t>;  // segment indices, best first

// 100 * |top-k ∩ relevant| / k. Missing slots count as irrelevant.
double precision_at_k(const Ranking& ranked, const std::set<std::size_t>& relevant, std::size_t k);
// 1 / (1-based position of the first relevant segment), 0 if none.
double reciprocal_rank(const Ranking& ranked, const std::set<std::size_t>& relevant);
std::optional<std::size_t> first_relevant_rank(const Ranking& ranked, const std::set<std::size_t>& relevant);

struct MetricOptions {
  // Out-of-scope queries stay in every denominator (contributing 0) unless set.
  bool exclude_out_of_scope = false;
};

// 100 * (#queries with a relevant segment in the top k) / #queries.
double f_at_k(const std::vector<Ranking>& rankings, const std::vector<std::set<std::size_t>>& relevant,
              std::size_t k, const MetricOptions& options = {});

struct KMetrics {
  double f_at_k = 0.0;
  double p_at_k = 0.0;
};

struct QueryEval {
  std::string query_id;
  std::optional<std::size_t> first_relevant_rank;
  std::map<std::size_t, std::size_t> relevant_in_top_k;
};

struct EvalReport {
  std::map<std::size_t, KMetrics> per_k;
  double mrr = 0.0;
  std::size_t n_queries = 0;
  std::size_t n_out_of_scope = 0;
  std::vector<QueryEval> per_query;  // sorted by query id
};

// `rankings` is keyed by query id. Throws MissingRanking for an empty query
// list or a query without a ranking, ConfigError for k == 0.
EvalReport evaluate(const std::vector<QueryRecord>& queries, const std::map<std::string, Ranking>& rankings,
                    const std::vector<std::size_t>& ks = {5, 10}, const MetricOptions& options = {});

// Fixed-width table; percentages to 1 dp, MRR to 4 dp.
void print_report_table(std::ostream& out, const std::vector<std::pair<std::string, EvalReport>>& rows);
// One JSON object per (config, k): {config, k, f, p, mrr, n_queries}.
std::string report_rows_json(const std::vector<std::pair<std::string, EvalReport>>& rows);

struct MethodStats {
  double avg_paraphrases = 0.0;
  double pct_recovered_pairs = 0.0;
  double pct_answerable_paraphrases = 0.0;
  std::size_t n_paraphrases = 0;
  std::size_t n_recovered_pairs = 0;
  std::size_t n_evaluations = 0;
  std::size_t n_answerable_evaluations = 0;
};

struct ExpansionReport {
  std::map<std::string, MethodStats> per_method;  // RULE_ONE ... plus "ALL"
  std::size_t n_queries = 0;                       // in-scope queries
  std::size_t n_pairs = 0;                         // (query, gold segment) pairs
  std::size_t n_unanswerable_pairs_baseline = 0;
};

// Baseline marks (original query, gold segment) pairs the span scorer cannot
// answer; each method is then judged on those pairs.
ExpansionReport expansion_report(const Dataset& dataset, const Expander& expander, const Scorer& span_scorer,
                                 double tau = 0.0);
void print_expansion_report(std::ostream& out, const ExpansionReport& report);

struct AblationConfig {
  std::string name;
  RankingConfig ranking;
};

// full, -expansion, -expansion -answer-detector.
std::vector<AblationConfig> standard_ablations(const RankingConfig& base = {});
std::optional<AblationConfig> ablation_by_name(const std::string& name, const RankingConfig& base = {});

// Ranks every query of the dataset. `jobs` > 1 ranks queries concurrently;
// the result does not depend on it.
std::map<std::string, Ranking> rank_dataset(const Dataset& dataset, const Expander& expander, const Scorer& scorer,
                                            const RankingConfig& config, std::size_t jobs = 1);

std::vector<std::pair<std::string, EvalReport>> ablation_run(const Dataset& dataset, const Expander& expander,
                                                             const Scorer& scorer,
                                                             const std::vector<AblationConfig>& configs,
                                                             const std::vector<std::size_t>& ks = {5, 10},
                                                             const MetricOptions& options = {}, std::size_t jobs = 1);

}  // namespace pae
