#include "pae/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pae/errors.hpp"

namespace pae {
namespace {

std::size_t relevant_in_top(const Ranking& ranked, const std::set<std::size_t>& relevant, std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) hits += relevant.count(ranked[i]);
  return hits;
}

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

const PolicyDocument& policy_for(const Dataset& dataset, const QueryRecord& q) {
  const auto* policy = dataset.find_policy(q.policy_id);
  if (policy == nullptr) throw UnknownPolicy("query " + q.id + " references unknown policy " + q.policy_id);
  return *policy;
}

Ranking indices(const std::vector<SegmentAnswerability>& ranked) {
  Ranking out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.segment_index);
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace

double precision_at_k(const Ranking& ranked, const std::set<std::size_t>& relevant, std::size_t k) {
  if (k == 0) throw ConfigError("k must be at least 1");
  return 100.0 * static_cast<double>(relevant_in_top(ranked, relevant, k)) / static_cast<double>(k);
}

std::optional<std::size_t> first_relevant_rank(const Ranking& ranked, const std::set<std::size_t>& relevant) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (relevant.count(ranked[i])) return i + 1;
  }
  return std::nullopt;
}

double reciprocal_rank(const Ranking& ranked, const std::set<std::size_t>& relevant) {
  const auto rank = first_relevant_rank(ranked, relevant);
  return rank ? 1.0 / static_cast<double>(*rank) : 0.0;
}

double f_at_k(const std::vector<Ranking>& rankings, const std::vector<std::set<std::size_t>>& relevant, std::size_t k,
              const MetricOptions& options) {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (rankings.size() != relevant.size()) throw MissingRanking("one ranking per query is required");
  std::size_t hits = 0, denominator = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (options.exclude_out_of_scope && relevant[q].empty()) continue;
    ++denominator;
    if (relevant_in_top(rankings[q], relevant[q], k) > 0) ++hits;
  }
  return percent(hits, denominator);
}

EvalReport evaluate(const std::vector<QueryRecord>& queries, const std::map<std::string, Ranking>& rankings,
                    const std::vector<std::size_t>& ks, const MetricOptions& options) {
  if (queries.empty()) throw MissingRanking("no queries to evaluate");
  for (auto k : ks) {
    if (k == 0) throw ConfigError("k must be at least 1");
  }
  std::vector<const QueryRecord*> sorted;
  for (const auto& q : queries) sorted.push_back(&q);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->id == sorted[i - 1]->id) throw ConfigError("duplicate query id " + sorted[i]->id);
  }

  EvalReport report;
  report.n_queries = queries.size();
  std::size_t denominator = 0;
  std::map<std::size_t, std::size_t> f_hits;
  std::map<std::size_t, double> p_sum;
  double rr_sum = 0.0;
  for (const auto* q : sorted) {
    const auto it = rankings.find(q->id);
    if (it == rankings.end()) throw MissingRanking("no ranking for query " + q->id);
    const auto& ranked = it->second;
    QueryEval eval{q->id, first_relevant_rank(ranked, q->relevant_indices), {}};
    for (auto k : ks) eval.relevant_in_top_k[k] = relevant_in_top(ranked, q->relevant_indices, k);
    if (q->out_of_scope()) ++report.n_out_of_scope;
    if (!(options.exclude_out_of_scope && q->out_of_scope())) {
      ++denominator;
      for (auto k : ks) {
        if (eval.relevant_in_top_k[k] > 0) ++f_hits[k];
        p_sum[k] += precision_at_k(ranked, q->relevant_indices, k);
      }
      rr_sum += reciprocal_rank(ranked, q->relevant_indices);
    }
    report.per_query.push_back(std::move(eval));
  }
  for (auto k : ks) {
    report.per_k[k] = {percent(f_hits[k], denominator),
                       denominator == 0 ? 0.0 : p_sum[k] / static_cast<double>(denominator)};
  }
  report.mrr = denominator == 0 ? 0.0 : rr_sum / static_cast<double>(denominator);
  return report;
}

void print_report_table(std::ostream& out, const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::set<std::size_t> ks;
  std::size_t width = 6;
  for (const auto& [name, report] : rows) {
    for (const auto& [k, m] : report.per_k) ks.insert(k);
    width = std::max(width, name.size());
  }
  out << std::left << std::setw(static_cast<int>(width)) << "config";
  for (auto k : ks) out << std::right << std::setw(8) << "F@" + std::to_string(k);
  for (auto k : ks) out << std::right << std::setw(8) << "P@" + std::to_string(k);
  out << std::right << std::setw(8) << "MRR" << std::setw(10) << "queries" << '\n';
  for (const auto& [name, report] : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << name;
    for (auto k : ks) out << std::right << std::setw(8) << fixed(report.per_k.count(k) ? report.per_k.at(k).f_at_k : 0.0, 1);
    for (auto k : ks) out << std::right << std::setw(8) << fixed(report.per_k.count(k) ? report.per_k.at(k).p_at_k : 0.0, 1);
    out << std::right << std::setw(8) << fixed(report.mrr, 4) << std::setw(10) << report.n_queries << '\n';
  }
}

std::string report_rows_json(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [name, report] : rows) {
    for (const auto& [k, m] : report.per_k) {
      arr.push_back({{"config", name},
                     {"k", k},
                     {"f", std::stod(fixed(m.f_at_k, 1))},
                     {"p", std::stod(fixed(m.p_at_k, 1))},
                     {"mrr", std::stod(fixed(report.mrr, 4))},
                     {"n_queries", report.n_queries}});
    }
  }
  return arr.dump(2);
}

ExpansionReport expansion_report(const Dataset& dataset, const Expander& expander, const Scorer& span_scorer,
                                 double tau) {
  std::vector<const QueryRecord*> in_scope;
  for (const auto& q : dataset.queries) {
    if (!q.out_of_scope()) in_scope.push_back(&q);
  }

  ExpansionReport report;
  report.n_queries = in_scope.size();

  // Baseline: which (query, gold segment) pairs the original query cannot answer.
  std::vector<std::vector<std::size_t>> unanswerable(in_scope.size());
  for (std::size_t i = 0; i < in_scope.size(); ++i) {
    const auto& q = *in_scope[i];
    const auto& policy = policy_for(dataset, q);
    std::vector<QuestionSegment> pairs;
    for (auto s : q.relevant_indices) pairs.push_back({q.text, s});
    const auto spans = span_scorer.spans(policy, pairs);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      validate(spans[j]);
      if (!informativeness_from_spans(spans[j], tau).answerable) unanswerable[i].push_back(pairs[j].segment_index);
    }
    report.n_pairs += pairs.size();
    report.n_unanswerable_pairs_baseline += unanswerable[i].size();
  }

  const auto& base = expander.config();
  std::vector<std::pair<std::string, ExpansionConfig>> variants;
  for (auto m : {Method::kRuleOne, Method::kRuleAll, Method::kBackTranslation, Method::kEmbedding}) {
    if (!base.enabled(m)) continue;
    ExpansionConfig only = base;
    only.rule_one = m == Method::kRuleOne;
    only.rule_all = m == Method::kRuleAll;
    only.embedding = m == Method::kEmbedding;
    only.back_translation = m == Method::kBackTranslation;
    variants.emplace_back(std::string(to_string(m)), only);
  }
  variants.emplace_back("ALL", base);

  for (const auto& [name, config] : variants) {
    const Expander variant = expander.with_config(config);
    MethodStats stats;
    for (std::size_t i = 0; i < in_scope.size(); ++i) {
      const auto& q = *in_scope[i];
      const auto pset = variant.expand(q);
      std::vector<std::string> generated;
      for (const auto& p : pset.items) {
        if (p.method != Method::kOriginal) generated.push_back(p.text);
      }
      stats.n_paraphrases += generated.size();
      if (generated.empty() || unanswerable[i].empty()) continue;
      std::vector<QuestionSegment> pairs;
      for (auto s : unanswerable[i]) {
        for (const auto& text : generated) pairs.push_back({text, s});
      }
      const auto spans = span_scorer.spans(policy_for(dataset, q), pairs);
      for (std::size_t u = 0; u < unanswerable[i].size(); ++u) {
        bool recovered = false;
        for (std::size_t g = 0; g < generated.size(); ++g) {
          const auto& s = spans[u * generated.size() + g];
          validate(s);
          const bool ok = informativeness_from_spans(s, tau).answerable;
          ++stats.n_evaluations;
          if (ok) {
            ++stats.n_answerable_evaluations;
            recovered = true;
          }
        }
        if (recovered) ++stats.n_recovered_pairs;
      }
    }
    stats.avg_paraphrases =
        report.n_queries == 0 ? 0.0 : static_cast<double>(stats.n_paraphrases) / static_cast<double>(report.n_queries);
    stats.pct_recovered_pairs = percent(stats.n_recovered_pairs, report.n_unanswerable_pairs_baseline);
    stats.pct_answerable_paraphrases = percent(stats.n_answerable_evaluations, stats.n_evaluations);
    report.per_method[name] = stats;
  }
  return report;
}

void print_expansion_report(std::ostream& out, const ExpansionReport& report) {
  out << "in-scope queries: " << report.n_queries << ", gold pairs: " << report.n_pairs
      << ", unanswerable with the original query: " << report.n_unanswerable_pairs_baseline << '\n';
  out << std::left << std::setw(18) << "method" << std::right << std::setw(14) << "avg #para" << std::setw(14)
      << "%recovered" << std::setw(14) << "%answerable" << '\n';
  for (const auto& [name, s] : report.per_method) {
    out << std::left << std::setw(18) << name << std::right << std::setw(14) << fixed(s.avg_paraphrases, 1)
        << std::setw(14) << fixed(s.pct_recovered_pairs, 1) << std::setw(14) << fixed(s.pct_answerable_paraphrases, 1)
        << '\n';
  }
}

std::vector<AblationConfig> standard_ablations(const RankingConfig& base) {
  return {*ablation_by_name("full", base), *ablation_by_name("no-expansion", base),
          *ablation_by_name("no-expansion-no-answer-detector", base)};
}

std::optional<AblationConfig> ablation_by_name(const std::string& name, const RankingConfig& base) {
  AblationConfig c{name, base};
  if (name == "full") {
    c.ranking.ablate_expansion = false;
    c.ranking.ablate_informativeness = false;
  } else if (name == "no-expansion") {
    c.ranking.ablate_expansion = true;
    c.ranking.ablate_informativeness = false;
  } else if (name == "no-answer-detector") {
    c.ranking.ablate_expansion = false;
    c.ranking.ablate_informativeness = true;
  } else if (name == "no-expansion-no-answer-detector") {
    c.ranking.ablate_expansion = true;
    c.ranking.ablate_informativeness = true;
  } else {
    return std::nullopt;
  }
  return c;
}

std::map<std::string, Ranking> rank_dataset(const Dataset& dataset, const Expander& expander, const Scorer& scorer,
                                            const RankingConfig& config, std::size_t jobs) {
  std::vector<Ranking> results(dataset.queries.size());
  parallel_for(dataset.queries.size(), jobs, [&](std::size_t i) {
    const auto& q = dataset.queries[i];
    const auto& policy = policy_for(dataset, q);
    results[i] = indices(rank_segments(policy, expander.expand(q), scorer, config));
  });
  std::map<std::string, Ranking> out;
  for (std::size_t i = 0; i < results.size(); ++i) out[dataset.queries[i].id] = std::move(results[i]);
  return out;
}

std::vector<std::pair<std::string, EvalReport>> ablation_run(const Dataset& dataset, const Expander& expander,
                                                             const Scorer& scorer,
                                                             const std::vector<AblationConfig>& configs,
                                                             const std::vector<std::size_t>& ks,
                                                             const MetricOptions& options, std::size_t jobs) {
  // Expansion and pair scoring do not depend on the ablation; do them once.
  const std::size_t n = dataset.queries.size();
  std::vector<ParaphraseSet> psets(n);
  std::vector<ScoreMatrix> matrices(n);
  const double tau = configs.empty() ? 0.0 : configs.front().ranking.tau;
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto& q = dataset.queries[i];
    const auto& policy = policy_for(dataset, q);
    psets[i] = expander.expand(q);
    matrices[i] = score_pairs(policy, psets[i], scorer, tau);
  });

  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const auto& config : configs) {
    if (config.ranking.tau != tau) throw ConfigError("ablation configs must share tau");
    std::map<std::string, Ranking> rankings;
    for (std::size_t i = 0; i < n; ++i) rankings[dataset.queries[i].id] = indices(rank_matrix(matrices[i], psets[i], config.ranking));
    rows.emplace_back(config.name, evaluate(dataset.queries, rankings, ks, options));
  }
  return rows;
}

}  // namespace pae
