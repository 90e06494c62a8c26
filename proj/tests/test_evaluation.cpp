#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "pae/errors.hpp"
#include "pae/evaluation.hpp"
#include "pae/expansion.hpp"
#include "support.hpp"

using namespace pae;

namespace {

QueryRecord query(std::string id, std::set<std::size_t> relevant) {
  return {std::move(id), "p", "q", std::move(relevant)};
}

// Hand-computed fixture: q1 first relevant at rank 2 (relevant {2,3}),
// q2 at rank 6 (relevant {0}), q3 out of scope.
std::vector<QueryRecord> golden_queries() {
  return {query("q1", {2, 3}), query("q2", {0}), query("q3", {})};
}
std::map<std::string, Ranking> golden_rankings() {
  return {{"q1", {5, 2, 7, 8, 9, 10, 11, 0, 1, 3}},
          {"q2", {4, 6, 8, 10, 1, 0, 2, 3, 5, 7}},
          {"q3", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}}};
}

// Answerable exactly when the question contains "user's".
class KeywordSpanScorer : public Scorer {
 public:
  std::string name() const override { return "keyword"; }
  std::vector<double> relevance(const PolicyDocument&, std::span<const QuestionSegment> pairs) const override {
    return std::vector<double>(pairs.size(), 0.0);
  }
  std::vector<SpanScores> spans(const PolicyDocument&, std::span<const QuestionSegment> pairs) const override {
    std::vector<SpanScores> out;
    for (const auto& p : pairs) {
      const double v = p.question.find("user's") != std::string::npos ? 1.0 : 0.0;
      out.push_back({{"t"}, {v}, {v}, 0.0});
    }
    return out;
  }
};

}  // namespace

TEST_CASE("metric examples") {
  CHECK(precision_at_k({1, 2, 3, 4, 5}, {2, 4}, 5) == 40.0);
  CHECK(precision_at_k({1, 2}, {1, 2}, 5) == 40.0);
  CHECK(precision_at_k({1, 2, 3}, {}, 5) == 0.0);
  CHECK(reciprocal_rank({9, 3, 1}, {3}) == 0.5);
  CHECK(reciprocal_rank({3, 9}, {3}) == 1.0);
  CHECK(reciprocal_rank({3, 9}, {}) == 0.0);
  CHECK(first_relevant_rank({9, 3, 1}, {1}) == 3u);
  CHECK_FALSE(first_relevant_rank({9}, {1}).has_value());

  const std::vector<Ranking> r{{1, 2}, {3, 4}, {5}, {6}};
  CHECK(f_at_k(r, {{1}, {4}, {9}, {8}}, 5) == 50.0);
  CHECK(f_at_k(r, {{}, {}, {}, {}}, 5) == 0.0);
  MetricOptions exclude;
  exclude.exclude_out_of_scope = true;
  CHECK(f_at_k(r, {{1}, {}, {9}, {}}, 5) == 25.0);
  CHECK(f_at_k(r, {{1}, {}, {9}, {}}, 5, exclude) == 50.0);
}

TEST_CASE("metrics match brute force on random rankings") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_queries = 1 + rng() % 10;
    std::vector<Ranking> rankings;
    std::vector<std::set<std::size_t>> relevant;
    for (std::size_t q = 0; q < n_queries; ++q) {
      const std::size_t n = 1 + rng() % 30;
      Ranking r(n);
      for (std::size_t i = 0; i < n; ++i) r[i] = i;
      std::shuffle(r.begin(), r.end(), rng);
      std::set<std::size_t> rel;
      const auto n_rel = rng() % 4;
      for (std::size_t i = 0; i < n_rel; ++i) rel.insert(rng() % n);
      rankings.push_back(r);
      relevant.push_back(rel);
      for (std::size_t k = 1; k <= 12; ++k) CHECK(precision_at_k(r, rel, k) == testing::brute_precision(r, rel, k));
      CHECK(reciprocal_rank(r, rel) == testing::brute_rr(r, rel));
    }
    for (std::size_t k = 1; k <= 12; ++k) {
      for (bool ex : {false, true}) {
        MetricOptions o;
        o.exclude_out_of_scope = ex;
        CHECK(f_at_k(rankings, relevant, k, o) == testing::brute_f(rankings, relevant, k, ex));
      }
      CHECK(f_at_k(rankings, relevant, k) <= f_at_k(rankings, relevant, k + 1));
    }
  }
}

TEST_CASE("evaluate reproduces the hand-computed golden report") {
  const auto report = evaluate(golden_queries(), golden_rankings());
  CHECK(report.n_queries == 3);
  CHECK(report.n_out_of_scope == 1);
  CHECK(report.per_k.at(5).f_at_k == 100.0 / 3);
  CHECK(report.per_k.at(10).f_at_k == 200.0 / 3);
  CHECK(report.per_k.at(5).p_at_k == doctest::Approx(20.0 / 3));
  CHECK(report.per_k.at(10).p_at_k == doctest::Approx(10.0));
  CHECK(report.mrr == doctest::Approx((0.5 + 1.0 / 6) / 3));
  REQUIRE(report.per_query.size() == 3);
  CHECK(report.per_query[0].first_relevant_rank == 2u);
  CHECK(report.per_query[1].first_relevant_rank == 6u);
  CHECK_FALSE(report.per_query[2].first_relevant_rank.has_value());
  CHECK(report.per_query[0].relevant_in_top_k.at(10) == 2);

  std::ostringstream table;
  print_report_table(table, {{"full", report}});
  CHECK(table.str() == read_file(std::string(PAE_TEST_DATA) + "/eval_golden.txt"));

  const auto rows = nlohmann::json::parse(report_rows_json({{"full", report}}));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["k"] == 5);
  CHECK(rows[0]["f"] == 33.3);
  CHECK(rows[1]["p"] == 10.0);
  CHECK(rows[1]["mrr"] == 0.2222);
  CHECK(rows[1]["n_queries"] == 3);

  MetricOptions exclude;
  exclude.exclude_out_of_scope = true;
  const auto ex = evaluate(golden_queries(), golden_rankings(), {5, 10}, exclude);
  CHECK(ex.per_k.at(5).f_at_k == 50.0);
  CHECK(ex.mrr == doctest::Approx((0.5 + 1.0 / 6) / 2));
}

TEST_CASE("evaluate is order-independent and validates input") {
  auto queries = golden_queries();
  std::reverse(queries.begin(), queries.end());
  const auto a = evaluate(golden_queries(), golden_rankings());
  const auto b = evaluate(queries, golden_rankings());
  std::ostringstream ta, tb;
  print_report_table(ta, {{"x", a}});
  print_report_table(tb, {{"x", b}});
  CHECK(ta.str() == tb.str());
  CHECK(a.mrr == b.mrr);

  CHECK_THROWS_AS(evaluate({}, {}), MissingRanking);
  auto missing = golden_rankings();
  missing.erase("q2");
  CHECK_THROWS_AS(evaluate(golden_queries(), missing), MissingRanking);
  CHECK_THROWS_AS(evaluate(golden_queries(), golden_rankings(), {0}), ConfigError);
  auto dup = golden_queries();
  dup.push_back(query("q1", {}));
  CHECK_THROWS_AS(evaluate(dup, golden_rankings()), ConfigError);
}

TEST_CASE("expansion_report on a fixture with known answerability") {
  PosLexicon lex;
  Dataset ds;
  ds.policies.push_back(ingest_policy("p", std::vector<std::string>{"seg zero", "seg one"}, lex));
  ds.queries = {{"q1", "p", "is my data sold", {0}}, {"q2", "p", "my phone", {0, 1}}, {"q3", "p", "ceo", {}}};
  const auto rules = parse_rules("my => user's\nphone => device\n");
  ExpansionConfig cfg;
  cfg.rule_one = cfg.rule_all = true;
  const Expander expander(cfg, &rules, nullptr, &lex, nullptr);
  const auto report = expansion_report(ds, expander, KeywordSpanScorer{});
  CHECK(report.n_queries == 2);
  CHECK(report.n_pairs == 3);
  CHECK(report.n_unanswerable_pairs_baseline == 3);
  CHECK(report.per_method.size() == 3);

  const auto& one = report.per_method.at("RULE_ONE");
  CHECK(one.avg_paraphrases == 1.5);
  CHECK(one.pct_recovered_pairs == 100.0);
  CHECK(one.pct_answerable_paraphrases == 60.0);
  const auto& all_rules = report.per_method.at("RULE_ALL");
  CHECK(all_rules.avg_paraphrases == 0.5);
  CHECK(all_rules.pct_recovered_pairs == doctest::Approx(200.0 / 3));
  CHECK(all_rules.pct_answerable_paraphrases == 100.0);
  const auto& all = report.per_method.at("ALL");
  CHECK(all.avg_paraphrases == 2.0);
  CHECK(all.pct_recovered_pairs == 100.0);
  CHECK(all.pct_answerable_paraphrases == doctest::Approx(500.0 / 7));

  std::ostringstream out;
  print_expansion_report(out, report);
  CHECK(out.str().find("RULE_ONE") != std::string::npos);
}

TEST_CASE("ablation_run over a planted corpus") {
  PosLexicon lex;
  const auto corpus = testing::make_planted_corpus(4, 10, 2, 8, lex);
  const auto rules = parse_rules("my => user's\napp => service\n");
  const Expander expander(ExpansionConfig::all(), &rules, nullptr, &lex, nullptr);
  LexicalScorer scorer;
  const auto rows = ablation_run(corpus.dataset, expander, scorer, standard_ablations());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].first == "full");
  for (const auto& [name, report] : rows) {
    CHECK(report.n_queries == 8);
    CHECK(report.per_k.at(5).f_at_k == 100.0);
    CHECK(report.mrr == 1.0);
  }

  const auto seq = rank_dataset(corpus.dataset, expander, scorer, {}, 1);
  const auto par = rank_dataset(corpus.dataset, expander, scorer, {}, 4);
  CHECK(seq == par);
  CHECK(ablation_by_name("no-answer-detector")->ranking.ablate_informativeness);
  CHECK_FALSE(ablation_by_name("bogus").has_value());
}
