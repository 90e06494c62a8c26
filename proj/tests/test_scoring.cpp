#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pae/errors.hpp"
#include "pae/scoring.hpp"
#include "support.hpp"

using namespace pae;
using pae::testing::MockScorerServer;

namespace {

SpanScores logits(std::vector<double> start, std::vector<double> end, double null_score = 0.0) {
  SpanScores s;
  s.tokens.assign(start.size(), "t");
  s.start_logits = std::move(start);
  s.end_logits = std::move(end);
  s.null_score = null_score;
  return s;
}

RemoteScorerOptions fast_options() {
  RemoteScorerOptions o;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::milliseconds(2000);
  return o;
}

}  // namespace

TEST_CASE("span max examples") {
  auto i = informativeness_from_spans(logits({1, 0, 2}, {1, 3, 0}));
  CHECK(i.score == 4.0);
  CHECK(i.best_span == Span{0, 1});
  i = informativeness_from_spans(logits({0.5}, {0.7}));
  CHECK(i.score == doctest::Approx(1.2));
  CHECK(i.best_span == Span{0, 0});
  CHECK_FALSE(informativeness_from_spans(logits({1, 0, 2}, {1, 3, 0}, 5.0)).answerable);
  CHECK(informativeness_from_spans(logits({1, 0, 2}, {1, 3, 0}, 3.0)).answerable);
  CHECK_FALSE(informativeness_from_spans(logits({1, 0, 2}, {1, 3, 0}, 3.0), 1.0).answerable);
  // all four spans score 2; the earliest start and end wins
  i = informativeness_from_spans(logits({1, 1}, {1, 1}));
  CHECK(i.best_span == Span{0, 0});
}

TEST_CASE("span max matches brute force, including ties") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<double> s(n), e(n);
    // small integer logits make ties common
    for (auto& x : s) x = static_cast<double>(static_cast<int>(rng() % 5) - 2);
    for (auto& x : e) x = static_cast<double>(static_cast<int>(rng() % 5) - 2);
    const auto fast = informativeness_from_spans(logits(s, e));
    const auto slow = testing::brute_force_span(s, e);
    CHECK(fast.score == slow.score);
    CHECK(fast.best_span == Span{slow.start, slow.end});
  }
}

TEST_CASE("informativeness is monotone in each logit") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    std::vector<double> s(n), e(n);
    for (auto& x : s) x = u(rng);
    for (auto& x : e) x = u(rng);
    const double before = informativeness_from_spans(logits(s, e)).score;
    auto& target = (rng() % 2) ? s : e;
    target[rng() % n] += std::abs(u(rng));
    CHECK(informativeness_from_spans(logits(s, e)).score >= before);
  }
}

TEST_CASE("validate SpanScores") {
  CHECK_NOTHROW(validate(logits({1, 2, 3, 4}, {0, 0, 0, 0})));
  CHECK_THROWS_AS(validate(logits({1, 2}, {0})), ProtocolError);
  CHECK_THROWS_AS(validate(logits({}, {})), ProtocolError);
  CHECK_THROWS_AS(validate(logits({std::nan("")}, {0})), ProtocolError);
  CHECK_THROWS_AS(validate(logits({1}, {std::numeric_limits<double>::infinity()})), ProtocolError);
  CHECK_THROWS_AS(validate(logits({1}, {1}, std::nan(""))), ProtocolError);
  auto short_tokens = logits({1, 2}, {1, 2});
  short_tokens.tokens.pop_back();
  CHECK_THROWS_AS(validate(short_tokens), ProtocolError);
}

TEST_CASE("lexical relevance") {
  PosLexicon lex;
  const auto doc = ingest_policy("p", std::vector<std::string>{"we collected data daily", "we share nothing"}, lex);
  const TermStats stats(doc);
  CHECK(stats.n_segments() == 2);
  CHECK(stats.df("we") == 2);
  CHECK(stats.df("data") == 1);
  CHECK(stats.df("absent") == 0);

  // hand computation: every term has df 1 (idf ln 3) except "we" (idf ln 2)
  const double l2 = std::log(2.0), l3 = std::log(3.0);
  const double expected = (2 * l3 * l3) / (std::sqrt(2 * l3 * l3) * std::sqrt(l2 * l2 + 3 * l3 * l3));
  CHECK(std::abs(lexical_relevance("data collected", doc.segments[0], stats) - expected) < 1e-9);

  CHECK(lexical_relevance("we collected data daily", doc.segments[0], stats) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(lexical_relevance("cookies retained", doc.segments[0], stats) == 0.0);
  CHECK(lexical_relevance("", doc.segments[0], stats) == 0.0);

  const auto shuffled = ingest_policy("p", std::vector<std::string>{"daily data we collected", "we share nothing"}, lex);
  CHECK(lexical_relevance("data collected", shuffled.segments[0], TermStats(shuffled)) ==
        lexical_relevance("data collected", doc.segments[0], stats));
}

TEST_CASE("lexical span scores") {
  PosLexicon lex;
  const auto doc = ingest_policy("p", std::vector<std::string>{"we collected data daily", "we share nothing"}, lex);
  const TermStats stats(doc);
  auto spans = lexical_span_scores("cookies", doc.segments[0], stats);
  CHECK(spans.tokens.size() == 4);
  auto info = informativeness_from_spans(spans);
  CHECK(info.score == 0.0);
  CHECK_FALSE(info.answerable);

  spans = lexical_span_scores("data", doc.segments[0], stats);
  info = informativeness_from_spans(spans);
  CHECK(info.score == doctest::Approx(2 * std::log(3.0)));
  CHECK(info.best_span == Span{2, 2});
  CHECK(info.answerable);

  // positions 1 and 3 share a term of equal idf
  spans = lexical_span_scores("collected daily", doc.segments[0], stats);
  info = informativeness_from_spans(spans);
  CHECK(info.best_span == Span{1, 1});

  const auto punct = ingest_policy("p", std::vector<std::string>{"...", "x"}, lex);
  spans = lexical_span_scores("x", punct.segments[0], TermStats(punct));
  CHECK_NOTHROW(validate(spans));
}

TEST_CASE("lexical scorer follows request order") {
  PosLexicon lex;
  const auto doc = ingest_policy("p", std::vector<std::string>{"alpha beta", "gamma", "beta gamma"}, lex);
  LexicalScorer scorer;
  const std::vector<QuestionSegment> pairs{{"gamma", 2}, {"alpha", 0}, {"alpha", 1}};
  const auto r = scorer.relevance(doc, pairs);
  const TermStats stats(doc);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == lexical_relevance("gamma", doc.segments[2], stats));
  CHECK(r[1] == lexical_relevance("alpha", doc.segments[0], stats));
  CHECK(r[2] == 0.0);
  CHECK(scorer.spans(doc, pairs).size() == 3);
}

TEST_CASE("remote scorer: happy path and batching") {
  MockScorerServer mock;
  mock.relevance = [](const nlohmann::json& req, httplib::Response& res) {
    MockScorerServer::reply(res, {{"scores", std::vector<double>(req["pairs"].size(), 0.7)}});
  };
  mock.spans = [](const nlohmann::json& req, httplib::Response& res) {
    nlohmann::json results = nlohmann::json::array();
    for (const auto& p : req["pairs"]) {
      const double v = static_cast<double>(p["question"].get<std::string>().size());
      results.push_back({{"tokens", {"a", "b", "c", "d"}},
                         {"start_logits", {0, v, 0, 0}},
                         {"end_logits", {0, 0, 1, 0}},
                         {"null_score", 0.5}});
    }
    MockScorerServer::reply(res, {{"results", results}});
  };
  auto opts = fast_options();
  opts.batch_size = 3;
  opts.max_in_flight = 2;
  RemoteScorer scorer(mock.url(), opts);
  const std::vector<TextPair> two{{"q", "s"}, {"q2", "s2"}};
  CHECK(scorer.relevance_batch(two) == std::vector<double>{0.7, 0.7});

  std::vector<TextPair> many;
  for (int i = 1; i <= 10; ++i) many.push_back({std::string(static_cast<std::size_t>(i), 'x'), "seg"});
  const auto spans = scorer.span_batch(many);
  REQUIRE(spans.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(spans[static_cast<std::size_t>(i)].start_logits[1] == i + 1);
    CHECK(spans[static_cast<std::size_t>(i)].tokens.size() == 4);
  }
  CHECK(mock.span_calls == 4);

  const auto h = scorer.health();
  CHECK(h.ok);
  CHECK(h.model == "mock");
  CHECK(scorer.relevance_batch({}).empty());
}

TEST_CASE("remote scorer: schema violations") {
  MockScorerServer mock;
  RemoteScorer scorer(mock.url(), fast_options());
  const std::vector<TextPair> two{{"q", "s"}, {"q2", "s2"}};

  mock.relevance = [](const nlohmann::json&, httplib::Response& res) {
    MockScorerServer::reply(res, {{"scores", {1.3, 0.2}}});
  };
  CHECK_THROWS_AS(scorer.relevance_batch(two), ScoreOutOfRange);
  mock.relevance = [](const nlohmann::json&, httplib::Response& res) {
    MockScorerServer::reply(res, {{"scores", {0.2}}});
  };
  CHECK_THROWS_AS(scorer.relevance_batch(two), ProtocolError);
  mock.relevance = [](const nlohmann::json&, httplib::Response& res) {
    MockScorerServer::reply_raw(res, R"({"scores": [NaN, 0.1]})");
  };
  CHECK_THROWS_AS(scorer.relevance_batch(two), ProtocolError);
  mock.relevance = [](const nlohmann::json&, httplib::Response& res) {
    MockScorerServer::reply(res, {{"scores", {nullptr, 0.1}}});
  };
  CHECK_THROWS_AS(scorer.relevance_batch(two), ProtocolError);
  mock.relevance = [](const nlohmann::json&, httplib::Response& res) { res.status = 400; };
  CHECK_THROWS_AS(scorer.relevance_batch(two), ProtocolError);

  mock.spans = [](const nlohmann::json& req, httplib::Response& res) {
    nlohmann::json results = nlohmann::json::array();
    for (std::size_t i = 0; i < req["pairs"].size(); ++i) {
      results.push_back({{"tokens", {"a", "b"}}, {"start_logits", {0, 1}}, {"end_logits", {0}}, {"null_score", 0}});
    }
    MockScorerServer::reply(res, {{"results", results}});
  };
  CHECK_THROWS_AS(scorer.span_batch(two), ProtocolError);
  mock.spans = [](const nlohmann::json&, httplib::Response& res) {
    MockScorerServer::reply_raw(
        res, R"({"results": [{"tokens":["a"],"start_logits":[NaN],"end_logits":[0],"null_score":0}]})");
  };
  CHECK_THROWS_AS(scorer.span_batch(std::vector<TextPair>{{"q", "s"}}), ProtocolError);
}

TEST_CASE("remote scorer: retries then gives up") {
  MockScorerServer mock;
  std::atomic<int> hits{0};
  mock.relevance = [&](const nlohmann::json& req, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    MockScorerServer::reply(res, {{"scores", std::vector<double>(req["pairs"].size(), 0.25)}});
  };
  RemoteScorer scorer(mock.url(), fast_options());
  CHECK(scorer.relevance_batch(std::vector<TextPair>{{"q", "s"}}) == std::vector<double>{0.25});
  CHECK(hits == 3);

  hits = 0;
  mock.relevance = [&](const nlohmann::json&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  };
  CHECK_THROWS_AS(scorer.relevance_batch(std::vector<TextPair>{{"q", "s"}}), ScorerUnavailable);
  CHECK(hits == 3);

  RemoteScorer down("http://127.0.0.1:1", fast_options());
  try {
    down.relevance_batch(std::vector<TextPair>{{"q", "s"}});
    FAIL("expected ScorerUnavailable");
  } catch (const ScorerUnavailable& e) {
    CHECK(e.backend() == "scorer");
    CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
  }
  CHECK_FALSE(down.health().ok);
}
