#include <doctest.h>

#include "pae/config.hpp"
#include "pae/errors.hpp"
#include "pae/pipeline.hpp"
#include "support.hpp"

using namespace pae;

TEST_CASE("config defaults") {
  const Config c;
  CHECK(c.port == 8080);
  CHECK(c.scorer == ScorerBackend::kLexical);
  CHECK(c.k == 10);
  CHECK(c.ranking.aggregation == Aggregation::kMax);
  CHECK(c.ranking.transform == Transform::kIdentity);
  CHECK(c.ranking.tau == 0.0);
  CHECK(c.expansion.rule_one);
  CHECK(c.expansion.back_translation);
}

TEST_CASE("parse_config") {
  const auto c = parse_config(
      "# service\nport = 9090\nscorer = remote:http://127.0.0.1:7000\nexpansion = rule_one, embedding\n"
      "aggregation = mean\ntransform = logistic\nk = 5\ntau = 0.25\nmin_sim = 0.6\nstrict = true\n");
  CHECK(c.port == 9090);
  CHECK(c.scorer == ScorerBackend::kRemote);
  CHECK(c.scorer_url == "http://127.0.0.1:7000");
  CHECK(c.expansion.rule_one);
  CHECK(c.expansion.embedding);
  CHECK_FALSE(c.expansion.rule_all);
  CHECK_FALSE(c.expansion.back_translation);
  CHECK(c.expansion.strict);
  CHECK(c.expansion.embedding_options.min_sim == 0.6);
  CHECK(c.ranking.aggregation == Aggregation::kMean);
  CHECK(c.ranking.transform == Transform::kLogistic);
  CHECK(c.k == 5);
  CHECK(c.ranking.tau == 0.25);
  CHECK(parse_config("expansion = none\n").expansion.back_translation == false);

  CHECK_THROWS_AS(parse_config("k = 0\n"), FormatError);
  CHECK_THROWS_AS(parse_config("colour = blue\n"), FormatError);
  CHECK_THROWS_AS(parse_config("just words\n"), FormatError);
  CHECK_THROWS_AS(parse_config("scorer = neural\n"), FormatError);
  CHECK_THROWS_AS(parse_config("port = -1\n"), FormatError);
}

TEST_CASE("validate and relative paths") {
  const auto dir = testing::temp_dir("cfg");
  testing::write_text(dir / "rules.txt", "my => user's\n");
  testing::write_text(dir / "pae.conf", "rules = rules.txt\ndata_dir = store\n");
  const auto c = load_config(dir / "pae.conf");
  CHECK(c.rules == dir / "rules.txt");
  CHECK(c.data_dir == dir / "store");
  CHECK_NOTHROW(c.validate());

  Config missing;
  missing.rules = dir / "absent.txt";
  CHECK_THROWS_AS(missing.validate(), ConfigError);
  Config bad_url;
  bad_url.set("scorer", "remote:not a url");
  CHECK_THROWS_AS(bad_url.validate(), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("environment overrides") {
  Config c;
  apply_env_overrides(c, {{"PAE_PORT", "7001"}, {"PAE_K", "3"}, {"PAE_AGGREGATION", "mean"}, {"OTHER", "x"}});
  CHECK(c.port == 7001);
  CHECK(c.k == 3);
  CHECK(c.ranking.aggregation == Aggregation::kMean);
  CHECK_THROWS_AS(apply_env_overrides(c, {{"PAE_K", "zero"}}), ConfigError);
}

TEST_CASE("pipeline answers with the shipped resources") {
  Config c;
  c.rules = std::string(PAE_DATA_DIR) + "/rules.txt";
  c.lexicon = std::string(PAE_DATA_DIR) + "/pos_lexicon.tsv";
  c.translator = TranslatorBackend::kCache;
  c.translator_cache = std::string(PAE_TEST_DATA) + "/translations.tsv";
  const Pipeline pipeline(c);
  const auto policy = pipeline.ingest("acme", "We may share your location with partners.\n\nCookies last a year.\n\n"
                                              "Your device location is collected when you open the map.");
  const auto answer = pipeline.answer(policy, "Does the app collect my location?", 2);
  CHECK(answer.paraphrases.size() > 1);
  CHECK(answer.paraphrases.original().text == "Does the app collect my location?");
  bool back_translated = false;
  for (const auto& p : answer.paraphrases.items) back_translated |= p.text == "Does the app gather my location?";
  CHECK(back_translated);
  REQUIRE(answer.summary.entries.size() == 2);
  CHECK(answer.summary.entries[0].segment_index == 2);

  const auto json = answer_to_json(answer, policy, "Does the app collect my location?");
  CHECK(json["query"] == "Does the app collect my location?");
  CHECK(json["summary"].size() == 2);
  CHECK(json["summary"][0]["rank"] == 1);
  CHECK(json["summary"][0]["segment_text"] == policy.segments[2].text);
  CHECK(json["paraphrases"][0]["method"] == "ORIGINAL");

  CHECK_THROWS_AS(pipeline.answer(policy, "  ", 2), ConfigError);
  CHECK_THROWS_AS(pipeline.answer(policy, "q", 0), ConfigError);
}
