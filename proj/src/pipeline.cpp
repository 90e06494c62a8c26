#include "pae/pipeline.hpp"

#include "pae/errors.hpp"

namespace pae {
namespace {

PosLexicon load_lexicon(const Config& config) {
  return config.lexicon.empty() ? PosLexicon{} : PosLexicon::load(config.lexicon);
}

std::vector<SubstitutionRule> load_rule_file(const Config& config) {
  return config.rules.empty() ? std::vector<SubstitutionRule>{} : load_rules(config.rules);
}

std::optional<EmbeddingStore> load_store(const Config& config) {
  if (config.embeddings.empty()) return std::nullopt;
  return load_word2vec_text(config.embeddings);
}

std::unique_ptr<Translator> make_translator(const Config& config) {
  switch (config.translator) {
    case TranslatorBackend::kNone:
      return nullptr;
    case TranslatorBackend::kRemote:
      return std::make_unique<CachingTranslator>(std::make_unique<HttpTranslator>(config.translator_url));
    case TranslatorBackend::kCache: {
      auto cache = std::make_unique<CachingTranslator>();
      cache->load(config.translator_cache);
      return cache;
    }
  }
  return nullptr;
}

std::unique_ptr<Scorer> make_scorer(const Config& config) {
  if (config.scorer == ScorerBackend::kRemote) {
    RemoteScorerOptions options;
    options.batch_size = config.scorer_batch_size;
    options.max_in_flight = config.scorer_in_flight;
    return std::make_unique<RemoteScorer>(config.scorer_url, options);
  }
  return std::make_unique<LexicalScorer>();
}

nlohmann::json paraphrase_json(const Paraphrase& p) {
  return {{"text", p.text}, {"method", std::string(to_string(p.method))}, {"provenance", p.provenance}};
}

}  // namespace

Pipeline::Pipeline(const Config& config)
    : config_(config),
      lexicon_(load_lexicon(config)),
      rules_(load_rule_file(config)),
      store_(load_store(config)),
      translator_(make_translator(config)),
      scorer_(make_scorer(config)),
      remote_(dynamic_cast<const RemoteScorer*>(scorer_.get())),
      expander_(config.expansion, config.rules.empty() ? nullptr : &rules_, store_ ? &*store_ : nullptr, &lexicon_,
                translator_.get()) {}

PolicyDocument Pipeline::ingest(std::string id, std::string_view raw, std::string title) const {
  return ingest_policy(std::move(id), raw, lexicon_, std::move(title));
}

PolicyDocument Pipeline::ingest(std::string id, const std::vector<std::string>& segments, std::string title) const {
  return ingest_policy(std::move(id), segments, lexicon_, std::move(title));
}

Answer Pipeline::answer(const PolicyDocument& policy, std::string_view question, std::size_t k,
                        PresentationOrder order, const std::optional<RankingConfig>& ranking,
                        std::string query_id) const {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (trim(question).empty()) throw ConfigError("question must not be empty");
  const RankingConfig rc = ranking.value_or(config_.ranking);
  Answer out;
  out.paraphrases = rc.ablate_expansion ? expander_.with_config(ExpansionConfig::none()).expand(question, query_id)
                                        : expander_.expand(question, query_id);
  out.ranked = rank_segments(policy, out.paraphrases, *scorer_, rc);
  out.summary = build_summary(std::move(query_id), out.ranked, k, order);
  return out;
}

nlohmann::json answer_to_json(const Answer& answer, const PolicyDocument& policy, std::string_view question) {
  nlohmann::json paraphrases = nlohmann::json::array();
  for (const auto& p : answer.paraphrases.items) paraphrases.push_back(paraphrase_json(p));
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& e : answer.summary.entries) {
    summary.push_back({{"rank", e.rank},
                       {"segment_index", e.segment_index},
                       {"segment_text", policy.segments.at(e.segment_index).text},
                       {"score", e.score},
                       {"winning_paraphrase", paraphrase_json(e.winning_paraphrase)},
                       {"best_span", {{"start", e.best_span.start}, {"end", e.best_span.end}}}});
  }
  return {{"query", std::string(question)},
          {"policy_id", policy.id},
          {"presentation_order", std::string(to_string(answer.summary.order))},
          {"paraphrases", std::move(paraphrases)},
          {"summary", std::move(summary)}};
}

nlohmann::json report_to_json(const std::string& name, const EvalReport& report) {
  nlohmann::json per_k = nlohmann::json::object();
  for (const auto& [k, m] : report.per_k) per_k[std::to_string(k)] = {{"f", m.f_at_k}, {"p", m.p_at_k}};
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& q : report.per_query) {
    nlohmann::json top = nlohmann::json::object();
    for (const auto& [k, n] : q.relevant_in_top_k) top[std::to_string(k)] = n;
    per_query.push_back({{"query_id", q.query_id},
                         {"first_relevant_rank", q.first_relevant_rank ? nlohmann::json(*q.first_relevant_rank)
                                                                       : nlohmann::json(nullptr)},
                         {"relevant_in_top_k", std::move(top)}});
  }
  return {{"config", name},
          {"per_k", std::move(per_k)},
          {"mrr", report.mrr},
          {"n_queries", report.n_queries},
          {"n_out_of_scope", report.n_out_of_scope},
          {"per_query", std::move(per_query)}};
}

}  // namespace pae
