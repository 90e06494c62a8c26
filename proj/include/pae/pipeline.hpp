#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pae/config.hpp"
#include "pae/corpus.hpp"
#include "pae/embeddings.hpp"
#include "pae/evaluation.hpp"
#include "pae/expansion.hpp"
#include "pae/ranking.hpp"
#include "pae/scoring.hpp"
#include "pae/translator.hpp"

namespace pae {

struct Answer {
  ParaphraseSet paraphrases;
  std::vector<SegmentAnswerability> ranked;
  Summary summary;
};

// Owns the resources named by a Config: lexicon, rules, vectors, translator
// and scorer. Immutable after construction apart from the translator cache.
class Pipeline {
 public:
  explicit Pipeline(const Config& config);
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const Config& config() const { return config_; }
  const PosLexicon& lexicon() const { return lexicon_; }
  const Expander& expander() const { return expander_; }
  const Scorer& scorer() const { return *scorer_; }
  const RemoteScorer* remote_scorer() const { return remote_; }
  std::string backend_name() const { return scorer_->name(); }

  PolicyDocument ingest(std::string id, std::string_view raw, std::string title = {}) const;
  PolicyDocument ingest(std::string id, const std::vector<std::string>& segments, std::string title = {}) const;

  // expand -> score -> rank -> summary. `ranking` defaults to the config's.
  Answer answer(const PolicyDocument& policy, std::string_view question, std::size_t k,
                PresentationOrder order = PresentationOrder::kRank,
                const std::optional<RankingConfig>& ranking = std::nullopt, std::string query_id = {}) const;

 private:
  Config config_;
  PosLexicon lexicon_;
  std::vector<SubstitutionRule> rules_;
  std::optional<EmbeddingStore> store_;
  std::unique_ptr<Translator> translator_;
  std::unique_ptr<Scorer> scorer_;
  const RemoteScorer* remote_ = nullptr;
  Expander expander_;
};

// {query, paraphrases, summary}; the service adds timing_ms.
nlohmann::json answer_to_json(const Answer& answer, const PolicyDocument& policy, std::string_view question);

nlohmann::json report_to_json(const std::string& name, const EvalReport& report);

}  // namespace pae
