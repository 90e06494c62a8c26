// pae: query-guided extractive answers over privacy policies.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "pae/config.hpp"
#include "pae/corpus.hpp"
#include "pae/embeddings.hpp"
#include "pae/errors.hpp"
#include "pae/evaluation.hpp"
#include "pae/pipeline.hpp"
#include "pae/service.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kBackendError = 2;

struct Common {
  std::string config_path;
  std::string out;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
};

pae::Config make_config(const Common& common) {
  pae::Config config = common.config_path.empty() ? pae::Config{} : pae::load_config(common.config_path);
  pae::apply_env_overrides(config);
  config.validate();
  return config;
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw pae::Error("cannot write " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = pae::trim(item);
    if (t.empty()) continue;
    const long long v = std::stoll(std::string(t));
    if (v < 1) throw pae::ConfigError("k values must be >= 1");
    ks.push_back(static_cast<std::size_t>(v));
  }
  if (ks.empty()) throw pae::ConfigError("--ks needs at least one value");
  return ks;
}

void print_answer(const pae::Answer& answer, const pae::PolicyDocument& policy) {
  std::cout << "paraphrases (" << answer.paraphrases.size() << "):\n";
  for (const auto& p : answer.paraphrases.items) {
    std::cout << "  [" << pae::to_string(p.method) << "] " << p.text << '\n';
  }
  std::cout << "\nsummary (" << answer.summary.entries.size() << " segments):\n";
  for (const auto& e : answer.summary.entries) {
    std::cout << "\n#" << e.rank << "  segment " << e.segment_index << "  score " << e.score << "  via ["
              << pae::to_string(e.winning_paraphrase.method) << "]\n"
              << policy.segments[e.segment_index].text << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-guided extractive summaries of privacy policies"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "key=value config file")->check(CLI::ExistingFile);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Segment a policy file and add it to the policy store");
  std::string ingest_policy_path, ingest_id, ingest_title;
  bool ingest_dry_run = false;
  ingest->add_option("--policy", ingest_policy_path, "Plain-text policy, paragraphs separated by blank lines")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--id", ingest_id, "Policy id (default: file stem)");
  ingest->add_option("--title", ingest_title, "Policy title");
  ingest->add_flag("--dry-run", ingest_dry_run, "Segment only; do not write to the store");
  ingest->add_option("--out", common.out, "Write the segmented policy as JSON");

  // expand
  auto* expand = app.add_subcommand("expand", "Print the paraphrase set for a question");
  std::string expand_question;
  expand->add_option("--question", expand_question, "User question")->required();
  expand->add_option("--out", common.out, "Write paraphrases as JSON");

  // answer
  auto* answer = app.add_subcommand("answer", "Answer a question against a policy file");
  std::string answer_policy, answer_question, answer_order = "rank", answer_aggregation;
  std::size_t answer_k = 10;
  bool ablate_expansion = false, ablate_informativeness = false;
  answer->add_option("--policy", answer_policy, "Plain-text policy file")->required()->check(CLI::ExistingFile);
  answer->add_option("--question", answer_question, "User question")->required();
  answer->add_option("--k", answer_k, "Summary length")->check(CLI::PositiveNumber);
  answer->add_option("--order", answer_order, "Presentation order")->check(CLI::IsMember({"rank", "document"}));
  answer->add_option("--aggregation", answer_aggregation, "Paraphrase aggregation")
      ->check(CLI::IsMember({"max", "mean"}));
  answer->add_flag("--ablate-expansion", ablate_expansion, "Score the original question only");
  answer->add_flag("--ablate-informativeness", ablate_informativeness, "Rank by relevance only");
  answer->add_option("--out", common.out, "Write the answer payload as JSON");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "F@k, P@k and MRR over a labeled dataset, with ablations");
  std::string eval_dataset, eval_ks = "5,10", eval_ablations = "full,no-expansion,no-expansion-no-answer-detector";
  std::string eval_aggregation;
  bool eval_exclude = false;
  evaluate->add_option("--dataset", eval_dataset, "PrivacyQA-format TSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--ks", eval_ks, "Comma-separated cutoffs");
  evaluate->add_option("--ablations", eval_ablations,
                       "Comma-separated: full, no-expansion, no-answer-detector, no-expansion-no-answer-detector");
  evaluate->add_option("--aggregation", eval_aggregation, "Paraphrase aggregation")
      ->check(CLI::IsMember({"max", "mean"}));
  evaluate->add_flag("--exclude-out-of-scope", eval_exclude, "Drop queries without relevant segments");
  evaluate->add_option("--jobs", common.jobs, "Worker threads");
  evaluate->add_option("--out", common.out, "Write report rows as JSON");

  // expansion-report
  auto* exp_report = app.add_subcommand("expansion-report", "Per-method paraphrase and answerability statistics");
  std::string report_dataset;
  double report_tau = 0.0;
  bool report_tau_set = false;
  exp_report->add_option("--dataset", report_dataset, "PrivacyQA-format TSV")->required()->check(CLI::ExistingFile);
  exp_report->add_option("--tau", report_tau, "No-answer margin")->each([&](const std::string&) { report_tau_set = true; });
  exp_report->add_option("--out", common.out, "Write the report as JSON");

  // train-embeddings
  auto* train = app.add_subcommand("train-embeddings", "Train skip-gram vectors on a policy corpus");
  std::string train_corpus, train_out;
  pae::SgnsConfig sgns;
  train->add_option("--corpus", train_corpus, "Text file or directory of text files")
      ->required()
      ->check(CLI::ExistingPath);
  train->add_option("--out", train_out, "word2vec text output")->required();
  train->add_option("--dim", sgns.dim)->check(CLI::PositiveNumber);
  train->add_option("--window", sgns.window);
  train->add_option("--negatives", sgns.negatives);
  train->add_option("--epochs", sgns.epochs);
  train->add_option("--min-count", sgns.min_count);
  train->add_option("--lr", sgns.initial_lr);
  train->add_option("--subsample", sgns.subsample, "0 disables subsampling");
  train->add_option("--seed", sgns.seed);
  train->add_option("--jobs", sgns.threads, "Training threads (>1 trades reproducibility of the 1-thread run)");

  // fixtures
  auto* fixtures = app.add_subcommand("fixtures", "Build span-scorer conformance fixtures from PolicyQA JSON");
  std::string fixtures_in;
  fixtures->add_option("--policyqa", fixtures_in, "Reading-comprehension JSON")->required()->check(CLI::ExistingFile);
  fixtures->add_option("--out", common.out, "JSON-lines output")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  int serve_port = -1;
  serve->add_option("--port", serve_port, "Listen port (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << '\n' << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kUserError;
  }

  try {
    if (*ingest) {
      auto config = make_config(common);
      const pae::Pipeline pipeline(config);
      const std::filesystem::path path(ingest_policy_path);
      auto policy = pipeline.ingest(ingest_id.empty() ? path.stem().string() : ingest_id, pae::read_file(path),
                                    ingest_title);
      std::cout << "policy " << policy.id << ": " << policy.size() << " segments\n";
      nlohmann::json segs = nlohmann::json::array();
      for (const auto& s : policy.segments) segs.push_back(s.text);
      write_out(common.out, nlohmann::json{{"id", policy.id}, {"title", policy.title}, {"segments", segs}}.dump(2));
      if (!ingest_dry_run) {
        pae::PolicyStore store(config.data_dir / "policies.jsonl", pipeline);
        store.add(std::move(policy));
        std::cout << "stored in " << (config.data_dir / "policies.jsonl").string() << '\n';
      }
    } else if (*expand) {
      const pae::Pipeline pipeline(make_config(common));
      const auto set = pipeline.expander().expand(expand_question);
      nlohmann::json items = nlohmann::json::array();
      for (const auto& p : set.items) {
        std::cout << '[' << pae::to_string(p.method) << "] " << p.text << "    (" << p.provenance << ")\n";
        items.push_back({{"text", p.text}, {"method", pae::to_string(p.method)}, {"provenance", p.provenance}});
      }
      write_out(common.out, nlohmann::json{{"query", expand_question}, {"paraphrases", items}}.dump(2));
    } else if (*answer) {
      auto config = make_config(common);
      if (!answer_aggregation.empty()) config.ranking.aggregation = *pae::parse_aggregation(answer_aggregation);
      const pae::Pipeline pipeline(config);
      const std::filesystem::path path(answer_policy);
      const auto policy = pipeline.ingest(path.stem().string(), pae::read_file(path));
      auto ranking = config.ranking;
      ranking.ablate_expansion = ablate_expansion;
      ranking.ablate_informativeness = ablate_informativeness;
      const auto result = pipeline.answer(policy, answer_question, answer_k, *pae::parse_order(answer_order), ranking);
      print_answer(result, policy);
      write_out(common.out, pae::answer_to_json(result, policy, answer_question).dump(2));
    } else if (*evaluate) {
      auto config = make_config(common);
      if (!eval_aggregation.empty()) config.ranking.aggregation = *pae::parse_aggregation(eval_aggregation);
      const pae::Pipeline pipeline(config);
      std::vector<pae::AblationConfig> configs;
      std::stringstream ss(eval_ablations);
      for (std::string name; std::getline(ss, name, ',');) {
        const auto c = pae::ablation_by_name(std::string(pae::trim(name)), config.ranking);
        if (!c) throw pae::ConfigError("unknown ablation '" + name + "'");
        configs.push_back(*c);
      }
      const auto dataset = pae::load_privacyqa(eval_dataset, pipeline.lexicon());
      pae::MetricOptions options;
      options.exclude_out_of_scope = eval_exclude;
      const auto rows =
          pae::ablation_run(dataset, pipeline.expander(), pipeline.scorer(), configs, parse_ks(eval_ks), options,
                            common.jobs);
      pae::print_report_table(std::cout, rows);
      write_out(common.out, pae::report_rows_json(rows));
    } else if (*exp_report) {
      const auto config = make_config(common);
      const pae::Pipeline pipeline(config);
      const auto dataset = pae::load_privacyqa(report_dataset, pipeline.lexicon());
      const auto report = pae::expansion_report(dataset, pipeline.expander(), pipeline.scorer(),
                                                report_tau_set ? report_tau : config.ranking.tau);
      pae::print_expansion_report(std::cout, report);
      nlohmann::json methods = nlohmann::json::object();
      for (const auto& [name, s] : report.per_method) {
        methods[name] = {{"avg_paraphrases", s.avg_paraphrases},
                         {"pct_recovered_pairs", s.pct_recovered_pairs},
                         {"pct_answerable_paraphrases", s.pct_answerable_paraphrases}};
      }
      write_out(common.out, nlohmann::json{{"n_queries", report.n_queries},
                                           {"n_pairs", report.n_pairs},
                                           {"n_unanswerable_pairs_baseline", report.n_unanswerable_pairs_baseline},
                                           {"per_method", methods}}
                                .dump(2));
    } else if (*train) {
      const auto corpus = pae::read_training_corpus(train_corpus);
      const auto store = pae::train_sgns(corpus, sgns);
      store.save_text(train_out);
      std::cout << "trained " << store.size() << " words x " << store.dim() << " dims -> " << train_out << '\n';
    } else if (*fixtures) {
      const auto records = pae::load_policyqa(fixtures_in);
      std::ostringstream lines;
      for (const auto& r : records) {
        nlohmann::json line = {
            {"id", r.id},
            {"request", {{"pairs", nlohmann::json::array({{{"question", r.question}, {"segment", r.passage}}})}}},
            {"expected", {{"answer_text", r.answer_text}, {"answer_start_byte", r.answer_start}}}};
        lines << line.dump() << '\n';
      }
      write_out(common.out, lines.str());
      std::cout << records.size() << " fixtures -> " << common.out << '\n';
    } else if (*serve) {
      auto config = make_config(common);
      if (serve_port >= 0) config.port = serve_port;
      config.validate();
      pae::Service service(config);
      const int port = service.bind();
      std::cout << "listening on " << config.host << ':' << port << " (scorer: " << service.pipeline().backend_name()
                << ")" << std::endl;
      service.serve();
    }
  } catch (const pae::BackendError& e) {
    std::cerr << "backend failure (" << e.backend() << "): " << e.what() << '\n';
    return kBackendError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUserError;
  }
  return kOk;
}
