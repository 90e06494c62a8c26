#include "pae/service.hpp"

#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "pae/errors.hpp"
#include "pae/evaluation.hpp"

namespace pae {
namespace {

using nlohmann::json;

struct HttpError {
  int status;
  std::string message;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_request(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw HttpError{400, "request body must be a JSON object"};
  return body;
}

std::string require_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) throw HttpError{422, std::string("'") + key + "' must be a string"};
  return body[key].get<std::string>();
}

std::size_t count_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

// Runs `fn`, mapping library errors onto status codes.
template <typename Fn>
void guarded(httplib::Response& res, Fn fn) {
  try {
    fn();
  } catch (const HttpError& e) {
    send_json(res, e.status, {{"error", e.message}});
  } catch (const BackendError& e) {
    send_json(res, 502, {{"error", e.what()}, {"backend", e.backend()}});
  } catch (const DuplicatePolicy& e) {
    send_json(res, 409, {{"error", e.what()}});
  } catch (const EmptyPolicy& e) {
    send_json(res, 422, {{"error", e.what()}});
  } catch (const Error& e) {
    send_json(res, 422, {{"error", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", e.what()}});
  }
}

}  // namespace

PolicyStore::PolicyStore(std::filesystem::path log_path, const Pipeline& pipeline) : log_path_(std::move(log_path)) {
  if (!std::filesystem::exists(log_path_)) return;
  std::ifstream in(log_path_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw FormatError(log_path_.string(), line_no, "bad policy record");
    try {
      auto policy = pipeline.ingest(j.at("id").get<std::string>(), j.at("segments").get<std::vector<std::string>>(),
                                    j.value("title", ""));
      auto id = policy.id;
      policies_[id] = std::make_shared<const PolicyDocument>(std::move(policy));
    } catch (const json::exception& e) {
      throw FormatError(log_path_.string(), line_no, e.what());
    }
  }
}

std::shared_ptr<const PolicyDocument> PolicyStore::add(PolicyDocument policy) {
  std::unique_lock lock(mu_);
  if (policies_.count(policy.id)) throw DuplicatePolicy("policy '" + policy.id + "' already exists");
  json segments = json::array();
  for (const auto& s : policy.segments) segments.push_back(s.text);
  const json record = {{"id", policy.id}, {"title", policy.title}, {"segments", std::move(segments)}};
  if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
  std::ofstream out(log_path_, std::ios::app);
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to " + log_path_.string());
  auto stored = std::make_shared<const PolicyDocument>(std::move(policy));
  policies_[stored->id] = stored;
  return stored;
}

std::shared_ptr<const PolicyDocument> PolicyStore::find(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto it = policies_.find(id);
  return it == policies_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<const PolicyDocument>> PolicyStore::list() const {
  std::shared_lock lock(mu_);
  std::vector<std::shared_ptr<const PolicyDocument>> out;
  for (const auto& [id, p] : policies_) out.push_back(p);
  return out;
}

std::size_t PolicyStore::size() const {
  std::shared_lock lock(mu_);
  return policies_.size();
}

Service::Service(const Config& config)
    : config_(config),
      pipeline_(std::make_unique<Pipeline>(config)),
      store_(std::make_unique<PolicyStore>(config.data_dir / "policies.jsonl", *pipeline_)),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (config_.port == 0) return server_->bind_to_any_port(config_.host);
  if (!server_->bind_to_port(config_.host, config_.port)) {
    throw ConfigError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  return config_.port;
}

void Service::serve() { server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::wait_until_ready() const { server_->wait_until_ready(); }

void Service::routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    std::string status = "ok";
    json body = {{"backend", pipeline_->backend_name()}, {"n_policies", store_->size()}};
    if (const auto* remote = pipeline_->remote_scorer()) {
      const auto h = remote->health();
      if (!h.ok) {
        status = "degraded";
        body["detail"] = h.detail;
      } else {
        body["model"] = h.model;
      }
    }
    body["status"] = status;
    send_json(res, 200, body);
  });

  srv.Get("/policies", [this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& p : store_->list()) list.push_back({{"id", p->id}, {"title", p->title}, {"n_segments", p->size()}});
    send_json(res, 200, {{"policies", std::move(list)}});
  });

  srv.Get(R"(/policies/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto policy = store_->find(req.matches[1]);
    if (!policy) {
      send_json(res, 404, {{"error", "unknown policy '" + std::string(req.matches[1]) + "'"}});
      return;
    }
    json segments = json::array();
    for (const auto& s : policy->segments) segments.push_back({{"index", s.index}, {"text", s.text}});
    send_json(res, 200, {{"id", policy->id}, {"title", policy->title}, {"segments", std::move(segments)}});
  });

  srv.Post("/policies", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_request(req);
      const auto id = require_string(body, "id");
      if (trim(id).empty()) throw HttpError{422, "'id' must not be empty"};
      const std::string title = body.contains("title") && body["title"].is_string() ? body["title"].get<std::string>() : "";
      PolicyDocument policy;
      if (body.contains("segments")) {
        if (!body["segments"].is_array()) throw HttpError{422, "'segments' must be an array of strings"};
        std::vector<std::string> segments;
        for (const auto& s : body["segments"]) {
          if (!s.is_string()) throw HttpError{422, "'segments' must be an array of strings"};
          segments.push_back(s.get<std::string>());
        }
        policy = pipeline_->ingest(id, segments, title);
      } else if (body.contains("raw")) {
        policy = pipeline_->ingest(id, require_string(body, "raw"), title);
      } else {
        throw HttpError{422, "body needs 'segments' or 'raw'"};
      }
      if (store_->find(id)) throw DuplicatePolicy("policy '" + id + "' already exists");
      const auto stored = store_->add(std::move(policy));
      send_json(res, 201, {{"id", stored->id}, {"n_segments", stored->size()}});
    });
  });

  srv.Post("/query", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto started = std::chrono::steady_clock::now();
      const auto body = parse_request(req);
      const auto policy_id = require_string(body, "policy_id");
      const auto question = require_string(body, "question");
      const auto policy = store_->find(policy_id);
      if (!policy) throw HttpError{404, "unknown policy '" + policy_id + "'"};
      if (trim(question).empty()) throw HttpError{422, "question must not be empty"};
      std::size_t k = config_.k;
      if (body.contains("k")) {
        if (!body["k"].is_number_integer() || body["k"].get<long long>() < 1) throw HttpError{422, "'k' must be >= 1"};
        k = body["k"].get<std::size_t>();
      }
      auto order = PresentationOrder::kRank;
      if (body.contains("presentation_order")) {
        const auto parsed = parse_order(body["presentation_order"].is_string()
                                            ? body["presentation_order"].get<std::string>()
                                            : std::string());
        if (!parsed) throw HttpError{422, "'presentation_order' must be 'rank' or 'document'"};
        order = *parsed;
      }
      const auto answer = pipeline_->answer(*policy, question, k, order);
      auto payload = answer_to_json(answer, *policy, question);
      payload["timing_ms"] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      send_json(res, 200, payload);
    });
  });

  srv.Post("/evaluate", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_request(req);
      const std::filesystem::path path = require_string(body, "dataset_path");
      if (!std::filesystem::is_regular_file(path)) throw HttpError{422, "dataset not found: " + path.string()};
      const auto rows = count_lines(path);
      if (rows > config_.max_eval_rows + 1) {
        throw HttpError{422, "dataset has " + std::to_string(rows - 1) + " rows; the service limit is " +
                                 std::to_string(config_.max_eval_rows) + " (use the CLI for batch runs)"};
      }
      std::vector<std::size_t> ks{5, 10};
      if (body.contains("ks")) {
        ks.clear();
        if (!body["ks"].is_array()) throw HttpError{422, "'ks' must be an array of positive integers"};
        for (const auto& k : body["ks"]) {
          if (!k.is_number_integer() || k.get<long long>() < 1) throw HttpError{422, "'ks' must be positive integers"};
          ks.push_back(k.get<std::size_t>());
        }
      }
      std::vector<AblationConfig> configs;
      if (body.contains("ablations")) {
        if (!body["ablations"].is_array()) throw HttpError{422, "'ablations' must be an array of names"};
        for (const auto& a : body["ablations"]) {
          const auto c = a.is_string() ? ablation_by_name(a.get<std::string>(), config_.ranking) : std::nullopt;
          if (!c) throw HttpError{422, "unknown ablation " + a.dump()};
          configs.push_back(*c);
        }
      } else {
        configs = standard_ablations(config_.ranking);
      }
      MetricOptions options;
      options.exclude_out_of_scope = body.value("exclude_out_of_scope", false);
      const auto dataset = load_privacyqa(path, pipeline_->lexicon());
      const auto rows_out = ablation_run(dataset, pipeline_->expander(), pipeline_->scorer(), configs, ks, options);
      json reports = json::array();
      for (const auto& [name, report] : rows_out) reports.push_back(report_to_json(name, report));
      std::ostringstream table;
      print_report_table(table, rows_out);
      send_json(res, 200, {{"reports", std::move(reports)},
                           {"rows", json::parse(report_rows_json(rows_out))},
                           {"table", table.str()}});
    });
  });
}

}  // namespace pae
