#include <cmath>
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pae/errors.hpp"
#include "pae/scoring.hpp"
#include "pae/translator.hpp"

namespace pae {
namespace {

using nlohmann::json;

json encode_pairs(std::span<const TextPair> pairs) {
  json arr = json::array();
  for (const auto& p : pairs) arr.push_back({{"question", p.question}, {"segment", p.segment}});
  return json{{"pairs", std::move(arr)}};
}

double finite_number(const json& v, const char* what) {
  if (!v.is_number()) throw ProtocolError(std::string(what) + " is not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ProtocolError(std::string(what) + " is not finite");
  return d;
}

// nlohmann rejects NaN literals; accept them here so they can be reported as
// a schema violation rather than a parse failure.
json parse_body(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) {
    if (body.find("NaN") != std::string::npos || body.find("Infinity") != std::string::npos) {
      throw ProtocolError("response contains a non-finite value");
    }
    throw ProtocolError("response is not valid JSON");
  }
  return j;
}

std::vector<double> decode_relevance(const std::string& body, std::size_t expected) {
  const json j = parse_body(body);
  if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array()) {
    throw ProtocolError("relevance response lacks a 'scores' array");
  }
  const auto& scores = j["scores"];
  if (scores.size() != expected) {
    throw ProtocolError("relevance response has " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(expected) + " pairs");
  }
  std::vector<double> out;
  for (const auto& s : scores) {
    const double v = finite_number(s, "relevance score");
    if (v < 0.0 || v > 1.0) throw ScoreOutOfRange("relevance score " + std::to_string(v) + " outside [0, 1]");
    out.push_back(v);
  }
  return out;
}

std::vector<SpanScores> decode_spans(const std::string& body, std::size_t expected) {
  const json j = parse_body(body);
  if (!j.is_object() || !j.contains("results") || !j["results"].is_array()) {
    throw ProtocolError("span response lacks a 'results' array");
  }
  const auto& results = j["results"];
  if (results.size() != expected) {
    throw ProtocolError("span response has " + std::to_string(results.size()) + " results for " +
                        std::to_string(expected) + " pairs");
  }
  std::vector<SpanScores> out;
  for (const auto& r : results) {
    SpanScores s;
    try {
      for (const auto& t : r.at("tokens")) s.tokens.push_back(t.get<std::string>());
      for (const auto& v : r.at("start_logits")) s.start_logits.push_back(finite_number(v, "start logit"));
      for (const auto& v : r.at("end_logits")) s.end_logits.push_back(finite_number(v, "end logit"));
      s.null_score = finite_number(r.at("null_score"), "null_score");
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("malformed span result: ") + e.what());
    }
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TextPair> to_text_pairs(const PolicyDocument& policy, std::span<const QuestionSegment> pairs) {
  std::vector<TextPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.segment_index >= policy.size()) {
      throw Error("segment " + std::to_string(p.segment_index) + " out of range for policy " + policy.id);
    }
    out.push_back({p.question, policy.segments[p.segment_index].text});
  }
  return out;
}

}  // namespace

RemoteScorer::RemoteScorer(std::string base_url, RemoteScorerOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  split_url(base_url_);
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (options_.batch_size == 0) options_.batch_size = 1;
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
  if (options_.attempts == 0) options_.attempts = 1;
}

std::string RemoteScorer::post_with_retry(const std::string& path, const std::string& body) const {
  auto backoff = options_.initial_backoff;
  std::string last_error;
  for (std::size_t attempt = 1; attempt <= options_.attempts; ++attempt) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    auto res = client.Post(path, body, "application/json");
    if (res && res->status >= 200 && res->status < 300) return res->body;
    if (res && res->status >= 400 && res->status < 500) {
      throw ProtocolError(base_url_ + path + " rejected the request with HTTP " + std::to_string(res->status));
    }
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt < options_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw ScorerUnavailable(base_url_ + path + " failed after " + std::to_string(options_.attempts) +
                          " attempts: " + last_error);
}

template <typename Result, typename Decode>
std::vector<Result> RemoteScorer::chunked(const std::string& path, std::span<const TextPair> pairs,
                                          Decode decode) const {
  std::vector<Result> out;
  out.reserve(pairs.size());
  const std::size_t batch = options_.batch_size;
  const std::size_t n_chunks = (pairs.size() + batch - 1) / batch;
  for (std::size_t wave = 0; wave < n_chunks; wave += options_.max_in_flight) {
    std::vector<std::future<std::vector<Result>>> futures;
    for (std::size_t c = wave; c < std::min(n_chunks, wave + options_.max_in_flight); ++c) {
      const auto chunk = pairs.subspan(c * batch, std::min(batch, pairs.size() - c * batch));
      futures.push_back(std::async(std::launch::async, [this, &path, chunk, &decode] {
        return decode(post_with_retry(path, encode_pairs(chunk).dump()), chunk.size());
      }));
    }
    // get() in order keeps results aligned with requests; the first failure propagates.
    for (auto& f : futures) {
      auto part = f.get();
      std::move(part.begin(), part.end(), std::back_inserter(out));
    }
  }
  return out;
}

std::vector<double> RemoteScorer::relevance_batch(std::span<const TextPair> pairs) const {
  return chunked<double>("/v1/relevance", pairs, decode_relevance);
}

std::vector<SpanScores> RemoteScorer::span_batch(std::span<const TextPair> pairs) const {
  return chunked<SpanScores>("/v1/spans", pairs, decode_spans);
}

std::vector<double> RemoteScorer::relevance(const PolicyDocument& policy,
                                            std::span<const QuestionSegment> pairs) const {
  const auto text = to_text_pairs(policy, pairs);
  return relevance_batch(text);
}

std::vector<SpanScores> RemoteScorer::spans(const PolicyDocument& policy,
                                            std::span<const QuestionSegment> pairs) const {
  const auto text = to_text_pairs(policy, pairs);
  return span_batch(text);
}

HealthStatus RemoteScorer::health() const {
  httplib::Client client(base_url_);
  client.set_connection_timeout(std::chrono::seconds(2));
  client.set_read_timeout(std::chrono::seconds(2));
  auto res = client.Get("/v1/health");
  if (!res) return {false, {}, httplib::to_string(res.error())};
  if (res->status != 200) return {false, {}, "HTTP " + std::to_string(res->status)};
  const json j = json::parse(res->body, nullptr, false);
  if (!j.is_object() || j.value("status", "") != "ok") return {false, {}, "unexpected health payload"};
  return {true, j.value("model", ""), {}};
}

}  // namespace pae
