#include "pae/translator.hpp"

#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "pae/corpus.hpp"
#include "pae/errors.hpp"

namespace pae {

std::pair<std::string, std::string> split_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos || scheme == 0) throw ConfigError("malformed url '" + std::string(url) + "'");
  const auto slash = url.find('/', scheme + 3);
  if (slash == scheme + 3) throw ConfigError("malformed url '" + std::string(url) + "'");
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

HttpTranslator::HttpTranslator(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout) {
  std::tie(base_, path_) = split_url(url);
}

std::string HttpTranslator::translate(const std::string& text, const std::string& source_lang,
                                      const std::string& target_lang) {
  httplib::Client client(base_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  const nlohmann::json body = {{"text", text}, {"source_lang", source_lang}, {"target_lang", target_lang}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) throw TranslatorUnavailable("translator " + base_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw TranslatorUnavailable("translator " + base_ + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TranslatorUnavailable("translator " + base_ + ": bad response: " + e.what());
  }
}

CachingTranslator::CachingTranslator(std::unique_ptr<Translator> upstream) : upstream_(std::move(upstream)) {}

void CachingTranslator::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      fields.push_back(line.substr(start, tab - start));
    }
    fields.push_back(line.substr(start));
    if (fields.size() != 4) throw FormatError(path.string(), line_no, "expected 4 tab-separated fields");
    put(fields[0], fields[1], fields[2], fields[3]);
  }
}

void CachingTranslator::put(std::string source_lang, std::string target_lang, std::string input, std::string output) {
  std::lock_guard lock(mu_);
  cache_[{std::move(source_lang), std::move(target_lang), std::move(input)}] = std::move(output);
}

std::size_t CachingTranslator::size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

std::string CachingTranslator::translate(const std::string& text, const std::string& source_lang,
                                         const std::string& target_lang) {
  {
    std::lock_guard lock(mu_);
    const auto it = cache_.find({source_lang, target_lang, text});
    if (it != cache_.end()) return it->second;
  }
  if (!upstream_) {
    throw TranslatorUnavailable("no cached translation " + source_lang + "->" + target_lang + " for '" + text + "'");
  }
  auto out = upstream_->translate(text, source_lang, target_lang);
  put(source_lang, target_lang, text, out);
  return out;
}

}  // namespace pae
