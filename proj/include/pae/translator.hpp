#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>

namespace pae {

// Machine translation backend. Implementations throw TranslatorUnavailable.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string translate(const std::string& text, const std::string& source_lang,
                                const std::string& target_lang) = 0;
};

// POST {text, source_lang, target_lang} -> {text} against `url`.
class HttpTranslator : public Translator {
 public:
  explicit HttpTranslator(std::string url, std::chrono::milliseconds timeout = std::chrono::seconds(10));
  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;

 private:
  std::string base_;
  std::string path_;
  std::chrono::milliseconds timeout_;
};

// Answers from a TSV cache (source_lang, target_lang, input, output) and
// falls through to `upstream` on a miss. Upstream answers are memoized.
class CachingTranslator : public Translator {
 public:
  explicit CachingTranslator(std::unique_ptr<Translator> upstream = nullptr);

  void load(const std::filesystem::path& path);
  void put(std::string source_lang, std::string target_lang, std::string input, std::string output);
  std::size_t size() const;

  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;

 private:
  using Key = std::tuple<std::string, std::string, std::string>;
  mutable std::mutex mu_;
  std::map<Key, std::string> cache_;
  std::unique_ptr<Translator> upstream_;
};

// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_url(std::string_view url);

}  // namespace pae
