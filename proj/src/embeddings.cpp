#include "pae/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "pae/errors.hpp"

namespace pae {

Cosine cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  return {std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0), false};
}

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw DimensionMismatch("embedding dimension must be positive");
}

void EmbeddingStore::set(std::string_view word, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw DimensionMismatch("vector for '" + std::string(word) + "' has " + std::to_string(vector.size()) +
                            " components, expected " + std::to_string(dim_));
  }
  auto [it, inserted] = index_.try_emplace(std::string(word), words_.size());
  if (inserted) {
    words_.emplace_back(word);
    data_.insert(data_.end(), vector.begin(), vector.end());
  } else {
    std::copy(vector.begin(), vector.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
  }
}

bool EmbeddingStore::contains(std::string_view word) const { return index_.count(std::string(word)) > 0; }

std::span<const double> EmbeddingStore::vector(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) throw OutOfVocabulary("'" + std::string(word) + "' is not in the vocabulary");
  return {data_.data() + it->second * dim_, dim_};
}

void EmbeddingStore::set_frequency(std::string_view word, std::uint64_t count) {
  frequency_[std::string(word)] = count;
}

std::optional<std::uint64_t> EmbeddingStore::frequency(std::string_view word) const {
  const auto it = frequency_.find(std::string(word));
  if (it == frequency_.end()) return std::nullopt;
  return it->second;
}

std::vector<Neighbor> EmbeddingStore::nearest(std::string_view word, std::size_t k, std::optional<Pos> pos_filter,
                                              const PosLexicon& lexicon) const {
  const auto query = vector(word);
  std::vector<Neighbor> candidates;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] == word) continue;
    if (pos_filter && lexicon.tag(words_[i]) != *pos_filter) continue;
    const std::span<const double> v{data_.data() + i * dim_, dim_};
    candidates.push_back({words_[i], cosine(query, v).value});
  }
  const auto by_similarity = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.word < b.word;
  };
  const std::size_t keep = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    by_similarity);
  candidates.resize(keep);
  return candidates;
}

void EmbeddingStore::save_text(std::ostream& out) const {
  out << words_.size() << ' ' << dim_ << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    out << words_[i];
    for (std::size_t d = 0; d < dim_; ++d) out << ' ' << data_[i * dim_ + d];
    out << '\n';
  }
}

void EmbeddingStore::save_text(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  save_text(out);
}

EmbeddingStore parse_word2vec_text(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError(source, 1, "missing header");
  std::istringstream header(line);
  long long vocab = -1, dim = -1;
  std::string extra;
  if (!(header >> vocab >> dim) || (header >> extra) || vocab <= 0 || dim <= 0) {
    throw FormatError(source, 1, "header must be 'vocab_size dim' with positive values");
  }
  EmbeddingStore store(static_cast<std::size_t>(dim));
  std::size_t rows = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::istringstream row(line);
    std::string word;
    row >> word;
    values.clear();
    std::string component;
    while (row >> component) {
      char* end = nullptr;
      const double v = std::strtod(component.c_str(), &end);
      if (end != component.c_str() + component.size() || !std::isfinite(v)) {
        throw FormatError(source, line_no, "bad component '" + component + "'");
      }
      values.push_back(v);
    }
    if (values.size() != store.dim()) {
      throw DimensionMismatch(source + ":" + std::to_string(line_no) + ": '" + word + "' has " +
                              std::to_string(values.size()) + " components, expected " + std::to_string(store.dim()));
    }
    if (store.contains(word)) {
      std::clog << "warning: " << source << ":" << line_no << ": duplicate word '" << word
                << "', keeping the last occurrence\n";
    }
    store.set(word, values);
    ++rows;
  }
  if (rows != static_cast<std::size_t>(vocab)) {
    throw FormatError(source, line_no,
                      "header declares " + std::to_string(vocab) + " rows, found " + std::to_string(rows));
  }
  return store;
}

EmbeddingStore load_word2vec_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_word2vec_text(in, path.string());
}

}  // namespace pae
