#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pae/corpus.hpp"

namespace pae {

struct Cosine {
  double value = 0.0;
  // Set when either input is all-zero; value is then 0.
  bool zero_vector = false;
};

Cosine cosine(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::string word;
  double similarity = 0.0;
};

// Dense word vectors in insertion order.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  // Replaces the vector if the word already exists.
  void set(std::string_view word, std::span<const double> vector);
  bool contains(std::string_view word) const;
  std::span<const double> vector(std::string_view word) const;
  const std::vector<std::string>& words() const { return words_; }

  void set_frequency(std::string_view word, std::uint64_t count);
  std::optional<std::uint64_t> frequency(std::string_view word) const;

  // Descending cosine, query word excluded, ties by word. With `pos_filter`,
  // only candidates whose lexicon tag matches are kept.
  std::vector<Neighbor> nearest(std::string_view word, std::size_t k, std::optional<Pos> pos_filter,
                                const PosLexicon& lexicon) const;

  void save_text(std::ostream& out) const;
  void save_text(const std::filesystem::path& path) const;

 private:
  std::size_t dim_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::uint64_t> frequency_;
};

// "vocab_size dim" header then "word v1 ... v_dim" rows. Duplicate words keep
// the last row and are reported on std::clog.
EmbeddingStore load_word2vec_text(const std::filesystem::path& path);
EmbeddingStore parse_word2vec_text(std::istream& in, const std::string& source = "<vectors>");

struct SgnsConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  std::size_t min_count = 5;
  double initial_lr = 0.025;
  // Frequent-word subsampling threshold; 0 disables it.
  double subsample = 1e-3;
  std::uint64_t seed = 1;
  // >1 trains sentence shards on private copies of the weights and averages
  // them after each epoch. Results differ from the single-threaded run.
  std::size_t threads = 1;
};

double sigmoid(double x);

// -log σ(u·v) - Σ log σ(-u·n_k) for one (center, context) pair.
double sgns_pair_loss(std::span<const double> center, std::span<const double> context,
                      std::span<const std::span<const double>> negatives);

struct SgnsGradient {
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};

SgnsGradient sgns_pair_gradient(std::span<const double> center, std::span<const double> context,
                                std::span<const std::span<const double>> negatives);

using Sentence = std::vector<std::string>;

// Skip-gram with negative sampling; returns the input (center) vectors.
EmbeddingStore train_sgns(const std::vector<Sentence>& corpus, const SgnsConfig& config);

// Lowercased tokens of each non-empty line.
std::vector<Sentence> read_training_corpus(const std::filesystem::path& path);

}  // namespace pae
