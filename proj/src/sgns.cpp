#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "pae/embeddings.hpp"
#include "pae/errors.hpp"

namespace pae {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double log_sigmoid(double x) {
  // log σ(x) = -log(1 + e^-x), written to stay finite for large |x|.
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Vocabulary {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  std::map<std::string, std::uint32_t, std::less<>> ids;
  std::uint64_t total = 0;
};

Vocabulary build_vocabulary(const std::vector<Sentence>& corpus, std::size_t min_count) {
  std::map<std::string, std::uint64_t, std::less<>> counts;
  for (const auto& sentence : corpus) {
    for (const auto& w : sentence) ++counts[w];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : counts) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  // Descending frequency, then alphabetical: a stable vocabulary order.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (auto& [w, c] : kept) {
    vocab.ids.emplace(w, static_cast<std::uint32_t>(vocab.words.size()));
    vocab.words.push_back(w);
    vocab.counts.push_back(c);
    vocab.total += c;
  }
  return vocab;
}

// Cumulative unigram^0.75 distribution.
class NoiseSampler {
 public:
  explicit NoiseSampler(const std::vector<std::uint64_t>& counts) {
    cumulative_.reserve(counts.size());
    double acc = 0.0;
    for (auto c : counts) {
      acc += std::pow(static_cast<double>(c), 0.75);
      cumulative_.push_back(acc);
    }
  }

  std::uint32_t draw(std::mt19937_64& rng) const {
    const double r = uniform01(rng) * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    return static_cast<std::uint32_t>(std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1));
  }

 private:
  std::vector<double> cumulative_;
};

struct Weights {
  std::size_t dim;
  std::vector<double> input;
  std::vector<double> output;

  std::span<double> in(std::size_t w) { return {input.data() + w * dim, dim}; }
  std::span<double> out(std::size_t w) { return {output.data() + w * dim, dim}; }
};

class Trainer {
 public:
  Trainer(const Vocabulary& vocab, const SgnsConfig& config, const NoiseSampler& noise)
      : vocab_(vocab), config_(config), noise_(noise), grad_center_(config.dim) {}

  // Trains on `sentences` (already mapped to ids). `processed` counts words
  // seen so far across all epochs; lr decays linearly over `total_words`.
  void run(Weights& w, const std::vector<std::vector<std::uint32_t>>& sentences, std::mt19937_64& rng,
           std::uint64_t& processed, std::uint64_t total_words) {
    std::vector<std::uint32_t> kept;
    for (const auto& sentence : sentences) {
      kept.clear();
      for (auto id : sentence) {
        if (config_.subsample > 0.0) {
          const double f = static_cast<double>(vocab_.counts[id]) / static_cast<double>(vocab_.total);
          const double keep = (std::sqrt(f / config_.subsample) + 1.0) * config_.subsample / f;
          if (keep < uniform01(rng)) continue;
        }
        kept.push_back(id);
      }
      for (std::size_t pos = 0; pos < kept.size(); ++pos) {
        const double progress = static_cast<double>(processed) / static_cast<double>(total_words + 1);
        const double lr = config_.initial_lr * std::max(1e-4, 1.0 - progress);
        // Dynamic window as in the reference word2vec: shrink by b in [0, window).
        const std::size_t shrink = config_.window > 0 ? rng() % config_.window : 0;
        const std::size_t reach = config_.window - shrink;
        const std::size_t lo = pos >= reach ? pos - reach : 0;
        const std::size_t hi = std::min(kept.size() - 1, pos + reach);
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          update(w, kept[pos], kept[c], lr, rng);
        }
        ++processed;
      }
    }
  }

 private:
  void update(Weights& w, std::uint32_t center, std::uint32_t context, double lr, std::mt19937_64& rng) {
    auto u = w.in(center);
    std::fill(grad_center_.begin(), grad_center_.end(), 0.0);
    const auto step = [&](std::uint32_t target, double label) {
      auto v = w.out(target);
      // d/dx of -log σ(±x) is σ(x) - label.
      const double g = (sigmoid(dot(u, v)) - label) * lr;
      for (std::size_t d = 0; d < u.size(); ++d) {
        grad_center_[d] += g * v[d];
        v[d] -= g * u[d];
      }
    };
    step(context, 1.0);
    for (std::size_t n = 0; n < config_.negatives; ++n) {
      const auto neg = noise_.draw(rng);
      if (neg == context) continue;
      step(neg, 0.0);
    }
    for (std::size_t d = 0; d < u.size(); ++d) u[d] -= grad_center_[d];
  }

  const Vocabulary& vocab_;
  const SgnsConfig& config_;
  const NoiseSampler& noise_;
  std::vector<double> grad_center_;
};

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sgns_pair_loss(std::span<const double> center, std::span<const double> context,
                      std::span<const std::span<const double>> negatives) {
  double loss = -log_sigmoid(dot(center, context));
  for (const auto& n : negatives) loss -= log_sigmoid(-dot(center, n));
  return loss;
}

SgnsGradient sgns_pair_gradient(std::span<const double> center, std::span<const double> context,
                                std::span<const std::span<const double>> negatives) {
  const std::size_t dim = center.size();
  SgnsGradient g;
  g.center.assign(dim, 0.0);
  g.context.assign(dim, 0.0);
  const double pos = sigmoid(dot(center, context)) - 1.0;
  for (std::size_t d = 0; d < dim; ++d) {
    g.center[d] += pos * context[d];
    g.context[d] = pos * center[d];
  }
  for (const auto& n : negatives) {
    const double s = sigmoid(dot(center, n));
    std::vector<double> gn(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      g.center[d] += s * n[d];
      gn[d] = s * center[d];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

EmbeddingStore train_sgns(const std::vector<Sentence>& corpus, const SgnsConfig& config) {
  if (config.dim == 0) throw DimensionMismatch("dim must be positive");
  const Vocabulary vocab = build_vocabulary(corpus, std::max<std::size_t>(config.min_count, 1));
  if (vocab.words.empty()) {
    throw EmptyVocabulary("no word occurs at least " + std::to_string(config.min_count) + " times");
  }

  std::vector<std::vector<std::uint32_t>> sentences;
  sentences.reserve(corpus.size());
  for (const auto& sentence : corpus) {
    std::vector<std::uint32_t> ids;
    for (const auto& word : sentence) {
      const auto it = vocab.ids.find(word);
      if (it != vocab.ids.end()) ids.push_back(it->second);
    }
    if (ids.size() > 1) sentences.push_back(std::move(ids));
  }

  std::mt19937_64 rng(config.seed);
  Weights weights{config.dim, std::vector<double>(vocab.words.size() * config.dim),
                  std::vector<double>(vocab.words.size() * config.dim, 0.0)};
  for (auto& x : weights.input) x = (uniform01(rng) - 0.5) / static_cast<double>(config.dim);

  const NoiseSampler noise(vocab.counts);
  std::uint64_t words_per_epoch = 0;
  for (const auto& s : sentences) words_per_epoch += s.size();
  const std::uint64_t total_words = words_per_epoch * config.epochs;

  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, sentences.size()));
  if (threads == 1) {
    Trainer trainer(vocab, config, noise);
    std::uint64_t processed = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      trainer.run(weights, sentences, rng, processed, total_words);
    }
  } else {
    std::vector<std::vector<std::vector<std::uint32_t>>> shards(threads);
    for (std::size_t i = 0; i < sentences.size(); ++i) shards[i % threads].push_back(sentences[i]);
    std::vector<std::mt19937_64> rngs;
    for (std::size_t t = 0; t < threads; ++t) rngs.emplace_back(config.seed + 1 + t);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::vector<Weights> local(threads, weights);
      std::vector<std::thread> workers;
      for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          Trainer trainer(vocab, config, noise);
          // Each shard sees 1/threads of the words; scale progress to match.
          std::uint64_t processed = epoch * words_per_epoch / threads;
          trainer.run(local[t], shards[t], rngs[t], processed, total_words / threads);
        });
      }
      for (auto& worker : workers) worker.join();
      for (std::size_t i = 0; i < weights.input.size(); ++i) {
        double in = 0.0, out = 0.0;
        for (const auto& l : local) {
          in += l.input[i];
          out += l.output[i];
        }
        weights.input[i] = in / static_cast<double>(threads);
        weights.output[i] = out / static_cast<double>(threads);
      }
    }
  }

  EmbeddingStore store(config.dim);
  for (std::size_t w = 0; w < vocab.words.size(); ++w) {
    store.set(vocab.words[w], weights.in(w));
    store.set_frequency(vocab.words[w], vocab.counts[w]);
  }
  return store;
}

std::vector<Sentence> read_training_corpus(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<Sentence> corpus;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open " + file.string());
    std::string line;
    while (std::getline(in, line)) {
      Sentence sentence;
      for (auto& token : tokenize(line)) sentence.push_back(std::move(token.normalized));
      if (!sentence.empty()) corpus.push_back(std::move(sentence));
    }
  }
  return corpus;
}

}  // namespace pae
