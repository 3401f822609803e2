#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dao {

inline constexpr std::size_t kPadId = 0;

struct TokenizerOptions {
  std::size_t vocab_size = 32768;
  std::size_t max_len = 512;
};

/// FNV-1a 64-bit. Fixed across processes and machines.
std::uint64_t stable_hash(std::string_view text);

/// Lowercases, splits on runs of non-alphanumeric characters, and maps each
/// token to 1 + hash mod (vocab_size - 1). Id 0 is reserved for padding; an
/// empty text yields the single pad id. Output is truncated to max_len.
std::vector<std::size_t> tokenize(std::string_view text, const TokenizerOptions& options = {});

struct Example {
  std::string text;
  double score = 0.0;
  int label = 2;
};

/// Builds an example with its label derived from the score.
Example make_example(std::string text, double score);

struct Corpus {
  std::vector<Example> examples;
  std::string provenance;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

/// Reads line-delimited JSON objects {"text": ..., "score": ...} or a CSV
/// file whose header row is `text,score`. Throws IngestionError with the
/// offending line number.
Corpus load_corpus(const std::filesystem::path& path);

/// Writes one JSON object per line.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Seeded shuffle, then the first floor(ratio * N) examples become the training set.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double ratio = 0.9, std::uint64_t seed = 42);

struct SynthSpec {
  std::size_t n = 2200;
  std::array<double, 5> mix{0.05, 0.15, 0.60, 0.15, 0.05};
  double noise = 0.3;
  std::uint64_t seed = 42;
};

/// Synthetic sentiment corpus: each example draws a class from the mix, a
/// score uniform inside that class's interval (kept 0.001 away from the
/// thresholds), and 20-80 tokens, each a class-signature word with
/// probability 1 - noise and a shared filler word otherwise.
Corpus synth_generate(const SynthSpec& spec);

/// Signature vocabulary of one class in the synthetic corpus.
std::span<const std::string_view> synth_lexicon(std::size_t label);
/// Filler vocabulary shared by every class.
std::span<const std::string_view> synth_filler();

struct TokenizedCorpus {
  std::vector<std::vector<std::size_t>> tokens;
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return tokens.size(); }
};

TokenizedCorpus tokenize_corpus(const Corpus& corpus, const TokenizerOptions& options = {});

/// Padded id matrix plus targets for one step.
struct Batch {
  std::vector<std::size_t> ids;  // row-major, rows x width, padded with kPadId
  std::size_t width = 0;
  std::vector<std::size_t> lengths;
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return lengths.size(); }
};

/// Splits a tokenized corpus into batches. With `shuffle`, the order is a
/// permutation seeded by (seed, epoch); the final partial batch is kept.
std::vector<Batch> make_batches(const TokenizedCorpus& corpus, std::size_t batch_size, std::uint64_t seed,
                                std::uint64_t epoch, bool shuffle);

/// Batch of the given corpus rows, in order.
Batch make_batch(const TokenizedCorpus& corpus, std::span<const std::size_t> rows);

}  // namespace dao
