#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dao/data.hpp"
#include "dao/error.hpp"
#include "dao/losses.hpp"

using namespace dao;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("dao_test_" + name);
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(tokenize("ECB Rate") == tokenize("ecb rate"));
  CHECK(tokenize("ecb, rate!") == tokenize("ecb rate"));
  CHECK(tokenize("") == std::vector<std::size_t>{kPadId});
  CHECK(stable_hash("") == 0xcbf29ce484222325ULL);
  CHECK(stable_hash("a") == 0xaf63dc4c8601ec8cULL);

  std::string long_text;
  for (int i = 0; i < 600; ++i) long_text += "w" + std::to_string(i) + " ";
  CHECK(tokenize(long_text).size() == 512);

  TokenizerOptions small{10, 512};
  for (auto id : tokenize("the quick brown fox jumps over the lazy dog", small)) {
    CHECK(id >= 1);
    CHECK(id < 10);
  }
  const auto ids = tokenize("interest rates");
  CHECK(ids[0] == 1 + stable_hash("interest") % 32767);
}

TEST_CASE("jsonl ingestion") {
  const auto path = temp_file("ok.jsonl", "{\"text\": \"shares rally\", \"score\": 0.6}\n\n{\"text\": \"flat\", \"score\": 0}\n");
  const auto corpus = load_corpus(path);
  REQUIRE(corpus.size() == 2);
  CHECK(corpus.examples[0].label == 4);
  CHECK(corpus.examples[1].label == 2);

  try {
    load_corpus(temp_file("range.jsonl", "{\"text\": \"a\", \"score\": 0.1}\n{\"text\": \"b\", \"score\": 1.5}\n"));
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_corpus(temp_file("empty.jsonl", "")), IngestionError);
  CHECK_THROWS_AS(load_corpus(temp_file("nofield.jsonl", "{\"text\": \"a\"}\n")), IngestionError);
  CHECK_THROWS_AS(load_corpus(temp_file("bad.jsonl", "{\"text\": \"a\", \"score\": \"x\"}\n")), IngestionError);
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), IngestionError);
}

TEST_CASE("csv ingestion") {
  const auto corpus = load_corpus(temp_file("ok.csv", "text,score\n\"profits, up\",0.7\nlosses,-0.6\n"));
  REQUIRE(corpus.size() == 2);
  CHECK(corpus.examples[0].text == "profits, up");
  CHECK(corpus.examples[0].label == 4);
  CHECK(corpus.examples[1].label == 0);
  try {
    load_corpus(temp_file("bad.csv", "text,score\na,0.1\nb,abc\n"));
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("save and reload") {
  Corpus c;
  c.examples.push_back(make_example("quote \" and newline\n", -0.25));
  c.examples.push_back(make_example("plain", 0.123456789012345));
  const auto path = std::filesystem::temp_directory_path() / "dao_test_roundtrip.jsonl";
  save_corpus(c, path);
  const auto back = load_corpus(path);
  REQUIRE(back.size() == 2);
  CHECK(back.examples[0].text == c.examples[0].text);
  CHECK(back.examples[1].score == c.examples[1].score);
}

TEST_CASE("split") {
  Corpus c;
  for (int i = 0; i < 1000; ++i) c.examples.push_back(make_example("t" + std::to_string(i), 0.0));
  const auto [train, val] = split(c, 0.9, 42);
  CHECK(train.size() == 900);
  CHECK(val.size() == 100);
  std::set<std::string> all;
  for (const auto& e : train.examples) all.insert(e.text);
  for (const auto& e : val.examples) CHECK(all.insert(e.text).second);
  CHECK(all.size() == 1000);
  const auto [train2, val2] = split(c, 0.9, 42);
  for (std::size_t i = 0; i < 100; ++i) CHECK(val.examples[i].text == val2.examples[i].text);
  const auto [train3, val3] = split(c, 0.9, 43);
  bool differs = false;
  for (std::size_t i = 0; i < 100; ++i) differs = differs || val.examples[i].text != val3.examples[i].text;
  CHECK(differs);
}

TEST_CASE("synthetic corpus") {
  SynthSpec spec;
  spec.n = 10000;
  const auto c = synth_generate(spec);
  REQUIRE(c.size() == 10000);
  std::array<double, 5> counts{};
  for (const auto& e : c.examples) {
    CHECK(e.label == map_score_to_class(e.score));
    CHECK(e.score >= -1.0);
    CHECK(e.score <= 1.0);
    counts[static_cast<std::size_t>(e.label)] += 1.0;
  }
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(counts[k] / 10000.0 - spec.mix[k]) <= 0.02);

  SynthSpec small;
  small.n = 50;
  const auto a = synth_generate(small);
  const auto b = synth_generate(small);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(a.examples[i].text == b.examples[i].text);
    CHECK(a.examples[i].score == b.examples[i].score);
  }
  CHECK_THROWS_AS(synth_generate(SynthSpec{100, {0.5, 0.5, 0.5, 0, 0}, 0.3, 1}), ConfigError);
}

TEST_CASE("noise-free synthetic data is separable by lexicon overlap") {
  SynthSpec spec;
  spec.n = 2000;
  spec.noise = 0.0;
  const auto c = synth_generate(spec);
  std::size_t correct = 0;
  for (const auto& e : c.examples) {
    std::array<std::size_t, 5> overlap{};
    std::string word;
    std::stringstream in(e.text);
    while (in >> word) {
      for (std::size_t k = 0; k < 5; ++k) {
        const auto lex = synth_lexicon(k);
        if (std::find(lex.begin(), lex.end(), word) != lex.end()) ++overlap[k];
      }
    }
    const auto best = static_cast<int>(std::max_element(overlap.begin(), overlap.end()) - overlap.begin());
    if (best == e.label) ++correct;
  }
  CHECK(correct == c.size());
}

TEST_CASE("batching") {
  Corpus c;
  for (int i = 0; i < 25; ++i) c.examples.push_back(make_example("w" + std::to_string(i) + " x", -0.9 + 0.07 * i));
  const auto t = tokenize_corpus(c);
  const auto batches = make_batches(t, 10, 42, 1, false);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 10);
  CHECK(batches[1].size() == 10);
  CHECK(batches[2].size() == 5);
  CHECK(batches[0].scores[0] == c.examples[0].score);
  CHECK(batches[2].scores[4] == c.examples[24].score);
  for (const auto& b : batches) {
    const auto stats = class_stats(b.labels);
    double total = 0;
    for (double p : stats.proportions) total += p;
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(b.ids.size() == b.size() * b.width);
  }
  const auto s1 = make_batches(t, 10, 42, 1, true);
  const auto s2 = make_batches(t, 10, 42, 1, true);
  const auto s3 = make_batches(t, 10, 42, 2, true);
  CHECK(s1[0].scores == s2[0].scores);
  CHECK(s1[0].scores != s3[0].scores);
}
