#include "dao/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dao/error.hpp"
#include "dao/losses.hpp"
#include "dao/random.hpp"

namespace dao {

namespace {

constexpr std::string_view kStronglyBearish[] = {
    "plunge", "collapse", "crash",   "rout",     "capitulation", "freefall", "meltdown", "slump",
    "tumble", "panic",    "selloff", "plummet", "devastating",  "crisis",   "wipeout",  "nosedive"};
constexpr std::string_view kBearish[] = {
    "slip",    "ease",   "soften",  "decline", "weaken",   "dip",       "retreat", "pressure",
    "dovish",  "lower",  "cautious", "drift",  "downside", "resistance", "fade",   "concern"};
constexpr std::string_view kNeutral[] = {
    "steady",  "flat",     "unchanged", "range",   "consolidate", "sideways", "balanced", "muted",
    "awaiting", "stable", "mixed",     "neutral", "holding",     "pause",    "calm",     "quiet"};
constexpr std::string_view kBullish[] = {
    "gain",   "rise",    "firm",   "climb",    "hawkish", "recover", "support",  "upside",
    "higher", "advance", "improve", "optimism", "edge",   "bid",     "strength", "rebound"};
constexpr std::string_view kStronglyBullish[] = {
    "surge",    "soar",   "rally",    "skyrocket", "breakout", "boom",   "jump",   "spike",
    "euphoria", "record", "blowout", "rocket",    "stellar",  "robust", "frenzy", "triumph"};
constexpr std::string_view kFiller[] = {
    "the",     "euro",    "dollar",  "eur",     "usd",    "pair",     "market", "traders", "session", "ecb",
    "fed",     "rate",    "data",    "report",  "week",   "today",    "price",  "level",   "analysts", "inflation",
    "policy",  "yields",  "bond",    "central", "bank",   "outlook",  "europe", "us",      "chart",   "trend",
    "payrolls", "gdp",    "minutes", "speech",  "around", "following", "amid",  "after",   "ahead",   "of"};

constexpr std::span<const std::string_view> kLexicons[kNumClasses] = {
    kStronglyBearish, kBearish, kNeutral, kBullish, kStronglyBullish};

// Score interval per class, kept 0.001 inside the class thresholds.
constexpr std::array<std::pair<double, double>, kNumClasses> kScoreRanges{{
    {-1.0, -0.501}, {-0.499, -0.050}, {-0.048, 0.048}, {0.050, 0.499}, {0.501, 1.0}}};

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits one CSV record, honoring double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw IngestionError("unterminated quoted field", line_no);
  fields.push_back(std::move(field));
  return fields;
}

double parse_score(std::string_view raw, std::size_t line_no) {
  const auto s = trim(raw);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw IngestionError("unparsable score '" + std::string(s) + "'", line_no);
  }
  return value;
}

Example checked_example(std::string text, double score, std::size_t line_no) {
  if (!std::isfinite(score) || score < -1.0 || score > 1.0) {
    throw IngestionError("score " + std::to_string(score) + " outside [-1, 1]", line_no);
  }
  return make_example(std::move(text), score);
}

}  // namespace

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::size_t> tokenize(std::string_view text, const TokenizerOptions& options) {
  if (options.vocab_size < 2) throw ConfigError("vocabulary needs at least two ids");
  std::vector<std::size_t> ids;
  std::string token;
  auto flush = [&] {
    if (!token.empty() && ids.size() < options.max_len) {
      ids.push_back(1 + stable_hash(token) % (options.vocab_size - 1));
    }
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  if (ids.empty()) ids.push_back(kPadId);
  return ids;
}

Example make_example(std::string text, double score) {
  return Example{std::move(text), score, map_score_to_class(score)};
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open corpus file " + path.string(), 0);

  Corpus corpus;
  corpus.provenance = "file:" + path.string();
  std::string line;
  std::size_t line_no = 0;
  bool csv = false;
  bool format_known = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto body = trim(line);
    if (body.empty()) continue;

    if (!format_known) {
      format_known = true;
      if (body.front() != '{') {
        csv = true;
        const auto header = split_csv_line(body, line_no);
        if (header.size() != 2 || trim(header[0]) != "text" || trim(header[1]) != "score") {
          throw IngestionError("expected CSV header 'text,score' or JSON records", line_no);
        }
        continue;
      }
    }

    if (csv) {
      const auto fields = split_csv_line(body, line_no);
      if (fields.size() != 2) throw IngestionError("expected 2 CSV fields, got " + std::to_string(fields.size()), line_no);
      corpus.examples.push_back(checked_example(fields[0], parse_score(fields[1], line_no), line_no));
      continue;
    }

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw IngestionError(std::string("malformed JSON record: ") + e.what(), line_no);
    }
    if (!record.is_object()) throw IngestionError("record is not an object", line_no);
    if (!record.contains("text") || !record["text"].is_string()) throw IngestionError("missing string field 'text'", line_no);
    if (!record.contains("score")) throw IngestionError("missing field 'score'", line_no);
    if (!record["score"].is_number()) throw IngestionError("unparsable score", line_no);
    corpus.examples.push_back(
        checked_example(record["text"].get<std::string>(), record["score"].get<double>(), line_no));
  }
  if (corpus.examples.empty()) throw IngestionError("corpus " + path.string() + " has no records", 0);
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write corpus file " + path.string(), 0);
  for (const auto& ex : corpus.examples) {
    nlohmann::json record{{"text", ex.text}, {"score", ex.score}};
    out << record.dump() << '\n';
  }
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double ratio, std::uint64_t seed) {
  if (corpus.size() < 2) throw ContractError("split needs at least two examples");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  const auto order = seeded_permutation(corpus.size(), seed);
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(corpus.size())));
  Corpus train{{}, corpus.provenance + "#train"};
  Corpus val{{}, corpus.provenance + "#val"};
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? train : val).examples.push_back(corpus.examples[order[i]]);
  }
  return {std::move(train), std::move(val)};
}

Corpus synth_generate(const SynthSpec& spec) {
  if (spec.n < 5) throw ConfigError("synthetic corpus needs n >= 5");
  double mix_total = 0.0;
  for (double p : spec.mix) {
    if (!(p >= 0.0)) throw ConfigError("class mix entries must be non-negative");
    mix_total += p;
  }
  if (std::abs(mix_total - 1.0) > 1e-9) throw ConfigError("class mix must sum to 1");
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) throw ConfigError("noise rate must lie in [0, 1]");

  Rng rng(spec.seed);
  Corpus corpus;
  std::ostringstream prov;
  prov << "synthetic(seed=" << spec.seed << ",n=" << spec.n << ",noise=" << spec.noise << ")";
  corpus.provenance = prov.str();
  corpus.examples.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double u = rng.uniform();
    std::size_t label = 0;
    double cumulative = spec.mix[0];
    while (label + 1 < kNumClasses && u >= cumulative) cumulative += spec.mix[++label];
    // Guard against rounding landing on an empty class.
    while (spec.mix[label] == 0.0 && label > 0) --label;

    const auto [lo, hi] = kScoreRanges[label];
    const double score = rng.uniform(lo, hi);
    const std::size_t length = 20 + rng.below(61);
    const auto lexicon = kLexicons[label];
    std::string text;
    for (std::size_t t = 0; t < length; ++t) {
      if (t > 0) text.push_back(' ');
      const bool filler = rng.uniform() < spec.noise;
      const auto words = filler ? std::span<const std::string_view>(kFiller) : lexicon;
      text.append(words[rng.below(words.size())]);
    }
    corpus.examples.push_back(make_example(std::move(text), score));
  }
  return corpus;
}

std::span<const std::string_view> synth_lexicon(std::size_t label) { return kLexicons[label]; }
std::span<const std::string_view> synth_filler() { return kFiller; }

TokenizedCorpus tokenize_corpus(const Corpus& corpus, const TokenizerOptions& options) {
  TokenizedCorpus out;
  out.tokens.reserve(corpus.size());
  for (const auto& ex : corpus.examples) {
    out.tokens.push_back(tokenize(ex.text, options));
    out.scores.push_back(ex.score);
    out.labels.push_back(ex.label);
  }
  return out;
}

Batch make_batch(const TokenizedCorpus& corpus, std::span<const std::size_t> rows) {
  Batch batch;
  for (std::size_t r : rows) batch.width = std::max(batch.width, corpus.tokens.at(r).size());
  batch.ids.assign(rows.size() * batch.width, kPadId);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& toks = corpus.tokens[rows[i]];
    std::copy(toks.begin(), toks.end(), batch.ids.begin() + static_cast<std::ptrdiff_t>(i * batch.width));
    batch.lengths.push_back(toks.size());
    batch.scores.push_back(corpus.scores[rows[i]]);
    batch.labels.push_back(corpus.labels[rows[i]]);
  }
  return batch;
}

std::vector<Batch> make_batches(const TokenizedCorpus& corpus, std::size_t batch_size, std::uint64_t seed,
                                std::uint64_t epoch, bool shuffle) {
  if (corpus.size() == 0) throw ContractError("cannot batch an empty corpus");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(corpus.size());
  if (shuffle) {
    order = seeded_permutation(corpus.size(), derive_seed(seed, epoch));
  } else {
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.push_back(make_batch(corpus, std::span(order).subspan(start, end - start)));
  }
  return out;
}

}  // namespace dao
