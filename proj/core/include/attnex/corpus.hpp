#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace attnex {

struct Example {
  std::vector<std::size_t> tokens;
  int label = 0;  // binary {0, 1}
  // Synthetic corpora record where the deciding keyword was planted;
  // ingested data leaves this unset.
  std::optional<std::size_t> keyword_position;
};

/// Tokenized binary-classification dataset with a train/test split and a
/// shared vocabulary. Index 0 is reserved for <unk>.
struct Corpus {
  std::vector<Example> train;
  std::vector<Example> test;
  std::unordered_map<std::string, std::size_t> vocabulary;
  std::vector<std::string> index_to_token;

  std::size_t vocab_size() const { return index_to_token.size(); }
};

inline constexpr std::size_t kUnkIndex = 0;
inline constexpr const char* kUnkToken = "<unk>";

/// Lowercase, map punctuation to whitespace, split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

/// Reads <dir>/train.jsonl and <dir>/test.jsonl, one {"text": ..., "label":
/// 0|1} object per line. The vocabulary is built from the train split only,
/// keeping tokens that occur at least `min_frequency` times; everything
/// else (and every unseen test token) maps to <unk>. Malformed lines are
/// reported with their file and line number.
Corpus ingest_jsonl(const std::string& dir, std::size_t min_frequency = 2);

struct SyntheticSpec {
  std::size_t train_examples = 1000;
  std::size_t test_examples = 300;
  std::size_t vocab_size = 200;
  std::size_t sequence_length = 20;
  std::size_t keywords_per_class = 3;
  std::uint64_t seed = 1;
};

/// Planted-keyword corpus: every example is uniform noise except for exactly
/// one keyword whose polarity determines the label. Bayes accuracy is 1 by
/// construction, and the planted position is recorded for diagnostics.
Corpus generate_synthetic(const SyntheticSpec& spec);

/// Serializes a corpus back to <dir>/train.jsonl + <dir>/test.jsonl (and
/// <dir>/truth.csv with planted positions when present).
void write_jsonl(const Corpus& corpus, const std::string& dir);

}  // namespace attnex
