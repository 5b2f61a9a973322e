#include "attnex/corpus.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "attnex/rng.hpp"
#include "json.hpp"

namespace attnex {

namespace {

using nlohmann::json;

struct RawExample {
  std::vector<std::string> tokens;
  int label;
};

std::vector<RawExample> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<RawExample> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_number);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object() || !obj.contains("text") || !obj.contains("label")) {
      throw std::runtime_error(where + ": expected {\"text\", \"label\"}");
    }
    if (!obj["text"].is_string()) {
      throw std::runtime_error(where + ": \"text\" must be a string");
    }
    if (!obj["label"].is_number_integer()) {
      throw std::runtime_error(where + ": \"label\" must be an integer");
    }
    const int label = obj["label"].get<int>();
    if (label != 0 && label != 1) {
      throw std::runtime_error(where + ": label must be 0 or 1, got " +
                               std::to_string(label));
    }
    RawExample ex;
    ex.tokens = tokenize(obj["text"].get<std::string>());
    ex.label = label;
    if (ex.tokens.empty()) {
      throw std::runtime_error(where + ": empty text after tokenization");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      current.push_back(char(std::tolower(ch)));
    } else {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Corpus ingest_jsonl(const std::string& dir, std::size_t min_frequency) {
  const auto train_raw = read_jsonl_file(dir + "/train.jsonl");
  const auto test_raw = read_jsonl_file(dir + "/test.jsonl");
  if (train_raw.empty()) {
    throw std::runtime_error("ingest_jsonl: empty train split in " + dir);
  }

  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& ex : train_raw) {
    for (const auto& t : ex.tokens) ++counts[t];
  }

  Corpus corpus;
  corpus.vocabulary[kUnkToken] = kUnkIndex;
  corpus.index_to_token.push_back(kUnkToken);
  for (const auto& ex : train_raw) {
    for (const auto& t : ex.tokens) {
      if (counts[t] >= min_frequency && !corpus.vocabulary.contains(t)) {
        corpus.vocabulary[t] = corpus.index_to_token.size();
        corpus.index_to_token.push_back(t);
      }
    }
  }

  auto encode = [&corpus](const std::vector<RawExample>& raw) {
    std::vector<Example> out;
    out.reserve(raw.size());
    for (const auto& r : raw) {
      Example ex;
      ex.label = r.label;
      ex.tokens.reserve(r.tokens.size());
      for (const auto& t : r.tokens) {
        auto it = corpus.vocabulary.find(t);
        ex.tokens.push_back(it == corpus.vocabulary.end() ? kUnkIndex
                                                          : it->second);
      }
      out.push_back(std::move(ex));
    }
    return out;
  };
  corpus.train = encode(train_raw);
  corpus.test = encode(test_raw);
  return corpus;
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
  const std::size_t k = spec.keywords_per_class;
  // ids: 0 = <unk>, 1..k positive keywords, k+1..2k negative keywords,
  // the rest is the noise pool.
  if (2 * k + 1 >= spec.vocab_size) {
    throw std::invalid_argument(
        "generate_synthetic: vocab too small for keyword sets plus noise");
  }
  if (spec.sequence_length < 2) {
    throw std::invalid_argument("generate_synthetic: sequence length < 2");
  }

  Corpus corpus;
  corpus.vocabulary[kUnkToken] = kUnkIndex;
  corpus.index_to_token.push_back(kUnkToken);
  for (std::size_t i = 0; i < k; ++i) {
    const std::string t = "goodword" + std::to_string(i);
    corpus.vocabulary[t] = corpus.index_to_token.size();
    corpus.index_to_token.push_back(t);
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::string t = "badword" + std::to_string(i);
    corpus.vocabulary[t] = corpus.index_to_token.size();
    corpus.index_to_token.push_back(t);
  }
  for (std::size_t i = 2 * k + 1; i < spec.vocab_size; ++i) {
    const std::string t = "filler" + std::to_string(i);
    corpus.vocabulary[t] = corpus.index_to_token.size();
    corpus.index_to_token.push_back(t);
  }

  Rng rng(spec.seed);
  const std::size_t noise_lo = 2 * k + 1;
  const std::size_t noise_n = spec.vocab_size - noise_lo;
  auto make_example = [&]() {
    Example ex;
    ex.tokens.resize(spec.sequence_length);
    for (auto& t : ex.tokens) t = noise_lo + rng.below(noise_n);
    ex.label = int(rng.below(2));
    const std::size_t keyword =
        1 + (ex.label == 1 ? 0 : k) + rng.below(k);
    const std::size_t pos = rng.below(spec.sequence_length);
    ex.tokens[pos] = keyword;
    ex.keyword_position = pos;
    return ex;
  };

  corpus.train.reserve(spec.train_examples);
  for (std::size_t i = 0; i < spec.train_examples; ++i) {
    corpus.train.push_back(make_example());
  }
  corpus.test.reserve(spec.test_examples);
  for (std::size_t i = 0; i < spec.test_examples; ++i) {
    corpus.test.push_back(make_example());
  }
  return corpus;
}

void write_jsonl(const Corpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto dump_split = [&](const std::vector<Example>& split,
                        const std::string& name) {
    std::ofstream out(dir + "/" + name);
    if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
    for (const auto& ex : split) {
      std::string text;
      for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
        if (i) text += ' ';
        text += corpus.index_to_token[ex.tokens[i]];
      }
      json obj;
      obj["text"] = text;
      obj["label"] = ex.label;
      out << obj.dump() << "\n";
    }
  };
  dump_split(corpus.train, "train.jsonl");
  dump_split(corpus.test, "test.jsonl");

  bool any_truth = false;
  for (const auto& ex : corpus.train) any_truth |= ex.keyword_position.has_value();
  if (any_truth) {
    std::ofstream truth(dir + "/truth.csv");
    truth << "split,index,keyword_position\n";
    for (std::size_t i = 0; i < corpus.train.size(); ++i) {
      if (corpus.train[i].keyword_position) {
        truth << "train," << i << "," << *corpus.train[i].keyword_position
              << "\n";
      }
    }
    for (std::size_t i = 0; i < corpus.test.size(); ++i) {
      if (corpus.test[i].keyword_position) {
        truth << "test," << i << "," << *corpus.test[i].keyword_position
              << "\n";
      }
    }
  }
}

}  // namespace attnex
