#include "attnex/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace attnex {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'A', 'T', 'N', 'X', 'C', 'K', 'P', '1'};

std::uint64_t fnv1a(const unsigned char* data, std::size_t count) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < count; ++i) {
    hash ^= data[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  json j;
  j["encoder"] = encoder_name(c.encoder);
  j["alignment"] = alignment_name(c.alignment);
  j["projection"] = c.projection.name();
  j["lambda"] = c.projection.lambda;
  j["transform"] =
      c.projection.transform == ScoreTransform::Tanh ? "tanh" : "identity";
  j["embedding_dim"] = c.embedding_dim;
  j["rep_dim"] = c.rep_dim;
  j["align_hidden_dim"] = c.align_hidden_dim;
  j["vocab_size"] = c.vocab_size;
  j["transformer_layers"] = c.transformer_layers;
  j["transformer_heads"] = c.transformer_heads;
  j["seed"] = c.seed;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.encoder = encoder_from_name(j.value("encoder", "bilstm"));
  c.alignment = alignment_from_name(j.value("alignment", "additive"));
  const std::string proj = j.value("projection", "softmax");
  const double lambda = j.value("lambda", 0.0);
  c.projection = projection_kind_from_name(proj, lambda);
  if (j.value("transform", "identity") == std::string("tanh")) {
    c.projection.transform = ScoreTransform::Tanh;
  }
  c.embedding_dim = j.value("embedding_dim", std::size_t(64));
  c.rep_dim = j.value("rep_dim", std::size_t(64));
  c.align_hidden_dim = j.value("align_hidden_dim", std::size_t(64));
  c.vocab_size = j.value("vocab_size", std::size_t(0));
  c.transformer_layers = j.value("transformer_layers", std::size_t(2));
  c.transformer_heads = j.value("transformer_heads", std::size_t(1));
  c.seed = j.value("seed", std::uint64_t(1));
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  json j;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["attention_lr_multiplier"] = c.attention_lr_multiplier;
  j["weight_decay"] = c.weight_decay;
  j["epochs"] = c.epochs;
  j["amsgrad"] = c.amsgrad;
  j["seed"] = c.seed;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", std::size_t(32));
  c.learning_rate = j.value("learning_rate", 1e-4);
  c.attention_lr_multiplier = j.value("attention_lr_multiplier", 1.0);
  c.weight_decay = j.value("weight_decay", 1e-5);
  c.epochs = j.value("epochs", std::size_t(10));
  c.amsgrad = j.value("amsgrad", true);
  c.seed = j.value("seed", std::uint64_t(1));
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json header;
  header["version"] = 1;
  header["config"] = model_config_to_json(ckpt.config);
  json arrays = json::array();
  std::vector<double> payload;
  for_each_param(ckpt.params, [&](const std::string& name,
                                  const DenseArray& a, ParamGroup) {
    json entry;
    entry["name"] = name;
    entry["shape"] = a.shape();
    arrays.push_back(entry);
    payload.insert(payload.end(), a.data().begin(), a.data().end());
  });
  header["arrays"] = arrays;
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), std::streamsize(header_str.size()));
  const std::uint64_t checksum = fnv1a(
      reinterpret_cast<const unsigned char*>(payload.data()),
      payload.size() * sizeof(double));
  out.write(reinterpret_cast<const char*>(payload.data()),
            std::streamsize(payload.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
  if (!out) throw std::runtime_error("save_checkpoint: write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), std::streamsize(header_len));
  if (!in) throw std::runtime_error("load_checkpoint: truncated header");
  const json header = json::parse(header_str);
  if (header.value("version", 0) != 1) {
    throw std::runtime_error("load_checkpoint: unsupported version");
  }

  Checkpoint ckpt;
  ckpt.config = model_config_from_json(header.at("config"));
  ckpt.params = init_params(ckpt.config);

  std::size_t total = 0;
  for (const auto& entry : header.at("arrays")) {
    std::size_t n = 1;
    for (std::size_t d : entry.at("shape").get<std::vector<std::size_t>>()) {
      n *= d;
    }
    total += n;
  }
  std::vector<double> payload(total);
  in.read(reinterpret_cast<char*>(payload.data()),
          std::streamsize(total * sizeof(double)));
  std::uint64_t stored_checksum = 0;
  in.read(reinterpret_cast<char*>(&stored_checksum), sizeof(stored_checksum));
  if (!in) throw std::runtime_error("load_checkpoint: truncated payload");
  const std::uint64_t checksum = fnv1a(
      reinterpret_cast<const unsigned char*>(payload.data()),
      payload.size() * sizeof(double));
  if (checksum != stored_checksum) {
    throw std::runtime_error("load_checkpoint: checksum mismatch in " + path);
  }

  std::size_t offset = 0;
  std::size_t entry_index = 0;
  const auto& arrays = header.at("arrays");
  for_each_param(ckpt.params, [&](const std::string& name, DenseArray& a,
                                  ParamGroup) {
    if (entry_index >= arrays.size() ||
        arrays[entry_index].at("name").get<std::string>() != name) {
      throw std::runtime_error(
          "load_checkpoint: array manifest does not match architecture");
    }
    const auto shape =
        arrays[entry_index].at("shape").get<std::vector<std::size_t>>();
    if (shape != a.shape()) {
      throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
    }
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = payload[offset + i];
    offset += a.size();
    ++entry_index;
  });
  if (entry_index != arrays.size()) {
    throw std::runtime_error("load_checkpoint: extra arrays in file");
  }
  return ckpt;
}

}  // namespace attnex
