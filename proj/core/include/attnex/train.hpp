#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "attnex/corpus.hpp"
#include "attnex/model.hpp"

namespace attnex {

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  double attention_lr_multiplier = 1.0;  // 1 or 10
  double weight_decay = 1e-5;            // not applied to attention params
  std::size_t epochs = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool amsgrad = true;
  std::uint64_t seed = 1;

  /// Appendix-style defaults differ per encoder (1e-4 LSTM, 1e-5
  /// transformer); desk-scale experiments usually raise them.
  static TrainConfig defaults_for(EncoderKind encoder);
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochMetrics> metrics;
};

double evaluate_accuracy(const ModelParams& params, const ModelConfig& config,
                         const std::vector<Example>& examples);

/// Binary cross-entropy training with Adam(amsgrad). Deterministic given
/// (config.seed, train.seed). Throws if the loss goes non-finite.
TrainResult train(const Corpus& corpus, const ModelConfig& model_config,
                  const TrainConfig& train_config);

/// Optimizer internals, reused by adversarial training.
class AdamState {
 public:
  void step(const std::string& name, DenseArray& param, const DenseArray& grad,
            double lr, double weight_decay, const TrainConfig& config);
  void next_step() { ++t_; }

 private:
  struct Slot {
    DenseArray m, v, v_max;
  };
  std::unordered_map<std::string, Slot> slots_;
  std::size_t t_ = 1;
};

}  // namespace attnex
