#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attnex/corpus.hpp"
#include "attnex/model.hpp"
#include "attnex/train.hpp"

namespace attnex {

/// Frozen transfers every base parameter and lets only the alignment
/// parameters (and query) move; Unfrozen retrains everything from a fresh
/// init. Both minimize |y_adv - y_base| - lambda_adv * JSD(att_adv, att_base)
/// over the training set.
enum class AdversarialMode { Frozen, Unfrozen };

std::string adversarial_mode_name(AdversarialMode m);
AdversarialMode adversarial_mode_from_name(const std::string& name);

struct AdversarialConfig {
  AdversarialMode mode = AdversarialMode::Frozen;
  double lambda_adv = 1.0;  // divergence weight; 0 recovers the base model
  TrainConfig train;
};

struct AdversarialReport {
  double jsd_mean = 0.0;
  double accuracy = 0.0;
  double accuracy_delta = 0.0;  // adversary minus base, on the test set
  std::vector<double> per_example_jsd;
  bool divergence_collapsed = false;  // mean test JSD stayed near zero
  std::vector<double> epoch_loss;     // epoch-mean adversarial loss
};

struct AdversarialResult {
  ModelParams params;
  AdversarialReport report;
};

AdversarialResult train_adversarial(const ModelParams& base,
                                    const ModelConfig& config,
                                    const Corpus& corpus,
                                    const AdversarialConfig& adv_config);

/// Per-example attention JSD between two models of the same architecture,
/// plus test accuracy of `adv` and its delta against `base`.
AdversarialReport divergence_report(const ModelParams& base,
                                    const ModelParams& adv,
                                    const ModelConfig& config,
                                    const std::vector<Example>& test);

/// FNV-1a over the raw bytes of every parameter in the group; the frozen
/// invariant is that the Other-group hash never changes.
std::uint64_t param_group_hash(const ModelParams& params, ParamGroup group);

}  // namespace attnex
