#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attnex/adversarial.hpp"
#include "attnex/corpus.hpp"
#include "attnex/model.hpp"
#include "attnex/train.hpp"
#include "json.hpp"

namespace attnex {

struct DatasetSpec {
  enum class Kind { Synthetic, Jsonl };
  Kind kind = Kind::Synthetic;
  std::string name = "synthetic";
  SyntheticSpec synthetic;
  std::string jsonl_dir;
  std::size_t min_frequency = 2;
};

struct AnalysisToggles {
  bool correlations = true;
  bool entropies = true;
  // Influence of inputs on representation magnitudes: one backward pass per
  // position per example, so off by default.
  bool rep_influence = false;
};

struct AdversarialToggles {
  std::vector<AdversarialMode> modes;  // empty: stage skipped
  double lambda_adv = 1.0;
  std::size_t epochs = 10;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  ModelConfig model;
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  AnalysisToggles analysis;
  std::vector<double> lambda_grid;  // empty: no sweep
  std::size_t sweep_epochs = 0;     // 0: reuse train.epochs
  AdversarialToggles adversarial;
  std::string output_dir = "out";
  std::size_t jobs = 1;

  // Exact text of the config file when loaded from disk, echoed into the
  // output directory for provenance.
  std::string source_text;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::string& path);

Corpus load_dataset(const DatasetSpec& spec);

enum class Stage : unsigned {
  Train = 1u << 0,
  Analyze = 1u << 1,
  Sweep = 1u << 2,
  Adversarial = 1u << 3,
};
constexpr unsigned kAllStages = 0xF;

/// Runs the requested stages and writes the full report set into
/// config.output_dir: config.json, metrics.csv, correlations.csv,
/// entropy.csv, entropy_samples.csv, sweep.csv, adversarial.csv,
/// checkpoints/, plots/ and a MANIFEST. CSVs of stages that did not run
/// still appear with a header row only. Returns the output directory.
/// On failure partial outputs stay on disk and MANIFEST says "partial".
std::string run_experiment(const ExperimentConfig& config,
                           unsigned stages = kAllStages);

/// Re-renders plots/*.svg from the CSVs already in the directory.
void render_plots(const std::string& output_dir);

}  // namespace attnex
