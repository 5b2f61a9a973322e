#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "attnex/corpus.hpp"
#include "attnex/experiment.hpp"

namespace {

struct SharedFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t jobs = 0;
};

void add_shared(CLI::App* cmd, SharedFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config_path,
                              "experiment config JSON");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "override the seed list")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--jobs", flags.jobs, "max concurrent jobs");
}

attnex::ExperimentConfig load_with_overrides(const SharedFlags& flags) {
  attnex::ExperimentConfig config =
      attnex::load_experiment_config(flags.config_path);
  if (!flags.out_dir.empty()) {
    config.output_dir = flags.out_dir;
    // The echoed config must regenerate this exact run, so overrides
    // invalidate the verbatim copy.
    config.source_text.clear();
  }
  if (flags.seed_set) {
    config.seeds = {flags.seed};
    config.source_text.clear();
  }
  if (flags.jobs > 0) {
    config.jobs = flags.jobs;
    config.source_text.clear();
  }
  return config;
}

int run_stages(const SharedFlags& flags, unsigned stages) {
  const attnex::ExperimentConfig config = load_with_overrides(flags);
  attnex::run_experiment(config, stages);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse-attention interpretability experiments"};
  app.require_subcommand(1);

  SharedFlags train_flags, analyze_flags, sweep_flags, adv_flags;
  SharedFlags report_flags, synth_flags;

  auto* train_cmd =
      app.add_subcommand("train", "train base models and write checkpoints");
  add_shared(train_cmd, train_flags, true);

  auto* analyze_cmd = app.add_subcommand(
      "analyze", "train, then compute FI correlations and entropies");
  add_shared(analyze_cmd, analyze_flags, true);

  auto* sweep_cmd = app.add_subcommand(
      "sweep", "train one model per sparsity lambda and relate it to FI");
  add_shared(sweep_cmd, sweep_flags, true);

  auto* adv_cmd = app.add_subcommand(
      "adversarial", "frozen/unfrozen adversarial attention experiments");
  add_shared(adv_cmd, adv_flags, true);

  auto* report_cmd =
      app.add_subcommand("report", "re-render plots from an output directory");
  report_cmd->add_option("--out", report_flags.out_dir, "output directory")
      ->required();

  auto* synth_cmd =
      app.add_subcommand("synth", "emit a planted-keyword JSONL corpus");
  attnex::SyntheticSpec synth_spec;
  std::string synth_out;
  synth_cmd->add_option("--out", synth_out, "destination directory")
      ->required();
  synth_cmd->add_option("--train", synth_spec.train_examples,
                        "training examples");
  synth_cmd->add_option("--test", synth_spec.test_examples, "test examples");
  synth_cmd->add_option("--vocab", synth_spec.vocab_size, "vocabulary size");
  synth_cmd->add_option("--len", synth_spec.sequence_length,
                        "tokens per example");
  synth_cmd->add_option("--keywords", synth_spec.keywords_per_class,
                        "keywords per class");
  synth_cmd->add_option("--seed", synth_spec.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  using attnex::Stage;
  try {
    if (train_cmd->parsed()) {
      return run_stages(train_flags, unsigned(Stage::Train));
    }
    if (analyze_cmd->parsed()) {
      return run_stages(analyze_flags,
                        unsigned(Stage::Train) | unsigned(Stage::Analyze));
    }
    if (sweep_cmd->parsed()) {
      return run_stages(sweep_flags, unsigned(Stage::Sweep));
    }
    if (adv_cmd->parsed()) {
      return run_stages(adv_flags, unsigned(Stage::Train) |
                                       unsigned(Stage::Adversarial));
    }
    if (report_cmd->parsed()) {
      attnex::render_plots(report_flags.out_dir);
      return 0;
    }
    if (synth_cmd->parsed()) {
      const attnex::Corpus corpus = attnex::generate_synthetic(synth_spec);
      attnex::write_jsonl(corpus, synth_out);
      std::cout << "wrote " << corpus.train.size() << " train / "
                << corpus.test.size() << " test examples to " << synth_out
                << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
