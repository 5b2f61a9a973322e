#include "attnex/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "attnex/analysis.hpp"
#include "attnex/checkpoint.hpp"
#include "attnex/csv.hpp"
#include "attnex/svg.hpp"

namespace attnex {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    const std::string kind = d.value("kind", "synthetic");
    if (kind == "synthetic") {
      c.dataset.kind = DatasetSpec::Kind::Synthetic;
      c.dataset.synthetic.train_examples =
          d.value("train_examples", std::size_t(1000));
      c.dataset.synthetic.test_examples =
          d.value("test_examples", std::size_t(300));
      c.dataset.synthetic.vocab_size = d.value("vocab_size", std::size_t(200));
      c.dataset.synthetic.sequence_length =
          d.value("sequence_length", std::size_t(20));
      c.dataset.synthetic.keywords_per_class =
          d.value("keywords_per_class", std::size_t(3));
      c.dataset.synthetic.seed = d.value("seed", std::uint64_t(1));
      c.dataset.name = d.value("name", "synthetic");
    } else if (kind == "jsonl") {
      c.dataset.kind = DatasetSpec::Kind::Jsonl;
      c.dataset.jsonl_dir = d.at("dir").get<std::string>();
      c.dataset.min_frequency = d.value("min_frequency", std::size_t(2));
      c.dataset.name = d.value("name", fs::path(c.dataset.jsonl_dir)
                                           .filename()
                                           .string());
    } else {
      throw std::invalid_argument("config: unknown dataset kind " + kind);
    }
  }
  if (j.contains("model")) c.model = model_config_from_json(j["model"]);
  if (j.contains("train")) c.train = train_config_from_json(j["train"]);
  if (j.contains("seeds")) {
    c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  }
  if (j.contains("analysis")) {
    const json& a = j["analysis"];
    c.analysis.correlations = a.value("correlations", true);
    c.analysis.entropies = a.value("entropies", true);
    c.analysis.rep_influence = a.value("rep_influence", false);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (s.contains("lambda_grid")) {
      c.lambda_grid = s["lambda_grid"].get<std::vector<double>>();
    }
    c.sweep_epochs = s.value("epochs", std::size_t(0));
  }
  if (j.contains("adversarial")) {
    const json& a = j["adversarial"];
    if (a.contains("modes")) {
      for (const auto& m : a["modes"]) {
        c.adversarial.modes.push_back(
            adversarial_mode_from_name(m.get<std::string>()));
      }
    }
    c.adversarial.lambda_adv = a.value("lambda_adv", 1.0);
    c.adversarial.epochs = a.value("epochs", std::size_t(10));
  }
  c.output_dir = j.value("output_dir", std::string("out"));
  c.jobs = j.value("jobs", std::size_t(1));
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  json d;
  if (c.dataset.kind == DatasetSpec::Kind::Synthetic) {
    d["kind"] = "synthetic";
    d["train_examples"] = c.dataset.synthetic.train_examples;
    d["test_examples"] = c.dataset.synthetic.test_examples;
    d["vocab_size"] = c.dataset.synthetic.vocab_size;
    d["sequence_length"] = c.dataset.synthetic.sequence_length;
    d["keywords_per_class"] = c.dataset.synthetic.keywords_per_class;
    d["seed"] = c.dataset.synthetic.seed;
  } else {
    d["kind"] = "jsonl";
    d["dir"] = c.dataset.jsonl_dir;
    d["min_frequency"] = c.dataset.min_frequency;
  }
  d["name"] = c.dataset.name;
  j["dataset"] = d;
  j["model"] = model_config_to_json(c.model);
  j["train"] = train_config_to_json(c.train);
  j["seeds"] = c.seeds;
  j["analysis"] = {{"correlations", c.analysis.correlations},
                   {"entropies", c.analysis.entropies},
                   {"rep_influence", c.analysis.rep_influence}};
  j["sweep"] = {{"lambda_grid", c.lambda_grid}, {"epochs", c.sweep_epochs}};
  json modes = json::array();
  for (AdversarialMode m : c.adversarial.modes) {
    modes.push_back(adversarial_mode_name(m));
  }
  j["adversarial"] = {{"modes", modes},
                      {"lambda_adv", c.adversarial.lambda_adv},
                      {"epochs", c.adversarial.epochs}};
  j["output_dir"] = c.output_dir;
  j["jobs"] = c.jobs;
  return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  ExperimentConfig c = experiment_config_from_json(j);
  c.source_text = text;
  return c;
}

Corpus load_dataset(const DatasetSpec& spec) {
  if (spec.kind == DatasetSpec::Kind::Synthetic) {
    return generate_synthetic(spec.synthetic);
  }
  return ingest_jsonl(spec.jsonl_dir, spec.min_frequency);
}

namespace {

void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex mutex;
  std::size_t next = 0;
  std::exception_ptr error;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(jobs, count); ++w) {
    workers.emplace_back([&]() {
      while (true) {
        std::size_t index;
        {
          std::lock_guard<std::mutex> lock(mutex);
          if (next >= count || error) return;
          index = next++;
        }
        try {
          fn(index);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

struct SeedRun {
  std::uint64_t seed = 0;
  ModelParams params;
  std::vector<EpochMetrics> metrics;
  std::vector<CorrelationSummary> correlations;
  std::vector<EntropySummary> entropies;
  EntropySummary rep_influence;
  bool has_rep_influence = false;
  // (spec label, per-example entropies) for the distribution plot
  std::vector<std::pair<FISpec, std::vector<double>>> entropy_samples;
};

std::vector<std::string> row_prefix(const ExperimentConfig& config,
                                    std::uint64_t seed) {
  return {config.dataset.name,
          encoder_name(config.model.encoder),
          alignment_name(config.model.alignment),
          config.model.projection.name(),
          format_double(config.model.projection.lambda),
          std::to_string(seed)};
}

std::string checkpoint_path(const std::string& dir, std::uint64_t seed) {
  return dir + "/checkpoints/model_seed" + std::to_string(seed) + ".ckpt";
}

/// x position of lambda on the sweep axis: linear for lambda >= 0 and
/// -log10(1 - lambda) on the negative half-axis.
double lambda_axis(double lambda) {
  return lambda >= 0.0 ? lambda : -std::log10(1.0 - lambda);
}

void plot_entropy_boxes(const CsvTable& samples, const std::string& path) {
  // Group per-example entropies by fi kind/target.
  std::vector<std::string> labels;
  std::vector<std::vector<double>> groups;
  for (const auto& row : samples.rows) {
    const std::string label = row[6] + "/" + row[7];
    auto it = std::find(labels.begin(), labels.end(), label);
    std::size_t idx;
    if (it == labels.end()) {
      labels.push_back(label);
      groups.emplace_back();
      idx = labels.size() - 1;
    } else {
      idx = std::size_t(it - labels.begin());
    }
    groups[idx].push_back(std::stod(row[9]));
  }
  if (groups.empty()) return;

  const double width = 480, height = 320;
  SvgDocument svg(width, height);
  const double left = 60, right = 20, top = 30, bottom = 50;
  LinearScale y{0.0, 1.0, height - bottom, top};
  svg.text(width / 2, 18, "Normalized entropy of FI distributions", 13,
           "middle");
  svg.line(left, top, left, height - bottom);
  svg.line(left, height - bottom, width - right, height - bottom);
  for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    svg.line(left - 4, y(tick), left, y(tick));
    svg.text(left - 8, y(tick) + 4, format_double(tick), 10, "end");
  }

  const double slot = (width - left - right) / double(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<double>& vals = groups[g];
    std::sort(vals.begin(), vals.end());
    auto quantile = [&](double q) {
      const double pos = q * double(vals.size() - 1);
      const std::size_t lo = std::size_t(pos);
      const std::size_t hi = std::min(lo + 1, vals.size() - 1);
      return vals[lo] + (pos - double(lo)) * (vals[hi] - vals[lo]);
    };
    const double q1 = quantile(0.25), q2 = quantile(0.5), q3 = quantile(0.75);
    const double cx = left + slot * (double(g) + 0.5);
    const double half = std::min(slot * 0.3, 28.0);
    svg.line(cx, y(vals.front()), cx, y(vals.back()), "#777");
    svg.rect(cx - half, y(q3), 2 * half, y(q1) - y(q3), "#9ecae1", "#333");
    svg.line(cx - half, y(q2), cx + half, y(q2), "#08306b", 2.0);
    svg.text(cx, height - bottom + 16, labels[g], 10, "middle");
  }
  svg.write_file(path);
}

void plot_correlation_bars(const CsvTable& correlations,
                           const std::string& path) {
  // Mean tau over seed rows per fi kind/target.
  std::vector<std::string> labels;
  std::vector<double> sums;
  std::vector<double> counts;
  for (const auto& row : correlations.rows) {
    const std::string label = row[6] + "/" + row[7];
    auto it = std::find(labels.begin(), labels.end(), label);
    std::size_t idx;
    if (it == labels.end()) {
      labels.push_back(label);
      sums.push_back(0.0);
      counts.push_back(0.0);
      idx = labels.size() - 1;
    } else {
      idx = std::size_t(it - labels.begin());
    }
    sums[idx] += std::stod(row[8]);
    counts[idx] += 1.0;
  }
  if (labels.empty()) return;

  const double width = 480, height = 320;
  SvgDocument svg(width, height);
  const double left = 60, right = 20, top = 30, bottom = 50;
  LinearScale y{-1.0, 1.0, height - bottom, top};
  svg.text(width / 2, 18, "Mean Kendall tau-b: attention vs FI", 13, "middle");
  svg.line(left, top, left, height - bottom);
  svg.line(left, y(0.0), width - right, y(0.0), "#999");
  for (double tick : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    svg.line(left - 4, y(tick), left, y(tick));
    svg.text(left - 8, y(tick) + 4, format_double(tick), 10, "end");
  }
  const double slot = (width - left - right) / double(labels.size());
  for (std::size_t g = 0; g < labels.size(); ++g) {
    const double mean = sums[g] / counts[g];
    const double cx = left + slot * (double(g) + 0.5);
    const double half = std::min(slot * 0.3, 30.0);
    const double y0 = y(0.0), y1 = y(mean);
    svg.rect(cx - half, std::min(y0, y1), 2 * half, std::abs(y1 - y0),
             "#fdae6b", "#333");
    svg.text(cx, height - bottom + 16, labels[g], 10, "middle");
  }
  svg.write_file(path);
}

void plot_sweep(const CsvTable& sweep, const std::string& path) {
  // Mean entropy and mean tau per lambda, averaged over seeds.
  std::vector<double> lambdas;
  std::vector<double> ent_sum, tau_sum, count;
  for (const auto& row : sweep.rows) {
    const double lambda = std::stod(row[0]);
    auto it = std::find(lambdas.begin(), lambdas.end(), lambda);
    std::size_t idx;
    if (it == lambdas.end()) {
      lambdas.push_back(lambda);
      ent_sum.push_back(0.0);
      tau_sum.push_back(0.0);
      count.push_back(0.0);
      idx = lambdas.size() - 1;
    } else {
      idx = std::size_t(it - lambdas.begin());
    }
    ent_sum[idx] += std::stod(row[2]);
    tau_sum[idx] += std::stod(row[3]);
    count[idx] += 1.0;
  }
  if (lambdas.empty()) return;

  std::vector<std::size_t> order(lambdas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lambdas[a] < lambdas[b];
  });

  const double width = 520, height = 340;
  SvgDocument svg(width, height);
  const double left = 60, right = 20, top = 30, bottom = 60;
  double x_lo = lambda_axis(lambdas[order.front()]);
  double x_hi = lambda_axis(lambdas[order.back()]);
  if (x_lo == x_hi) {
    x_lo -= 1.0;
    x_hi += 1.0;
  }
  LinearScale x{x_lo, x_hi, left, width - right};
  LinearScale y{-1.0, 1.0, height - bottom, top};

  svg.text(width / 2, 18, "FI entropy and tau vs sparsity knob lambda", 13,
           "middle");
  svg.line(left, top, left, height - bottom);
  svg.line(left, y(0.0), width - right, y(0.0), "#999");
  for (double tick : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    svg.line(left - 4, y(tick), left, y(tick));
    svg.text(left - 8, y(tick) + 4, format_double(tick), 10, "end");
  }
  for (std::size_t i : order) {
    const double px = x(lambda_axis(lambdas[i]));
    svg.line(px, height - bottom, px, height - bottom + 4);
    svg.text(px, height - bottom + 16, format_double(lambdas[i]), 9, "middle");
  }
  svg.text(width / 2, height - 28,
           "x axis: lambda for lambda >= 0, -log10(1 - lambda) for lambda < 0",
           10, "middle", "#555");

  std::vector<std::pair<double, double>> ent_pts, tau_pts;
  for (std::size_t i : order) {
    const double px = x(lambda_axis(lambdas[i]));
    ent_pts.emplace_back(px, y(ent_sum[i] / count[i]));
    tau_pts.emplace_back(px, y(tau_sum[i] / count[i]));
  }
  if (ent_pts.size() == 1) {
    svg.circle(ent_pts[0].first, ent_pts[0].second, 4, "#2b8cbe");
    svg.circle(tau_pts[0].first, tau_pts[0].second, 4, "#e34a33");
  } else {
    svg.polyline(ent_pts, "#2b8cbe", 2.0);
    svg.polyline(tau_pts, "#e34a33", 2.0);
    for (std::size_t i = 0; i < ent_pts.size(); ++i) {
      svg.circle(ent_pts[i].first, ent_pts[i].second, 3, "#2b8cbe");
      svg.circle(tau_pts[i].first, tau_pts[i].second, 3, "#e34a33");
    }
  }
  svg.line(width - 170, 34, width - 150, 34, "#2b8cbe", 2.0);
  svg.text(width - 144, 38, "entropy of grad input FI", 10);
  svg.line(width - 170, 50, width - 150, 50, "#e34a33", 2.0);
  svg.text(width - 144, 54, "tau(attention, grad input FI)", 10);
  svg.write_file(path);
}

}  // namespace

void render_plots(const std::string& output_dir) {
  fs::create_directories(output_dir + "/plots");

  const std::string samples_path = output_dir + "/entropy_samples.csv";
  if (fs::exists(samples_path)) {
    const CsvTable samples = read_csv(samples_path);
    if (!samples.rows.empty()) {
      plot_entropy_boxes(samples, output_dir + "/plots/entropy_box.svg");
    } else {
      std::cerr << "render_plots: no entropy samples, skipping box plot\n";
    }
  }

  const std::string corr_path = output_dir + "/correlations.csv";
  if (fs::exists(corr_path)) {
    const CsvTable corr = read_csv(corr_path);
    if (!corr.rows.empty()) {
      plot_correlation_bars(corr, output_dir + "/plots/correlation_bars.svg");
    } else {
      std::cerr << "render_plots: correlations.csv empty, skipping bars\n";
    }
  }

  const std::string sweep_path = output_dir + "/sweep.csv";
  if (fs::exists(sweep_path)) {
    const CsvTable sweep = read_csv(sweep_path);
    if (!sweep.rows.empty()) {
      plot_sweep(sweep, output_dir + "/plots/sweep.svg");
    } else {
      std::cerr << "render_plots: sweep.csv empty, skipping sweep plot\n";
    }
  }
}

std::string run_experiment(const ExperimentConfig& config, unsigned stages) {
  const std::string dir = config.output_dir;
  fs::create_directories(dir);
  fs::create_directories(dir + "/checkpoints");
  fs::create_directories(dir + "/plots");

  // Config echo first so a partial run can still be regenerated.
  {
    std::ofstream cfg(dir + "/config.json", std::ios::binary);
    if (config.source_text.empty()) {
      cfg << experiment_config_to_json(config).dump(2) << "\n";
    } else {
      cfg << config.source_text;
    }
  }

  CsvWriter metrics({"dataset", "encoder", "alignment", "projection", "lambda",
                     "seed", "epoch", "train_loss", "test_accuracy"});
  CsvWriter correlations({"dataset", "encoder", "alignment", "projection",
                          "lambda", "seed", "fi_kind", "fi_target", "tau_mean",
                          "tau_std", "n_examples", "n_skipped"});
  CsvWriter entropy({"dataset", "encoder", "alignment", "projection", "lambda",
                     "seed", "fi_kind", "fi_target", "entropy_mean",
                     "entropy_std", "n_examples", "n_skipped"});
  CsvWriter entropy_samples({"dataset", "encoder", "alignment", "projection",
                             "lambda", "seed", "fi_kind", "fi_target",
                             "example_index", "entropy"});
  CsvWriter sweep({"lambda", "seed", "entropy_mean", "tau_grad_mean",
                   "tau_loo_mean", "accuracy"});
  CsvWriter adversarial({"mode", "lambda_adv", "seed", "jsd_mean", "accuracy",
                         "accuracy_delta"});

  auto flush_outputs = [&](bool complete) {
    metrics.write_file(dir + "/metrics.csv");
    correlations.write_file(dir + "/correlations.csv");
    entropy.write_file(dir + "/entropy.csv");
    entropy_samples.write_file(dir + "/entropy_samples.csv");
    sweep.write_file(dir + "/sweep.csv");
    adversarial.write_file(dir + "/adversarial.csv");

    std::ofstream manifest(dir + "/MANIFEST");
    manifest << "attnex experiment manifest\n";
    manifest << "schema_version: 1\n";
    manifest << "status: " << (complete ? "complete" : "partial") << "\n";
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%FT%TZ", std::gmtime(&t));
    manifest << "generated: " << stamp << "\n";
    for (const char* f :
         {"config.json", "metrics.csv", "correlations.csv", "entropy.csv",
          "entropy_samples.csv", "sweep.csv", "adversarial.csv"}) {
      manifest << "file: " << f << "\n";
    }
  };

  try {
    Corpus corpus = load_dataset(config.dataset);

    std::vector<SeedRun> runs(config.seeds.size());
    const bool do_train = stages & unsigned(Stage::Train);
    const bool do_analyze = stages & unsigned(Stage::Analyze);

    if (do_train || do_analyze) {
      parallel_for(config.seeds.size(), config.jobs, [&](std::size_t si) {
        SeedRun& run = runs[si];
        run.seed = config.seeds[si];
        ModelConfig mc = config.model;
        mc.seed = run.seed;
        mc.vocab_size = corpus.vocab_size();
        TrainConfig tc = config.train;
        tc.seed = run.seed;

        TrainResult trained = train(corpus, mc, tc);
        run.metrics = trained.metrics;
        run.params = std::move(trained.params);
        save_checkpoint({mc, run.params}, checkpoint_path(dir, run.seed));

        if (do_analyze) {
          if (config.analysis.correlations) {
            const FISpec specs[] = {
                {FIKind::Gradient, FITarget::Inputs},
                {FIKind::LeaveOneOut, FITarget::Inputs},
                {FIKind::Gradient, FITarget::IntermediateReps},
                {FIKind::LeaveOneOut, FITarget::IntermediateReps}};
            run.correlations =
                correlate_attention_fi(run.params, mc, corpus.test, specs);
          }
          if (config.analysis.entropies) {
            for (const FISpec spec : {FISpec{FIKind::Gradient, FITarget::Inputs},
                                      FISpec{FIKind::LeaveOneOut,
                                             FITarget::Inputs}}) {
              std::vector<double> samples;
              run.entropies.push_back(entropy_of_fi(run.params, mc,
                                                    corpus.test, spec,
                                                    &samples));
              run.entropy_samples.emplace_back(spec, std::move(samples));
            }
          }
          if (config.analysis.rep_influence) {
            run.rep_influence =
                entropy_of_rep_influence(run.params, mc, corpus.test);
            run.has_rep_influence = true;
          }
        }
      });

      for (const SeedRun& run : runs) {
        for (const EpochMetrics& em : run.metrics) {
          auto row = row_prefix(config, run.seed);
          row.push_back(std::to_string(em.epoch));
          row.push_back(format_double(em.train_loss));
          row.push_back(format_double(em.test_accuracy));
          metrics.add_row(row);
        }
        for (const CorrelationSummary& cs : run.correlations) {
          auto row = row_prefix(config, run.seed);
          row.push_back(fi_kind_name(cs.spec.kind));
          row.push_back(fi_target_name(cs.spec.over));
          row.push_back(format_double(cs.tau_mean));
          row.push_back(format_double(cs.tau_std));
          row.push_back(std::to_string(cs.n_examples));
          row.push_back(std::to_string(cs.n_skipped));
          correlations.add_row(row);
        }
        for (const EntropySummary& es : run.entropies) {
          auto row = row_prefix(config, run.seed);
          row.push_back(fi_kind_name(es.spec.kind));
          row.push_back(fi_target_name(es.spec.over));
          row.push_back(format_double(es.entropy_mean));
          row.push_back(format_double(es.entropy_std));
          row.push_back(std::to_string(es.n_examples));
          row.push_back(std::to_string(es.n_skipped));
          entropy.add_row(row);
        }
        if (run.has_rep_influence) {
          auto row = row_prefix(config, run.seed);
          row.push_back("grad_rep_magnitude");
          row.push_back("input");
          row.push_back(format_double(run.rep_influence.entropy_mean));
          row.push_back(format_double(run.rep_influence.entropy_std));
          row.push_back(std::to_string(run.rep_influence.n_examples));
          row.push_back(std::to_string(run.rep_influence.n_skipped));
          entropy.add_row(row);
        }
        for (const auto& [spec, samples] : run.entropy_samples) {
          for (std::size_t i = 0; i < samples.size(); ++i) {
            auto row = row_prefix(config, run.seed);
            row.push_back(fi_kind_name(spec.kind));
            row.push_back(fi_target_name(spec.over));
            row.push_back(std::to_string(i));
            row.push_back(format_double(samples[i]));
            entropy_samples.add_row(row);
          }
        }
      }
    }

    if ((stages & unsigned(Stage::Sweep)) && !config.lambda_grid.empty()) {
      ModelConfig mc = config.model;
      mc.vocab_size = corpus.vocab_size();
      TrainConfig tc = config.train;
      if (config.sweep_epochs > 0) tc.epochs = config.sweep_epochs;
      const SweepResult result =
          lambda_sweep(corpus, mc, tc, config.lambda_grid, config.seeds,
                       config.jobs);
      for (const SweepCell& cell : result.cells) {
        if (cell.diverged) {
          std::cerr << "sweep: cell (lambda=" << cell.lambda
                    << ", seed=" << cell.seed << ") diverged, excluded\n";
          continue;
        }
        sweep.add_row({format_double(cell.lambda), std::to_string(cell.seed),
                       format_double(cell.entropy_mean),
                       format_double(cell.tau_grad_mean),
                       format_double(cell.tau_loo_mean),
                       format_double(cell.accuracy)});
      }
      CsvWriter summary({"seed", "tau_lambda_entropy",
                         "pearson_lambda_entropy"});
      for (const SeedTrend& trend : result.per_seed) {
        summary.add_row({std::to_string(trend.seed),
                         format_double(trend.tau_lambda_entropy),
                         format_double(trend.pearson_lambda_entropy)});
      }
      summary.add_row({"all", format_double(result.overall_tau),
                       format_double(result.overall_pearson)});
      summary.write_file(dir + "/sweep_summary.csv");
    }

    if ((stages & unsigned(Stage::Adversarial)) &&
        !config.adversarial.modes.empty()) {
      struct AdvJob {
        std::size_t seed_index;
        AdversarialMode mode;
      };
      std::vector<AdvJob> jobs_list;
      for (std::size_t si = 0; si < config.seeds.size(); ++si) {
        for (AdversarialMode mode : config.adversarial.modes) {
          jobs_list.push_back({si, mode});
        }
      }
      std::vector<AdversarialReport> reports(jobs_list.size());
      parallel_for(jobs_list.size(), config.jobs, [&](std::size_t ji) {
        const AdvJob& job = jobs_list[ji];
        const std::uint64_t seed = config.seeds[job.seed_index];
        // The base model round-trips through its checkpoint on disk.
        const Checkpoint base =
            load_checkpoint(checkpoint_path(dir, seed));
        AdversarialConfig ac;
        ac.mode = job.mode;
        ac.lambda_adv = config.adversarial.lambda_adv;
        ac.train = config.train;
        ac.train.epochs = config.adversarial.epochs;
        ac.train.seed = seed;
        const AdversarialResult result =
            train_adversarial(base.params, base.config, corpus, ac);
        save_checkpoint({base.config, result.params},
                        dir + "/checkpoints/adversarial_" +
                            adversarial_mode_name(job.mode) + "_seed" +
                            std::to_string(seed) + ".ckpt");
        reports[ji] = result.report;
      });
      for (std::size_t ji = 0; ji < jobs_list.size(); ++ji) {
        const AdvJob& job = jobs_list[ji];
        adversarial.add_row(
            {adversarial_mode_name(job.mode),
             format_double(config.adversarial.lambda_adv),
             std::to_string(config.seeds[job.seed_index]),
             format_double(reports[ji].jsd_mean),
             format_double(reports[ji].accuracy),
             format_double(reports[ji].accuracy_delta)});
      }
    }

    flush_outputs(true);
    render_plots(dir);
  } catch (...) {
    flush_outputs(false);
    throw;
  }
  return dir;
}

}  // namespace attnex
