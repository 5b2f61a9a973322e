#include "attnex/adversarial.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "attnex/analysis.hpp"
#include "attnex/rng.hpp"

namespace attnex {

std::string adversarial_mode_name(AdversarialMode m) {
  return m == AdversarialMode::Frozen ? "frozen" : "unfrozen";
}

AdversarialMode adversarial_mode_from_name(const std::string& name) {
  if (name == "frozen") return AdversarialMode::Frozen;
  if (name == "unfrozen") return AdversarialMode::Unfrozen;
  throw std::invalid_argument("unknown adversarial mode: " + name);
}

namespace {

void check_same_architecture(const ModelParams& a, const ModelParams& b) {
  bool ok = a.embedding.same_shape(b.embedding) &&
            a.decoder_w.same_shape(b.decoder_w) &&
            a.layers.size() == b.layers.size() &&
            a.query.same_shape(b.query);
  if (!ok) {
    throw std::invalid_argument(
        "adversarial: base and adversary architectures differ");
  }
}

}  // namespace

std::uint64_t param_group_hash(const ModelParams& params, ParamGroup group) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto feed = [&hash](const double* data, std::size_t count) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < count * sizeof(double); ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  for_each_param(params, [&](const std::string&, const DenseArray& a,
                             ParamGroup g) {
    if (g == group) feed(a.data().data(), a.size());
  });
  return hash;
}

AdversarialResult train_adversarial(const ModelParams& base,
                                    const ModelConfig& config,
                                    const Corpus& corpus,
                                    const AdversarialConfig& adv_config) {
  config.validate();
  if (corpus.train.empty()) {
    throw std::invalid_argument("train_adversarial: empty training split");
  }
  if (adv_config.lambda_adv < 0.0) {
    throw std::invalid_argument("train_adversarial: lambda_adv must be >= 0");
  }

  // Reference predictions and attention distributions of the base model,
  // fixed for the whole run.
  std::vector<double> base_pred(corpus.train.size());
  std::vector<DenseArray> base_att(corpus.train.size());
  for (std::size_t i = 0; i < corpus.train.size(); ++i) {
    const AttentionTrace t = forward(corpus.train[i].tokens, base, config);
    base_pred[i] = t.prediction;
    base_att[i] = t.attention.p;
  }

  AdversarialResult result;
  if (adv_config.mode == AdversarialMode::Frozen) {
    result.params = base;
    // The transferred model is an exact stationary point of the loss (both
    // terms have zero gradient when adversary and base coincide), so the
    // trainable alignment parameters get a small seeded perturbation.
    Rng noise(adv_config.train.seed ^ 0xad5eedULL);
    for_each_param(result.params, [&](const std::string&, DenseArray& a,
                                      ParamGroup g) {
      if (g != ParamGroup::Attention) return;
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] += 0.02 * noise.normal();
      }
    });
  } else {
    ModelConfig fresh = config;
    fresh.seed = adv_config.train.seed ^ 0x5eedULL;
    result.params = init_params(fresh);
  }

  const TrainConfig& tc = adv_config.train;
  AdamState adam;
  Rng rng(tc.seed);
  std::vector<std::size_t> order(corpus.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    for (std::size_t begin = 0; begin < order.size();
         begin += tc.batch_size) {
      const std::size_t end =
          std::min(begin + tc.batch_size, order.size());

      Tape tape;
      const BoundParams bound = bind_params(tape, result.params, config);
      NodeId total = 0;
      bool have_total = false;
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t idx = order[i];
        const ForwardNodes nodes =
            build_forward(tape, bound, config, corpus.train[idx].tokens);
        const NodeId tvd = tape.abs_diff(nodes.prediction, base_pred[idx]);
        const NodeId divergence =
            tape.jsd_vs_reference(nodes.attention, base_att[idx]);
        const NodeId loss =
            tape.add(tvd, tape.scale(divergence, -adv_config.lambda_adv));
        total = have_total ? tape.add(total, loss) : loss;
        have_total = true;
      }
      const NodeId mean_loss = tape.scale(total, 1.0 / double(end - begin));
      const double batch_loss = tape.value(mean_loss)[0];
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train_adversarial: non-finite loss");
      }
      loss_sum += batch_loss * double(end - begin);
      loss_count += end - begin;

      tape.backward(mean_loss);

      std::size_t cursor = 0;
      for_each_param(result.params, [&](const std::string& name,
                                        DenseArray& param, ParamGroup group) {
        const NodeId leaf = bound.ordered[cursor++].second;
        if (adv_config.mode == AdversarialMode::Frozen &&
            group != ParamGroup::Attention) {
          return;  // everything outside the alignment stays fixed
        }
        const bool attention = group == ParamGroup::Attention;
        const double lr = tc.learning_rate *
                          (attention ? tc.attention_lr_multiplier : 1.0);
        const double wd = attention ? 0.0 : tc.weight_decay;
        adam.step(name, param, tape.grad(leaf), lr, wd, tc);
      });
      adam.next_step();
    }
    result.report.epoch_loss.push_back(loss_sum / double(loss_count));
  }

  const AdversarialReport test_report =
      divergence_report(base, result.params, config, corpus.test);
  result.report.jsd_mean = test_report.jsd_mean;
  result.report.accuracy = test_report.accuracy;
  result.report.accuracy_delta = test_report.accuracy_delta;
  result.report.per_example_jsd = test_report.per_example_jsd;
  result.report.divergence_collapsed = test_report.divergence_collapsed;
  return result;
}

AdversarialReport divergence_report(const ModelParams& base,
                                    const ModelParams& adv,
                                    const ModelConfig& config,
                                    const std::vector<Example>& test) {
  check_same_architecture(base, adv);
  AdversarialReport report;
  report.per_example_jsd.reserve(test.size());
  std::size_t adv_correct = 0;
  std::size_t base_correct = 0;
  double jsd_sum = 0.0;
  for (const Example& ex : test) {
    const AttentionTrace tb = forward(ex.tokens, base, config);
    const AttentionTrace ta = forward(ex.tokens, adv, config);
    const double d = jsd(ta.attention, tb.attention);
    report.per_example_jsd.push_back(d);
    jsd_sum += d;
    if ((ta.prediction >= 0.5 ? 1 : 0) == ex.label) ++adv_correct;
    if ((tb.prediction >= 0.5 ? 1 : 0) == ex.label) ++base_correct;
  }
  if (!test.empty()) {
    report.jsd_mean = jsd_sum / double(test.size());
    report.accuracy = double(adv_correct) / double(test.size());
    report.accuracy_delta =
        report.accuracy - double(base_correct) / double(test.size());
  }
  report.divergence_collapsed = report.jsd_mean < 0.05;
  return report;
}

}  // namespace attnex
