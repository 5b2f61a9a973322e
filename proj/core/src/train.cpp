#include "attnex/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "attnex/rng.hpp"

namespace attnex {

TrainConfig TrainConfig::defaults_for(EncoderKind encoder) {
  TrainConfig c;
  c.learning_rate = encoder == EncoderKind::Transformer ? 1e-5 : 1e-4;
  return c;
}

void AdamState::step(const std::string& name, DenseArray& param,
                     const DenseArray& grad, double lr, double weight_decay,
                     const TrainConfig& config) {
  Slot& slot = slots_[name];
  if (slot.m.size() == 0) {
    slot.m = DenseArray::zeros(param.shape());
    slot.v = DenseArray::zeros(param.shape());
    if (config.amsgrad) slot.v_max = DenseArray::zeros(param.shape());
  }
  const double bc1 = 1.0 - std::pow(config.beta1, double(t_));
  const double bc2 = 1.0 - std::pow(config.beta2, double(t_));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i] + weight_decay * param[i];
    slot.m[i] = config.beta1 * slot.m[i] + (1.0 - config.beta1) * g;
    slot.v[i] = config.beta2 * slot.v[i] + (1.0 - config.beta2) * g * g;
    double denom_sq = slot.v[i];
    if (config.amsgrad) {
      slot.v_max[i] = std::max(slot.v_max[i], slot.v[i]);
      denom_sq = slot.v_max[i];
    }
    const double m_hat = slot.m[i] / bc1;
    const double denom = std::sqrt(denom_sq / bc2) + config.adam_eps;
    param[i] -= lr * m_hat / denom;
  }
}

double evaluate_accuracy(const ModelParams& params, const ModelConfig& config,
                         const std::vector<Example>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Example& ex : examples) {
    const AttentionTrace trace = forward(ex.tokens, params, config);
    const int predicted = trace.prediction >= 0.5 ? 1 : 0;
    if (predicted == ex.label) ++correct;
  }
  return double(correct) / double(examples.size());
}

TrainResult train(const Corpus& corpus, const ModelConfig& model_config,
                  const TrainConfig& train_config) {
  model_config.validate();
  if (corpus.train.empty()) {
    throw std::invalid_argument("train: empty training split");
  }

  TrainResult result;
  result.params = init_params(model_config);
  AdamState adam;
  Rng rng(train_config.seed);

  std::vector<std::size_t> order(corpus.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += train_config.batch_size) {
      const std::size_t end =
          std::min(begin + train_config.batch_size, order.size());

      Tape tape;
      const BoundParams bound =
          bind_params(tape, result.params, model_config);
      NodeId total = 0;
      bool have_total = false;
      for (std::size_t i = begin; i < end; ++i) {
        const Example& ex = corpus.train[order[i]];
        const ForwardNodes nodes =
            build_forward(tape, bound, model_config, ex.tokens);
        const NodeId loss =
            tape.bce_with_logits(nodes.logit, double(ex.label));
        total = have_total ? tape.add(total, loss) : loss;
        have_total = true;
      }
      const NodeId mean_loss = tape.scale(total, 1.0 / double(end - begin));
      const double batch_loss = tape.value(mean_loss)[0];
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            ", batch starting " + std::to_string(begin));
      }
      loss_sum += batch_loss * double(end - begin);
      loss_count += end - begin;

      tape.backward(mean_loss);

      // bound.ordered follows for_each_param visit order by construction.
      std::size_t cursor = 0;
      for_each_param(result.params, [&](const std::string& name,
                                        DenseArray& param, ParamGroup group) {
        const NodeId leaf = bound.ordered[cursor++].second;
        const DenseArray& grad = tape.grad(leaf);
        const bool attention = group == ParamGroup::Attention;
        const double lr =
            train_config.learning_rate *
            (attention ? train_config.attention_lr_multiplier : 1.0);
        const double wd = attention ? 0.0 : train_config.weight_decay;
        adam.step(name, param, grad, lr, wd, train_config);
      });
      adam.next_step();
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = loss_sum / double(loss_count);
    metrics.test_accuracy =
        evaluate_accuracy(result.params, model_config, corpus.test);
    metrics.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    result.metrics.push_back(metrics);
  }
  return result;
}

}  // namespace attnex
