#include "attnex/model.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "attnex/rng.hpp"

namespace attnex {

std::string encoder_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::BiLstm:
      return "bilstm";
    case EncoderKind::Transformer:
      return "transformer";
    case EncoderKind::Identity:
      return "identity";
  }
  return "?";
}

std::string alignment_name(AlignmentKind k) {
  return k == AlignmentKind::Additive ? "additive" : "scaled_dot";
}

EncoderKind encoder_from_name(const std::string& name) {
  if (name == "bilstm") return EncoderKind::BiLstm;
  if (name == "transformer") return EncoderKind::Transformer;
  if (name == "identity") return EncoderKind::Identity;
  throw std::invalid_argument("unknown encoder: " + name);
}

AlignmentKind alignment_from_name(const std::string& name) {
  if (name == "additive") return AlignmentKind::Additive;
  if (name == "scaled_dot" || name == "dot") return AlignmentKind::ScaledDot;
  throw std::invalid_argument("unknown alignment: " + name);
}

void ModelConfig::validate() const {
  if (vocab_size == 0) throw std::invalid_argument("config: vocab_size == 0");
  if (embedding_dim == 0 || rep_dim == 0 || align_hidden_dim == 0) {
    throw std::invalid_argument("config: zero dimension");
  }
  if (encoder == EncoderKind::BiLstm && rep_dim % 2 != 0) {
    throw std::invalid_argument(
        "config: rep_dim must be even for the BiLSTM encoder");
  }
  if ((encoder == EncoderKind::Transformer ||
       encoder == EncoderKind::Identity) &&
      embedding_dim != rep_dim) {
    throw std::invalid_argument(
        "config: " + encoder_name(encoder) +
        " encoder requires embedding_dim == rep_dim");
  }
  if (encoder == EncoderKind::Transformer && transformer_heads != 1) {
    throw std::invalid_argument("config: only one attention head supported");
  }
  if (projection.family == ProjectionFamily::Sparsegen &&
      projection.lambda >= 1.0) {
    throw std::invalid_argument("config: sparsegen lambda must be < 1");
  }
}

void for_each_param(
    ModelParams& params,
    const std::function<void(const std::string&, DenseArray&, ParamGroup)>&
        fn) {
  auto visit = [&fn](const std::string& name, DenseArray& a, ParamGroup g) {
    if (a.size() > 0) fn(name, a, g);
  };
  visit("embedding", params.embedding, ParamGroup::Other);
  visit("lstm_fwd.w_input", params.lstm_fwd.w_input, ParamGroup::Other);
  visit("lstm_fwd.w_recur", params.lstm_fwd.w_recur, ParamGroup::Other);
  visit("lstm_fwd.bias", params.lstm_fwd.bias, ParamGroup::Other);
  visit("lstm_bwd.w_input", params.lstm_bwd.w_input, ParamGroup::Other);
  visit("lstm_bwd.w_recur", params.lstm_bwd.w_recur, ParamGroup::Other);
  visit("lstm_bwd.bias", params.lstm_bwd.bias, ParamGroup::Other);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    TransformerLayer& l = params.layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    visit(p + "w_query", l.w_query, ParamGroup::Other);
    visit(p + "b_query", l.b_query, ParamGroup::Other);
    visit(p + "w_key", l.w_key, ParamGroup::Other);
    visit(p + "b_key", l.b_key, ParamGroup::Other);
    visit(p + "w_value", l.w_value, ParamGroup::Other);
    visit(p + "b_value", l.b_value, ParamGroup::Other);
    visit(p + "w_out", l.w_out, ParamGroup::Other);
    visit(p + "b_out", l.b_out, ParamGroup::Other);
    visit(p + "ln1_gamma", l.ln1_gamma, ParamGroup::Other);
    visit(p + "ln1_beta", l.ln1_beta, ParamGroup::Other);
    visit(p + "ff_w1", l.ff_w1, ParamGroup::Other);
    visit(p + "ff_b1", l.ff_b1, ParamGroup::Other);
    visit(p + "ff_w2", l.ff_w2, ParamGroup::Other);
    visit(p + "ff_b2", l.ff_b2, ParamGroup::Other);
    visit(p + "ln2_gamma", l.ln2_gamma, ParamGroup::Other);
    visit(p + "ln2_beta", l.ln2_beta, ParamGroup::Other);
  }
  visit("align_w1", params.align_w1, ParamGroup::Attention);
  visit("align_w2", params.align_w2, ParamGroup::Attention);
  visit("align_v", params.align_v, ParamGroup::Attention);
  visit("query", params.query, ParamGroup::Attention);
  visit("decoder_w", params.decoder_w, ParamGroup::Other);
  visit("decoder_b", params.decoder_b, ParamGroup::Other);
}

void for_each_param(
    const ModelParams& params,
    const std::function<void(const std::string&, const DenseArray&,
                             ParamGroup)>& fn) {
  for_each_param(
      const_cast<ModelParams&>(params),
      [&fn](const std::string& name, DenseArray& a, ParamGroup g) {
        fn(name, a, g);
      });
}

namespace {

DenseArray glorot(Rng& rng, std::size_t rows, std::size_t cols) {
  const double limit = std::sqrt(6.0 / double(rows + cols));
  DenseArray a({rows, cols});
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform(-limit, limit);
  }
  return a;
}

DenseArray glorot_vector(Rng& rng, std::size_t n, std::size_t fan) {
  const double limit = std::sqrt(6.0 / double(n + fan));
  DenseArray a({n});
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform(-limit, limit);
  }
  return a;
}

/// Fixed sinusoidal positional encoding, one column per position.
DenseArray positional_encoding(std::size_t dim, std::size_t positions) {
  DenseArray pe({dim, positions});
  for (std::size_t pos = 0; pos < positions; ++pos) {
    for (std::size_t r = 0; r < dim; ++r) {
      const double k = double(r / 2);
      const double rate = std::pow(10000.0, 2.0 * k / double(dim));
      const double angle = double(pos) / rate;
      pe.at(r, pos) = (r % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace

ModelParams init_params(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ModelParams p;
  const std::size_t d = config.embedding_dim;
  const std::size_t m = config.rep_dim;
  const std::size_t l = config.align_hidden_dim;

  p.embedding = glorot(rng, d, config.vocab_size);

  if (config.encoder == EncoderKind::BiLstm) {
    const std::size_t h = m / 2;
    for (LstmDirection* dir : {&p.lstm_fwd, &p.lstm_bwd}) {
      dir->w_input = glorot(rng, 4 * h, d);
      dir->w_recur = glorot(rng, 4 * h, h);
      dir->bias = DenseArray::zeros({4 * h});
    }
  } else if (config.encoder == EncoderKind::Transformer) {
    p.layers.resize(config.transformer_layers);
    for (TransformerLayer& layer : p.layers) {
      layer.w_query = glorot(rng, m, m);
      layer.b_query = DenseArray::zeros({m});
      layer.w_key = glorot(rng, m, m);
      layer.b_key = DenseArray::zeros({m});
      layer.w_value = glorot(rng, m, m);
      layer.b_value = DenseArray::zeros({m});
      layer.w_out = glorot(rng, m, m);
      layer.b_out = DenseArray::zeros({m});
      layer.ln1_gamma = DenseArray::full({m}, 1.0);
      layer.ln1_beta = DenseArray::zeros({m});
      layer.ff_w1 = glorot(rng, m, m);
      layer.ff_b1 = DenseArray::zeros({m});
      layer.ff_w2 = glorot(rng, m, m);
      layer.ff_b2 = DenseArray::zeros({m});
      layer.ln2_gamma = DenseArray::full({m}, 1.0);
      layer.ln2_beta = DenseArray::zeros({m});
    }
  }

  if (config.alignment == AlignmentKind::Additive) {
    p.align_w1 = glorot(rng, l, m);
    p.align_w2 = glorot(rng, l, m);
    p.align_v = glorot_vector(rng, l, 1);
  }
  p.query = glorot_vector(rng, m, 1);
  p.decoder_w = glorot_vector(rng, m, 1);
  p.decoder_b = DenseArray::scalar(0.0);
  return p;
}

BoundParams bind_params(Tape& tape, const ModelParams& params,
                        const ModelConfig& config) {
  BoundParams b;
  std::unordered_map<std::string, NodeId> ids;
  for_each_param(params, [&](const std::string& name, const DenseArray& a,
                             ParamGroup) {
    const NodeId id = tape.leaf(a);
    ids.emplace(name, id);
    b.ordered.emplace_back(name, id);
  });
  auto get = [&ids](const std::string& name) {
    auto it = ids.find(name);
    return it == ids.end() ? NodeId(0) : it->second;
  };

  b.embedding = get("embedding");
  b.lstm_fwd.w_input = get("lstm_fwd.w_input");
  b.lstm_fwd.w_recur = get("lstm_fwd.w_recur");
  b.lstm_fwd.bias = get("lstm_fwd.bias");
  b.lstm_bwd.w_input = get("lstm_bwd.w_input");
  b.lstm_bwd.w_recur = get("lstm_bwd.w_recur");
  b.lstm_bwd.bias = get("lstm_bwd.bias");
  b.layers.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    auto& bl = b.layers[i];
    bl.w_query = get(p + "w_query");
    bl.b_query = get(p + "b_query");
    bl.w_key = get(p + "w_key");
    bl.b_key = get(p + "b_key");
    bl.w_value = get(p + "w_value");
    bl.b_value = get(p + "b_value");
    bl.w_out = get(p + "w_out");
    bl.b_out = get(p + "b_out");
    bl.ln1_gamma = get(p + "ln1_gamma");
    bl.ln1_beta = get(p + "ln1_beta");
    bl.ff_w1 = get(p + "ff_w1");
    bl.ff_b1 = get(p + "ff_b1");
    bl.ff_w2 = get(p + "ff_w2");
    bl.ff_b2 = get(p + "ff_b2");
    bl.ln2_gamma = get(p + "ln2_gamma");
    bl.ln2_beta = get(p + "ln2_beta");
  }
  b.align_w1 = get("align_w1");
  b.align_w2 = get("align_w2");
  b.align_v = get("align_v");
  b.query = get("query");
  b.decoder_w = get("decoder_w");
  b.decoder_b = get("decoder_b");
  return b;
}

namespace {

struct LstmState {
  NodeId h;
  NodeId c;
};

LstmState lstm_step(Tape& tape, NodeId w_input, NodeId w_recur, NodeId bias,
                    NodeId x, LstmState prev, std::size_t h) {
  const NodeId z = tape.add(
      tape.add(tape.matmul(w_input, x), tape.matmul(w_recur, prev.h)), bias);
  const NodeId gate_i = tape.sigmoid(tape.slice(z, 0, h));
  const NodeId gate_f = tape.sigmoid(tape.slice(z, h, 2 * h));
  const NodeId gate_g = tape.tanh(tape.slice(z, 2 * h, 3 * h));
  const NodeId gate_o = tape.sigmoid(tape.slice(z, 3 * h, 4 * h));
  const NodeId c =
      tape.add(tape.mul(gate_f, prev.c), tape.mul(gate_i, gate_g));
  const NodeId hidden = tape.mul(gate_o, tape.tanh(c));
  return {hidden, c};
}

NodeId encode_bilstm(Tape& tape, const BoundParams& bound, NodeId embedded,
                     std::size_t rep_dim, std::size_t n) {
  const std::size_t h = rep_dim / 2;
  std::vector<NodeId> xcols(n);
  for (std::size_t t = 0; t < n; ++t) xcols[t] = tape.column(embedded, t);

  const NodeId zero = tape.leaf(DenseArray::zeros({h}));
  std::vector<NodeId> fwd(n), bwd(n);
  LstmState state{zero, zero};
  for (std::size_t t = 0; t < n; ++t) {
    state = lstm_step(tape, bound.lstm_fwd.w_input, bound.lstm_fwd.w_recur,
                      bound.lstm_fwd.bias, xcols[t], state, h);
    fwd[t] = state.h;
  }
  state = {zero, zero};
  for (std::size_t t = n; t-- > 0;) {
    state = lstm_step(tape, bound.lstm_bwd.w_input, bound.lstm_bwd.w_recur,
                      bound.lstm_bwd.bias, xcols[t], state, h);
    bwd[t] = state.h;
  }

  std::vector<NodeId> cols(n);
  for (std::size_t t = 0; t < n; ++t) cols[t] = tape.concat(fwd[t], bwd[t]);
  return tape.stack_cols(cols);
}

NodeId encode_transformer(Tape& tape, const BoundParams& bound,
                          NodeId embedded, const ModelConfig& config,
                          std::size_t n) {
  const std::size_t m = config.rep_dim;
  const NodeId pe = tape.leaf(positional_encoding(m, n));
  NodeId x = tape.add(embedded, pe);
  for (const auto& layer : bound.layers) {
    const NodeId q =
        tape.colwise_add(tape.matmul(layer.w_query, x), layer.b_query);
    const NodeId k = tape.colwise_add(tape.matmul(layer.w_key, x), layer.b_key);
    const NodeId v =
        tape.colwise_add(tape.matmul(layer.w_value, x), layer.b_value);
    // Internal self-attention always uses softmax; the configurable
    // projection applies only to the pooling attention under study.
    const NodeId scores = tape.scale(tape.matmul(tape.transpose(k), q),
                                     1.0 / std::sqrt(double(m)));
    const NodeId weights = tape.softmax_cols(scores);
    const NodeId mixed = tape.matmul(v, weights);
    const NodeId projected =
        tape.colwise_add(tape.matmul(layer.w_out, mixed), layer.b_out);
    const NodeId norm1 = tape.layer_norm_cols(tape.add(x, projected),
                                              layer.ln1_gamma, layer.ln1_beta);
    const NodeId ff = tape.colwise_add(
        tape.matmul(layer.ff_w2,
                    tape.relu(tape.colwise_add(tape.matmul(layer.ff_w1, norm1),
                                               layer.ff_b1))),
        layer.ff_b2);
    x = tape.layer_norm_cols(tape.add(norm1, ff), layer.ln2_gamma,
                             layer.ln2_beta);
  }
  return x;
}

NodeId build_scores(Tape& tape, const BoundParams& bound,
                    const ModelConfig& config, NodeId reps) {
  if (config.alignment == AlignmentKind::ScaledDot) {
    return tape.scale(tape.matmul(tape.transpose(reps), bound.query),
                      1.0 / std::sqrt(double(config.rep_dim)));
  }
  const NodeId shifted = tape.colwise_add(tape.matmul(bound.align_w1, reps),
                                          tape.matmul(bound.align_w2, bound.query));
  const NodeId hidden = tape.tanh(shifted);
  const NodeId row = tape.matmul(
      tape.reshape(bound.align_v, {1, tape.value(bound.align_v).size()}),
      hidden);
  return tape.reshape(row, {tape.value(reps).cols()});
}

}  // namespace

ForwardNodes build_pooling_head(Tape& tape, const BoundParams& bound,
                                const ModelConfig& config, NodeId reps) {
  ForwardNodes out;
  out.reps = reps;
  out.scores = build_scores(tape, bound, config, reps);
  out.attention = tape.projection(out.scores, config.projection);
  out.context = tape.matmul(reps, out.attention);
  const NodeId dot = tape.sum(tape.mul(bound.decoder_w, out.context));
  out.logit = tape.add(dot, bound.decoder_b);
  out.prediction = tape.sigmoid(out.logit);
  return out;
}

ForwardNodes build_forward(Tape& tape, const BoundParams& bound,
                           const ModelConfig& config,
                           std::span<const std::size_t> tokens) {
  if (tokens.empty()) {
    throw std::invalid_argument("forward: empty token sequence");
  }
  for (std::size_t t : tokens) {
    if (t >= config.vocab_size) {
      throw std::invalid_argument("forward: token index " + std::to_string(t) +
                                  " out of vocabulary");
    }
  }
  const NodeId embedded = tape.gather_cols(
      bound.embedding, std::vector<std::size_t>(tokens.begin(), tokens.end()));

  NodeId reps = embedded;
  switch (config.encoder) {
    case EncoderKind::Identity:
      break;
    case EncoderKind::BiLstm:
      reps = encode_bilstm(tape, bound, embedded, config.rep_dim,
                           tokens.size());
      break;
    case EncoderKind::Transformer:
      reps = encode_transformer(tape, bound, embedded, config, tokens.size());
      break;
  }

  ForwardNodes out = build_pooling_head(tape, bound, config, reps);
  out.embedded = embedded;
  return out;
}

AttentionTrace forward(std::span<const std::size_t> tokens,
                       const ModelParams& params, const ModelConfig& config,
                       TraceMode mode) {
  auto tape = std::make_shared<Tape>();
  const BoundParams bound = bind_params(*tape, params, config);
  const ForwardNodes nodes = build_forward(*tape, bound, config, tokens);

  AttentionTrace trace;
  trace.tokens.assign(tokens.begin(), tokens.end());
  trace.embedded = tape->value(nodes.embedded);
  trace.reps = tape->value(nodes.reps);
  trace.scores = tape->value(nodes.scores);
  trace.attention = make_simplex_point(tape->value(nodes.attention));
  trace.context = tape->value(nodes.context);
  trace.logit = tape->value(nodes.logit)[0];
  trace.prediction = tape->value(nodes.prediction)[0];
  trace.nodes = nodes;
  if (mode == TraceMode::KeepTape) trace.tape = std::move(tape);
  return trace;
}

DenseArray embed_tokens(std::span<const std::size_t> tokens,
                        const DenseArray& embedding) {
  if (tokens.empty()) {
    throw std::invalid_argument("embed_tokens: empty token sequence");
  }
  Tape tape;
  const NodeId e = tape.leaf(embedding);
  return tape.value(tape.gather_cols(
      e, std::vector<std::size_t>(tokens.begin(), tokens.end())));
}

DenseArray encode(const DenseArray& embedded, const ModelParams& params,
                  const ModelConfig& config) {
  Tape tape;
  const BoundParams bound = bind_params(tape, params, config);
  const NodeId x = tape.leaf(embedded);
  switch (config.encoder) {
    case EncoderKind::Identity:
      return embedded;
    case EncoderKind::BiLstm:
      return tape.value(
          encode_bilstm(tape, bound, x, config.rep_dim, embedded.cols()));
    case EncoderKind::Transformer:
      return tape.value(
          encode_transformer(tape, bound, x, config, embedded.cols()));
  }
  throw std::logic_error("encode: bad encoder kind");
}

DenseArray align(const DenseArray& reps, const DenseArray& query,
                 const ModelParams& params, AlignmentKind kind) {
  if (reps.cols() == 0) throw std::invalid_argument("align: empty reps");
  Tape tape;
  ModelConfig config;
  config.alignment = kind;
  config.rep_dim = reps.rows();
  config.vocab_size = 1;
  config.embedding_dim = reps.rows();
  BoundParams bound;
  if (kind == AlignmentKind::Additive) {
    bound.align_w1 = tape.leaf(params.align_w1);
    bound.align_w2 = tape.leaf(params.align_w2);
    bound.align_v = tape.leaf(params.align_v);
  }
  bound.query = tape.leaf(query);
  const NodeId r = tape.leaf(reps);
  return tape.value(build_scores(tape, bound, config, r));
}

}  // namespace attnex
