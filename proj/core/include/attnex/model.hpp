#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "attnex/dense_array.hpp"
#include "attnex/projections.hpp"
#include "attnex/tape.hpp"

namespace attnex {

/// Identity is the bag-of-embeddings ablation (reps == embeddings, needs
/// rep_dim == embedding_dim); it exists as a control for attribution
/// experiments and tests, not as a studied architecture.
enum class EncoderKind { BiLstm, Transformer, Identity };
enum class AlignmentKind { Additive, ScaledDot };

std::string encoder_name(EncoderKind k);
std::string alignment_name(AlignmentKind k);
EncoderKind encoder_from_name(const std::string& name);
AlignmentKind alignment_from_name(const std::string& name);

struct ModelConfig {
  EncoderKind encoder = EncoderKind::BiLstm;
  AlignmentKind alignment = AlignmentKind::Additive;
  ProjectionKind projection = ProjectionKind::softmax();
  std::size_t embedding_dim = 64;    // d; paper-scale profile uses 128
  std::size_t rep_dim = 64;          // m, intermediate representation dim
  std::size_t align_hidden_dim = 64; // l, additive alignment hidden dim
  std::size_t vocab_size = 0;
  std::size_t transformer_layers = 2;
  std::size_t transformer_heads = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LstmDirection {
  DenseArray w_input;  // 4h x d, gate order i, f, g, o
  DenseArray w_recur;  // 4h x h
  DenseArray bias;     // 4h
};

struct TransformerLayer {
  DenseArray w_query, b_query;
  DenseArray w_key, b_key;
  DenseArray w_value, b_value;
  DenseArray w_out, b_out;
  DenseArray ln1_gamma, ln1_beta;
  DenseArray ff_w1, ff_b1;
  DenseArray ff_w2, ff_b2;
  DenseArray ln2_gamma, ln2_beta;
};

/// Every learned array in one place. Unused blocks (e.g. additive weights
/// under scaled-dot alignment) stay empty.
struct ModelParams {
  DenseArray embedding;  // d x |V|
  LstmDirection lstm_fwd, lstm_bwd;
  std::vector<TransformerLayer> layers;
  DenseArray align_w1, align_w2, align_v;  // additive alignment
  DenseArray query;                        // learned pooling query q
  DenseArray decoder_w;                    // m
  DenseArray decoder_b;                    // scalar
};

enum class ParamGroup { Attention, Other };

/// Visits every non-empty parameter array with a stable name. Attention
/// parameters (alignment weights and the query) form their own group: they
/// train without weight decay and optionally with a boosted learning rate.
void for_each_param(
    ModelParams& params,
    const std::function<void(const std::string&, DenseArray&, ParamGroup)>& fn);
void for_each_param(
    const ModelParams& params,
    const std::function<void(const std::string&, const DenseArray&,
                             ParamGroup)>& fn);

/// Glorot-style uniform init, deterministic in config.seed.
ModelParams init_params(const ModelConfig& config);

/// Node ids of the bound parameter leaves on a tape. `ordered` lists
/// (name, leaf) pairs in for_each_param visit order, which is how
/// optimizers map gradients back to parameter arrays.
struct BoundParams {
  std::vector<std::pair<std::string, NodeId>> ordered;
  NodeId embedding = 0;
  struct {
    NodeId w_input = 0, w_recur = 0, bias = 0;
  } lstm_fwd, lstm_bwd;
  struct BoundLayer {
    NodeId w_query = 0, b_query = 0, w_key = 0, b_key = 0;
    NodeId w_value = 0, b_value = 0, w_out = 0, b_out = 0;
    NodeId ln1_gamma = 0, ln1_beta = 0;
    NodeId ff_w1 = 0, ff_b1 = 0, ff_w2 = 0, ff_b2 = 0;
    NodeId ln2_gamma = 0, ln2_beta = 0;
  };
  std::vector<BoundLayer> layers;
  NodeId align_w1 = 0, align_w2 = 0, align_v = 0;
  NodeId query = 0;
  NodeId decoder_w = 0, decoder_b = 0;
};

BoundParams bind_params(Tape& tape, const ModelParams& params,
                        const ModelConfig& config);

/// Node ids of the distinguished intermediates of one traced example.
struct ForwardNodes {
  NodeId embedded = 0;    // X_e, d x n
  NodeId reps = 0;        // I, m x n
  NodeId scores = 0;      // raw alignment scores, n
  NodeId attention = 0;   // projected distribution, n
  NodeId context = 0;     // m
  NodeId logit = 0;       // scalar pre-sigmoid
  NodeId prediction = 0;  // scalar sigmoid output
};

/// Full pipeline on an existing tape: embed -> encode -> align -> project ->
/// context -> decode.
ForwardNodes build_forward(Tape& tape, const BoundParams& bound,
                           const ModelConfig& config,
                           std::span<const std::size_t> tokens);

/// Pooling head only (align -> project -> context -> decode) on a fixed
/// representation matrix; used by leave-one-out over intermediate
/// representations.
ForwardNodes build_pooling_head(Tape& tape, const BoundParams& bound,
                                const ModelConfig& config, NodeId reps);

/// Per-example record of one forward pass. When built with tracing the tape
/// and node ids stay alive for attribution; value fields are always filled.
struct AttentionTrace {
  std::vector<std::size_t> tokens;
  DenseArray embedded;     // X_e
  DenseArray reps;         // I
  DenseArray scores;       // a
  SimplexPoint attention;  // alpha
  DenseArray context;      // c
  double logit = 0.0;
  double prediction = 0.0;

  std::shared_ptr<Tape> tape;  // null without tracing
  ForwardNodes nodes;

  std::size_t length() const { return tokens.size(); }
  bool traced() const { return tape != nullptr; }
};

enum class TraceMode { ValuesOnly, KeepTape };

AttentionTrace forward(std::span<const std::size_t> tokens,
                       const ModelParams& params, const ModelConfig& config,
                       TraceMode mode = TraceMode::ValuesOnly);

/// Plain-value helpers mirroring the pipeline stages; each runs on a
/// private throwaway tape.
DenseArray embed_tokens(std::span<const std::size_t> tokens,
                        const DenseArray& embedding);
DenseArray encode(const DenseArray& embedded, const ModelParams& params,
                  const ModelConfig& config);
DenseArray align(const DenseArray& reps, const DenseArray& query,
                 const ModelParams& params, AlignmentKind kind);

}  // namespace attnex
