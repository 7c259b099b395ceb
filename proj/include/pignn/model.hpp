#ifndef PIGNN_MODEL_HPP
#define PIGNN_MODEL_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pignn/tape.hpp"

namespace pignn {

/// Node/edge input composition. Node rows are [u (n) | kind one-hot (2) |
/// source (n, only when the PDE has one]; edge rows are [dx, dy, dist].
struct FeatureLayout {
  int components = 1;
  bool has_source = false;

  int node_dim() const { return components + 2 + (has_source ? components : 0); }
  static constexpr int edge_dim = 3;
};

/// Two hidden layers of width 128 with rectifier activations, linear output.
struct MlpParams {
  std::vector<ad::Mat> W;  // (in x out) per layer
  std::vector<ad::Mat> b;  // (1 x out) per layer
};

struct ModelParams {
  FeatureLayout layout;
  int blocks = 1;
  int latent = 128;
  MlpParams node_encoder;
  MlpParams edge_encoder;
  std::vector<MlpParams> edge_update;  // phi^e per block, input [e | v_i | v_j]
  std::vector<MlpParams> node_update;  // phi^v per block, input [agg | v_i]
  MlpParams decoder;
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
/// deterministic draw order for a fixed seed.
ModelParams init_params(const FeatureLayout& layout, int blocks, std::uint64_t seed,
                        int latent = 128);

long param_count(const ModelParams& params);

/// Stable name -> matrix enumeration (optimizer and checkpoint order).
std::vector<std::pair<std::string, ad::Mat*>> named_params(ModelParams& params);

/// Constant per-mesh connectivity shared by all tape recordings.
struct GraphIndex {
  int node_count = 0;
  std::shared_ptr<const std::vector<int>> senders;
  std::shared_ptr<const std::vector<int>> receivers;
};

struct Graph;  // fwd (mesh.hpp)

struct MlpVars {
  std::vector<ad::Tensor> W;
  std::vector<ad::Tensor> b;
};

/// Parameters lifted onto a tape as leaves; `flat` follows named_params order.
struct ModelVars {
  MlpVars node_encoder;
  MlpVars edge_encoder;
  std::vector<MlpVars> edge_update;
  std::vector<MlpVars> node_update;
  MlpVars decoder;
  std::vector<ad::Tensor> flat;
};

ModelVars lift_params(ad::Tape& tape, const ModelParams& params, bool requires_grad);

ad::Tensor mlp_forward(ad::Tape& tape, const MlpVars& mlp, ad::Tensor x);

struct LatentGraph {
  ad::Tensor nodes;
  ad::Tensor edges;
};

LatentGraph encode(ad::Tape& tape, const ModelVars& vars, ad::Tensor node_feats,
                   ad::Tensor edge_feats);

/// One message-passing round: edge update from [e | v_sender | v_receiver],
/// sum-aggregation into each receiver, node update from [agg | v]. Updated
/// edge latents carry forward to the next block.
LatentGraph gn_block(ad::Tape& tape, const MlpVars& edge_mlp, const MlpVars& node_mlp,
                     const GraphIndex& gi, LatentGraph g);

ad::Tensor decode(ad::Tape& tape, const ModelVars& vars, ad::Tensor node_latent);

/// Full step: u_t + decode(processor(encode(features))). No BC applied here.
ad::Tensor model_step(ad::Tape& tape, const ModelVars& vars, const GraphIndex& gi,
                      ad::Tensor u_t, ad::Tensor node_feats, ad::Tensor edge_feats);

}  // namespace pignn

#endif
