#include "pignn/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "pignn/util.hpp"

namespace pignn {

namespace {

MlpParams init_mlp(int in, int out, int latent, std::mt19937_64& rng) {
  MlpParams mlp;
  const int dims[4] = {in, latent, latent, out};
  for (int l = 0; l < 3; ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    ad::Mat W(fan_in, fan_out);
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = uniform_in(rng, -limit, limit);
    mlp.W.push_back(std::move(W));
    mlp.b.push_back(ad::Mat::Zero(1, fan_out));
  }
  return mlp;
}

void collect(const std::string& prefix, MlpParams& mlp,
             std::vector<std::pair<std::string, ad::Mat*>>& out) {
  for (size_t l = 0; l < mlp.W.size(); ++l) {
    out.emplace_back(prefix + ".W" + std::to_string(l), &mlp.W[l]);
    out.emplace_back(prefix + ".b" + std::to_string(l), &mlp.b[l]);
  }
}

MlpVars lift_mlp(ad::Tape& tape, const MlpParams& mlp, bool requires_grad,
                 std::vector<ad::Tensor>& flat) {
  MlpVars v;
  for (size_t l = 0; l < mlp.W.size(); ++l) {
    v.W.push_back(tape.leaf(mlp.W[l], requires_grad));
    flat.push_back(v.W.back());
    v.b.push_back(tape.leaf(mlp.b[l], requires_grad));
    flat.push_back(v.b.back());
  }
  return v;
}

}  // namespace

ModelParams init_params(const FeatureLayout& layout, int blocks, std::uint64_t seed,
                        int latent) {
  if (blocks < 1) throw std::invalid_argument("init_params: need at least one GN block");
  if (layout.components < 1) throw std::invalid_argument("init_params: invalid layout");

  std::mt19937_64 rng(seed);
  ModelParams p;
  p.layout = layout;
  p.blocks = blocks;
  p.latent = latent;
  p.node_encoder = init_mlp(layout.node_dim(), latent, latent, rng);
  p.edge_encoder = init_mlp(FeatureLayout::edge_dim, latent, latent, rng);
  for (int l = 0; l < blocks; ++l) {
    p.edge_update.push_back(init_mlp(3 * latent, latent, latent, rng));
    p.node_update.push_back(init_mlp(2 * latent, latent, latent, rng));
  }
  p.decoder = init_mlp(latent, layout.components, latent, rng);
  return p;
}

long param_count(const ModelParams& params) {
  long n = 0;
  auto add = [&n](const MlpParams& mlp) {
    for (size_t l = 0; l < mlp.W.size(); ++l) n += mlp.W[l].size() + mlp.b[l].size();
  };
  add(params.node_encoder);
  add(params.edge_encoder);
  for (const auto& m : params.edge_update) add(m);
  for (const auto& m : params.node_update) add(m);
  add(params.decoder);
  return n;
}

std::vector<std::pair<std::string, ad::Mat*>> named_params(ModelParams& params) {
  std::vector<std::pair<std::string, ad::Mat*>> out;
  collect("node_encoder", params.node_encoder, out);
  collect("edge_encoder", params.edge_encoder, out);
  for (int l = 0; l < params.blocks; ++l) {
    collect("block" + std::to_string(l) + ".edge", params.edge_update[static_cast<size_t>(l)],
            out);
    collect("block" + std::to_string(l) + ".node", params.node_update[static_cast<size_t>(l)],
            out);
  }
  collect("decoder", params.decoder, out);
  return out;
}

ModelVars lift_params(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
  ModelVars v;
  v.node_encoder = lift_mlp(tape, params.node_encoder, requires_grad, v.flat);
  v.edge_encoder = lift_mlp(tape, params.edge_encoder, requires_grad, v.flat);
  for (int l = 0; l < params.blocks; ++l) {
    v.edge_update.push_back(
        lift_mlp(tape, params.edge_update[static_cast<size_t>(l)], requires_grad, v.flat));
    v.node_update.push_back(
        lift_mlp(tape, params.node_update[static_cast<size_t>(l)], requires_grad, v.flat));
  }
  v.decoder = lift_mlp(tape, params.decoder, requires_grad, v.flat);
  return v;
}

ad::Tensor mlp_forward(ad::Tape& tape, const MlpVars& mlp, ad::Tensor x) {
  ad::Tensor h = x;
  for (size_t l = 0; l < mlp.W.size(); ++l) {
    h = tape.add_broadcast(tape.matmul(h, mlp.W[l]), mlp.b[l]);
    if (l + 1 < mlp.W.size()) h = tape.relu(h);
  }
  return h;
}

LatentGraph encode(ad::Tape& tape, const ModelVars& vars, ad::Tensor node_feats,
                   ad::Tensor edge_feats) {
  return {mlp_forward(tape, vars.node_encoder, node_feats),
          mlp_forward(tape, vars.edge_encoder, edge_feats)};
}

LatentGraph gn_block(ad::Tape& tape, const MlpVars& edge_mlp, const MlpVars& node_mlp,
                     const GraphIndex& gi, LatentGraph g) {
  const int latent = g.nodes.cols();

  // First layer of phi^e on the concatenated [e | v_sender | v_receiver]
  // input, evaluated as three slice products so the node transforms run once
  // per node instead of once per edge.
  ad::Tensor w_e = tape.slice_rows(edge_mlp.W[0], 0, latent);
  ad::Tensor w_s = tape.slice_rows(edge_mlp.W[0], latent, latent);
  ad::Tensor w_r = tape.slice_rows(edge_mlp.W[0], 2 * latent, latent);
  ad::Tensor h = tape.add(tape.matmul(g.edges, w_e),
                          tape.add(tape.gather_rows(tape.matmul(g.nodes, w_s), gi.senders),
                                   tape.gather_rows(tape.matmul(g.nodes, w_r), gi.receivers)));
  h = tape.relu(tape.add_broadcast(h, edge_mlp.b[0]));
  h = tape.relu(tape.add_broadcast(tape.matmul(h, edge_mlp.W[1]), edge_mlp.b[1]));
  ad::Tensor e_new = tape.add_broadcast(tape.matmul(h, edge_mlp.W[2]), edge_mlp.b[2]);

  // Sum aggregation of updated edge latents into each receiving node.
  ad::Tensor agg = tape.scatter_sum_rows(e_new, gi.receivers, gi.node_count);

  ad::Tensor w_a = tape.slice_rows(node_mlp.W[0], 0, latent);
  ad::Tensor w_v = tape.slice_rows(node_mlp.W[0], latent, latent);
  ad::Tensor hn = tape.add(tape.matmul(agg, w_a), tape.matmul(g.nodes, w_v));
  hn = tape.relu(tape.add_broadcast(hn, node_mlp.b[0]));
  hn = tape.relu(tape.add_broadcast(tape.matmul(hn, node_mlp.W[1]), node_mlp.b[1]));
  ad::Tensor v_new = tape.add_broadcast(tape.matmul(hn, node_mlp.W[2]), node_mlp.b[2]);

  return {v_new, e_new};
}

ad::Tensor decode(ad::Tape& tape, const ModelVars& vars, ad::Tensor node_latent) {
  return mlp_forward(tape, vars.decoder, node_latent);
}

ad::Tensor model_step(ad::Tape& tape, const ModelVars& vars, const GraphIndex& gi,
                      ad::Tensor u_t, ad::Tensor node_feats, ad::Tensor edge_feats) {
  LatentGraph g = encode(tape, vars, node_feats, edge_feats);
  for (size_t l = 0; l < vars.edge_update.size(); ++l)
    g = gn_block(tape, vars.edge_update[l], vars.node_update[l], gi, g);
  return tape.add(u_t, decode(tape, vars, g.nodes));
}

}  // namespace pignn
