#ifndef PIGNN_LOSS_HPP
#define PIGNN_LOSS_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pignn/mesh.hpp"
#include "pignn/model.hpp"
#include "pignn/pde.hpp"
#include "pignn/stencil.hpp"
#include "pignn/tape.hpp"

namespace pignn {

/// Interior mesh nodes evaluated at every training step.
struct CollocationSet {
  std::vector<int> nodes;
  int time_steps = 0;
};

CollocationSet build_collocation(const TriMesh& mesh, int time_steps);

/// Everything about one mesh/PDE pairing that is constant across steps and
/// epochs: connectivity, edge features, interior-restricted operator maps,
/// and the boundary overwrite mask.
struct ProblemOps {
  std::vector<Vec2> coords;
  std::vector<NodeKind> kinds;
  GraphIndex gi;
  ad::Mat edge_feats;    // E x 3
  ad::Mat onehot;        // N x 2, interior = (1,0), boundary = (0,1)
  ad::Mat interior_mask; // N x n, 1 on interior rows
  ad::Mat xs, ys;        // N x 1 coordinates
  std::vector<int> interior;
  std::shared_ptr<const std::vector<int>> interior_idx;
  std::vector<Vec2> xy_int;
  ad::Mat xs_int, ys_int;
  std::shared_ptr<const SparseMap> ddx_int, ddy_int, lap_int;  // (Ni x N)
};

ProblemOps build_problem_ops(const TriMesh& mesh, const Graph& graph,
                             const GradientStencil& grad_st, const LaplacianStencil& lap_st,
                             const PdeSpec& spec);

/// Node feature rows [u | one-hot kind | source (if the layout carries one)].
/// The source column is live when a trainable parameter enters it.
ad::Tensor build_node_features(ad::Tape& tape, const ProblemOps& ops, const FeatureLayout& layout,
                               const PdeSpec& spec, ad::Tensor u_t, double t,
                               const std::vector<ad::Tensor>& lam);

/// Hard Dirichlet enforcement: boundary rows become b(x, t), interior rows
/// pass through bit-exactly.
ad::Tensor apply_bc(ad::Tape& tape, const ProblemOps& ops, const PdeSpec& spec, ad::Tensor u,
                    double t);
void apply_bc_inplace(ad::Mat& u, const PdeSpec& spec, const std::vector<Vec2>& coords,
                      const std::vector<NodeKind>& kinds, double t);

/// Implicit-Euler residual at the collocation nodes:
///   (u_next - u_t)/dt + F[u_next; lam] - f(x, t_next).
/// u_next must already be BC-enforced. Throws on non-finite values.
ad::Tensor pde_residual(ad::Tape& tape, const ProblemOps& ops, const PdeSpec& spec,
                        const ad::Mat& u_t, ad::Tensor u_next, double dt, double t_next,
                        const std::vector<ad::Tensor>& lam);

/// Mean of squared residuals over nodes and components.
ad::Tensor pde_loss(ad::Tape& tape, ad::Tensor residual);

struct Observation {
  Vec2 x;
  double t = 0.0;
  std::vector<double> y;
};

std::vector<Observation> load_observations_csv(const std::string& path, int components);
void save_observations_csv(const std::string& path, const std::vector<Observation>& obs);

/// Observations grouped by their bracketing rollout step, with the
/// space-time interpolation reduced to fixed sparse weights.
struct ObsGroup {
  int step = 0;  // bracket [t_step, t_step+1]
  std::shared_ptr<const SparseMap> w_p;
  std::shared_ptr<const SparseMap> w_next;
  ad::Mat y;  // rows x n
};

struct ObservationPlan {
  std::vector<ObsGroup> groups;
  int total = 0;
};

ObservationPlan plan_observations(const std::vector<Observation>& obs,
                                  const std::vector<Vec2>& coords, double dt, int steps,
                                  int neighbors);

/// MSE between observations and interpolated rollout predictions. `fields`
/// holds the rollout states u_0 .. u_S (tape tensors, BC applied).
ad::Tensor data_loss(ad::Tape& tape, const ObservationPlan& plan,
                     const std::vector<ad::Tensor>& fields);

/// (1-gamma) * pde + gamma * data (Eq form; forward problems use gamma = 0).
ad::Tensor total_loss(ad::Tape& tape, ad::Tensor pde, ad::Tensor data, double gamma);

}  // namespace pignn

#endif
